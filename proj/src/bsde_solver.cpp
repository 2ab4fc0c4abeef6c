#include "bspde/bsde_solver.hpp"

#include <cmath>

namespace bspde {

void SolverConfig::validate() const {
  grid.validate();
  taming.validate();
  if (paths < 1) throw std::invalid_argument("need at least one path");
  if (regression_degree < 1)
    throw std::invalid_argument("regression degree must be >= 1");
  if (picard_max < 1) throw std::invalid_argument("picard_max must be >= 1");
  if (!(picard_tol > 0)) throw std::invalid_argument("picard_tol must be > 0");
  if (ridge < 0) throw std::invalid_argument("ridge must be >= 0");
}

namespace {

void enumerate_exponents(int vars, int degree, std::vector<int>& current,
                         std::vector<std::vector<int>>& out) {
  if (static_cast<int>(current.size()) == vars) {
    out.push_back(current);
    return;
  }
  for (int e = 0; e <= degree; ++e) {
    current.push_back(e);
    enumerate_exponents(vars, degree - e, current, out);
    current.pop_back();
  }
}

}  // namespace

RegressionBasis monomial_basis(int vars, int degree) {
  if (vars < 1) throw std::invalid_argument("basis needs at least one variable");
  if (degree < 0) throw std::invalid_argument("basis degree must be >= 0");
  RegressionBasis basis;
  basis.vars = vars;
  basis.degree = degree;
  std::vector<int> current;
  enumerate_exponents(vars, degree, current, basis.exponents);
  return basis;
}

Eigen::MatrixXd RegressionBasis::design(const Eigen::MatrixXd& state) const {
  if (state.cols() != vars)
    throw std::invalid_argument("state width does not match the basis");
  const int P = static_cast<int>(state.rows());
  Eigen::MatrixXd phi = Eigen::MatrixXd::Ones(P, size());
  for (int f = 0; f < size(); ++f)
    for (int j = 0; j < vars; ++j)
      for (int e = 0; e < exponents[f][j]; ++e)
        phi.col(f).array() *= state.col(j).array();
  return phi;
}

CondexpSolver::CondexpSolver(const Eigen::MatrixXd& features, double ridge)
    : phi_(features) {
  const int P = static_cast<int>(phi_.rows());
  const int nf = static_cast<int>(phi_.cols());
  if (P < 1 || nf < 1) throw std::invalid_argument("empty regression problem");
  Eigen::MatrixXd gram = phi_.transpose() * phi_ / static_cast<double>(P);
  Eigen::MatrixXd reg = gram;
  reg.diagonal().array() += ridge;
  ldlt_.compute(reg);
  if (ldlt_.info() != Eigen::Success || !ldlt_.isPositive()) {
    ridge_fallback_ = true;
    reg = gram;
    reg.diagonal().array() += std::max(ridge, 1e-10) * 1e4 + 1e-12;
    ldlt_.compute(reg);
    if (ldlt_.info() != Eigen::Success)
      throw std::runtime_error("regression normal equations not factorizable");
  }
}

Eigen::MatrixXd CondexpSolver::fit(const Eigen::MatrixXd& targets) {
  const int P = static_cast<int>(phi_.rows());
  if (targets.rows() != P)
    throw std::invalid_argument("target rows do not match the path count");
  if (!targets.allFinite())
    throw std::invalid_argument("regression targets must be finite");
  const Eigen::MatrixXd rhs =
      phi_.transpose() * targets / static_cast<double>(P);
  const Eigen::MatrixXd beta = ldlt_.solve(rhs);
  const Eigen::MatrixXd fitted = phi_ * beta;
  const Eigen::MatrixXd nres =
      phi_.transpose() * (targets - fitted) / static_cast<double>(P);
  last_residual_ = nres.norm() / std::max(rhs.norm(), 1e-30);
  return fitted;
}

Eigen::MatrixXd condexp(const Eigen::MatrixXd& features,
                        const Eigen::MatrixXd& targets, double ridge) {
  CondexpSolver solver(features, ridge);
  return solver.fit(targets);
}

namespace {

/// Mean fit: the exact conditional expectation for the trivial sigma-algebra
/// at t = 0, where the Brownian state is identically zero.
Eigen::MatrixXd mean_fit(const Eigen::MatrixXd& targets) {
  Eigen::MatrixXd fitted(targets.rows(), targets.cols());
  fitted.rowwise() = targets.colwise().mean();
  return fitted;
}

}  // namespace

BsdeSolution solve(const DriftSpec& drift, const TerminalSpec& terminal,
                   const WienerEnsemble& ensemble, const SolverConfig& cfg) {
  cfg.validate();
  const int N = cfg.taming.galerkin_n;
  const int P = ensemble.paths();
  const int M = ensemble.steps();
  const int d = ensemble.d_u();
  const double dt = cfg.grid.dt();
  if (M != cfg.grid.steps)
    throw std::invalid_argument("ensemble and grid step counts differ");
  if (std::abs(ensemble.dt() - dt) > 1e-15 * std::max(1.0, dt))
    throw std::invalid_argument("ensemble and grid step sizes differ");
  if (drift.contraction_lip > 0 && !(dt * drift.contraction_lip < 1.0))
    throw std::invalid_argument(
        "contraction guard violated: dt times the drift Lipschitz bound must "
        "stay below 1");

  BsdeSolution sol;
  sol.triple = drift.triple;
  sol.grid = cfg.grid;
  sol.galerkin_n = N;
  sol.paths = P;
  sol.d_u = d;
  sol.ensemble_seed = ensemble.seed();
  sol.y.assign(M + 1, Eigen::MatrixXd());
  sol.z.assign(M, std::vector<Eigen::MatrixXd>());
  sol.picard_iters.assign(M, 0);
  sol.regression_residual = Eigen::VectorXd::Zero(M);
  sol.taming_fraction = Eigen::VectorXd::Zero(M);

  sol.y[M] = evaluate_terminal(terminal, ensemble, N);
  if (!sol.y[M].allFinite())
    throw SolverError("terminal data produced non-finite coefficients", M, 0.0);

  const Eigen::VectorXd wH = drift.triple->wH.head(N);
  const RegressionBasis basis = monomial_basis(d, cfg.regression_degree);

  for (int i = M - 1; i >= 0; --i) {
    const double t = cfg.grid.node(i);

    // Conditional mean of the next layer, then the increment projection for
    // Z with that mean subtracted as control variate.
    const Eigen::MatrixXd ytn = sol.y[i + 1].transpose();  // P x N
    Eigen::MatrixXd cmean;                                 // P x N
    double reg_residual = 0.0;
    if (i == 0) {
      cmean = mean_fit(ytn);
    } else {
      // Standardized Brownian state keeps the Gram matrix O(1) so the ridge
      // stays negligible at small horizons.
      const Eigen::MatrixXd state =
          ensemble.brownian(i) / std::sqrt(cfg.grid.node(i));
      CondexpSolver reg(basis.design(state), cfg.ridge);
      cmean = reg.fit(ytn);
      reg_residual = reg.last_residual();
      sol.ridge_fallback_used |= reg.ridge_fallback();

      const Eigen::MatrixXd centered = ytn - cmean;
      Eigen::MatrixXd ztargets(P, N * d);
      for (int j = 0; j < d; ++j)
        ztargets.middleCols(j * N, N) =
            centered.array().colwise() *
            (ensemble.increment(i).col(j) / dt).array();
      const Eigen::MatrixXd zfit = reg.fit(ztargets);
      reg_residual = std::max(reg_residual, reg.last_residual());
      sol.z[i].resize(d);
      for (int j = 0; j < d; ++j)
        sol.z[i][j] = zfit.middleCols(j * N, N).transpose();
    }
    if (i == 0) {
      // F_0 is trivial: Z_0 is the plain mean of the increment projection.
      const Eigen::MatrixXd centered = ytn - cmean;
      sol.z[i].resize(d);
      for (int j = 0; j < d; ++j) {
        Eigen::MatrixXd tj = centered.array().colwise() *
                             (ensemble.increment(i).col(j) / dt).array();
        sol.z[i][j] = mean_fit(tj).transpose();
      }
    }
    sol.regression_residual[i] = reg_residual;

    const Eigen::MatrixXd cmean_t = cmean.transpose();  // N x P
    Eigen::MatrixXd yit = cmean_t;
    Eigen::MatrixXd avals(N, P);
    double delta = 0.0;
    int iters = 0;
    bool converged = false;
    for (; iters < cfg.picard_max; ++iters) {
      try {
        drift.evaluate_batch(t, yit, &sol.z[i], avals);
      } catch (const std::exception& e) {
        throw SolverError(std::string("drift evaluation failed: ") + e.what(),
                          i, delta);
      }
      Eigen::MatrixXd ynew = cmean_t + dt * avals;
      if (!ynew.allFinite())
        throw SolverError("non-finite iterate in the implicit solve", i, delta);
      delta = std::sqrt(((ynew - yit).array().square().colwise() * wH.array())
                            .colwise()
                            .sum()
                            .maxCoeff());
      yit.swap(ynew);
      if (delta < cfg.picard_tol) {
        converged = true;
        ++iters;
        break;
      }
    }
    if (!converged)
      throw SolverError("implicit solve did not contract to tolerance", i,
                        delta);
    sol.picard_iters[i] = iters;
    sol.y[i] = yit;

    if (drift.activity_batch) {
      std::vector<std::uint8_t> flags;
      drift.activity_batch(t, sol.y[i], &sol.z[i], flags);
      int fired = 0;
      for (auto f : flags) fired += f != 0;
      sol.taming_fraction[i] = static_cast<double>(fired) / P;
    }
  }
  return sol;
}

}  // namespace bspde
