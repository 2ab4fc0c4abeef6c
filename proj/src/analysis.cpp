#include "bspde/analysis.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bspde {

namespace {

// Row vector of per-path weighted squared norms of an N x P coefficient
// block: sum_k w_k X_{kp}^2.
Eigen::RowVectorXd weighted_sq(const Eigen::MatrixXd& block,
                               const Eigen::VectorXd& w) {
  return (block.array().square().colwise() * w.array()).colwise().sum();
}

void require_matching(const BsdeSolution& sol, const WienerEnsemble& ensemble) {
  if (sol.paths != ensemble.paths() || sol.d_u != ensemble.d_u() ||
      sol.steps() != ensemble.steps() ||
      sol.ensemble_seed != ensemble.seed())
    throw std::invalid_argument("solution and ensemble do not match");
}

}  // namespace

Eigen::VectorXd energy_residual(const BsdeSolution& sol, const DriftSpec& drift,
                                const WienerEnsemble& ensemble) {
  require_matching(sol, ensemble);
  if (drift.triple->name != sol.triple->name)
    throw std::invalid_argument("drift and solution use different triples");
  const int N = sol.galerkin_n;
  const int P = sol.paths;
  const int M = sol.steps();
  const double dt = sol.grid.dt();
  const Eigen::VectorXd wV = sol.triple->wV.head(N);

  Eigen::RowVectorXd res = weighted_sq(sol.y[0], wV) - weighted_sq(sol.y[M], wV);
  Eigen::MatrixXd avals(N, P), zdw(N, P);
  for (int i = 0; i < M; ++i) {
    const Eigen::MatrixXd& x = sol.y[i];
    drift.evaluate_batch(sol.grid.node(i), x, &sol.z[i], avals);

    const Eigen::RowVectorXd pair_v =
        ((avals.array() * x.array()).colwise() * wV.array()).colwise().sum();
    Eigen::RowVectorXd z_sq = Eigen::RowVectorXd::Zero(P);
    zdw.setZero();
    for (int j = 0; j < sol.d_u; ++j) {
      const Eigen::MatrixXd& slab = sol.z[i][j];
      z_sq += weighted_sq(slab, wV);
      zdw.array() +=
          slab.array().rowwise() * ensemble.increment(i).col(j).transpose().array();
    }
    const Eigen::RowVectorXd mart =
        ((zdw.array() * x.array()).colwise() * wV.array()).colwise().sum();

    res -= (2.0 * pair_v - z_sq) * dt;
    res += 2.0 * mart;
  }
  return res.transpose();
}

AprioriStatistic apriori_statistic(const BsdeSolution& sol) {
  const int N = sol.galerkin_n;
  const int M = sol.steps();
  const double dt = sol.grid.dt();
  const Eigen::VectorXd wV = sol.triple->wV.head(N);

  AprioriStatistic out;
  for (int i = 0; i <= M; ++i)
    out.sup_v_sq = std::max(out.sup_v_sq, weighted_sq(sol.y[i], wV).maxCoeff());

  Eigen::RowVectorXd z_acc = Eigen::RowVectorXd::Zero(sol.paths);
  for (int i = 0; i < M; ++i)
    for (const auto& slab : sol.z[i]) z_acc += weighted_sq(slab, wV) * dt;
  out.z_energy = 0.5 * z_acc.mean();
  return out;
}

GronwallResult gronwall_bound(const Eigen::VectorXd& y, const Eigen::VectorXd& x,
                              double alpha, const TimeGrid& grid, double tol) {
  grid.validate();
  const int M = grid.steps;
  if (y.size() != M + 1 || x.size() != M + 1)
    throw std::invalid_argument(
        "gronwall series must have one entry per grid node");
  const double dt = grid.dt();

  GronwallResult out;
  out.bound.resize(M + 1);
  out.bound[M] = y[M];
  const double factor = std::exp(alpha * dt);
  for (int i = M - 1; i >= 0; --i)
    out.bound[i] = factor * out.bound[i + 1] + x[i] * dt;

  // The hypothesis integrates the driver with left-endpoint sums, matching
  // the bound construction.
  Eigen::VectorXd tail(M + 1);
  tail[M] = 0.0;
  for (int i = M - 1; i >= 0; --i)
    tail[i] = tail[i + 1] + (x[i] + alpha * y[i]) * dt;

  const double y_max = y.cwiseAbs().maxCoeff();
  const double x_max = x.cwiseAbs().maxCoeff();
  const double round_slack =
      1e-12 * (M + 1) *
      std::max({1.0, y_max, (tail.array().abs() + std::abs(y[M])).maxCoeff()});
  out.hypothesis_excess = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= M; ++i) {
    const double excess = y[i] - (y[M] + tail[i]);
    out.hypothesis_excess = std::max(out.hypothesis_excess, excess);
    if (excess > round_slack && out.first_violation < 0) out.first_violation = i;
  }
  out.hypothesis_holds = out.first_violation < 0;

  if (tol < 0) {
    // The discrete induction yields (1 - alpha dt)^{-(M-i)} envelopes; the
    // exponential bound undershoots those by O(dt), plus rounding.
    tol = 10.0 * dt * std::abs(alpha) * std::exp(std::abs(alpha) * grid.T) *
              (y_max + x_max * grid.T + 1.0) +
          round_slack;
  }
  out.tolerance = tol;
  out.max_excess = (y - out.bound).maxCoeff();
  out.conclusion_holds = out.hypothesis_holds && out.max_excess <= tol;
  return out;
}

StabilityResult terminal_stability(const BsdeSolution& sol1,
                                   const BsdeSolution& sol2,
                                   const DriftSpec& drift) {
  if (sol1.triple->name != sol2.triple->name ||
      sol1.galerkin_n != sol2.galerkin_n || sol1.paths != sol2.paths ||
      sol1.d_u != sol2.d_u || sol1.steps() != sol2.steps() ||
      sol1.grid.T != sol2.grid.T)
    throw std::invalid_argument("solutions come from different discretisations");
  if (sol1.ensemble_seed != sol2.ensemble_seed)
    throw std::invalid_argument("solutions come from different ensembles");
  if (drift.triple->name != sol1.triple->name)
    throw std::invalid_argument("drift and solutions use different triples");
  if (!drift.rho.closed_form)
    throw std::invalid_argument(
        "stability weight needs a closed-form modulus");

  const int N = sol1.galerkin_n;
  const int P = sol1.paths;
  const int M = sol1.steps();
  const double dt = sol1.grid.dt();
  const Eigen::VectorXd wH = sol1.triple->wH.head(N);
  const Eigen::VectorXd wV = sol1.triple->wV.head(N);

  StabilityResult out;
  Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(P);
  Eigen::RowVectorXd weighted_last;
  for (int i = 0; i <= M; ++i) {
    const Eigen::RowVectorXd diff_h =
        weighted_sq(sol1.y[i] - sol2.y[i], wH);
    weighted_last = r.array().exp() * diff_h.array();
    out.numerator = std::max(out.numerator, weighted_last.maxCoeff());
    if (i < M) {
      const Eigen::ArrayXd vnorm =
          weighted_sq(sol2.y[i], wV).transpose().array().sqrt();
      const Eigen::ArrayXd rho =
          drift.rho.c * (1.0 + vnorm.pow(drift.rho.p));
      r += (2.0 * dt) * (rho + rho.square()).matrix().transpose();
    }
  }
  out.denominator = std::max(weighted_last.mean(), 1e-30);
  out.ratio = out.numerator / out.denominator;
  return out;
}

std::vector<CauchyRow> cauchy_in_n(const DriftSpec& base,
                                   const TerminalSpec& terminal,
                                   const WienerEnsemble& ensemble,
                                   const SolverConfig& cfg,
                                   const std::vector<double>& levels) {
  if (levels.empty())
    throw std::invalid_argument("level sweep needs at least one level");
  for (std::size_t l = 0; l < levels.size(); ++l)
    if (!(levels[l] > 0) || (l > 0 && !(levels[l] > levels[l - 1])))
      throw std::invalid_argument("levels must be positive and increasing");

  const int N = cfg.taming.galerkin_n;
  const Eigen::VectorXd wH = base.triple->wH.head(N);
  const double dt = cfg.grid.dt();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::vector<CauchyRow> rows;
  BsdeSolution prev;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    SolverConfig level_cfg = cfg;
    level_cfg.taming.level_n = levels[l];
    const DriftSpec tamed = tamed_drift(base, level_cfg.taming);
    BsdeSolution cur = solve(tamed, terminal, ensemble, level_cfg);

    CauchyRow row;
    row.level = levels[l];
    row.fire_fraction = cur.taming_fire_fraction();
    const AprioriStatistic ap = apriori_statistic(cur);
    row.apriori = ap.sup_v_sq + ap.z_energy;
    if (l == 0) {
      row.sup_h_gap = nan;
      row.z_gap = nan;
    } else {
      double sup_gap_sq = 0.0;
      for (int i = 0; i <= cur.steps(); ++i)
        sup_gap_sq = std::max(
            sup_gap_sq, weighted_sq(prev.y[i] - cur.y[i], wH).maxCoeff());
      row.sup_h_gap = std::sqrt(sup_gap_sq);

      Eigen::RowVectorXd z_acc = Eigen::RowVectorXd::Zero(cur.paths);
      for (int i = 0; i < cur.steps(); ++i)
        for (int j = 0; j < cur.d_u; ++j)
          z_acc += weighted_sq(prev.z[i][j] - cur.z[i][j], wH) * dt;
      row.z_gap = std::sqrt(z_acc.mean());
    }
    rows.push_back(row);
    prev = std::move(cur);
  }
  return rows;
}

}  // namespace bspde
