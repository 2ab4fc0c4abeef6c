#include "bspde/drift_ops.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bspde {

namespace {

double horner(const Eigen::VectorXd& c, double x) {
  double acc = 0;
  for (int i = static_cast<int>(c.size()) - 1; i >= 0; --i) acc = acc * x + c[i];
  return acc;
}

Eigen::VectorXd trim_leading_zeros(const Eigen::VectorXd& c) {
  int n = static_cast<int>(c.size());
  while (n > 0 && c[n - 1] == 0.0) --n;
  return c.head(n);
}

Eigen::VectorXd poly_derivative(const Eigen::VectorXd& c) {
  if (c.size() <= 1) return Eigen::VectorXd();
  Eigen::VectorXd d(c.size() - 1);
  for (int i = 1; i < c.size(); ++i) d[i - 1] = i * c[i];
  return d;
}

std::vector<double> poly_real_roots(const Eigen::VectorXd& coeffs) {
  const Eigen::VectorXd c = trim_leading_zeros(coeffs);
  std::vector<double> roots;
  const int deg = static_cast<int>(c.size()) - 1;
  if (deg < 1) return roots;
  if (deg == 1) {
    roots.push_back(-c[0] / c[1]);
    return roots;
  }
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(deg, deg);
  comp.block(1, 0, deg - 1, deg - 1).setIdentity();
  for (int i = 0; i < deg; ++i) comp(i, deg - 1) = -c[i] / c[deg];
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, /*computeEigenvectors=*/false);
  const auto vals = es.eigenvalues();
  for (int i = 0; i < vals.size(); ++i) {
    const double re = vals[i].real(), im = vals[i].imag();
    if (std::abs(im) <= 1e-9 * std::max(1.0, std::abs(re))) roots.push_back(re);
  }
  return roots;
}

/// Global supremum of a polynomial over the reals; +inf when unbounded above.
double poly_sup(const Eigen::VectorXd& coeffs) {
  const Eigen::VectorXd c = trim_leading_zeros(coeffs);
  const int deg = static_cast<int>(c.size()) - 1;
  if (deg < 0) return 0.0;
  if (deg == 0) return c[0];
  if (deg % 2 == 1 || c[deg] > 0) return std::numeric_limits<double>::infinity();
  double best = horner(c, 0.0);
  for (double r : poly_real_roots(poly_derivative(c)))
    best = std::max(best, horner(c, r));
  return best;
}

double poly_abs_max_on(const Eigen::VectorXd& coeffs, double lo, double hi) {
  const Eigen::VectorXd c = trim_leading_zeros(coeffs);
  if (c.size() == 0) return 0.0;
  double best = std::max(std::abs(horner(c, lo)), std::abs(horner(c, hi)));
  for (double r : poly_real_roots(poly_derivative(c)))
    if (r > lo && r < hi) best = std::max(best, std::abs(horner(c, r)));
  return best;
}

void require_triple(const TriplePtr& triple, const std::string& family,
                    const std::string& op) {
  if (!triple || triple->name != family)
    throw std::invalid_argument(op + " requires the " + family + " triple");
}

void apply_poly_inplace(const Eigen::VectorXd& c, const Eigen::MatrixXd& x,
                        Eigen::MatrixXd& out) {
  const int deg = static_cast<int>(c.size()) - 1;
  out.setConstant(x.rows(), x.cols(), deg >= 0 ? c[deg] : 0.0);
  for (int i = deg - 1; i >= 0; --i)
    out.array() = out.array() * x.array() + c[i];
}

using BatchFn = std::function<void(double, const Eigen::MatrixXd&, const BatchZ*,
                                   Eigen::MatrixXd&)>;

/// Adapts a batched kernel to the single-field signature: pads or truncates
/// the input to n modes, unpacks the HSMap into per-direction slabs.
std::function<SpectralField(double, const SpectralField&, const HSMap&, int)>
make_scalar_eval(BatchFn batch, TriplePtr triple) {
  return [batch = std::move(batch), triple](double t, const SpectralField& v,
                                            const HSMap& z, int galerkin_n) {
    if (galerkin_n < 1 || galerkin_n > triple->modes())
      throw std::invalid_argument("galerkin dimension outside the triple's range");
    if (!v.coeffs.allFinite())
      throw std::domain_error("drift evaluated at non-finite coefficients");
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(galerkin_n, 1);
    const int m = std::min<int>(galerkin_n, static_cast<int>(v.coeffs.size()));
    y.col(0).head(m) = v.coeffs.head(m);
    BatchZ slabs;
    if (z.entries.size() > 0) {
      slabs.resize(z.entries.cols());
      const int mk = std::min<int>(galerkin_n, static_cast<int>(z.entries.rows()));
      for (int j = 0; j < z.entries.cols(); ++j) {
        slabs[j] = Eigen::MatrixXd::Zero(galerkin_n, 1);
        slabs[j].col(0).head(mk) = z.entries.col(j).head(mk);
      }
    }
    Eigen::MatrixXd out(galerkin_n, 1);
    batch(t, y, slabs.empty() ? nullptr : &slabs, out);
    return SpectralField{out.col(0), triple};
  };
}

void check_batch_input(const Eigen::MatrixXd& y, const TriplePtr& triple) {
  if (y.rows() < 1 || y.rows() > triple->modes())
    throw std::invalid_argument("galerkin dimension outside the triple's range");
  if (!y.allFinite())
    throw std::domain_error("drift evaluated at non-finite coefficients");
}

void add_z_term(const std::optional<ZPerturbation>& h, const BatchZ* z,
                Eigen::MatrixXd& out) {
  if (!h || h->kappa == 0.0 || z == nullptr) return;
  if (h->direction < static_cast<int>(z->size()))
    out += h->kappa * (*z)[h->direction];
}

}  // namespace

double Modulus::value_at(double v_norm) const {
  return c * (1.0 + std::pow(v_norm, p));
}

double Modulus::operator()(const SpectralField& v) const {
  return value_at(norm(v, SpaceNorm::V));
}

double Modulus::sup_on_ball(double m) const {
  if (!closed_form)
    throw std::invalid_argument("modulus has no closed-form ball supremum");
  return value_at(m);
}

ScalarFn scalar_fn(const std::string& name) {
  const double inf = std::numeric_limits<double>::infinity();
  if (name == "identity")
    return {name, [](double x) { return x; }, 1.0, inf, 1.0, true};
  if (name == "arctan")
    return {name, [](double x) { return std::atan(x); }, 1.0,
            std::numbers::pi / 2, 1.0, true};
  if (name == "tanh")
    return {name, [](double x) { return std::tanh(x); }, 1.0, 1.0, 1.0, true};
  if (name == "zero")
    return {name, [](double) { return 0.0; }, 0.0, 0.0, 0.0, true};
  throw std::invalid_argument("unknown scalar function: " + name);
}

ReactionPoly ReactionPoly::zero() { return ReactionPoly{}; }

double ReactionPoly::eval(double x) const { return horner(coeffs, x); }

double ReactionPoly::slope_on_interval(double lo, double hi) const {
  if (degree < 1) return 0.0;
  return poly_abs_max_on(poly_derivative(coeffs), lo, hi);
}

namespace {

ReactionPoly build_reaction(const Eigen::VectorXd& raw) {
  ReactionPoly g;
  g.coeffs = trim_leading_zeros(raw);
  g.degree = static_cast<int>(g.coeffs.size()) - 1;
  if (g.degree < 0) return ReactionPoly::zero();
  g.p = g.degree + 1;
  g.slope_max = g.degree >= 1 ? poly_sup(poly_derivative(g.coeffs)) : 0.0;
  g.growth_c = g.coeffs.cwiseAbs().sum();
  Eigen::VectorXd sg(g.coeffs.size() + 1);
  sg[0] = 0.0;
  sg.tail(g.coeffs.size()) = g.coeffs;
  g.b_plus = std::max(0.0, poly_sup(sg));
  g.g0 = g.coeffs[0];
  return g;
}

}  // namespace

ReactionPoly reaction_g(const Eigen::VectorXd& coeffs) {
  const Eigen::VectorXd c = trim_leading_zeros(coeffs);
  const int deg = static_cast<int>(c.size()) - 1;
  if (deg < 1)
    throw std::invalid_argument("reaction polynomial must have degree >= 1");
  if (deg % 2 == 0)
    throw std::invalid_argument(
        "reaction polynomial rejected: even degree (dissipativity requires odd "
        "degree with negative leading coefficient)");
  if (c[deg] >= 0)
    throw std::invalid_argument(
        "reaction polynomial rejected: leading coefficient must be negative");
  return build_reaction(c);
}

ReactionPoly reaction_g_unchecked(const Eigen::VectorXd& coeffs) {
  return build_reaction(coeffs);
}

ZPerturbation z_perturbation(double kappa, int direction, double eps_budget) {
  if (direction < 0) throw std::invalid_argument("noise direction must be >= 0");
  if (!(kappa * kappa <= eps_budget))
    throw std::invalid_argument(
        "noise feedback rejected: kappa^2 exceeds the eps budget");
  return ZPerturbation{kappa, direction};
}

PsiSpec psi_linear() {
  return {"linear", [](double s) { return s; }, 1.0, 1.0};
}

PsiSpec psi_power(double r, double delta) {
  if (!(r > 0.0 && r < 1.0))
    throw std::invalid_argument(
        "diffusion exponent rejected: requires 0 < r < 1");
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  return {"power", [r, delta](double s) {
            return s * std::pow(s * s + delta * delta, (r - 1.0) / 2.0);
          },
          1.0, std::pow(delta, r - 1.0)};
}

PsiSpec psi_power_unchecked(double r) {
  return {"power-unchecked", [r](double s) {
            return s == 0.0 ? 0.0 : std::pow(std::abs(s), r - 1.0) * s;
          },
          1.0, 1.0};
}

DriftSpec heat_drift(const TriplePtr& sobolev) {
  require_triple(sobolev, "sobolev", "heat drift");
  DriftSpec d;
  d.name = "heat";
  d.triple = sobolev;
  d.rho = {0.0, 2.0, true};
  d.growth = {1.0, 1.0, true};
  d.K = 0.0;
  d.eps = 0.25;
  d.f = [](double) { return 0.0; };
  d.f_sup = 0.0;
  d.z_lip = 0.0;
  const Eigen::VectorXd lambda = sobolev->lambda;
  d.y_lip = [lambda](double, int n) { return lambda[n - 1]; };
  d.evaluate_batch = [lambda, triple = sobolev](double, const Eigen::MatrixXd& y,
                                                const BatchZ*,
                                                Eigen::MatrixXd& out) {
    check_batch_input(y, triple);
    out.noalias() = (-lambda.head(y.rows())).asDiagonal() * y;
  };
  d.evaluate = make_scalar_eval(d.evaluate_batch, sobolev);
  return d;
}

namespace {

/// Shared assembly for the advection-reaction family. `second_order` selects
/// the Burgers form (Laplacian + f̄(v)·∂_x v) over the flux form ∂_x(f̄(∂_x v)).
DriftSpec advection_reaction_drift(std::string name, bool second_order,
                                   const ScalarFn& fbar, const ReactionPoly& g,
                                   const std::optional<ZPerturbation>& h,
                                   const TriplePtr& sobolev, int grid_factor) {
  require_triple(sobolev, "sobolev", name + " drift");
  if (grid_factor < 2)
    throw std::invalid_argument("grid factor must be at least 2");
  // Products of g(v) against second derivatives reach combined mode frequency
  // (degree+1)·N; keep the interior quadrature exact for them.
  grid_factor = std::max(grid_factor, (g.degree + 2) / 2 + 1);

  const double kappa = h ? std::abs(h->kappa) : 0.0;
  const double c_plus = std::max(0.0, g.slope_max);
  DriftSpec d;
  d.name = std::move(name);
  d.triple = sobolev;
  d.eps = 0.25;
  if (kappa > 0 && !(kappa * kappa <= d.eps))
    throw std::invalid_argument(
        "noise feedback rejected: kappa^2 exceeds the eps budget");
  d.z_lip = kappa;
  d.f = [b = g.b_plus](double) { return b; };
  d.f_sup = g.b_plus;
  const double pexp = std::max(2.0, g.p);
  const Eigen::VectorXd lambda = sobolev->lambda;

  if (second_order) {
    if (!std::isfinite(fbar.sup_abs))
      throw std::invalid_argument(
          "advection coefficient must be bounded for the second-order form");
    const double sup = fbar.sup_abs, lip = fbar.lipschitz;
    d.rho = {5.0 * sup * sup + 5.0 * std::pow(lip, 4.0 / 3.0) + c_plus + kappa,
             pexp, true};
    d.growth = {2.0 * (1.0 + 3.0 * sup + g.growth_c), pexp, true};
    d.K = std::max(6.0 * sup * sup + c_plus + kappa * kappa / (4.0 * d.eps),
                   kappa);
    d.y_lip = [lambda, sup, lip, g](double ball, int n) {
      const double lam = lambda[n - 1];
      return lam + sup * std::sqrt(lam) + lip * std::sqrt(1.0 + lam) * ball +
             g.slope_on_interval(-ball, ball);
    };
  } else {
    if (!fbar.nondecreasing)
      throw std::invalid_argument(
          "flux coefficient must be nondecreasing for the flux form");
    d.rho = {std::max(c_plus, kappa), pexp, true};
    d.growth = {2.0 * (fbar.growth_c + g.growth_c), pexp, true};
    d.K = std::max(c_plus + kappa * kappa / (4.0 * d.eps), kappa);
    d.y_lip = [lambda, lip = fbar.lipschitz, g](double ball, int n) {
      return lambda[n - 1] * lip + g.slope_on_interval(-ball, ball);
    };
  }

  d.evaluate_batch = [fbar, g, h, second_order, grid_factor, lambda,
                      triple = sobolev](double, const Eigen::MatrixXd& y,
                                        const BatchZ* z, Eigen::MatrixXd& out) {
    check_batch_input(y, triple);
    const int n = static_cast<int>(y.rows());
    const GridOps& grid = grid_ops(n, grid_factor * n);
    if (second_order) {
      out.noalias() = (-lambda.head(n)).asDiagonal() * y;
      if (fbar.name != "zero") {
        Eigen::MatrixXd vals = grid.val * y;
        Eigen::MatrixXd dvals = grid.deriv_int * y;
        for (int c = 0; c < vals.cols(); ++c)
          for (int i = 0; i < vals.rows(); ++i)
            dvals(i, c) *= fbar.fn(vals(i, c));
        out.noalias() += grid.h * (grid.val.transpose() * dvals);
      }
    } else {
      Eigen::MatrixXd dvals = grid.deriv_full * y;
      for (int c = 0; c < dvals.cols(); ++c)
        for (int i = 0; i < dvals.rows(); ++i)
          dvals(i, c) = fbar.fn(dvals(i, c));
      out.noalias() =
          -grid.deriv_full.transpose() * (grid.w_full.asDiagonal() * dvals);
    }
    if (g.degree >= 0) {
      Eigen::MatrixXd vals = grid.val * y;
      Eigen::MatrixXd gvals;
      apply_poly_inplace(g.coeffs, vals, gvals);
      out.noalias() += grid.h * (grid.val.transpose() * gvals);
    }
    add_z_term(h, z, out);
  };
  d.evaluate = make_scalar_eval(d.evaluate_batch, sobolev);
  return d;
}

}  // namespace

DriftSpec csf_drift(const ScalarFn& fbar, const ReactionPoly& g,
                    const std::optional<ZPerturbation>& h,
                    const TriplePtr& sobolev, int grid_factor) {
  return advection_reaction_drift("csf", false, fbar, g, h, sobolev,
                                  grid_factor);
}

DriftSpec burgers_drift(const ScalarFn& fbar, const ReactionPoly& g,
                        const std::optional<ZPerturbation>& h,
                        const TriplePtr& sobolev, int grid_factor) {
  return advection_reaction_drift("burgers", true, fbar, g, h, sobolev,
                                  grid_factor);
}

namespace {

DriftSpec diffusion_transform_drift(std::string name, const PsiSpec& psi,
                                    const TriplePtr& dual, int grid_factor) {
  require_triple(dual, "dual", name + " drift");
  if (grid_factor < 2)
    throw std::invalid_argument("grid factor must be at least 2");
  DriftSpec d;
  d.name = std::move(name);
  d.triple = dual;
  d.rho = {0.0, 2.0, true};
  d.growth = {psi.growth_c, 1.0, true};
  d.K = 0.0;
  d.eps = 0.25;
  d.f = [](double) { return 0.0; };
  d.f_sup = 0.0;
  d.z_lip = 0.0;
  const Eigen::VectorXd lambda = dual->lambda;
  d.y_lip = [lambda, lip = psi.lip_global](double, int n) {
    return lambda[n - 1] * lip;
  };
  d.evaluate_batch = [psi, lambda, grid_factor, triple = dual](
                         double, const Eigen::MatrixXd& y, const BatchZ*,
                         Eigen::MatrixXd& out) {
    check_batch_input(y, triple);
    const int n = static_cast<int>(y.rows());
    const GridOps& grid = grid_ops(n, grid_factor * n);
    Eigen::MatrixXd vals = grid.val * y;
    for (int c = 0; c < vals.cols(); ++c)
      for (int i = 0; i < vals.rows(); ++i) vals(i, c) = psi.fn(vals(i, c));
    out.noalias() = grid.h * (grid.val.transpose() * vals);
    out = (-lambda.head(n)).asDiagonal() * out;
  };
  d.evaluate = make_scalar_eval(d.evaluate_batch, dual);
  return d;
}

}  // namespace

DriftSpec fast_diffusion_drift(const PsiSpec& psi, const TriplePtr& dual,
                               int grid_factor) {
  if (psi.name == "power-unchecked")
    throw std::invalid_argument(
        "diffusion exponent rejected: requires 0 < r < 1");
  return diffusion_transform_drift("fastdiff", psi, dual, grid_factor);
}

DriftSpec zero_drift(const TriplePtr& triple) {
  DriftSpec d;
  d.name = "zero";
  d.triple = triple;
  d.rho = {0.0, 2.0, true};
  d.growth = {0.0, 1.0, true};
  d.K = 0.0;
  d.eps = 0.25;
  d.f = [](double) { return 0.0; };
  d.f_sup = 0.0;
  d.z_lip = 0.0;
  d.y_lip = [](double, int) { return 0.0; };
  d.evaluate_batch = [triple](double, const Eigen::MatrixXd& y, const BatchZ*,
                              Eigen::MatrixXd& out) {
    check_batch_input(y, triple);
    out.setZero(y.rows(), y.cols());
  };
  d.evaluate = make_scalar_eval(d.evaluate_batch, triple);
  return d;
}

DriftSpec cubic_fixture_drift(const TriplePtr& sobolev) {
  Eigen::VectorXd cubic(4);
  cubic << 0, 0, 0, 1;
  DriftSpec d = advection_reaction_drift(
      "cubic-bad", false, scalar_fn("arctan"), reaction_g_unchecked(cubic),
      std::nullopt, sobolev, 4);
  // Forged certificate: these constants would be honest for -x^3, not x^3.
  d.rho = {1.0, 4.0, true};
  d.growth = {4.0, 4.0, true};
  d.K = 1.0;
  d.f = [](double) { return 1.0; };
  d.f_sup = 1.0;
  d.y_lip = [lambda = sobolev->lambda](double ball, int n) {
    return lambda[n - 1] + 3.0 * ball * ball;
  };
  return d;
}

DriftSpec porous_fixture_drift(double r, const TriplePtr& dual) {
  if (!(r > 1.0))
    throw std::invalid_argument("porous fixture requires r > 1");
  // Forged certificate: linear growth is false for a superlinear diffusion.
  return diffusion_transform_drift("porous-bad", psi_power_unchecked(r), dual,
                                   4);
}

}  // namespace bspde
