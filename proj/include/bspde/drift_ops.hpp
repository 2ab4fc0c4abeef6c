#pragma once

#include "bspde/function_space.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace bspde {

/// Certified modulus of the form v ↦ c·(1 + ‖v‖_V^p). `closed_form` marks
/// moduli whose supremum over V-balls is available analytically; taming
/// refuses anything else.
struct Modulus {
  double c = 0;
  double p = 2;
  bool closed_form = true;

  double operator()(const SpectralField& v) const;
  double value_at(double v_norm) const;
  double sup_on_ball(double m) const;
};

/// Scalar nonlinearity with the constants the certificates need.
/// sup_abs is +inf for unbounded choices (rejected where boundedness is a
/// precondition); growth_c satisfies |f(x)| ≤ growth_c·(1+|x|).
struct ScalarFn {
  std::string name;
  std::function<double(double)> fn;
  double lipschitz = 0;
  double sup_abs = std::numeric_limits<double>::infinity();
  double growth_c = 0;
  bool nondecreasing = false;
};

/// Named choices: "identity", "arctan", "tanh", "zero".
ScalarFn scalar_fn(const std::string& name);

/// Reaction polynomial g (ascending coefficients). Conforming polynomials
/// have odd degree and negative leading coefficient, which makes
/// slope_max = max g', b_plus = max(0, sup s·g(s)) and the growth constant
/// finite and computable from the coefficients.
struct ReactionPoly {
  Eigen::VectorXd coeffs;
  int degree = -1;
  double p = 2;          // degree + 1, the modulus exponent
  double slope_max = 0;  // global max of g'
  double growth_c = 0;   // Σ|a_i|, so |g(x)| ≤ growth_c·(1+|x|^degree)
  double b_plus = 0;     // max(0, sup_s s·g(s))
  double g0 = 0;         // g(0)

  static ReactionPoly zero();
  double eval(double x) const;
  double slope_on_interval(double lo, double hi) const;  // max |g'| on [lo,hi]
};

/// Validates odd degree and negative leading coefficient, then derives the
/// certificate constants (extrema via companion-matrix roots).
ReactionPoly reaction_g(const Eigen::VectorXd& coeffs);

/// Skips the dissipativity validation. Audit-fixture use only: the derived
/// constants are NOT certificates for such a polynomial.
ReactionPoly reaction_g_unchecked(const Eigen::VectorXd& coeffs);

/// Additive noise-feedback term h(z) = kappa · (column `direction` of z).
struct ZPerturbation {
  double kappa = 0;
  int direction = 0;  // 0-based noise coordinate
};

/// Budget check: kappa² must fit inside the eps share of the coercivity
/// budget (eps_budget defaults to the drift factories' eps).
ZPerturbation z_perturbation(double kappa, int direction, double eps_budget = 0.25);

/// Diffusion nonlinearity Ψ for the dual-triple operator Δ(Ψ(v)).
struct PsiSpec {
  std::string name;
  std::function<double(double)> fn;
  double growth_c = 0;   // |Ψ(s)| ≤ growth_c·(1+|s|)
  double lip_global = 0; // global Lipschitz constant of Ψ
};

PsiSpec psi_linear();
/// Ψ_δ(s) = s·(s²+δ²)^{(r−1)/2}; requires 0 < r < 1 (the singular-diffusion
/// range). r ≥ 1 is rejected.
PsiSpec psi_power(double r, double delta = 1e-3);
/// Ψ(s) = |s|^{r−1}s with r > 1, carrying a deliberately false linear-growth
/// constant. Audit-fixture use only.
PsiSpec psi_power_unchecked(double r);

using BatchZ = std::vector<Eigen::MatrixXd>;  // per noise direction: n_modes × P

/// A drift operator together with its certified constants. evaluate returns
/// the first-n coefficients of the operator value; evaluate_batch applies it
/// to every column of an n×P coefficient matrix at once (z passed as
/// per-direction slabs, or nullptr when no z enters).
struct DriftSpec {
  std::string name;
  TriplePtr triple;
  bool maps_Hn_to_V = true;

  Modulus rho;     // local-monotonicity modulus
  Modulus growth;  // dual-norm growth modulus
  double K = 0;
  double eps = 0.25;  // in (0, 1/2)
  std::function<double(double)> f;  // deterministic forcing bound, f(t) ≥ 0
  double f_sup = 0;
  double z_lip = 0;  // ‖A(t,v,z)−A(t,v,z')‖_H ≤ z_lip·‖z−z'‖_{L2(U,H)}

  /// Lipschitz-in-y constant on {‖y‖_V ≤ ball} ∩ H_n (H norms).
  std::function<double(double ball, int n)> y_lip;

  std::function<SpectralField(double t, const SpectralField& y, const HSMap& z,
                              int galerkin_n)>
      evaluate;
  std::function<void(double t, const Eigen::MatrixXd& y, const BatchZ* z,
                     Eigen::MatrixXd& out)>
      evaluate_batch;

  /// Taming bookkeeping (set by the taming wrapper, empty on raw drifts).
  double contraction_lip = 0;  // dt·contraction_lip < 1 is the solver guard
  std::function<void(double t, const Eigen::MatrixXd& y, const BatchZ* z,
                     std::vector<std::uint8_t>& flags)>
      activity_batch;

  double forcing(double t) const { return f ? f(t) : 0.0; }
};

constexpr std::uint8_t kActivityCutoff = 1;  // radial cutoff engaged (< 1)
constexpr std::uint8_t kActivityClip = 2;    // z clipped
constexpr std::uint8_t kActivityRate = 4;    // rate damping engaged (< 1)

/// Δv on the Sobolev triple: mode k maps to −λ_k a_k.
DriftSpec heat_drift(const TriplePtr& sobolev);

/// ∂_x(f̄(∂_x v)) + g(v) + h(z) on the Sobolev triple. f̄ nondecreasing with
/// linear growth; g a conforming reaction polynomial; optional noise feedback.
DriftSpec csf_drift(const ScalarFn& fbar, const ReactionPoly& g,
                    const std::optional<ZPerturbation>& h, const TriplePtr& sobolev,
                    int grid_factor = 4);

/// ∂²_x v + f̄(v)·∂_x v + g(v) + h(z); f̄ must be bounded and Lipschitz.
DriftSpec burgers_drift(const ScalarFn& fbar, const ReactionPoly& g,
                        const std::optional<ZPerturbation>& h,
                        const TriplePtr& sobolev, int grid_factor = 4);

/// Δ(Ψ(v)) on the dual triple; Ψ nondecreasing with linear growth.
DriftSpec fast_diffusion_drift(const PsiSpec& psi, const TriplePtr& dual,
                               int grid_factor = 4);

DriftSpec zero_drift(const TriplePtr& triple);

/// Audit fixtures: operators that LOOK certified but are not. The cubic
/// fixture is the csf shape with g(x)=x³ and a forged modulus; the porous
/// fixture is Δ(|v|^{r−1}v) with r>1 and a forged linear-growth constant.
DriftSpec cubic_fixture_drift(const TriplePtr& sobolev);
DriftSpec porous_fixture_drift(double r, const TriplePtr& dual);

}  // namespace bspde
