#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bspde/drift_ops.hpp"

namespace bspde {

/// Normalized margins below this count as violations. Margins are
/// (rhs - lhs) / max(1, |lhs|, |rhs|), so the tolerance is relative on
/// large scales and absolute near zero.
inline constexpr double kMarginTol = 1e-8;

struct CheckWitness {
  double t = 0;
  double s = 0;  // continuity scan location, where applicable
  Eigen::VectorXd v1, v2, dir;
  Eigen::MatrixXd z1, z2;  // n_modes x d_u
  long index = -1;         // sample index the witness came from
  std::string note;
};

struct CheckReport {
  std::string condition;
  std::string subject;  // operator or triple under audit
  int samples = 0;
  std::uint64_t seed = 0;
  double worst_margin = 0;
  bool pass = false;
  CheckWitness witness;
  std::string detail;
  /// Re-evaluates the stored witness in isolation and returns its margin;
  /// a failing report must reproduce a margin below -kMarginTol here.
  std::function<double()> recheck;
};

struct CheckOptions {
  int galerkin_n = 16;
  int d_u = 4;
  double amp_lo = 1e-2;
  double amp_hi = 1e2;
};

/// Structural audit of a triple: weight positivity, continuity of the
/// embedding (wH <= wV up to the first-mode scale), and the bitwise
/// duality identity wVstar = fl(wH^2 / wV). n_modes = 0 audits every
/// stored mode.
CheckReport check_h0(const TripleSpec& triple, int n_modes = 0);

/// Hemicontinuity scan: s -> <A(t, v1 + s v2, z), dir> on a refining grid,
/// flagging jumps that fail to shrink with the spacing.
CheckReport check_h1(const DriftSpec& drift, int n_samples, std::uint64_t seed,
                     const CheckOptions& opts = {});

/// Local monotonicity: <A(t,v1,z1) - A(t,v2,z2), v1 - v2> against
/// rho(v2) (||dv||_H^2 + ||dv||_H ||dz||_{L2(U,H)}).
CheckReport check_h2(const DriftSpec& drift, int n_samples, std::uint64_t seed,
                     const CheckOptions& opts = {});

/// Coercivity: (A(t,v,z), v)_V against f(t) + eps ||z||_{L2(U,V)}^2
/// + K ||v||_V^2.
CheckReport check_h3(const DriftSpec& drift, int n_samples, std::uint64_t seed,
                     const CheckOptions& opts = {});

/// Dual-norm growth: ||A(t,v,z)||_{V*} against sqrt(f(t)) + growth(v)
/// + K ||z||_{L2(U,V)}.
CheckReport check_h4(const DriftSpec& drift, int n_samples, std::uint64_t seed,
                     const CheckOptions& opts = {});

/// Lipschitz and one-sided constants of a (normally tamed) drift:
///  - C2: the sampled z-quotient stays within the certified z_lip;
///  - C3: the sampled one-sided y-quotient is stable across amplitude
///    decades instead of diverging;
///  - C4: sup_y ||A(t,y,0) - A(t,0,0)||_H over the sampled range is finite.
std::vector<CheckReport> check_c2_c4(const DriftSpec& drift, int n_samples,
                                     std::uint64_t seed,
                                     const CheckOptions& opts = {});

/// One-line rendering of a report for logs and report files.
std::string describe(const CheckReport& report);

}  // namespace bspde
