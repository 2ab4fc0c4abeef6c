#pragma once

#include "bspde/drift_ops.hpp"
#include "bspde/function_space.hpp"

namespace bspde {

struct TamingParams {
  int galerkin_n = 1;   // N, projection dimension
  double ball_m = 1.0;  // M, radius of the cutoff ball in V
  double level_n = 1.0; // n, clipping radius and rate threshold

  void validate() const;
};

/// 1 inside |r| <= m, 0 outside |r| >= m+1, cubic smoothstep in between
/// (value 1-3s^2+2s^3 with s = |r|-m; C^1, slope bounded by 1.5).
double smooth_cutoff(double r, double m);

/// Radial retraction of z onto the ball of radius level_n in L2(U, H_N):
/// z unchanged when its norm is below the level, otherwise scaled onto the
/// sphere. Never increases the norm; idempotent.
HSMap clip_z(const HSMap& z, double level_n, int galerkin_n);

/// Rate threshold f(t)^{1/2} + sup of the drift's monotonicity modulus over
/// the V-ball of radius m. Requires a closed-form modulus.
double h_m(double t, const DriftSpec& drift, double m);

/// smooth_cutoff(|y|_V, M) * (n / max(h_M(t), n)) * P_N A(t, y, clip(z)).
/// The result is globally Lipschitz in y on H_N and in z; contraction_lip
/// carries the ball-restricted y-Lipschitz bound used by the solver guard,
/// and activity_batch reports which taming factors engaged per column.
DriftSpec tamed_drift(const DriftSpec& base, const TamingParams& params);

}  // namespace bspde
