#include "bspde/taming.hpp"

#include <cmath>
#include <stdexcept>

namespace bspde {

void TamingParams::validate() const {
  if (galerkin_n < 1)
    throw std::invalid_argument("taming: galerkin dimension must be >= 1");
  if (!(ball_m > 0) || !std::isfinite(ball_m))
    throw std::invalid_argument("taming: ball radius must be positive finite");
  if (!(level_n > 0) || !std::isfinite(level_n))
    throw std::invalid_argument("taming: level must be positive finite");
}

double smooth_cutoff(double r, double m) {
  if (!(m > 0)) throw std::invalid_argument("cutoff radius must be positive");
  const double a = std::abs(r);
  if (a <= m) return 1.0;
  if (a >= m + 1.0) return 0.0;
  const double s = a - m;
  return 1.0 - 3.0 * s * s + 2.0 * s * s * s;
}

namespace {

double hs_norm_first_modes(const HSMap& z, int galerkin_n) {
  if (z.entries.size() == 0) return 0.0;
  const int rows = std::min<int>(galerkin_n, static_cast<int>(z.entries.rows()));
  double sum = 0.0;
  for (int j = 0; j < z.entries.cols(); ++j)
    for (int k = 0; k < rows; ++k)
      sum += z.triple->wH[k] * z.entries(k, j) * z.entries(k, j);
  return std::sqrt(sum);
}

}  // namespace

HSMap clip_z(const HSMap& z, double level_n, int galerkin_n) {
  if (!(level_n > 0)) throw std::invalid_argument("clip level must be positive");
  const double nrm = hs_norm_first_modes(z, galerkin_n);
  if (nrm <= level_n) return z;
  HSMap out = z;
  out.entries *= level_n / nrm;
  return out;
}

double h_m(double t, const DriftSpec& drift, double m) {
  if (!(m > 0)) throw std::invalid_argument("ball radius must be positive");
  const double ft = drift.forcing(t);
  if (!(ft >= 0) || !std::isfinite(ft))
    throw std::invalid_argument("forcing bound must be nonnegative finite");
  return std::sqrt(ft) + drift.rho.sup_on_ball(m);
}

DriftSpec tamed_drift(const DriftSpec& base, const TamingParams& params) {
  params.validate();
  if (!base.rho.closed_form)
    throw std::invalid_argument(
        "taming rejected: monotonicity modulus has no closed-form ball "
        "supremum");
  const int N = params.galerkin_n;
  if (N > base.triple->modes())
    throw std::invalid_argument("taming: galerkin dimension exceeds the triple");

  DriftSpec d = base;
  d.name = "tamed(" + base.name + ")";
  d.z_lip = 2.0 * base.z_lip;
  d.contraction_lip = base.y_lip ? base.y_lip(params.ball_m + 1.0, N) : 0.0;
  d.y_lip = [inner = base.y_lip, m = params.ball_m](double ball, int n) {
    return inner ? inner(std::min(ball, m + 1.0), n) : 0.0;
  };

  const Eigen::VectorXd wH = base.triple->wH.head(N);
  const Eigen::VectorXd wV = base.triple->wV.head(N);

  auto column_data =
      [base, params, wH, wV](double t, const Eigen::MatrixXd& y, const BatchZ* z,
                             Eigen::VectorXd& scale_r, Eigen::VectorXd& clip_scale,
                             double& rate) {
        const int P = static_cast<int>(y.cols());
        rate = params.level_n / std::max(h_m(t, base, params.ball_m),
                                         params.level_n);
        scale_r.resize(P);
        for (int p = 0; p < P; ++p) {
          const double vn = std::sqrt(
              (wV.array() * y.col(p).array().square()).sum());
          scale_r[p] = smooth_cutoff(vn, params.ball_m);
        }
        clip_scale = Eigen::VectorXd::Ones(P);
        if (z != nullptr && !z->empty()) {
          Eigen::VectorXd sq = Eigen::VectorXd::Zero(P);
          for (const auto& slab : *z)
            sq += (slab.array().square().colwise() * wH.array())
                      .colwise()
                      .sum()
                      .transpose()
                      .matrix();
          for (int p = 0; p < P; ++p) {
            const double nrm = std::sqrt(sq[p]);
            if (nrm > params.level_n) clip_scale[p] = params.level_n / nrm;
          }
        }
      };

  d.evaluate_batch = [base, column_data](double t, const Eigen::MatrixXd& y,
                                         const BatchZ* z, Eigen::MatrixXd& out) {
    Eigen::VectorXd scale_r, clip_scale;
    double rate = 1.0;
    column_data(t, y, z, scale_r, clip_scale, rate);
    BatchZ clipped;
    const BatchZ* zin = z;
    if (z != nullptr && (clip_scale.array() < 1.0).any()) {
      clipped.reserve(z->size());
      for (const auto& slab : *z)
        clipped.push_back(slab * clip_scale.asDiagonal());
      zin = &clipped;
    }
    base.evaluate_batch(t, y, zin, out);
    out *= rate;
    out.array().rowwise() *= scale_r.transpose().array();
  };

  d.activity_batch = [column_data](double t, const Eigen::MatrixXd& y,
                                   const BatchZ* z,
                                   std::vector<std::uint8_t>& flags) {
    Eigen::VectorXd scale_r, clip_scale;
    double rate = 1.0;
    column_data(t, y, z, scale_r, clip_scale, rate);
    flags.assign(y.cols(), 0);
    for (int p = 0; p < y.cols(); ++p) {
      if (scale_r[p] < 1.0) flags[p] |= kActivityCutoff;
      if (clip_scale[p] < 1.0) flags[p] |= kActivityClip;
      if (rate < 1.0) flags[p] |= kActivityRate;
    }
  };

  d.evaluate = [base, params](double t, const SpectralField& v, const HSMap& z,
                              int galerkin_n) {
    const int n = std::min(galerkin_n, params.galerkin_n);
    const SpectralField vp = project(v, n);
    const double r = smooth_cutoff(norm(vp, SpaceNorm::V), params.ball_m);
    const double rate =
        params.level_n / std::max(h_m(t, base, params.ball_m), params.level_n);
    const HSMap zc = clip_z(z, params.level_n, params.galerkin_n);
    SpectralField av = base.evaluate(t, vp, zc, n);
    av.coeffs *= r * rate;
    return av;
  };

  return d;
}

}  // namespace bspde
