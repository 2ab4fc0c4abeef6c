#include "bspde/noise_terminal.hpp"

#include <cmath>
#include <stdexcept>

#include "bspde/rng.hpp"

namespace bspde {

void TimeGrid::validate() const {
  if (!(T > 0) || !std::isfinite(T))
    throw std::invalid_argument("time horizon must be positive finite");
  if (steps < 2) throw std::invalid_argument("time grid needs at least 2 steps");
}

WienerEnsemble::WienerEnsemble(const TimeGrid& grid, int paths, int d_u,
                               std::uint64_t seed)
    : paths_(paths), d_u_(d_u), seed_(seed), dt_(grid.dt()) {
  grid.validate();
  if (paths < 1) throw std::invalid_argument("need at least one path");
  if (d_u < 1) throw std::invalid_argument("need at least one noise mode");

  const double scale = std::sqrt(dt_);
  const int draws = grid.steps * d_u;
  increments_.assign(grid.steps, Eigen::MatrixXd(paths, d_u));
  for (int p = 0; p < paths; ++p) {
    const std::uint64_t key = rng::derive_key(seed, p);
    double g[2];
    for (int c = 0; c < draws; ++c) {
      if (c % 2 == 0) rng::normal_pair(key, c / 2, g[0], g[1]);
      increments_[c / d_u](p, c % d_u) = scale * g[c % 2];
    }
  }

  sums_.assign(grid.steps + 1, Eigen::MatrixXd::Zero(paths, d_u));
  for (int i = 0; i < grid.steps; ++i) sums_[i + 1] = sums_[i] + increments_[i];
}

WienerEnsemble sample_wiener(const TimeGrid& grid, int paths, int d_u,
                             std::uint64_t seed) {
  return WienerEnsemble(grid, paths, d_u, seed);
}

double TerminalSpec::ess_sup_v() const {
  switch (kind) {
    case Kind::Deterministic:
      return norm(field, SpaceNorm::V);
    case Kind::BoundedFunctional: {
      double sum = 0.0;
      for (int k = 0; k < coeff.size(); ++k)
        sum += triple->wV[k] * coeff[k] * coeff[k];
      return std::sqrt(sum);
    }
    case Kind::LinearUnbounded:
      return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

TerminalSpec deterministic_terminal(const SpectralField& field) {
  if (!field.triple) throw std::invalid_argument("terminal field needs a triple");
  if (!field.coeffs.allFinite())
    throw std::invalid_argument("terminal field must be finite");
  return {TerminalSpec::Kind::Deterministic, field, Eigen::VectorXd(),
          field.triple};
}

namespace {

TerminalSpec functional_terminal(TerminalSpec::Kind kind,
                                 const Eigen::VectorXd& coeff,
                                 const TriplePtr& triple) {
  if (!triple) throw std::invalid_argument("terminal spec needs a triple");
  if (coeff.size() < 1 || coeff.size() > triple->modes())
    throw std::invalid_argument("terminal coefficients outside the mode range");
  if (!coeff.allFinite())
    throw std::invalid_argument("terminal coefficients must be finite");
  return {kind, SpectralField{}, coeff, triple};
}

}  // namespace

TerminalSpec bounded_terminal(const Eigen::VectorXd& coeff,
                              const TriplePtr& triple) {
  return functional_terminal(TerminalSpec::Kind::BoundedFunctional, coeff,
                             triple);
}

TerminalSpec linear_terminal(const Eigen::VectorXd& coeff,
                             const TriplePtr& triple) {
  return functional_terminal(TerminalSpec::Kind::LinearUnbounded, coeff, triple);
}

Eigen::MatrixXd evaluate_terminal(const TerminalSpec& spec,
                                  const WienerEnsemble& ensemble,
                                  int galerkin_n) {
  if (galerkin_n < 1) throw std::invalid_argument("galerkin dimension >= 1");
  const int P = ensemble.paths();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(galerkin_n, P);

  if (spec.kind == TerminalSpec::Kind::Deterministic) {
    const int m =
        std::min<int>(galerkin_n, static_cast<int>(spec.field.coeffs.size()));
    out.topRows(m).colwise() = spec.field.coeffs.head(m);
    return out;
  }

  const int m = static_cast<int>(spec.coeff.size());
  if (m > galerkin_n)
    throw std::invalid_argument(
        "terminal coefficients exceed the galerkin dimension");
  if (m > ensemble.d_u())
    throw std::invalid_argument(
        "terminal coefficients exceed the retained noise modes");
  const Eigen::MatrixXd& wT = ensemble.brownian(ensemble.steps());
  for (int p = 0; p < P; ++p)
    for (int k = 0; k < m; ++k)
      out(k, p) = spec.kind == TerminalSpec::Kind::BoundedFunctional
                      ? spec.coeff[k] * std::tanh(wT(p, k))
                      : spec.coeff[k] * wT(p, k);
  return out;
}

}  // namespace bspde
