#pragma once

#include "bspde/function_space.hpp"

#include <cstdint>
#include <vector>

namespace bspde {

struct TimeGrid {
  double T = 1.0;
  int steps = 2;

  double dt() const { return T / steps; }
  double node(int i) const { return i * dt(); }
  void validate() const;
};

/// Truncated cylindrical Wiener ensemble. increment(i) holds the step-i
/// Gaussian increments (variance dt) as a paths x d_u matrix; brownian(i)
/// holds the running sums, so brownian(steps) is the terminal state and the
/// only endpoint representation used anywhere.
class WienerEnsemble {
 public:
  WienerEnsemble(const TimeGrid& grid, int paths, int d_u, std::uint64_t seed);

  int paths() const { return paths_; }
  int steps() const { return static_cast<int>(increments_.size()); }
  int d_u() const { return d_u_; }
  std::uint64_t seed() const { return seed_; }
  double dt() const { return dt_; }

  const Eigen::MatrixXd& increment(int i) const { return increments_.at(i); }
  const Eigen::MatrixXd& brownian(int i) const { return sums_.at(i); }

 private:
  int paths_ = 0;
  int d_u_ = 0;
  std::uint64_t seed_ = 0;
  double dt_ = 0;
  std::vector<Eigen::MatrixXd> increments_;  // steps entries, paths x d_u
  std::vector<Eigen::MatrixXd> sums_;        // steps+1 entries, paths x d_u
};

WienerEnsemble sample_wiener(const TimeGrid& grid, int paths, int d_u,
                             std::uint64_t seed);

struct TerminalSpec {
  enum class Kind { Deterministic, BoundedFunctional, LinearUnbounded };

  Kind kind = Kind::Deterministic;
  SpectralField field;    // Deterministic payload
  Eigen::VectorXd coeff;  // per-mode weights for the functional kinds
  TriplePtr triple;

  /// False for the linear kind: it breaks the bounded-terminal requirement
  /// and is kept purely as a closed-form benchmark.
  bool conforming() const { return kind != Kind::LinearUnbounded; }
  /// Upper bound on the V-norm over all paths; +inf for the linear kind.
  double ess_sup_v() const;
};

TerminalSpec deterministic_terminal(const SpectralField& field);
TerminalSpec bounded_terminal(const Eigen::VectorXd& coeff,
                              const TriplePtr& triple);
TerminalSpec linear_terminal(const Eigen::VectorXd& coeff,
                             const TriplePtr& triple);

/// Terminal coefficients per path as a galerkin_n x paths matrix:
/// Deterministic repeats the stored field; BoundedFunctional applies
/// c_k tanh(W_T^(k)); LinearUnbounded applies c_k W_T^(k).
Eigen::MatrixXd evaluate_terminal(const TerminalSpec& spec,
                                  const WienerEnsemble& ensemble,
                                  int galerkin_n);

}  // namespace bspde
