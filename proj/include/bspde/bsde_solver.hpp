#pragma once

#include "bspde/drift_ops.hpp"
#include "bspde/function_space.hpp"
#include "bspde/noise_terminal.hpp"
#include "bspde/taming.hpp"

#include <Eigen/Cholesky>

#include <stdexcept>
#include <vector>

namespace bspde {

struct SolverConfig {
  TimeGrid grid;
  int paths = 1024;
  int regression_degree = 2;
  int picard_max = 200;
  double picard_tol = 1e-12;
  double ridge = 1e-10;
  TamingParams taming;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SolverError : std::runtime_error {
  int step;
  double residual;
  SolverError(const std::string& msg, int step_, double residual_)
      : std::runtime_error(msg), step(step_), residual(residual_) {}
};

/// Multivariate monomial basis in d variables up to the given total degree.
struct RegressionBasis {
  int vars = 0;
  int degree = 0;
  std::vector<std::vector<int>> exponents;

  int size() const { return static_cast<int>(exponents.size()); }
  Eigen::MatrixXd design(const Eigen::MatrixXd& state) const;  // P x vars in
};

RegressionBasis monomial_basis(int vars, int degree);

/// Ridge-regularized least squares against a fixed design matrix, factored
/// once and reused across many target columns. Fitted values are exact (to
/// rounding) whenever a target lies in the basis span.
class CondexpSolver {
 public:
  CondexpSolver(const Eigen::MatrixXd& features, double ridge);

  /// targets: paths x m. Returns fitted values, paths x m.
  Eigen::MatrixXd fit(const Eigen::MatrixXd& targets);

  bool ridge_fallback() const { return ridge_fallback_; }
  /// Relative normal-equation residual of the last fit.
  double last_residual() const { return last_residual_; }

 private:
  Eigen::MatrixXd phi_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
  bool ridge_fallback_ = false;
  double last_residual_ = 0.0;
};

/// Convenience single-shot form of CondexpSolver::fit.
Eigen::MatrixXd condexp(const Eigen::MatrixXd& features,
                        const Eigen::MatrixXd& targets, double ridge);

struct BsdeSolution {
  TriplePtr triple;
  TimeGrid grid;
  int galerkin_n = 0;
  int paths = 0;
  int d_u = 0;
  std::uint64_t ensemble_seed = 0;

  std::vector<Eigen::MatrixXd> y;             // steps+1 entries, N x P
  std::vector<std::vector<Eigen::MatrixXd>> z;  // steps entries of d_u slabs, N x P

  std::vector<int> picard_iters;          // per step
  Eigen::VectorXd regression_residual;    // per step, relative
  Eigen::VectorXd taming_fraction;        // per step, any-flag fraction
  bool ridge_fallback_used = false;

  int steps() const { return static_cast<int>(z.size()); }
  double taming_fire_fraction() const {
    return taming_fraction.size() ? taming_fraction.mean() : 0.0;
  }
};

/// Backward induction for the projected equation: implicit in Y through a
/// Picard loop, explicit in Z through increment-projection regression with
/// the conditional mean as control variate.
BsdeSolution solve(const DriftSpec& drift, const TerminalSpec& terminal,
                   const WienerEnsemble& ensemble, const SolverConfig& cfg);

}  // namespace bspde
