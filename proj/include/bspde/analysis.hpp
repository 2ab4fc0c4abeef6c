#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bspde/bsde_solver.hpp"
#include "bspde/drift_ops.hpp"
#include "bspde/noise_terminal.hpp"

namespace bspde {

/// Per-path defect of the discrete energy identity evaluated at t = 0:
///
///   ||X_0||_V^2 - ||X_T||_V^2
///     - sum_i [ 2 <A(t_i, X_i, Z_i), X_i>_V - ||Z_i||_{L2(U,V)}^2 ] dt
///     + sum_i 2 <X_i, Z_i dW_i>_V
///
/// with left-endpoint sums over i = 0..M-1.  For a martingale (zero drift)
/// the expectation of each entry telescopes to the Ito correction error of
/// the scheme; with a consistent solution the entries shrink with dt.
Eigen::VectorXd energy_residual(const BsdeSolution& sol, const DriftSpec& drift,
                                const WienerEnsemble& ensemble);

struct AprioriStatistic {
  /// sup over paths and time nodes of ||X||_V^2.
  double sup_v_sq = 0;
  /// mean over paths of (1/2) sum_i ||Z_i||_{L2(U,V)}^2 dt.
  double z_energy = 0;
};

AprioriStatistic apriori_statistic(const BsdeSolution& sol);

struct GronwallResult {
  /// b(t_i) = e^{alpha (T - t_i)} y(T) + sum_{j >= i} e^{alpha (t_j - t_i)}
  /// x(t_j) dt, left-endpoint sums over j = i..M-1.
  Eigen::VectorXd bound;
  /// Whether y(t_i) <= y(T) + sum_{j >= i} (x + alpha y)(t_j) dt held at
  /// every node; the conclusion y <= bound is only asserted under it.
  bool hypothesis_holds = true;
  int first_violation = -1;
  double hypothesis_excess = 0;
  bool conclusion_holds = true;
  /// max_i (y_i - b_i); negative when the bound dominates strictly.
  double max_excess = 0;
  double tolerance = 0;
};

/// Discrete backward Gronwall bound for a series y on the nodes of `grid`
/// (lengths steps + 1), driven by x with rate alpha.  A negative `tol`
/// selects an automatic slack of order dt.
GronwallResult gronwall_bound(const Eigen::VectorXd& y, const Eigen::VectorXd& x,
                              double alpha, const TimeGrid& grid,
                              double tol = -1.0);

struct StabilityResult {
  /// max over paths and nodes of e^{r(t_i)} ||X1 - X2||_H^2 divided by the
  /// mean over paths of e^{r(T)} ||X1_T - X2_T||_H^2.
  double ratio = 0;
  double numerator = 0;
  double denominator = 0;
};

/// Stability of the solution map in the terminal datum: both solutions must
/// come from the same ensemble and discretisation, differing only in the
/// terminal condition.  The weight r(t) = 2 sum_{j < i} [rho(X2_j) +
/// rho(X2_j)^2] dt accumulates the modulus of `drift` along the second
/// solution, per path.
StabilityResult terminal_stability(const BsdeSolution& sol1,
                                   const BsdeSolution& sol2,
                                   const DriftSpec& drift);

struct CauchyRow {
  double level = 0;
  /// max over paths and nodes of ||X^{prev} - X^{this}||_H; NaN on the
  /// first row.
  double sup_h_gap = 0;
  /// sqrt(mean over paths of sum_i ||Z^{prev} - Z^{this}||_{L2(U,H)}^2 dt);
  /// NaN on the first row.
  double z_gap = 0;
  /// fraction of (path, step) slots where any truncation fired.
  double fire_fraction = 0;
  /// sup_v_sq + z_energy of this level's solution.
  double apriori = 0;
};

/// Solves the same problem at increasing taming levels n on one shared
/// ensemble and reports the gaps between consecutive solutions.  `cfg`
/// supplies everything but taming.level_n, which is swept over `levels`.
std::vector<CauchyRow> cauchy_in_n(const DriftSpec& base,
                                   const TerminalSpec& terminal,
                                   const WienerEnsemble& ensemble,
                                   const SolverConfig& cfg,
                                   const std::vector<double>& levels);

}  // namespace bspde
