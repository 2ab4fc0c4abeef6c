#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bspde/drift_ops.hpp"
#include "bspde/noise_terminal.hpp"
#include "bspde/run_config.hpp"
#include "bspde/taming.hpp"

namespace bspde {

/// Output directory for a run: the BSPDE_OUTPUT_ROOT environment variable
/// overrides the configured output.dir when set.
std::string resolve_output_dir(const RunConfig& cfg);

TriplePtr make_triple(const RunConfig& cfg);

/// Builds the configured operator. grid_factor <= 0 picks the default:
/// the factory's solving resolution. Audits pass a finer factor so that
/// quadrature artifacts stay below the margin tolerance across the
/// sampled amplitude range.
DriftSpec make_drift(const RunConfig& cfg, int grid_factor = 0);

/// Fine quadrature factor for audit-grade operators at dimension n.
int check_grid_factor(int n);

TerminalSpec make_terminal(const RunConfig& cfg);

struct ResolvedTaming {
  TamingParams params;
  bool auto_mode = false;
  double pilot_sup_v = 0;  // observed sup-path V-norm (auto mode)
  double pilot_sup_z = 0;  // observed sup L2(U,H) Z-norm (auto mode)
};

/// Materializes taming parameters. Manual mode copies the config; auto mode
/// runs a pilot solve inside a deliberately inactive envelope and sets
/// M = sup-path V-norm + 1, n = 2 max(h_M, sup Z).
ResolvedTaming resolve_taming(const RunConfig& cfg, const DriftSpec& base,
                              const TerminalSpec& terminal,
                              const WienerEnsemble& ensemble);

/// Solve run: writes trajectory.csv and summary.txt into the output
/// directory. Returns 0 on success, 2 on solver failure.
int run_solve(const RunConfig& cfg, std::ostream& log);

/// Audit run: writes check_report.txt. Returns 0 when every condition
/// passes, 1 otherwise.
int run_check(const RunConfig& cfg, std::ostream& log);

/// Convergence study along one axis: writes converge.csv with one row per
/// level and a fitted log-log error slope. Returns 0 on success, 2 on
/// solver failure.
int run_converge(const RunConfig& cfg, const std::string& axis,
                 const std::vector<double>& levels, std::ostream& log);

}  // namespace bspde
