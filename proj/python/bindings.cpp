#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bspde/analysis.hpp"
#include "bspde/bsde_solver.hpp"
#include "bspde/function_space.hpp"
#include "bspde/hypothesis_checker.hpp"
#include "bspde/run_config.hpp"
#include "bspde/runner.hpp"
#include "bspde/taming.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace bspde;

namespace {

RunConfig parse(const std::string& text) {
  RunConfig cfg = RunConfig::from_string(text);
  cfg.validate();
  return cfg;
}

double sup_h_over_grid(const DriftSpec& drift, double ball, double horizon) {
  constexpr int kNodes = 64;
  double sup = 0;
  for (int i = 0; i <= kNodes; ++i)
    sup = std::max(sup, h_m(horizon * i / kNodes, drift, ball));
  return sup;
}

py::dict solve_summary(const std::string& text) {
  const RunConfig cfg = parse(text);
  const DriftSpec base = make_drift(cfg);
  const TerminalSpec terminal = make_terminal(cfg);
  const TimeGrid grid{cfg.grid_T, cfg.grid_steps};
  const WienerEnsemble ensemble =
      sample_wiener(grid, cfg.paths, cfg.d_u, cfg.seed);
  const ResolvedTaming rt = resolve_taming(cfg, base, terminal, ensemble);

  SolverConfig scfg;
  scfg.grid = grid;
  scfg.paths = cfg.paths;
  scfg.regression_degree = cfg.regression_degree;
  scfg.picard_max = cfg.picard_max;
  scfg.picard_tol = cfg.picard_tol;
  scfg.ridge = cfg.ridge;
  scfg.seed = cfg.seed;
  scfg.taming = rt.params;
  const DriftSpec tamed = tamed_drift(base, rt.params);
  const BsdeSolution sol = solve(tamed, terminal, ensemble, scfg);

  const AprioriStatistic ap = apriori_statistic(sol);
  const Eigen::VectorXd residual = energy_residual(sol, tamed, ensemble);
  const auto& iters = sol.picard_iters;

  py::dict out;
  out["seed"] = cfg.seed;
  out["sup_v_sq"] = ap.sup_v_sq;
  out["z_energy"] = ap.z_energy;
  out["energy_residual_mean_abs"] = residual.cwiseAbs().mean();
  out["fire_fraction"] = sol.taming_fire_fraction();
  out["taming_mode"] = cfg.taming.mode;
  out["ball_m"] = rt.params.ball_m;
  out["level_n"] = rt.params.level_n;
  out["picard_max_iters"] =
      iters.empty() ? 0 : *std::max_element(iters.begin(), iters.end());
  out["picard_mean_iters"] =
      iters.empty() ? 0.0
                    : std::accumulate(iters.begin(), iters.end(), 0.0) /
                          static_cast<double>(iters.size());
  out["regression_max_residual"] =
      sol.regression_residual.size() ? sol.regression_residual.maxCoeff() : 0.0;
  out["ridge_fallback"] = sol.ridge_fallback_used;
  return out;
}

py::list check_operator(const std::string& text) {
  const RunConfig cfg = parse(text);
  const TriplePtr triple = make_triple(cfg);
  const DriftSpec drift = make_drift(cfg, check_grid_factor(cfg.galerkin_n));
  CheckOptions opts;
  opts.galerkin_n = cfg.galerkin_n;
  opts.d_u = cfg.d_u;

  std::vector<CheckReport> reports;
  reports.push_back(check_h0(*triple));
  reports.push_back(check_h1(drift, cfg.check_samples, cfg.seed, opts));
  reports.push_back(check_h2(drift, cfg.check_samples, cfg.seed, opts));
  reports.push_back(check_h3(drift, cfg.check_samples, cfg.seed, opts));
  reports.push_back(check_h4(drift, cfg.check_samples, cfg.seed, opts));

  TamingParams tp;
  tp.galerkin_n = cfg.galerkin_n;
  if (cfg.taming.mode == "manual") {
    tp.ball_m = cfg.taming.ball_m;
    tp.level_n = cfg.taming.level_n;
  } else {
    tp.ball_m = 10.0;
    tp.level_n =
        std::max(1.0, 2.0 * sup_h_over_grid(drift, tp.ball_m, cfg.grid_T));
  }
  tp.validate();
  for (auto& r :
       check_c2_c4(tamed_drift(drift, tp), cfg.check_samples, cfg.seed, opts))
    reports.push_back(std::move(r));

  py::list out;
  for (const CheckReport& r : reports) {
    py::dict item;
    item["condition"] = r.condition;
    item["subject"] = r.subject;
    item["passed"] = r.pass;
    item["worst_margin"] = r.worst_margin;
    item["samples"] = r.samples;
    item["summary"] = describe(r);
    out.append(item);
  }
  return out;
}

double gn_ratio_list(const std::vector<double>& coeffs, double q) {
  const int n = static_cast<int>(coeffs.size());
  if (n < 1) throw std::invalid_argument("coefficient list must not be empty");
  const TriplePtr s = sobolev_triple(n);
  Eigen::VectorXd c(n);
  for (int k = 0; k < n; ++k) c[k] = coeffs[k];
  return gn_ratio(SpectralField{c, s}, q);
}

int run_solve_text(const std::string& text) {
  std::ostringstream log;
  return run_solve(parse(text), log);
}

int run_check_text(const std::string& text) {
  std::ostringstream log;
  return run_check(parse(text), log);
}

int run_converge_text(const std::string& text, const std::string& axis,
                      const std::vector<double>& levels) {
  std::ostringstream log;
  return run_converge(parse(text), axis, levels, log);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Spectral solver and structural auditor for backward stochastic "
      "evolution equations";
  m.attr("__version__") = "0.1.0";

  m.def("config_roundtrip",
        [](const std::string& text) { return parse(text).to_string(); },
        py::arg("text"),
        "Parse a flat dotted-key configuration, validate it, and return its "
        "canonical full-precision rendering.");

  m.def("solve_summary", &solve_summary, py::arg("text"),
        "Run the backward induction for the given configuration and return "
        "the summary statistics as a dict; nothing is written to disk.");

  m.def("check_operator", &check_operator, py::arg("text"),
        "Audit the configured operator and return one dict per condition "
        "with its verdict and worst margin.");

  m.def("gn_ratio", &gn_ratio_list, py::arg("coeffs"), py::arg("q"),
        "Interpolation ratio of the field with the given sine coefficients; "
        "invariant under coefficient scaling.");

  m.def("run_solve", &run_solve_text, py::arg("text"),
        py::call_guard<py::gil_scoped_release>(),
        "File-writing solve run; returns the process exit code.");
  m.def("run_check", &run_check_text, py::arg("text"),
        py::call_guard<py::gil_scoped_release>(),
        "File-writing audit run; returns the process exit code.");
  m.def("run_converge", &run_converge_text, py::arg("text"), py::arg("axis"),
        py::arg("levels"), py::call_guard<py::gil_scoped_release>(),
        "File-writing convergence study; returns the process exit code.");
}
