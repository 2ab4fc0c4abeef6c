#include "bspde/runner.hpp"

#include "bspde/analysis.hpp"
#include "bspde/bsde_solver.hpp"
#include "bspde/hypothesis_checker.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bspde {
namespace {

// Share of the solver's dt * L < 1 guard the auto-taming ball may consume.
// The implicit step contracts at rate dt * L, so 0.8 still reaches a 1e-12
// tolerance comfortably within the default 200 sweeps.
constexpr double kContractionBudget = 0.8;
constexpr double kBallCap = 1e6;

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f)
    throw std::runtime_error("cannot open '" + p.string() + "' for writing");
  return f;
}

Eigen::VectorXd as_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

// Column-wise weighted squared norms of an n x P block, as a 1 x P row.
Eigen::RowVectorXd weighted_sq(const Eigen::MatrixXd& block,
                               const Eigen::VectorXd& w) {
  return (block.array().square().colwise() * w.array()).colwise().sum();
}

TimeGrid make_grid(const RunConfig& cfg) {
  return TimeGrid{cfg.grid_T, cfg.grid_steps};
}

SolverConfig make_solver_config(const RunConfig& cfg) {
  SolverConfig s;
  s.grid = make_grid(cfg);
  s.paths = cfg.paths;
  s.regression_degree = cfg.regression_degree;
  s.picard_max = cfg.picard_max;
  s.picard_tol = cfg.picard_tol;
  s.ridge = cfg.ridge;
  s.taming.galerkin_n = cfg.galerkin_n;
  s.seed = cfg.seed;
  return s;
}

double sup_h_over_grid(const DriftSpec& drift, double ball, double horizon) {
  constexpr int kNodes = 64;
  double sup = 0;
  for (int i = 0; i <= kNodes; ++i)
    sup = std::max(sup, h_m(horizon * i / kNodes, drift, ball));
  return sup;
}

double sup_path_v(const BsdeSolution& sol) {
  const Eigen::VectorXd wV = sol.triple->wV.head(sol.galerkin_n);
  double sup_sq = 0;
  for (const auto& yi : sol.y)
    sup_sq = std::max(sup_sq, weighted_sq(yi, wV).maxCoeff());
  return std::sqrt(sup_sq);
}

double sup_path_z_h(const BsdeSolution& sol) {
  const Eigen::VectorXd wH = sol.triple->wH.head(sol.galerkin_n);
  double sup_sq = 0;
  for (const auto& slabs : sol.z) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(sol.paths);
    for (const auto& slab : slabs) acc += weighted_sq(slab, wH);
    sup_sq = std::max(sup_sq, acc.maxCoeff());
  }
  return std::sqrt(sup_sq);
}

void echo_config(std::ofstream& f, const RunConfig& cfg) {
  std::istringstream lines(cfg.to_string());
  std::string line;
  while (std::getline(lines, line))
    if (!line.empty()) f << "config." << line << "\n";
}

int emit_solver_failure(const std::filesystem::path& dir, const RunConfig& cfg,
                        const SolverError& e, const std::string& stage,
                        std::ostream& log) {
  auto f = open_out(dir / "summary.txt");
  f << "# schema: bspde.summary.v1\n";
  f << "status = solver-failure\n";
  f << "error.stage = " << stage << "\n";
  f << "error.step = " << e.step << "\n";
  f << "error.residual = " << fmt(e.residual) << "\n";
  f << "error.message = " << e.what() << "\n";
  echo_config(f, cfg);
  log << "solver failure (" << stage << ") at step " << e.step << ": "
      << e.what() << "\n";
  return 2;
}

void write_vector(std::ofstream& f, const std::string& key,
                  const Eigen::VectorXd& v) {
  if (v.size() == 0) return;
  f << key << " = ";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) f << ",";
    f << fmt(v[i]);
  }
  f << "\n";
}

void write_witness(std::ofstream& f, const CheckReport& r) {
  const CheckWitness& w = r.witness;
  f << "  witness.sample = " << w.index << "\n";
  f << "  witness.t = " << fmt(w.t) << "\n";
  if (w.s != 0) f << "  witness.s = " << fmt(w.s) << "\n";
  if (!w.note.empty()) f << "  witness.note = " << w.note << "\n";
  write_vector(f, "  witness.v1", w.v1);
  write_vector(f, "  witness.v2", w.v2);
  write_vector(f, "  witness.dir", w.dir);
  for (Eigen::Index j = 0; j < w.z1.cols(); ++j)
    write_vector(f, "  witness.z1." + std::to_string(j), w.z1.col(j));
  for (Eigen::Index j = 0; j < w.z2.cols(); ++j)
    write_vector(f, "  witness.z2." + std::to_string(j), w.z2.col(j));
  if (r.recheck)
    f << "  witness.recheck_margin = " << fmt(r.recheck()) << "\n";
}

/// Relative sup-path benchmark error against the closed-form solution,
/// available for the heat operator with deterministic or linear terminal
/// data: mode k evolves as e^{-lambda_k (T - t)} times the terminal
/// coefficient (per path for the linear kind).
std::optional<double> benchmark_error(const RunConfig& cfg,
                                      const BsdeSolution& sol,
                                      const WienerEnsemble& ensemble) {
  if (cfg.op.name != "heat" || cfg.terminal.kind == "bounded")
    return std::nullopt;
  const int N = sol.galerkin_n;
  const Eigen::VectorXd wH = sol.triple->wH.head(N);
  const Eigen::VectorXd lambda = sol.triple->lambda.head(N);
  const Eigen::VectorXd c = as_vector(cfg.terminal.coeffs);
  const int K = std::min<int>(N, static_cast<int>(c.size()));
  const bool linear = cfg.terminal.kind == "linear";
  const double T = sol.grid.T;

  Eigen::RowVectorXd err_sup = Eigen::RowVectorXd::Zero(sol.paths);
  Eigen::RowVectorXd ref_sup = err_sup;
  Eigen::MatrixXd ref(N, sol.paths);
  for (int i = 0; i <= sol.steps(); ++i) {
    ref.setZero();
    const double t = sol.grid.node(i);
    for (int k = 0; k < K; ++k) {
      const double decayed = std::exp(-lambda[k] * (T - t)) * c[k];
      if (linear)
        ref.row(k) = decayed * ensemble.brownian(i).col(k).transpose();
      else
        ref.row(k).setConstant(decayed);
    }
    err_sup = err_sup.cwiseMax(weighted_sq(sol.y[i] - ref, wH));
    ref_sup = ref_sup.cwiseMax(weighted_sq(ref, wH));
  }
  return std::sqrt(err_sup.mean() / std::max(ref_sup.mean(), 1e-300));
}

}  // namespace

std::string resolve_output_dir(const RunConfig& cfg) {
  if (const char* root = std::getenv("BSPDE_OUTPUT_ROOT"); root && *root)
    return root;
  return cfg.output_dir;
}

TriplePtr make_triple(const RunConfig& cfg) {
  const int modes =
      std::max({cfg.galerkin_n, static_cast<int>(cfg.terminal.coeffs.size()), 1});
  return triple_by_name(cfg.triple, modes);
}

int check_grid_factor(int n) {
  return std::max(4, (1024 + n - 1) / n);
}

DriftSpec make_drift(const RunConfig& cfg, int grid_factor) {
  const TriplePtr triple = make_triple(cfg);
  const auto& op = cfg.op;

  const auto reaction = [&]() {
    return op.g.empty() ? ReactionPoly::zero() : reaction_g(as_vector(op.g));
  };
  const auto feedback = [&]() -> std::optional<ZPerturbation> {
    if (op.kappa == 0) return std::nullopt;
    return z_perturbation(op.kappa, op.direction);
  };

  if (op.name == "heat") return heat_drift(triple);
  if (op.name == "csf") {
    const ScalarFn fbar = scalar_fn(op.fbar);
    return grid_factor > 0
               ? csf_drift(fbar, reaction(), feedback(), triple, grid_factor)
               : csf_drift(fbar, reaction(), feedback(), triple);
  }
  if (op.name == "burgers") {
    const ScalarFn fbar = scalar_fn(op.fbar);
    return grid_factor > 0
               ? burgers_drift(fbar, reaction(), feedback(), triple, grid_factor)
               : burgers_drift(fbar, reaction(), feedback(), triple);
  }
  if (op.name == "fastdiff") {
    const PsiSpec psi =
        op.psi == "linear" ? psi_linear() : psi_power(op.psi_r, op.psi_delta);
    return grid_factor > 0 ? fast_diffusion_drift(psi, triple, grid_factor)
                           : fast_diffusion_drift(psi, triple);
  }
  if (op.name == "zero") return zero_drift(triple);
  if (op.name == "cubic-bad") return cubic_fixture_drift(triple);
  if (op.name == "porous-bad") return porous_fixture_drift(op.porous_r, triple);
  throw std::invalid_argument("unknown operator '" + op.name + "'");
}

TerminalSpec make_terminal(const RunConfig& cfg) {
  const TriplePtr triple = make_triple(cfg);
  const Eigen::VectorXd c = as_vector(cfg.terminal.coeffs);
  if (cfg.terminal.kind == "deterministic")
    return deterministic_terminal(SpectralField{c, triple});
  if (cfg.terminal.kind == "bounded") return bounded_terminal(c, triple);
  if (cfg.terminal.kind == "linear") return linear_terminal(c, triple);
  throw std::invalid_argument("unknown terminal kind '" + cfg.terminal.kind +
                              "'");
}

ResolvedTaming resolve_taming(const RunConfig& cfg, const DriftSpec& base,
                              const TerminalSpec& terminal,
                              const WienerEnsemble& ensemble) {
  ResolvedTaming out;
  out.params.galerkin_n = cfg.galerkin_n;
  if (cfg.taming.mode == "manual") {
    out.params.ball_m = cfg.taming.ball_m;
    out.params.level_n = cfg.taming.level_n;
    out.params.validate();
    return out;
  }
  out.auto_mode = true;

  // Largest cutoff ball whose restricted Lipschitz bound keeps the implicit
  // step inside the contraction budget.
  const double dt = make_grid(cfg).dt();
  const auto lip = [&](double ball) {
    return base.y_lip ? base.y_lip(ball + 1.0, cfg.galerkin_n) : 0.0;
  };
  double ball = 1.0;
  if (dt * lip(ball) > kContractionBudget)
    throw std::invalid_argument(
        "time step too large for the operator's stiffness at dimension " +
        std::to_string(cfg.galerkin_n) + ": no cutoff ball fits the "
        "contraction budget");
  if (dt * lip(kBallCap) <= kContractionBudget) {
    ball = kBallCap;
  } else {
    double hi = kBallCap;
    for (int it = 0; it < 120; ++it) {
      const double mid = 0.5 * (ball + hi);
      (dt * lip(mid) <= kContractionBudget ? ball : hi) = mid;
    }
  }

  TamingParams pilot;
  pilot.galerkin_n = cfg.galerkin_n;
  pilot.ball_m = ball;
  pilot.level_n = std::max(1.0, 2.0 * sup_h_over_grid(base, ball, cfg.grid_T));

  SolverConfig scfg = make_solver_config(cfg);
  scfg.taming = pilot;
  const BsdeSolution sol =
      solve(tamed_drift(base, pilot), terminal, ensemble, scfg);

  out.pilot_sup_v = sup_path_v(sol);
  out.pilot_sup_z = sup_path_z_h(sol);
  out.params.ball_m = std::min(out.pilot_sup_v + 1.0, ball);
  const double h_sup = sup_h_over_grid(base, out.params.ball_m, cfg.grid_T);
  out.params.level_n = std::max(1.0, 2.0 * std::max(h_sup, out.pilot_sup_z));
  out.params.validate();
  return out;
}

int run_solve(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const std::filesystem::path dir = resolve_output_dir(cfg);
  std::filesystem::create_directories(dir);

  const DriftSpec base = make_drift(cfg);
  const TerminalSpec terminal = make_terminal(cfg);
  const WienerEnsemble ensemble =
      sample_wiener(make_grid(cfg), cfg.paths, cfg.d_u, cfg.seed);

  ResolvedTaming taming;
  try {
    taming = resolve_taming(cfg, base, terminal, ensemble);
  } catch (const SolverError& e) {
    return emit_solver_failure(dir, cfg, e, "pilot", log);
  }

  const DriftSpec tamed = tamed_drift(base, taming.params);
  SolverConfig scfg = make_solver_config(cfg);
  scfg.taming = taming.params;

  BsdeSolution sol;
  try {
    sol = solve(tamed, terminal, ensemble, scfg);
  } catch (const SolverError& e) {
    return emit_solver_failure(dir, cfg, e, "induction", log);
  }

  {
    auto f = open_out(dir / "trajectory.csv");
    f << "# schema: bspde.trajectory.v1\n";
    f << "t,mean_x_h2,mean_x_v2,max_x_v2,mean_z_h2,mean_z_v2\n";
    const Eigen::VectorXd wH = sol.triple->wH.head(sol.galerkin_n);
    const Eigen::VectorXd wV = sol.triple->wV.head(sol.galerkin_n);
    for (int i = 0; i <= sol.steps(); ++i) {
      const Eigen::RowVectorXd xh = weighted_sq(sol.y[i], wH);
      const Eigen::RowVectorXd xv = weighted_sq(sol.y[i], wV);
      double zh = 0, zv = 0;
      if (i < sol.steps()) {
        Eigen::RowVectorXd zh_acc = Eigen::RowVectorXd::Zero(sol.paths);
        Eigen::RowVectorXd zv_acc = zh_acc;
        for (const auto& slab : sol.z[i]) {
          zh_acc += weighted_sq(slab, wH);
          zv_acc += weighted_sq(slab, wV);
        }
        zh = zh_acc.mean();
        zv = zv_acc.mean();
      }
      f << fmt(sol.grid.node(i)) << ',' << fmt(xh.mean()) << ','
        << fmt(xv.mean()) << ',' << fmt(xv.maxCoeff()) << ',' << fmt(zh) << ','
        << fmt(zv) << "\n";
    }
  }

  const AprioriStatistic ap = apriori_statistic(sol);
  const Eigen::VectorXd residual = energy_residual(sol, tamed, ensemble);
  const auto& iters = sol.picard_iters;
  const int picard_max_iters =
      iters.empty() ? 0 : *std::max_element(iters.begin(), iters.end());
  const double picard_mean_iters =
      iters.empty() ? 0.0
                    : std::accumulate(iters.begin(), iters.end(), 0.0) /
                          static_cast<double>(iters.size());

  {
    auto f = open_out(dir / "summary.txt");
    f << "# schema: bspde.summary.v1\n";
    f << "status = ok\n";
    f << "seed = " << cfg.seed << "\n";
    f << "apriori.sup_v_sq = " << fmt(ap.sup_v_sq) << "\n";
    f << "apriori.z_energy = " << fmt(ap.z_energy) << "\n";
    f << "energy_residual.mean_abs = " << fmt(residual.cwiseAbs().mean())
      << "\n";
    f << "energy_residual.max_abs = " << fmt(residual.cwiseAbs().maxCoeff())
      << "\n";
    f << "taming.mode = " << cfg.taming.mode << "\n";
    f << "taming.ball_m = " << fmt(taming.params.ball_m) << "\n";
    f << "taming.level_n = " << fmt(taming.params.level_n) << "\n";
    f << "taming.fire_fraction = " << fmt(sol.taming_fire_fraction()) << "\n";
    if (taming.auto_mode) {
      f << "taming.pilot_sup_v = " << fmt(taming.pilot_sup_v) << "\n";
      f << "taming.pilot_sup_z = " << fmt(taming.pilot_sup_z) << "\n";
    }
    f << "picard.max_iters = " << picard_max_iters << "\n";
    f << "picard.mean_iters = " << fmt(picard_mean_iters) << "\n";
    f << "regression.max_residual = "
      << fmt(sol.regression_residual.size() ? sol.regression_residual.maxCoeff()
                                            : 0.0)
      << "\n";
    f << "regression.ridge_fallback = " << (sol.ridge_fallback_used ? 1 : 0)
      << "\n";
    echo_config(f, cfg);
  }

  log << "wrote " << (dir / "trajectory.csv").string() << " and "
      << (dir / "summary.txt").string() << "\n";
  return 0;
}

int run_check(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const std::filesystem::path dir = resolve_output_dir(cfg);
  std::filesystem::create_directories(dir);

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

  bool all_pass = true;
  {
    auto f = open_out(dir / "check_report.txt");
    f << "# schema: bspde.check.v1\n";
    for (const auto& r : reports) {
      const std::string line = describe(r);
      f << line << "\n";
      log << line << "\n";
      if (!r.pass) {
        all_pass = false;
        write_witness(f, r);
      }
    }
    f << "verdict = " << (all_pass ? "pass" : "fail") << "\n";
  }
  log << "verdict: " << (all_pass ? "pass" : "fail") << " ("
      << (dir / "check_report.txt").string() << ")\n";
  return all_pass ? 0 : 1;
}

int run_converge(const RunConfig& cfg, const std::string& axis,
                 const std::vector<double>& levels, std::ostream& log) {
  cfg.validate();
  if (axis != "galerkin_n" && axis != "steps" && axis != "paths" &&
      axis != "taming_n")
    throw std::invalid_argument(
        "axis must be one of galerkin_n, steps, paths, taming_n");
  if (levels.size() < 3)
    throw std::invalid_argument("a convergence study needs at least 3 levels");
  for (std::size_t l = 0; l < levels.size(); ++l) {
    if (!(levels[l] > 0) || (l > 0 && !(levels[l] > levels[l - 1])))
      throw std::invalid_argument("levels must be positive and increasing");
    if (axis != "taming_n" &&
        (levels[l] != std::floor(levels[l]) || levels[l] > 1e9))
      throw std::invalid_argument("levels on the " + axis +
                                  " axis must be whole numbers");
  }

  const std::filesystem::path dir = resolve_output_dir(cfg);
  std::filesystem::create_directories(dir);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  struct Row {
    double level = 0, error = 0, apriori = 0, gap = 0, fire = 0;
  };
  std::vector<Row> rows;
  std::string abort_note;

  if (axis == "taming_n") {
    const DriftSpec base = make_drift(cfg);
    const TerminalSpec terminal = make_terminal(cfg);
    const WienerEnsemble ensemble =
        sample_wiener(make_grid(cfg), cfg.paths, cfg.d_u, cfg.seed);
    try {
      const ResolvedTaming rt = resolve_taming(cfg, base, terminal, ensemble);
      SolverConfig scfg = make_solver_config(cfg);
      scfg.taming = rt.params;
      for (const CauchyRow& cr :
           cauchy_in_n(base, terminal, ensemble, scfg, levels))
        rows.push_back({cr.level, nan, cr.apriori, cr.sup_h_gap,
                        cr.fire_fraction});
    } catch (const SolverError& e) {
      abort_note = "solver failure at step " + std::to_string(e.step) + ": " +
                   e.what();
    }
  } else {
    double prev_apriori = nan;
    for (const double level : levels) {
      RunConfig c = cfg;
      if (axis == "galerkin_n")
        c.galerkin_n = static_cast<int>(level);
      else if (axis == "steps")
        c.grid_steps = static_cast<int>(level);
      else
        c.paths = static_cast<int>(level);
      c.validate();

      const DriftSpec base = make_drift(c);
      const TerminalSpec terminal = make_terminal(c);
      const WienerEnsemble ensemble =
          sample_wiener(make_grid(c), c.paths, c.d_u, c.seed);
      try {
        const ResolvedTaming rt = resolve_taming(c, base, terminal, ensemble);
        SolverConfig scfg = make_solver_config(c);
        scfg.taming = rt.params;
        const BsdeSolution sol =
            solve(tamed_drift(base, rt.params), terminal, ensemble, scfg);

        Row row;
        row.level = level;
        const AprioriStatistic ap = apriori_statistic(sol);
        row.apriori = ap.sup_v_sq + ap.z_energy;
        row.error = benchmark_error(c, sol, ensemble).value_or(nan);
        row.gap = std::isnan(prev_apriori) ? nan
                                           : std::abs(row.apriori - prev_apriori);
        row.fire = sol.taming_fire_fraction();
        rows.push_back(row);
        prev_apriori = row.apriori;
      } catch (const SolverError& e) {
        abort_note = "solver failure at level " + fmt(level) + ", step " +
                     std::to_string(e.step) + ": " + e.what();
        break;
      }
    }
  }

  // Log-log slope of the error column: against dt on the steps axis,
  // against the level value otherwise.
  std::vector<double> lx, ly;
  for (const Row& r : rows) {
    if (!std::isfinite(r.error) || !(r.error > 0)) continue;
    lx.push_back(std::log(axis == "steps" ? cfg.grid_T / r.level : r.level));
    ly.push_back(std::log(r.error));
  }
  double slope = nan;
  if (lx.size() >= 2) {
    const double n = static_cast<double>(lx.size());
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxx += (lx[i] - mx) * (lx[i] - mx);
      sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx > 0) slope = sxy / sxx;
  }

  {
    auto f = open_out(dir / "converge.csv");
    f << "# schema: bspde.converge.v1\n";
    f << "# axis: " << axis << "\n";
    f << "level,error,apriori,gap,fire_fraction\n";
    for (const Row& r : rows)
      f << fmt(r.level) << ',' << fmt(r.error) << ',' << fmt(r.apriori) << ','
        << fmt(r.gap) << ',' << fmt(r.fire) << "\n";
    if (!abort_note.empty()) f << "# aborted: " << abort_note << "\n";
    f << "# error_slope = " << fmt(slope) << "\n";
  }

  if (!abort_note.empty()) {
    log << abort_note << "\n";
    return 2;
  }
  log << "wrote " << (dir / "converge.csv").string() << " (" << rows.size()
      << " levels, error slope " << fmt(slope) << ")\n";
  return 0;
}

}  // namespace bspde
