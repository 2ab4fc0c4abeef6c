#include "doctest.h"

#include "bspde/bsde_solver.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

using namespace bspde;

namespace {

SolverConfig small_config(double T, int steps, int paths, int n) {
  SolverConfig cfg;
  cfg.grid = {T, steps};
  cfg.paths = paths;
  cfg.taming = {n, 1e9, 1e9};
  return cfg;
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("monomial basis enumeration and design") {
  CHECK(monomial_basis(1, 3).size() == 4);
  CHECK(monomial_basis(2, 2).size() == 6);
  CHECK(monomial_basis(3, 2).size() == 10);
  CHECK_THROWS_AS(monomial_basis(0, 2), std::invalid_argument);

  auto basis = monomial_basis(2, 2);
  Eigen::MatrixXd state(1, 2);
  state << 2.0, 3.0;
  Eigen::MatrixXd phi = basis.design(state);
  REQUIRE(phi.cols() == 6);
  for (int f = 0; f < 6; ++f) {
    const double expect = std::pow(2.0, basis.exponents[f][0]) *
                          std::pow(3.0, basis.exponents[f][1]);
    CHECK(phi(0, f) == doctest::Approx(expect).epsilon(1e-14));
  }
  Eigen::MatrixXd wrong(1, 3);
  wrong << 1, 2, 3;
  CHECK_THROWS_AS(basis.design(wrong), std::invalid_argument);
}

TEST_CASE("least-squares projection recovers in-span targets") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  const int P = 4096;
  Eigen::MatrixXd state(P, 2);
  for (int p = 0; p < P; ++p) {
    state(p, 0) = g(rng);
    state(p, 1) = g(rng);
  }
  auto basis = monomial_basis(2, 1);
  Eigen::MatrixXd phi = basis.design(state);

  Eigen::MatrixXd targets(P, 2);
  targets.col(0).setConstant(7.5);                  // constant capture
  targets.col(1) = 3.0 * state.col(0);              // linear capture
  Eigen::MatrixXd fitted = condexp(phi, targets, 1e-10);
  CHECK((fitted.col(0).array() - 7.5).abs().maxCoeff() < 1e-8);
  CHECK((fitted.col(1) - targets.col(1)).cwiseAbs().maxCoeff() < 1e-8);

  CondexpSolver solver(phi, 1e-10);
  solver.fit(targets);
  CHECK(solver.last_residual() < 1e-8);
  CHECK(!solver.ridge_fallback());
}

TEST_CASE("projected conditional mean of the endpoint is the current state") {
  // E[W_T | W_t] = W_t lies in the degree-1 span, so the sample projection
  // converges at the Monte Carlo rate
  TimeGrid grid{1.0, 4};
  for (int P : {2000, 32000}) {
    auto w = sample_wiener(grid, P, 1, 21);
    auto basis = monomial_basis(1, 1);
    Eigen::MatrixXd phi = basis.design(w.brownian(2));
    Eigen::MatrixXd fitted = condexp(phi, w.brownian(4), 1e-10);
    const double rms =
        std::sqrt((fitted - w.brownian(2)).squaredNorm() / P);
    CHECK(rms < 8.0 / std::sqrt(static_cast<double>(P)));
  }
}

TEST_CASE("diagonal dynamics with fixed terminal data match the implicit recursion") {
  auto s = sobolev_triple(4);
  auto drift = heat_drift(s);
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(4);
  xi << 1.0, 0.5, 0.0, 0.0;
  auto terminal = deterministic_terminal(SpectralField{xi, s});

  const double T = 1.0 / 16.0;
  const int M = 64;
  auto cfg = small_config(T, M, 512, 4);
  auto ensemble = sample_wiener(cfg.grid, cfg.paths, 2, 12);
  auto sol = solve(drift, terminal, ensemble, cfg);

  const double dt = T / M;
  for (int i : {0, 16, 48}) {
    for (int k = 0; k < 4; ++k) {
      const double discrete =
          xi[k] * std::pow(1.0 + s->lambda[k] * dt, -(M - i));
      CHECK(sol.y[i](k, 0) == doctest::Approx(discrete).epsilon(1e-6));
      // the data are deterministic, so the paths agree up to the ridge-level
      // wobble the regularized projection introduces
      CHECK((sol.y[i].row(k).array() - sol.y[i](k, 0)).abs().maxCoeff() <
            1e-6);
    }
  }
  // continuous-time comparison on the populated modes
  CHECK(sol.y[0](0, 0) ==
        doctest::Approx(std::exp(-s->lambda[0] * T)).epsilon(0.01));
  CHECK(sol.y[0](1, 0) ==
        doctest::Approx(0.5 * std::exp(-s->lambda[1] * T)).epsilon(0.06));

  double zmax = 0.0;
  for (int i = 0; i < M; ++i)
    for (const auto& slab : sol.z[i])
      zmax = std::max(zmax, slab.cwiseAbs().maxCoeff());
  CHECK(zmax < 1e-5);
}

TEST_CASE("linear terminal: regression tracks the discrete closed form") {
  auto s = sobolev_triple(2);
  auto drift = heat_drift(s);
  Eigen::VectorXd c(2);
  c << 1.0, 0.8;
  auto terminal = linear_terminal(c, s);

  const double T = 0.125;
  const int M = 16;
  auto cfg = small_config(T, M, 16384, 2);
  cfg.regression_degree = 1;
  auto ensemble = sample_wiener(cfg.grid, cfg.paths, 2, 99);
  auto sol = solve(drift, terminal, ensemble, cfg);

  const double dt = T / M;
  for (int i : {4, 8, 12}) {
    double err = 0.0, ref = 0.0;
    for (int k = 0; k < 2; ++k) {
      const double disc = std::pow(1.0 + s->lambda[k] * dt, -(M - i));
      Eigen::VectorXd expect = disc * c[k] * ensemble.brownian(i).col(k);
      err += (sol.y[i].row(k).transpose() - expect).squaredNorm();
      ref += expect.squaredNorm();
    }
    CHECK(std::sqrt(err / ref) < 0.05);
  }

  // mid-horizon martingale exposure: mean of the fitted z against the
  // discrete discount, diagonal in the noise index
  const int i = 8;
  const double d1 = std::pow(1.0 + s->lambda[0] * dt, -(M - i - 1));
  CHECK(sol.z[i][0].row(0).mean() == doctest::Approx(d1 * c[0]).epsilon(0.1));
  CHECK(std::abs(sol.z[i][1].row(0).mean()) < 0.1);
}

TEST_CASE("zero data stay exactly zero") {
  auto s = sobolev_triple(3);
  auto cfg = small_config(0.5, 8, 256, 3);
  auto ensemble = sample_wiener(cfg.grid, cfg.paths, 2, 4);
  auto terminal = deterministic_terminal(zero_field(s, 3));
  auto sol = solve(zero_drift(s), terminal, ensemble, cfg);
  for (int i = 0; i <= 8; ++i) CHECK(sol.y[i].cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < 8; ++i)
    for (const auto& slab : sol.z[i]) CHECK(slab.cwiseAbs().maxCoeff() == 0.0);
  CHECK(sol.taming_fire_fraction() == 0.0);
}

TEST_CASE("terminal layer is the evaluated terminal, bit for bit") {
  auto s = sobolev_triple(3);
  Eigen::VectorXd c(2);
  c << 0.3, -0.2;
  auto terminal = bounded_terminal(c, s);
  auto cfg = small_config(0.25, 4, 128, 3);
  auto ensemble = sample_wiener(cfg.grid, cfg.paths, 2, 8);
  auto sol = solve(zero_drift(s), terminal, ensemble, cfg);
  Eigen::MatrixXd expect = evaluate_terminal(terminal, ensemble, 3);
  CHECK((sol.y[4].array() == expect.array()).all());
}

TEST_CASE("in-span regressions keep the normal-equation residual tiny") {
  auto s = sobolev_triple(2);
  Eigen::VectorXd c(2);
  c << 1.0, -0.5;
  auto cfg = small_config(0.25, 8, 4096, 2);
  cfg.regression_degree = 1;
  auto ensemble = sample_wiener(cfg.grid, cfg.paths, 2, 31);
  auto sol = solve(zero_drift(s), linear_terminal(c, s), ensemble, cfg);
  CHECK(sol.regression_residual.maxCoeff() < 1e-8);
  CHECK(!sol.ridge_fallback_used);
}

TEST_CASE("taming that never engages changes nothing") {
  auto s = sobolev_triple(4);
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(4);
  xi << 0.4, 0.2, 0.1, 0.0;
  auto terminal = deterministic_terminal(SpectralField{xi, s});
  auto cfg = small_config(1.0 / 64.0, 16, 256, 4);
  auto ensemble = sample_wiener(cfg.grid, cfg.paths, 2, 77);

  auto raw = solve(heat_drift(s), terminal, ensemble, cfg);
  auto tamed = tamed_drift(heat_drift(s), TamingParams{4, 50.0, 1000.0});
  auto guarded = solve(tamed, terminal, ensemble, cfg);

  CHECK(guarded.taming_fire_fraction() == 0.0);
  for (int i = 0; i <= 16; ++i)
    CHECK((guarded.y[i].array() == raw.y[i].array()).all());
  for (int i = 0; i < 16; ++i)
    for (size_t j = 0; j < raw.z[i].size(); ++j)
      CHECK((guarded.z[i][j].array() == raw.z[i][j].array()).all());
}

TEST_CASE("stiffness guard rejects an over-coarse grid") {
  auto s = sobolev_triple(4);
  auto tamed = tamed_drift(heat_drift(s), TamingParams{4, 10.0, 10.0});
  auto cfg = small_config(1.0, 2, 64, 4);  // dt = 0.5, lambda_4 ~ 158
  auto ensemble = sample_wiener(cfg.grid, cfg.paths, 1, 1);
  auto terminal = deterministic_terminal(basis_field(s, 1));
  CHECK_THROWS_AS(solve(tamed, terminal, ensemble, cfg), std::invalid_argument);
}

TEST_CASE("a non-contracting implicit step raises a solver error") {
  auto s = sobolev_triple(2);
  DriftSpec bad = zero_drift(s);
  bad.name = "expansive";
  bad.evaluate_batch = [](double, const Eigen::MatrixXd& y, const BatchZ*,
                          Eigen::MatrixXd& out) { out = (3.0 / 0.0625) * y; };
  auto cfg = small_config(0.5, 8, 64, 2);  // dt = 0.0625
  cfg.picard_max = 30;
  auto ensemble = sample_wiener(cfg.grid, cfg.paths, 1, 2);
  auto terminal = deterministic_terminal(basis_field(s, 1));
  try {
    solve(bad, terminal, ensemble, cfg);
    FAIL("expected a solver error");
  } catch (const SolverError& e) {
    CHECK(e.step == 7);
    CHECK(e.residual > 0.0);
  }
}

TEST_CASE("configuration validation") {
  SolverConfig cfg = small_config(1.0, 4, 64, 2);
  CHECK_NOTHROW(cfg.validate());
  SolverConfig bad = cfg;
  bad.paths = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.regression_degree = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.picard_tol = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.ridge = -1e-3;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  // mismatched ensemble geometry
  auto s = sobolev_triple(2);
  auto ensemble = sample_wiener(TimeGrid{1.0, 8}, 64, 1, 3);
  CHECK_THROWS_AS(solve(zero_drift(s), deterministic_terminal(basis_field(s, 1)),
                        ensemble, cfg),
                  std::invalid_argument);
}

}  // TEST_SUITE
