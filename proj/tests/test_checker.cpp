#include "doctest.h"

#include "bspde/hypothesis_checker.hpp"
#include "bspde/taming.hpp"

#include <cmath>
#include <stdexcept>

using namespace bspde;

namespace {

/// Hard-threshold drift: discontinuous in y with a zero certified modulus,
/// so the continuity scan and the monotonicity sampler must both flag it.
DriftSpec threshold_fixture(const TriplePtr& triple) {
  DriftSpec d = zero_drift(triple);
  d.name = "threshold";
  d.evaluate_batch = [](double, const Eigen::MatrixXd& y, const BatchZ*,
                        Eigen::MatrixXd& out) {
    out = 50.0 * y.array().sign().matrix();
  };
  return d;
}

void require_reproducible_failure(const CheckReport& report) {
  REQUIRE(!report.pass);
  REQUIRE(report.recheck);
  const double again = report.recheck();
  CHECK(again < -kMarginTol);
  CHECK(again ==
        doctest::Approx(report.worst_margin).epsilon(1e-6).scale(1e-9));
}

}  // namespace

TEST_SUITE("checker") {

TEST_CASE("structural audit accepts both stock triples") {
  auto r1 = check_h0(*sobolev_triple(32));
  CHECK(r1.pass);
  CHECK(r1.condition == "H0");
  CHECK(r1.samples == 32);
  auto r2 = check_h0(*dual_triple(32));
  CHECK(r2.pass);
}

TEST_CASE("structural audit flags a corrupted duality weight") {
  TripleSpec bad = *sobolev_triple(8);
  bad.wH[1] = 2.0;  // wVstar is now stale relative to wH^2 / wV
  auto r = check_h0(bad);
  CHECK(!r.pass);
  CHECK(r.witness.index == 1);
  CHECK(r.witness.note.find("duality") != std::string::npos);
  require_reproducible_failure(r);

  TripleSpec neg = *sobolev_triple(8);
  neg.wV[3] = -neg.wV[3];
  auto r2 = check_h0(neg);
  CHECK(!r2.pass);
}

TEST_CASE("continuity scan passes smooth operators") {
  auto s = sobolev_triple(16);
  CHECK(check_h1(heat_drift(s), 4096, 11).pass);
  Eigen::VectorXd cubic(4);
  cubic << 0, 0, 0, -1;
  auto flux = csf_drift(scalar_fn("arctan"), reaction_g(cubic),
                        z_perturbation(0.3, 0), s);
  CHECK(check_h1(flux, 4096, 11).pass);
}

TEST_CASE("continuity scan flags a jump") {
  auto s = sobolev_triple(16);
  auto r = check_h1(threshold_fixture(s), 4096, 11);
  CHECK(!r.pass);
  CHECK(r.witness.s >= -1.0);
  CHECK(r.witness.s <= 1.0);
  require_reproducible_failure(r);
}

TEST_CASE("monotonicity sampler passes certified operators") {
  auto s = sobolev_triple(16);
  auto r = check_h2(heat_drift(s), 2048, 5);
  CHECK(r.pass);
  CHECK(r.samples == 2048);
  Eigen::VectorXd cubic(4);
  cubic << 0, 0, 0, -1;
  auto flux = csf_drift(scalar_fn("arctan"), reaction_g(cubic),
                        z_perturbation(0.3, 0), s);
  CHECK(check_h2(flux, 2048, 5).pass);
  auto du = dual_triple(16);
  CHECK(check_h2(fast_diffusion_drift(psi_power(0.5), du), 2048, 5).pass);
}

TEST_CASE("monotonicity sampler flags an uncontrolled increment") {
  auto s = sobolev_triple(16);
  auto r = check_h2(threshold_fixture(s), 512, 5);
  require_reproducible_failure(r);
}

TEST_CASE("coercivity sampler passes certified operators") {
  auto s = sobolev_triple(16);
  CHECK(check_h3(heat_drift(s), 2048, 3).pass);
  auto adv =
      burgers_drift(scalar_fn("tanh"), ReactionPoly::zero(), std::nullopt, s);
  CHECK(check_h3(adv, 2048, 3).pass);
}

TEST_CASE("coercivity sampler flags the cubic fixture") {
  auto s = sobolev_triple(16);
  auto r = check_h3(cubic_fixture_drift(s), 2048, 3);
  require_reproducible_failure(r);
  // the violation needs a large field, so the witness sits well away from 0
  CHECK(r.witness.v1.cwiseAbs().maxCoeff() > 1.0);
}

TEST_CASE("growth sampler passes certified operators") {
  auto s = sobolev_triple(16);
  CHECK(check_h4(zero_drift(s), 1024, 9).pass);
  Eigen::VectorXd cubic(4);
  cubic << 0, 0, 0, -1;
  auto flux = csf_drift(scalar_fn("arctan"), reaction_g(cubic),
                        z_perturbation(0.3, 0), s);
  CHECK(check_h4(flux, 1024, 9).pass);
}

TEST_CASE("growth sampler flags the superlinear diffusion fixture") {
  auto du = dual_triple(16);
  auto r = check_h4(porous_fixture_drift(2.0, du), 1024, 9);
  require_reproducible_failure(r);
}

TEST_CASE("constant audit passes tamed certified operators") {
  auto s = sobolev_triple(16);
  auto tamed_heat = tamed_drift(heat_drift(s), TamingParams{16, 10.0, 50.0});
  for (const auto& r : check_c2_c4(tamed_heat, 500, 17)) {
    CHECK(r.pass);
  }
  Eigen::VectorXd cubic(4);
  cubic << 0, 0, 0, -1;
  auto flux = csf_drift(scalar_fn("arctan"), reaction_g(cubic),
                        z_perturbation(0.3, 0), s);
  auto tamed_flux = tamed_drift(flux, TamingParams{16, 10.0, 50.0});
  auto reports = check_c2_c4(tamed_flux, 500, 17);
  REQUIRE(reports.size() == 3);
  CHECK(reports[0].condition == "C2");
  CHECK(reports[1].condition == "C3");
  CHECK(reports[2].condition == "C4");
  for (const auto& r : reports) CHECK(r.pass);
}

TEST_CASE("constant audit flags a forged noise slope") {
  auto s = sobolev_triple(16);
  auto lying = csf_drift(scalar_fn("arctan"), ReactionPoly::zero(),
                         z_perturbation(0.3, 0), s);
  lying.z_lip = 1e-3;
  auto reports = check_c2_c4(lying, 500, 17);
  require_reproducible_failure(reports[0]);
}

TEST_CASE("constant audit flags superlinear one-sided growth") {
  auto s = sobolev_triple(16);
  auto reports = check_c2_c4(cubic_fixture_drift(s), 500, 17);
  require_reproducible_failure(reports[1]);
}

TEST_CASE("sampling is reproducible for a fixed seed") {
  auto s = sobolev_triple(16);
  Eigen::VectorXd cubic(4);
  cubic << 0, 0, 0, -1;
  auto flux = csf_drift(scalar_fn("arctan"), reaction_g(cubic),
                        z_perturbation(0.3, 0), s);
  auto a = check_h2(flux, 1024, 23);
  auto b = check_h2(flux, 1024, 23);
  CHECK(a.worst_margin == b.worst_margin);
  CHECK(a.witness.index == b.witness.index);
  CHECK(describe(a) == describe(b));
  auto c = check_h2(flux, 1024, 24);
  CHECK(c.pass);  // a different seed moves the margin but not the verdict
}

TEST_CASE("report rendering carries the verdict and the witness") {
  auto s = sobolev_triple(16);
  auto good = check_h2(heat_drift(s), 256, 2);
  auto line = describe(good);
  CHECK(line.find("H2") != std::string::npos);
  CHECK(line.find("pass") != std::string::npos);
  auto bad = check_h2(threshold_fixture(s), 256, 2);
  auto bad_line = describe(bad);
  CHECK(bad_line.find("FAIL") != std::string::npos);
  CHECK(bad_line.find("witness: sample") != std::string::npos);
}

}  // TEST_SUITE
