#include "doctest.h"

#include "bspde/drift_ops.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

using namespace bspde;

namespace {

SpectralField random_field(const TriplePtr& t, int n, std::mt19937_64& rng,
                           double amp = 1.0) {
  std::normal_distribution<double> g;
  Eigen::VectorXd c(n);
  for (int k = 0; k < n; ++k) c[k] = amp * g(rng) / (k + 1);
  return {c, t};
}

HSMap zero_map(const TriplePtr& t, int n, int d_u) {
  return {Eigen::MatrixXd::Zero(n, d_u), t};
}

}  // namespace

TEST_SUITE("drift_ops") {

TEST_CASE("diagonal second-order operator on eigenfunctions") {
  auto s = sobolev_triple(8);
  auto d = heat_drift(s);
  auto z = zero_map(s, 8, 2);
  auto out = d.evaluate(0.0, basis_field(s, 1), z, 8);
  CHECK(out.coeffs[0] == doctest::Approx(-M_PI * M_PI).epsilon(1e-13));
  CHECK(out.coeffs.tail(7).cwiseAbs().maxCoeff() == 0.0);
  CHECK(d.evaluate(0.0, zero_field(s, 8), z, 8).coeffs.cwiseAbs().maxCoeff() ==
        0.0);

  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    auto v = random_field(s, 8, rng);
    CHECK(pairing(d.evaluate(0.0, v, z, 8), v) <= 0.0);
  }
}

TEST_CASE("certified constants of the diagonal operator") {
  auto s = sobolev_triple(8);
  auto d = heat_drift(s);
  CHECK(d.rho.c == 0.0);
  CHECK(d.K == 0.0);
  CHECK(d.z_lip == 0.0);
  CHECK(d.f_sup == 0.0);
  CHECK(d.y_lip(5.0, 8) == s->lambda[7]);
  CHECK(d.forcing(0.3) == 0.0);
}

TEST_CASE("flux form with identity coefficient reduces to the diagonal operator") {
  auto s = sobolev_triple(8);
  auto heat = heat_drift(s);
  auto flux =
      csf_drift(scalar_fn("identity"), ReactionPoly::zero(), std::nullopt, s);
  auto z = zero_map(s, 8, 2);
  std::mt19937_64 rng(17);
  for (int i = 0; i < 200; ++i) {
    auto v = random_field(s, 8, rng);
    auto a = flux.evaluate(0.0, v, z, 8);
    auto b = heat.evaluate(0.0, v, z, 8);
    const double scale = std::max(1.0, b.coeffs.cwiseAbs().maxCoeff());
    CHECK((a.coeffs - b.coeffs).cwiseAbs().maxCoeff() < 1e-6 * scale);
  }
}

TEST_CASE("flux form with arctan coefficient: zero input, dissipative sign") {
  auto s = sobolev_triple(8);
  auto d = csf_drift(scalar_fn("arctan"), ReactionPoly::zero(), std::nullopt, s);
  auto z = zero_map(s, 8, 2);
  CHECK(d.evaluate(0.0, zero_field(s, 8), z, 8).coeffs.cwiseAbs().maxCoeff() ==
        0.0);
  CHECK(pairing(d.evaluate(0.0, basis_field(s, 1), z, 8), basis_field(s, 1)) <=
        0.0);
  // time-homogeneous: the same input evaluates identically at any t
  std::mt19937_64 rng(29);
  auto v = random_field(s, 8, rng);
  CHECK((d.evaluate(0.7, v, z, 8).coeffs.array() ==
         d.evaluate(0.0, v, z, 8).coeffs.array())
            .all());
}

TEST_CASE("reaction polynomial certificates") {
  Eigen::VectorXd cubic(4);
  cubic << 0, 0, 0, -1;  // -x^3
  auto g1 = reaction_g(cubic);
  CHECK(g1.degree == 3);
  CHECK(g1.p == 4.0);
  CHECK(g1.slope_max == 0.0);
  CHECK(g1.b_plus == 0.0);
  CHECK(g1.eval(2.0) == -8.0);

  Eigen::VectorXd mixed(4);
  mixed << 0, 1, 0, -1;  // x - x^3
  auto g2 = reaction_g(mixed);
  CHECK(g2.slope_max == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g2.b_plus == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(g2.slope_on_interval(-1.0, 1.0) == doctest::Approx(2.0).epsilon(1e-12));

  Eigen::VectorXd rising(4);
  rising << 0, 0, 0, 1;  // x^3
  CHECK_THROWS_AS(reaction_g(rising), std::invalid_argument);
  Eigen::VectorXd even(3);
  even << 0, 0, -1;  // -x^2
  CHECK_THROWS_AS(reaction_g(even), std::invalid_argument);
  CHECK(ReactionPoly::zero().degree == -1);
}

TEST_CASE("second-order advection form reduces to the diagonal operator") {
  auto s = sobolev_triple(8);
  auto heat = heat_drift(s);
  auto d =
      burgers_drift(scalar_fn("zero"), ReactionPoly::zero(), std::nullopt, s);
  auto z = zero_map(s, 8, 2);
  std::mt19937_64 rng(31);
  for (int i = 0; i < 1000; ++i) {
    auto v = random_field(s, 8, rng);
    auto a = d.evaluate(0.0, v, z, 8);
    auto b = heat.evaluate(0.0, v, z, 8);
    const double scale = std::max(1.0, b.coeffs.cwiseAbs().maxCoeff());
    CHECK((a.coeffs - b.coeffs).cwiseAbs().maxCoeff() < 1e-6 * scale);
  }
  CHECK(d.evaluate(0.0, zero_field(s, 8), z, 8).coeffs.cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("transport projection matches the sine-product integrals") {
  auto s = sobolev_triple(4);
  // unit advection coefficient: the transport term becomes the plain
  // derivative, whose projections have the closed form 4k/(k^2-1) on even
  // modes and vanish on odd ones
  ScalarFn one{"one", [](double) { return 1.0; }, 0.0, 1.0, 1.0, true};
  auto d = burgers_drift(one, ReactionPoly::zero(), std::nullopt, s, 128);
  auto out = d.evaluate(0.0, basis_field(s, 1), zero_map(s, 4, 2), 4);
  Eigen::VectorXd transport = out.coeffs;
  transport[0] += s->lambda[0];  // remove the diagonal part
  CHECK(std::abs(transport[0]) < 1e-10);
  CHECK(std::abs(transport[2]) < 1e-10);
  CHECK(transport[1] == doctest::Approx(8.0 / 3.0).epsilon(1e-4));
  CHECK(transport[3] == doctest::Approx(16.0 / 15.0).epsilon(1e-4));
}

TEST_CASE("coefficient preconditions of the advection forms") {
  auto s = sobolev_triple(8);
  // the second-order form needs a bounded coefficient
  CHECK_THROWS_AS(burgers_drift(scalar_fn("identity"), ReactionPoly::zero(),
                                std::nullopt, s),
                  std::invalid_argument);
  // the flux form needs a nondecreasing one
  ScalarFn wiggle{"wiggle", [](double x) { return std::sin(x); },
                  1.0, 1.0, 1.0, false};
  CHECK_THROWS_AS(csf_drift(wiggle, ReactionPoly::zero(), std::nullopt, s),
                  std::invalid_argument);
  // both reject an over-budget noise feedback
  CHECK_THROWS_AS(csf_drift(scalar_fn("arctan"), ReactionPoly::zero(),
                            ZPerturbation{0.6, 0}, s),
                  std::invalid_argument);
}

TEST_CASE("certified constants of the advection forms") {
  auto s = sobolev_triple(8);
  Eigen::VectorXd cubic(4);
  cubic << 0, 0, 0, -1;
  auto flux = csf_drift(scalar_fn("arctan"), reaction_g(cubic), std::nullopt, s);
  CHECK(flux.rho.c == 0.0);
  CHECK(flux.rho.p == 4.0);
  CHECK(flux.growth.c == 4.0);
  CHECK(flux.K == 0.0);
  CHECK(flux.f_sup == 0.0);

  auto adv =
      burgers_drift(scalar_fn("tanh"), ReactionPoly::zero(), std::nullopt, s);
  CHECK(adv.rho.c == 10.0);
  CHECK(adv.rho.p == 2.0);
  CHECK(adv.growth.c == 8.0);
  CHECK(adv.K == 6.0);
}

TEST_CASE("noise feedback: linearity and budget") {
  auto s = sobolev_triple(4);
  auto h = z_perturbation(0.1, 0);
  CHECK(h.kappa == 0.1);
  CHECK_THROWS_AS(z_perturbation(0.6, 0), std::invalid_argument);
  CHECK_THROWS_AS(z_perturbation(0.1, -1), std::invalid_argument);

  auto d = csf_drift(scalar_fn("arctan"), ReactionPoly::zero(),
                     z_perturbation(0.1, 0), s);
  std::mt19937_64 rng(41);
  auto v = random_field(s, 4, rng);
  Eigen::MatrixXd ze = Eigen::MatrixXd::Zero(4, 2);
  ze(0, 0) = 1.0;  // z(u_0) = e_1
  auto with_z = d.evaluate(0.0, v, HSMap{ze, s}, 4);
  auto without = d.evaluate(0.0, v, zero_map(s, 4, 2), 4);
  Eigen::VectorXd diff = with_z.coeffs - without.coeffs;
  CHECK(diff[0] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(diff.tail(3).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(d.z_lip == 0.1);
}

TEST_CASE("modulus closed forms") {
  Modulus rho{2.0, 3.0, true};
  CHECK(rho.value_at(0.0) == 2.0);
  CHECK(rho.sup_on_ball(2.0) == doctest::Approx(18.0).epsilon(1e-14));
  auto s = sobolev_triple(4);
  CHECK(rho(basis_field(s, 1)) ==
        doctest::Approx(2.0 * (1.0 + std::pow(1.0 + M_PI * M_PI, 1.5)))
            .epsilon(1e-12));
}

TEST_CASE("diffusion transform on the dual triple") {
  auto du = dual_triple(8);
  auto lin = fast_diffusion_drift(psi_linear(), du);
  auto z = zero_map(du, 8, 2);
  std::mt19937_64 rng(43);
  for (int i = 0; i < 100; ++i) {
    auto v = random_field(du, 8, rng);
    auto out = lin.evaluate(0.0, v, z, 8);
    Eigen::VectorXd expect = -du->lambda.head(8).cwiseProduct(v.coeffs);
    CHECK((out.coeffs - expect).cwiseAbs().maxCoeff() <
          1e-10 * std::max(1.0, expect.cwiseAbs().maxCoeff()));
  }

  auto pw = fast_diffusion_drift(psi_power(0.5), du);
  CHECK(pw.evaluate(0.0, zero_field(du, 8), z, 8).coeffs.cwiseAbs().maxCoeff() ==
        0.0);
  for (int i = 0; i < 1000; ++i) {
    auto v = random_field(du, 8, rng);
    CHECK(pairing(pw.evaluate(0.0, v, z, 8), v) <= 1e-14);
  }
  CHECK_THROWS_AS(psi_power(1.2), std::invalid_argument);
  CHECK_THROWS_AS(fast_diffusion_drift(psi_power_unchecked(2.0), du),
                  std::invalid_argument);
}

TEST_CASE("audit fixtures carry their forged certificates") {
  auto s = sobolev_triple(8);
  auto cubic = cubic_fixture_drift(s);
  CHECK(cubic.rho.c == 1.0);
  CHECK(cubic.rho.p == 4.0);
  CHECK(cubic.growth.c == 4.0);
  CHECK(cubic.K == 1.0);
  CHECK(cubic.f_sup == 1.0);

  auto du = dual_triple(8);
  auto porous = porous_fixture_drift(2.0, du);
  CHECK(porous.growth.c == 1.0);
  CHECK(porous.growth.p == 1.0);
  CHECK_THROWS_AS(porous_fixture_drift(0.5, du), std::invalid_argument);
}

TEST_CASE("named scalar coefficients") {
  CHECK(scalar_fn("identity").lipschitz == 1.0);
  CHECK(!std::isfinite(scalar_fn("identity").sup_abs));
  CHECK(scalar_fn("arctan").sup_abs == doctest::Approx(M_PI / 2).epsilon(1e-14));
  CHECK(scalar_fn("tanh").sup_abs == 1.0);
  CHECK(scalar_fn("zero").fn(3.0) == 0.0);
  CHECK_THROWS_AS(scalar_fn("sine"), std::invalid_argument);
}

}  // TEST_SUITE
