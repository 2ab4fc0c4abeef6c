#include "doctest.h"

#include "bspde/function_space.hpp"

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

}  // namespace

TEST_SUITE("function_space") {

TEST_CASE("spectrum and basis norms on the Sobolev triple") {
  auto t = sobolev_triple(16);
  CHECK(t->lambda[0] == doctest::Approx(M_PI * M_PI).epsilon(1e-14));
  CHECK(t->lambda[7] == doctest::Approx(64.0 * M_PI * M_PI).epsilon(1e-14));
  auto e1 = basis_field(t, 1);
  CHECK(norm(e1, SpaceNorm::H) == 1.0);
  CHECK(norm(e1, SpaceNorm::V) ==
        doctest::Approx(std::sqrt(1.0 + M_PI * M_PI)).epsilon(1e-14));
  CHECK(norm(e1, SpaceNorm::Vstar) ==
        doctest::Approx(1.0 / std::sqrt(1.0 + M_PI * M_PI)).epsilon(1e-14));
  CHECK(norm(zero_field(t, 8), SpaceNorm::V) == 0.0);
}

TEST_CASE("dual-space weights are the exact quotient in both triples") {
  for (const auto& t : {sobolev_triple(12), dual_triple(12)}) {
    for (int k = 0; k < t->modes(); ++k)
      CHECK(t->wVstar[k] == t->wH[k] * t->wH[k] / t->wV[k]);
    CHECK_NOTHROW(t->validate());
  }
}

TEST_CASE("perturbing one weight breaks validation") {
  TripleSpec s = *sobolev_triple(8);
  s.wH[1] *= 1.0 + 1e-13;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("pairing realizes the weighted inner product") {
  auto s = sobolev_triple(8);
  CHECK(pairing(basis_field(s, 1), basis_field(s, 1)) == 1.0);
  CHECK(pairing(basis_field(s, 1), basis_field(s, 2)) == 0.0);
  auto d = dual_triple(8);
  CHECK(pairing(basis_field(d, 1), basis_field(d, 1)) ==
        doctest::Approx(1.0 / (M_PI * M_PI)).epsilon(1e-14));
  SpectralField shorter{Eigen::VectorXd::Ones(2), s};
  SpectralField longer{Eigen::VectorXd::Ones(5), s};
  CHECK(pairing(shorter, longer) == 2.0);
  CHECK_THROWS_AS(pairing(basis_field(s, 1), basis_field(d, 1)),
                  std::invalid_argument);
}

TEST_CASE("Hilbert-Schmidt norms") {
  auto s = sobolev_triple(4);
  Eigen::MatrixXd entries = Eigen::MatrixXd::Zero(4, 3);
  entries(0, 0) = 1.0;
  HSMap z{entries, s};
  CHECK(hs_norm(z, SpaceNorm::H) == 1.0);
  CHECK(hs_norm(z, SpaceNorm::V) ==
        doctest::Approx(std::sqrt(1.0 + M_PI * M_PI)).epsilon(1e-14));
  CHECK(hs_norm(HSMap{Eigen::MatrixXd::Zero(4, 3), s}, SpaceNorm::H) == 0.0);
  CHECK_THROWS_AS(hs_norm(z, SpaceNorm::Vstar), std::invalid_argument);
}

TEST_CASE("projection truncates, is idempotent, and contracts") {
  auto s = sobolev_triple(12);
  CHECK(norm(project(basis_field(s, 3), 2), SpaceNorm::H) == 0.0);
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    auto y = random_field(s, 12, rng);
    auto yn = project(y, 5);
    auto ynn = project(yn, 5);
    CHECK((ynn.coeffs.array() == yn.coeffs.array()).all());
    CHECK(norm(yn, SpaceNorm::H) <= norm(y, SpaceNorm::H));
    CHECK(norm(yn, SpaceNorm::V) <= norm(y, SpaceNorm::V));
    CHECK(norm(yn, SpaceNorm::Vstar) <= norm(y, SpaceNorm::Vstar));
    auto v = random_field(s, 5, rng);
    CHECK(pairing(yn, v) == doctest::Approx(pairing(y, v)).epsilon(1e-12));
  }
}

TEST_CASE("pairing is bounded by the dual and primal norms") {
  std::mt19937_64 rng(22);
  for (const auto& t : {sobolev_triple(10), dual_triple(10)}) {
    for (int i = 0; i < 10000; ++i) {
      auto u = random_field(t, 10, rng);
      auto v = random_field(t, 10, rng);
      CHECK(pairing(u, v) <= norm(u, SpaceNorm::Vstar) * norm(v, SpaceNorm::V) *
                                 (1.0 + 1e-12));
    }
  }
}

TEST_CASE("grid transform round trip is exact on band-limited fields") {
  auto s = sobolev_triple(8);
  std::mt19937_64 rng(5);
  auto v = random_field(s, 8, rng);
  auto back = grid_inverse(grid_transform(v, 64), s, 8);
  CHECK((back.coeffs - v.coeffs).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(grid_transform(zero_field(s, 8), 32).cwiseAbs().maxCoeff() == 0.0);
  auto vals = grid_transform(basis_field(s, 1), 64);
  CHECK(vals.squaredNorm() / 65.0 == doctest::Approx(1.0).epsilon(1e-8));
  CHECK_THROWS_AS(grid_transform(random_field(s, 8, rng), 15),
                  std::invalid_argument);
}

TEST_CASE("interpolation ratio: frozen value and scaling invariance") {
  auto s = sobolev_triple(8);
  auto e1 = basis_field(s, 1);
  const double closed_form =
      std::pow(1.5, 0.25) / std::pow(1.0 + M_PI * M_PI, 0.125);
  CHECK(gn_ratio(e1, 4.0) == doctest::Approx(closed_form).epsilon(1e-9));
  CHECK(gn_ratio(e1, 4.0) == doctest::Approx(0.821276).epsilon(1e-5));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> logamp(-3.0, 3.0);
  for (int i = 0; i < 10; ++i) {
    auto u = random_field(s, 8, rng);
    const double lam = std::exp(logamp(rng));
    SpectralField lu{lam * u.coeffs, s};
    CHECK(gn_ratio(lu, 4.0) == doctest::Approx(gn_ratio(u, 4.0)).epsilon(1e-8));
  }
  CHECK_THROWS_AS(gn_ratio(zero_field(s, 4), 4.0), std::invalid_argument);
  CHECK_THROWS_AS(gn_ratio(e1, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(gn_ratio(basis_field(dual_triple(4), 1), 4.0),
                  std::invalid_argument);
}

TEST_CASE("interpolation ratio stays bounded over a random scan") {
  auto s = sobolev_triple(8);
  std::mt19937_64 rng(13);
  double worst = 0;
  for (int i = 0; i < 10000; ++i)
    worst = std::max(worst, gn_ratio(random_field(s, 8, rng), 6.0));
  CHECK(worst < 2.0);
}

TEST_CASE("triple lookup and compatibility") {
  CHECK(triple_by_name("sobolev", 4)->name == "sobolev");
  CHECK(triple_by_name("dual", 4)->name == "dual");
  CHECK_THROWS_AS(triple_by_name("weighted", 4), std::invalid_argument);
  CHECK(compatible(sobolev_triple(4), sobolev_triple(9)));
  CHECK(!compatible(sobolev_triple(4), dual_triple(4)));
}

}  // TEST_SUITE
