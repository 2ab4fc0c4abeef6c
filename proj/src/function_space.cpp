#include "bspde/function_space.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace bspde {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd sine_eigenvalues(int n) {
  Eigen::VectorXd lam(n);
  for (int k = 0; k < n; ++k) {
    double kk = static_cast<double>(k + 1) * kPi;
    lam[k] = kk * kk;
  }
  return lam;
}

const Eigen::VectorXd& weights_for(const TripleSpec& t, SpaceNorm which) {
  switch (which) {
    case SpaceNorm::H: return t.wH;
    case SpaceNorm::V: return t.wV;
    case SpaceNorm::Vstar: return t.wVstar;
  }
  throw std::logic_error("unknown norm");
}

}  // namespace

void TripleSpec::validate() const {
  const int n = modes();
  if (n <= 0) throw std::invalid_argument("triple needs at least one mode");
  if (wH.size() != n || wV.size() != n || wVstar.size() != n)
    throw std::invalid_argument("triple weight lengths disagree");
  double prev_ratio = 0.0;
  for (int k = 0; k < n; ++k) {
    if (!(wH[k] > 0) || !(wV[k] > 0) || !(wVstar[k] > 0))
      throw std::invalid_argument("triple weights must be positive");
    // Diagonal Riesz duality: the stored dual weight must be exactly the
    // computed quotient, so tampering with any single weight is detectable.
    if (wVstar[k] != wH[k] * wH[k] / wV[k])
      throw std::invalid_argument("dual weight inconsistent at mode " +
                                  std::to_string(k + 1));
    double ratio = wV[k] / wH[k];
    if (k > 0 && !(ratio > prev_ratio))
      throw std::invalid_argument("wV/wH must increase strictly (compactness)");
    prev_ratio = ratio;
  }
}

TriplePtr sobolev_triple(int n_modes) {
  auto t = std::make_shared<TripleSpec>();
  t->name = "sobolev";
  t->lambda = sine_eigenvalues(n_modes);
  t->wH = Eigen::VectorXd::Ones(n_modes);
  t->wV = Eigen::VectorXd::Ones(n_modes) + t->lambda;
  t->wVstar = (t->wH.array() * t->wH.array() / t->wV.array()).matrix();
  t->validate();
  return t;
}

TriplePtr dual_triple(int n_modes) {
  auto t = std::make_shared<TripleSpec>();
  t->name = "dual";
  t->lambda = sine_eigenvalues(n_modes);
  t->wH = t->lambda.cwiseInverse();
  t->wV = Eigen::VectorXd::Ones(n_modes);
  t->wVstar = (t->wH.array() * t->wH.array() / t->wV.array()).matrix();
  t->validate();
  return t;
}

TriplePtr triple_by_name(const std::string& name, int n_modes) {
  if (name == "sobolev") return sobolev_triple(n_modes);
  if (name == "dual") return dual_triple(n_modes);
  throw std::invalid_argument("unknown triple: " + name);
}

bool compatible(const TriplePtr& a, const TriplePtr& b) {
  if (!a || !b) return false;
  if (a == b) return true;
  if (a->name != b->name) return false;
  int n = std::min(a->modes(), b->modes());
  return a->wH.head(n) == b->wH.head(n) && a->wV.head(n) == b->wV.head(n);
}

SpectralField zero_field(const TriplePtr& triple, int n) {
  if (!triple) throw std::invalid_argument("null triple");
  if (n < 0 || n > triple->modes())
    throw std::invalid_argument("field length exceeds triple modes");
  return {Eigen::VectorXd::Zero(n), triple};
}

SpectralField basis_field(const TriplePtr& triple, int k) {
  if (!triple) throw std::invalid_argument("null triple");
  if (k < 1 || k > triple->modes())
    throw std::invalid_argument("basis index out of range");
  Eigen::VectorXd c = Eigen::VectorXd::Zero(k);
  c[k - 1] = 1.0;
  return {std::move(c), triple};
}

double norm(const SpectralField& v, SpaceNorm which) {
  if (!v.triple) throw std::invalid_argument("field has no triple");
  const int n = v.size();
  if (n > v.triple->modes())
    throw std::invalid_argument("field longer than triple weight table");
  const auto& w = weights_for(*v.triple, which);
  double s = 0;
  for (int k = 0; k < n; ++k) s += w[k] * v.coeffs[k] * v.coeffs[k];
  return std::sqrt(s);
}

double hs_norm(const HSMap& z, SpaceNorm which) {
  if (!z.triple) throw std::invalid_argument("map has no triple");
  if (which == SpaceNorm::Vstar)
    throw std::invalid_argument("Hilbert-Schmidt norms are H or V only");
  const int n = z.rows();
  if (n > z.triple->modes())
    throw std::invalid_argument("map taller than triple weight table");
  const auto& w = weights_for(*z.triple, which);
  double s = 0;
  for (int k = 0; k < n; ++k) s += w[k] * z.entries.row(k).squaredNorm();
  return std::sqrt(s);
}

double pairing(const SpectralField& u, const SpectralField& v) {
  if (!compatible(u.triple, v.triple))
    throw std::invalid_argument("pairing across mismatched triples");
  const int n = std::min(u.size(), v.size());
  const auto& w = u.triple->wH;
  double s = 0;
  for (int k = 0; k < n; ++k) s += w[k] * u.coeffs[k] * v.coeffs[k];
  return s;
}

double v_inner(const SpectralField& u, const SpectralField& v) {
  if (!compatible(u.triple, v.triple))
    throw std::invalid_argument("V inner product across mismatched triples");
  const int n = std::min(u.size(), v.size());
  const auto& w = u.triple->wV;
  double s = 0;
  for (int k = 0; k < n; ++k) s += w[k] * u.coeffs[k] * v.coeffs[k];
  return s;
}

SpectralField project(const SpectralField& v, int n) {
  if (n < 0) throw std::invalid_argument("projection order must be >= 0");
  if (n >= v.size()) return v;
  return {v.coeffs.head(n), v.triple};
}

namespace {

GridOps build_grid(int n_modes, int n_grid) {
  GridOps g;
  g.n_modes = n_modes;
  g.n_grid = n_grid;
  g.h = 1.0 / (n_grid + 1);
  g.nodes.resize(n_grid);
  g.val.resize(n_grid, n_modes);
  g.deriv_int.resize(n_grid, n_modes);
  g.deriv_full.resize(n_grid + 2, n_modes);
  g.w_full.resize(n_grid + 2);
  const double sqrt2 = std::sqrt(2.0);
  for (int i = 0; i < n_grid; ++i) g.nodes[i] = (i + 1) * g.h;
  for (int k = 0; k < n_modes; ++k) {
    double kp = (k + 1) * kPi;
    for (int i = 0; i < n_grid; ++i) {
      g.val(i, k) = sqrt2 * std::sin(kp * g.nodes[i]);
      g.deriv_int(i, k) = sqrt2 * kp * std::cos(kp * g.nodes[i]);
    }
    for (int i = 0; i <= n_grid + 1; ++i) {
      double x = i * g.h;
      g.deriv_full(i, k) = sqrt2 * kp * std::cos(kp * x);
    }
  }
  g.w_full.setConstant(g.h);
  g.w_full[0] = g.h / 2;
  g.w_full[n_grid + 1] = g.h / 2;
  return g;
}

}  // namespace

const GridOps& grid_ops(int n_modes, int n_grid) {
  if (n_modes < 1) throw std::invalid_argument("grid needs at least one mode");
  if (n_grid < 2 * n_modes)
    throw std::invalid_argument("grid too coarse: need n_grid >= 2*n_modes");
  static std::map<std::pair<int, int>, std::unique_ptr<GridOps>> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(n_modes, n_grid);
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, std::make_unique<GridOps>(build_grid(n_modes, n_grid)))
             .first;
  }
  return *it->second;
}

Eigen::VectorXd grid_transform(const SpectralField& v, int n_grid) {
  if (v.size() == 0) return Eigen::VectorXd::Zero(n_grid);
  const GridOps& g = grid_ops(v.size(), n_grid);
  return g.val * v.coeffs;
}

SpectralField grid_inverse(const Eigen::VectorXd& values, const TriplePtr& triple,
                           int n_modes) {
  const GridOps& g = grid_ops(n_modes, static_cast<int>(values.size()));
  Eigen::VectorXd c = g.h * (g.val.transpose() * values);
  return {std::move(c), triple};
}

double gn_ratio(const SpectralField& u, double q) {
  if (!u.triple || u.triple->name != "sobolev")
    throw std::invalid_argument("interpolation ratio needs the Sobolev triple");
  if (!(q > 2.0)) throw std::invalid_argument("exponent must exceed 2");
  double l2 = norm(u, SpaceNorm::H);
  if (l2 == 0.0) throw std::invalid_argument("ratio undefined for the zero field");
  int n_grid = std::max(64, 4 * u.size());
  Eigen::VectorXd vals = grid_transform(u, n_grid);
  double h = 1.0 / (n_grid + 1);
  double s = 0;
  for (int i = 0; i < n_grid; ++i) s += std::pow(std::abs(vals[i]), q);
  double lq = std::pow(h * s, 1.0 / q);
  double gamma = 0.5 - 1.0 / q;
  double denom = std::pow(norm(u, SpaceNorm::V), gamma) * std::pow(l2, 1.0 - gamma);
  return lq / denom;
}

}  // namespace bspde
