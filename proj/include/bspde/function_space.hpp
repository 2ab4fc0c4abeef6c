#pragma once

#include <Eigen/Dense>

#include <memory>
#include <string>

namespace bspde {

enum class SpaceNorm { H, V, Vstar };

/// Diagonal-weight realization of a Gelfand triple V ⊂ H ⊂ V* over the
/// Dirichlet sine basis e_k(x) = √2 sin(kπx) on [0,1], k = 1..n_modes.
/// A coefficient vector a represents Σ a_k e_k; the three norms are
/// weighted l² norms with per-mode weights wH, wV, wVstar.
struct TripleSpec {
  std::string name;
  Eigen::VectorXd lambda;  // λ_k = (kπ)², Dirichlet Laplacian eigenvalues
  Eigen::VectorXd wH, wV, wVstar;

  int modes() const { return static_cast<int>(lambda.size()); }

  /// Throws if weights are non-positive, wV/wH is not strictly increasing,
  /// or wVstar differs bit-for-bit from wH²/wV.
  void validate() const;
};

using TriplePtr = std::shared_ptr<const TripleSpec>;

/// wH = 1, wV = 1 + λ: V = W_0^{1,2}(0,1), H = L²(0,1).
TriplePtr sobolev_triple(int n_modes);

/// wH = 1/λ, wV = 1: V = L²(0,1), H = W^{-1,2}(0,1).
TriplePtr dual_triple(int n_modes);

TriplePtr triple_by_name(const std::string& name, int n_modes);

/// True when two triples use the same weight family (same name, weights equal
/// on the overlapping modes). Mixed-triple operations are rejected.
bool compatible(const TriplePtr& a, const TriplePtr& b);

struct SpectralField {
  Eigen::VectorXd coeffs;
  TriplePtr triple;

  int size() const { return static_cast<int>(coeffs.size()); }
};

/// Finite-rank Hilbert-Schmidt map: entries(k, j) is the e_k-coefficient of
/// the image of the j-th noise direction.
struct HSMap {
  Eigen::MatrixXd entries;
  TriplePtr triple;

  int rows() const { return static_cast<int>(entries.rows()); }
  int cols() const { return static_cast<int>(entries.cols()); }
};

SpectralField zero_field(const TriplePtr& triple, int n);
SpectralField basis_field(const TriplePtr& triple, int k);  // e_k, 1-based

double norm(const SpectralField& v, SpaceNorm which);
double hs_norm(const HSMap& z, SpaceNorm which);  // H or V only

/// Duality pairing ⟨u, v⟩ = Σ wH_k u_k v_k (extends the H inner product;
/// valid for V*×V pairs). Shorter vectors are zero-padded.
double pairing(const SpectralField& u, const SpectralField& v);

/// V inner product Σ wV_k u_k v_k on the overlapping modes.
double v_inner(const SpectralField& u, const SpectralField& v);

/// Truncates coefficients beyond index n (keeps modes 1..n).
SpectralField project(const SpectralField& v, int n);

/// Pseudospectral workspace for one (n_modes, n_grid) pair. Interior nodes
/// x_i = i/(n_grid+1) carry uniform weight h = 1/(n_grid+1); sine-sine
/// products up to combined frequency 2·n_grid integrate exactly, which gives
/// an exact round trip on the first n_grid modes. The derivative matrices
/// include the interval endpoints with trapezoid half-weights since cosine
/// series do not vanish there.
struct GridOps {
  int n_modes = 0;
  int n_grid = 0;
  double h = 0;                 // interior node weight 1/(n_grid+1)
  Eigen::VectorXd nodes;        // interior nodes, size n_grid
  Eigen::MatrixXd val;          // n_grid × n_modes, e_k(x_i)
  Eigen::MatrixXd deriv_int;    // n_grid × n_modes, e_k'(x_i)
  Eigen::MatrixXd deriv_full;   // (n_grid+2) × n_modes, e_k' incl. endpoints
  Eigen::VectorXd w_full;       // trapezoid weights for deriv_full rows
};

/// Shared cache of grid workspaces; thread-safe.
const GridOps& grid_ops(int n_modes, int n_grid);

/// Values of v at the interior quadrature nodes. Requires n_grid ≥ 2·size.
Eigen::VectorXd grid_transform(const SpectralField& v, int n_grid);

/// Quadrature projection of nodal values back onto the first n modes.
SpectralField grid_inverse(const Eigen::VectorXd& values, const TriplePtr& triple,
                           int n_modes);

/// ‖u‖_{L^q} / (‖u‖_V^γ ‖u‖_{L²}^{1-γ}) with γ = 1/2 − 1/q; the interpolation
/// ratio is invariant under scaling u → λu. Sobolev-triple fields only.
double gn_ratio(const SpectralField& u, double q);

}  // namespace bspde
