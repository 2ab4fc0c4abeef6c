#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bspde {

/// Flat dotted-key run configuration. Parsing is strict: unknown keys,
/// duplicate keys, and malformed values are errors, and serialization
/// round-trips losslessly through full-precision formatting.
struct RunConfig {
  struct Operator {
    std::string name = "heat";  // heat | csf | burgers | fastdiff | zero |
                                // cubic-bad | porous-bad
    std::string fbar = "identity";
    std::vector<double> g;  // reaction polynomial, ascending; empty = none
    double kappa = 0;
    int direction = 0;
    std::string psi = "linear";  // linear | power
    double psi_r = 0.5;
    double psi_delta = 1e-3;
    double porous_r = 2.0;
  };
  struct Terminal {
    std::string kind = "deterministic";  // deterministic | bounded | linear
    std::vector<double> coeffs;
  };
  struct Taming {
    std::string mode = "auto";  // auto | manual
    double ball_m = 0;
    double level_n = 0;
  };

  Operator op;
  std::string triple = "sobolev";
  Terminal terminal;
  double grid_T = 1.0;
  int grid_steps = 64;
  int paths = 1024;
  int d_u = 2;
  int galerkin_n = 8;
  int regression_degree = 2;
  int picard_max = 200;
  double picard_tol = 1e-12;
  double ridge = 1e-10;
  Taming taming;
  int check_samples = 10000;
  std::uint64_t seed = 1;
  std::string output_dir = ".";

  static RunConfig from_string(const std::string& text);
  static RunConfig from_file(const std::string& path);
  std::string to_string() const;

  /// Structural validation of ranges and names; cross-field compatibility
  /// (operator vs triple, polynomial conformance) is enforced when the
  /// operator is built.
  void validate() const;
};

}  // namespace bspde
