#include "bspde/run_config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace bspde {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + ": bad number '" +
                                value + "'");
  }
  if (used != value.size())
    throw std::invalid_argument("config key " + key + ": trailing characters in '" +
                                value + "'");
  return out;
}

long long parse_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long out;
  try {
    out = std::stoll(value, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + ": bad integer '" +
                                value + "'");
  }
  if (used != value.size())
    throw std::invalid_argument("config key " + key + ": trailing characters in '" +
                                value + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  unsigned long long out;
  try {
    out = std::stoull(value, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + ": bad integer '" +
                                value + "'");
  }
  if (used != value.size())
    throw std::invalid_argument("config key " + key + ": trailing characters in '" +
                                value + "'");
  return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  if (trim(value).empty()) return out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(parse_double(key, trim(item)));
  return out;
}

std::string format_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

std::string format_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += format_double(xs[i]);
  }
  return out;
}

}  // namespace

RunConfig RunConfig::from_string(const std::string& text) {
  RunConfig cfg;
  using Setter = std::function<void(RunConfig&, const std::string&,
                                    const std::string&)>;
  static const std::map<std::string, Setter> setters = {
      {"operator.name", [](RunConfig& c, const std::string&, const std::string& v) { c.op.name = v; }},
      {"operator.fbar", [](RunConfig& c, const std::string&, const std::string& v) { c.op.fbar = v; }},
      {"operator.g", [](RunConfig& c, const std::string& k, const std::string& v) { c.op.g = parse_list(k, v); }},
      {"operator.kappa", [](RunConfig& c, const std::string& k, const std::string& v) { c.op.kappa = parse_double(k, v); }},
      {"operator.direction", [](RunConfig& c, const std::string& k, const std::string& v) { c.op.direction = static_cast<int>(parse_int(k, v)); }},
      {"operator.psi", [](RunConfig& c, const std::string&, const std::string& v) { c.op.psi = v; }},
      {"operator.psi_r", [](RunConfig& c, const std::string& k, const std::string& v) { c.op.psi_r = parse_double(k, v); }},
      {"operator.psi_delta", [](RunConfig& c, const std::string& k, const std::string& v) { c.op.psi_delta = parse_double(k, v); }},
      {"operator.porous_r", [](RunConfig& c, const std::string& k, const std::string& v) { c.op.porous_r = parse_double(k, v); }},
      {"triple.name", [](RunConfig& c, const std::string&, const std::string& v) { c.triple = v; }},
      {"terminal.kind", [](RunConfig& c, const std::string&, const std::string& v) { c.terminal.kind = v; }},
      {"terminal.coeffs", [](RunConfig& c, const std::string& k, const std::string& v) { c.terminal.coeffs = parse_list(k, v); }},
      {"grid.T", [](RunConfig& c, const std::string& k, const std::string& v) { c.grid_T = parse_double(k, v); }},
      {"grid.steps", [](RunConfig& c, const std::string& k, const std::string& v) { c.grid_steps = static_cast<int>(parse_int(k, v)); }},
      {"solver.paths", [](RunConfig& c, const std::string& k, const std::string& v) { c.paths = static_cast<int>(parse_int(k, v)); }},
      {"solver.d_u", [](RunConfig& c, const std::string& k, const std::string& v) { c.d_u = static_cast<int>(parse_int(k, v)); }},
      {"solver.galerkin_n", [](RunConfig& c, const std::string& k, const std::string& v) { c.galerkin_n = static_cast<int>(parse_int(k, v)); }},
      {"solver.regression_degree", [](RunConfig& c, const std::string& k, const std::string& v) { c.regression_degree = static_cast<int>(parse_int(k, v)); }},
      {"solver.picard_max", [](RunConfig& c, const std::string& k, const std::string& v) { c.picard_max = static_cast<int>(parse_int(k, v)); }},
      {"solver.picard_tol", [](RunConfig& c, const std::string& k, const std::string& v) { c.picard_tol = parse_double(k, v); }},
      {"solver.ridge", [](RunConfig& c, const std::string& k, const std::string& v) { c.ridge = parse_double(k, v); }},
      {"taming.mode", [](RunConfig& c, const std::string&, const std::string& v) { c.taming.mode = v; }},
      {"taming.ball_m", [](RunConfig& c, const std::string& k, const std::string& v) { c.taming.ball_m = parse_double(k, v); }},
      {"taming.level_n", [](RunConfig& c, const std::string& k, const std::string& v) { c.taming.level_n = parse_double(k, v); }},
      {"check.samples", [](RunConfig& c, const std::string& k, const std::string& v) { c.check_samples = static_cast<int>(parse_int(k, v)); }},
      {"seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = parse_u64(k, v); }},
      {"output.dir", [](RunConfig& c, const std::string&, const std::string& v) { c.output_dir = v; }},
  };

  std::set<std::string> seen;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end())
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": unknown key '" + key + "'");
    if (!seen.insert(key).second)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": duplicate key '" + key + "'");
    it->second(cfg, key, value);
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str());
}

std::string RunConfig::to_string() const {
  std::ostringstream os;
  os << "operator.name = " << op.name << "\n";
  os << "operator.fbar = " << op.fbar << "\n";
  os << "operator.g = " << format_list(op.g) << "\n";
  os << "operator.kappa = " << format_double(op.kappa) << "\n";
  os << "operator.direction = " << op.direction << "\n";
  os << "operator.psi = " << op.psi << "\n";
  os << "operator.psi_r = " << format_double(op.psi_r) << "\n";
  os << "operator.psi_delta = " << format_double(op.psi_delta) << "\n";
  os << "operator.porous_r = " << format_double(op.porous_r) << "\n";
  os << "triple.name = " << triple << "\n";
  os << "terminal.kind = " << terminal.kind << "\n";
  os << "terminal.coeffs = " << format_list(terminal.coeffs) << "\n";
  os << "grid.T = " << format_double(grid_T) << "\n";
  os << "grid.steps = " << grid_steps << "\n";
  os << "solver.paths = " << paths << "\n";
  os << "solver.d_u = " << d_u << "\n";
  os << "solver.galerkin_n = " << galerkin_n << "\n";
  os << "solver.regression_degree = " << regression_degree << "\n";
  os << "solver.picard_max = " << picard_max << "\n";
  os << "solver.picard_tol = " << format_double(picard_tol) << "\n";
  os << "solver.ridge = " << format_double(ridge) << "\n";
  os << "taming.mode = " << taming.mode << "\n";
  os << "taming.ball_m = " << format_double(taming.ball_m) << "\n";
  os << "taming.level_n = " << format_double(taming.level_n) << "\n";
  os << "check.samples = " << check_samples << "\n";
  os << "seed = " << seed << "\n";
  os << "output.dir = " << output_dir << "\n";
  return os.str();
}

void RunConfig::validate() const {
  const auto one_of = [](const std::string& key, const std::string& value,
                         std::initializer_list<const char*> allowed) {
    for (const char* a : allowed)
      if (value == a) return;
    std::string list;
    for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
    throw std::invalid_argument("config key " + key + ": '" + value +
                                "' is not one of {" + list + "}");
  };
  one_of("operator.name", op.name,
         {"heat", "csf", "burgers", "fastdiff", "zero", "cubic-bad",
          "porous-bad"});
  one_of("operator.fbar", op.fbar, {"identity", "arctan", "tanh", "zero"});
  one_of("operator.psi", op.psi, {"linear", "power"});
  one_of("triple.name", triple, {"sobolev", "dual"});
  one_of("terminal.kind", terminal.kind,
         {"deterministic", "bounded", "linear"});
  one_of("taming.mode", taming.mode, {"auto", "manual"});

  if (!(grid_T > 0) || !std::isfinite(grid_T))
    throw std::invalid_argument("grid.T must be positive finite");
  if (grid_steps < 2) throw std::invalid_argument("grid.steps must be >= 2");
  if (paths < 1) throw std::invalid_argument("solver.paths must be >= 1");
  if (d_u < 1) throw std::invalid_argument("solver.d_u must be >= 1");
  if (galerkin_n < 1)
    throw std::invalid_argument("solver.galerkin_n must be >= 1");
  if (regression_degree < 0)
    throw std::invalid_argument("solver.regression_degree must be >= 0");
  if (picard_max < 1) throw std::invalid_argument("solver.picard_max must be >= 1");
  if (!(picard_tol > 0)) throw std::invalid_argument("solver.picard_tol must be positive");
  if (!(ridge >= 0)) throw std::invalid_argument("solver.ridge must be nonnegative");
  if (taming.mode == "manual") {
    if (!(taming.ball_m > 0))
      throw std::invalid_argument("taming.ball_m must be positive in manual mode");
    if (!(taming.level_n >= 1))
      throw std::invalid_argument("taming.level_n must be >= 1 in manual mode");
  }
  if (check_samples < 1)
    throw std::invalid_argument("check.samples must be >= 1");
  if (terminal.coeffs.empty())
    throw std::invalid_argument("terminal.coeffs must not be empty");
  for (double c : terminal.coeffs)
    if (!std::isfinite(c))
      throw std::invalid_argument("terminal.coeffs must be finite");
  if (op.direction < 0)
    throw std::invalid_argument("operator.direction must be >= 0");
  if (output_dir.empty())
    throw std::invalid_argument("output.dir must not be empty");
}

}  // namespace bspde
