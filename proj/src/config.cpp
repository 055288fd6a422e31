#include "rainflow/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

#include "rainflow/flowio.hpp"

namespace rainflow {

namespace {

std::string format_value(double v) {
  // shortest text that parses back to the same double
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}
std::string format_value(int v) { return std::to_string(v); }
std::string format_value(std::uint64_t v) { return std::to_string(v); }
std::string format_value(bool v) { return v ? "true" : "false"; }
std::string format_value(PenaltyKind v) { return to_string(v); }
std::string format_value(FlowPreconditioner v) { return to_string(v); }
std::string format_value(Preconditioner v) { return to_string(v); }
std::string format_value(LayerUpdate v) { return to_string(v); }

void parse_value(const std::string& s, double& out) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw ConfigError("expected a finite number, got '" + s + "'");
  }
  out = v;
}

template <class Int>
void parse_integer(const std::string& s, Int& out) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("expected an integer, got '" + s + "'");
  }
  out = v;
}
void parse_value(const std::string& s, int& out) { parse_integer(s, out); }
void parse_value(const std::string& s, std::uint64_t& out) { parse_integer(s, out); }

void parse_value(const std::string& s, bool& out) {
  if (s == "true" || s == "1" || s == "on" || s == "yes") {
    out = true;
  } else if (s == "false" || s == "0" || s == "off" || s == "no") {
    out = false;
  } else {
    throw ConfigError("expected true or false, got '" + s + "'");
  }
}

template <class Enum, class FromString>
void parse_enum(const std::string& s, Enum& out, FromString from) {
  try {
    out = from(s);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}
void parse_value(const std::string& s, PenaltyKind& out) { parse_enum(s, out, penalty_kind_from_string); }
void parse_value(const std::string& s, FlowPreconditioner& out) {
  parse_enum(s, out, flow_preconditioner_from_string);
}
void parse_value(const std::string& s, Preconditioner& out) {
  parse_enum(s, out, preconditioner_from_string);
}
void parse_value(const std::string& s, LayerUpdate& out) { parse_enum(s, out, layer_update_from_string); }

struct Entry {
  std::string name;
  std::string description;
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, const std::string&)> set;
};

template <class Access>
Entry entry(const char* name, const char* description, Access access) {
  return {name, description,
          [access](const Config& c) { return format_value(access(const_cast<Config&>(c))); },
          [access](Config& c, const std::string& v) { parse_value(v, access(c)); }};
}

#define RF_KEY(name, desc, member) entry(name, desc, [](Config& c) -> auto& { return c.member; })

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      RF_KEY("flow.lambda_d", "weight of both data terms", solver.flow.lambda_d),
      RF_KEY("flow.lambda_s", "weight of the flow smoothness term", solver.flow.lambda_s),
      RF_KEY("flow.scale_factor", "pyramid downsampling ratio, in [0.5, 0.95]", solver.flow.scale_factor),
      RF_KEY("flow.pyramid_min_size", "smallest pyramid level side, pixels (>= 8)", solver.flow.pyramid_min_size),
      RF_KEY("flow.warp_iterations", "linearise-and-solve cycles per pyramid level", solver.flow.warp_iterations),
      RF_KEY("flow.gnc_levels", "graduated non-convexity stages", solver.flow.gnc_levels),
      RF_KEY("flow.gnc_pyramid_levels", "finest levels revisited by GNC stages after the first",
             solver.flow.gnc_pyramid_levels),
      RF_KEY("flow.warm_refine", "warm-started solves run only the last GNC stage on the finest levels",
             solver.flow.warm_refine),
      RF_KEY("flow.penalty", "quadratic or charbonnier", solver.flow.penalty),
      RF_KEY("flow.penalty_exponent", "generalised Charbonnier exponent a", solver.flow.penalty_exponent),
      RF_KEY("flow.penalty_epsilon", "generalised Charbonnier epsilon", solver.flow.penalty_epsilon),
      RF_KEY("flow.derivative_blend", "share of the warped frame-2 derivative in the linearisation",
             solver.flow.derivative_blend),
      RF_KEY("flow.cg_tolerance", "relative residual at which the increment solve stops", solver.flow.cg_tolerance),
      RF_KEY("flow.cg_max_iterations", "iteration cap of the increment solve", solver.flow.cg_max_iterations),
      RF_KEY("flow.preconditioner", "ilu or block_jacobi", solver.flow.preconditioner),
      RF_KEY("flow.median_radius", "median filter radius after each warp, 0 disables", solver.flow.median_radius),
      RF_KEY("flow.max_increment", "per-warp clamp on each flow component, pixels", solver.flow.max_increment),
      RF_KEY("l0.beta", "weight of the gradient-count term", solver.l0.beta),
      RF_KEY("l0.alpha", "fidelity of each layer to its frame", solver.l0.alpha),
      RF_KEY("l0.lambda_d", "coupling of each layer to the other, warped layer", solver.l0.lambda_d),
      RF_KEY("l0.aux_init", "first splitting penalty, <= 0 selects 2 * beta", solver.l0.aux_init),
      RF_KEY("l0.aux_growth", "splitting penalty multiplier (> 1)", solver.l0.aux_growth),
      RF_KEY("l0.aux_max", "splitting penalty at which the ladder stops", solver.l0.aux_max),
      RF_KEY("l0.preconditioner", "dct or jacobi", solver.l0.preconditioner),
      RF_KEY("l0.cg_tolerance", "relative residual of the layer solve", solver.l0.cg_tolerance),
      RF_KEY("l0.cg_max_iterations", "iteration cap of the layer solve", solver.l0.cg_max_iterations),
      RF_KEY("l0.polish", "exact refit on the final edge support plus greedy edge removal", solver.l0.polish),
      RF_KEY("pipeline.gamma", "scale of the chroma weight map", solver.gamma),
      RF_KEY("pipeline.max_iterations", "outer alternations after the initial flow", solver.max_iterations),
      RF_KEY("pipeline.energy_tolerance", "stop when the relative energy decrease falls below this",
             solver.energy_tolerance),
      RF_KEY("pipeline.use_residue", "enable the residue data term", solver.use_residue),
      RF_KEY("pipeline.use_decomposition", "enable the layer updates", solver.use_decomposition),
      RF_KEY("pipeline.layer_update", "jacobi, gauss_seidel or midpoint", solver.layer_update),
      RF_KEY("pipeline.robust_coupling", "reweight the layer coupling by the robust flow penalty",
             solver.robust_coupling),
      RF_KEY("pipeline.monotone", "stop instead of accepting an outer iteration that raises the energy",
             solver.monotone),
      RF_KEY("rain.tau_min", "lower bound of the streak strength", rain.tau_min),
      RF_KEY("rain.tau_max", "upper bound of the streak strength", rain.tau_max),
      RF_KEY("rain.angle_min_deg", "lower bound of the streak angle from vertical", rain.angle_min_deg),
      RF_KEY("rain.angle_max_deg", "upper bound of the streak angle from vertical", rain.angle_max_deg),
      RF_KEY("rain.streak_density", "streaks per megapixel", rain.streak_density),
      RF_KEY("rain.streak_length", "mean streak length, pixels", rain.streak_length),
      RF_KEY("rain.length_jitter", "half-width of the uniform length spread, pixels", rain.length_jitter),
      RF_KEY("rain.streak_width", "streak width, pixels", rain.streak_width),
      RF_KEY("rain.rain_radiance", "streak radiance, the same on every channel", rain.rain_radiance),
      RF_KEY("rain.accumulation", "veil ratio A in [0, 1)", rain.accumulation),
      RF_KEY("rain.airlight", "veil radiance", rain.airlight),
      RF_KEY("rain.seed", "random seed", rain.seed),
      RF_KEY("bench.border", "pixels excluded at each frame edge when scoring", bench_border),
  };
  return table;
}

#undef RF_KEY

const Entry& find_entry(const std::string& key) {
  for (const Entry& e : entries()) {
    if (e.name == key) return e;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    const Config defaults;
    for (const Entry& e : entries()) out.push_back({e.name, e.description, e.get(defaults)});
    return out;
  }();
  return keys;
}

void set_config_value(Config& cfg, const std::string& key, const std::string& value) {
  const Entry& e = find_entry(key);
  try {
    e.set(cfg, value);
  } catch (const ConfigError& err) {
    throw ConfigError(key + ": " + err.what());
  }
}

std::string get_config_value(const Config& cfg, const std::string& key) {
  return find_entry(key).get(cfg);
}

void apply_override(Config& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  set_config_value(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

Config parse_config(const std::string& text, Config base) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      apply_override(base, line);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

Config read_config(const std::string& path, Config base) {
  const auto bytes = read_file(path);
  try {
    return parse_config(std::string(bytes.begin(), bytes.end()), std::move(base));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string serialize_config(const Config& cfg) {
  std::string out;
  for (const Entry& e : entries()) out += e.name + " = " + e.get(cfg) + "\n";
  return out;
}

}  // namespace rainflow
