#pragma once

// Scenario parameters and the plain-text key/value config format.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace isac {

enum class ShadowingModel { kCorrelated, kUncorrelated, kNone };

/// Power scheme used to score candidate moves inside greedy mode selection.
enum class GreedyPower { kNoPowerControl, kOptimized };

struct TargetLocation {
  double x_km = 0.25;
  double y_km = 0.25;
  double height_m = 0.0;
};

/// All scenario parameters. Powers are normalized by the noise power.
struct SystemConfig {
  int num_aps = 20;
  int antennas_per_ap = 3;
  int num_users = 3;
  double area_side_km = 0.5;

  int coherence_symbols = 200;
  int pilot_symbols = 3;

  // 1 W and 0.25 W over a -108 dBm noise floor.
  double max_power = 1.0 / std::pow(10.0, -13.8);
  double pilot_power = 0.25 / std::pow(10.0, -13.8);

  double shadowing_std_db = 8.0;
  double breakpoint0_km = 0.01;
  double breakpoint1_km = 0.05;
  double path_loss_offset_db = 140.72;
  ShadowingModel shadowing = ShadowingModel::kCorrelated;
  double shadow_ap_weight = 0.5;
  double shadow_decorrelation_km = 0.1;

  double masr_target = 10.0;
  double antenna_spacing = 0.5;  // in wavelengths
  TargetLocation target;
  double ap_height_m = 15.0;
  double user_height_m = 1.65;

  std::uint64_t seed = 1;

  double bisection_tolerance = 1e-3;  // relative to the initial bracket
  double greedy_min_gain = 1e-3;     // relative min-SINR gain
  double ao_tolerance = 1e-4;         // relative min-SINR improvement
  int ao_max_iterations = 20;
  double solver_tolerance = 1e-8;
  int solver_max_iterations = 100000;
  GreedyPower greedy_power = GreedyPower::kNoPowerControl;
  // Per-AP power constraint in the communication subproblem without the
  // estimation-variance weights, exactly as printed.
  bool literal_per_ap_constraint = false;

  double training_overhead() const {
    return 1.0 - static_cast<double>(pilot_symbols) / coherence_symbols;
  }

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw std::invalid_argument(std::string("invalid config: ") + what);
    };
    require(num_aps >= 1, "M must be >= 1");
    require(antennas_per_ap >= 1, "N must be >= 1");
    require(num_users >= 1, "K_d must be >= 1");
    require(area_side_km > 0.0, "D_km must be positive");
    require(pilot_symbols >= num_users, "tau_t must be >= K_d");
    require(coherence_symbols > pilot_symbols, "tau must exceed tau_t");
    require(breakpoint0_km > 0.0 && breakpoint0_km < breakpoint1_km &&
                breakpoint1_km < area_side_km,
            "need 0 < d0_km < d1_km < D_km");
    require(max_power > 0.0, "rho must be positive");
    require(pilot_power > 0.0, "rho_t must be positive");
    require(shadowing_std_db >= 0.0, "sigma_sh_dB must be non-negative");
    require(shadow_ap_weight >= 0.0 && shadow_ap_weight <= 1.0,
            "shadow_delta must lie in [0, 1]");
    require(shadow_decorrelation_km > 0.0, "shadow_decorr_km must be positive");
    require(masr_target >= 0.0, "kappa must be non-negative");
    require(antenna_spacing > 0.0, "antenna_spacing_over_lambda must be positive");
    require(bisection_tolerance > 0.0, "epsilon_bisection must be positive");
    require(greedy_min_gain > 0.0, "e_min_greedy must be positive");
    require(ao_tolerance > 0.0, "ao_tolerance must be positive");
    require(ao_max_iterations >= 1, "ao_max_iterations must be >= 1");
    require(solver_tolerance > 0.0, "solver_tolerance must be positive");
    require(solver_max_iterations >= 1, "solver_max_iterations must be >= 1");
  }
};

/// The large reference scenario: M=80, N=3, K_d=5.
inline SystemConfig paper_scale(SystemConfig cfg) {
  cfg.num_aps = 80;
  cfg.antennas_per_ap = 3;
  cfg.num_users = 5;
  cfg.pilot_symbols = 5;
  return cfg;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size()) throw std::invalid_argument("config key '" + key + "': not a number: " + v);
  return out;
}

inline long long to_integer(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size()) throw std::invalid_argument("config key '" + key + "': not an integer: " + v);
  return out;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config key '" + key + "': not a boolean: " + v);
}

}  // namespace detail

/// Parses `key = value` lines; `#` starts a comment. Unknown keys are an
/// error. When tau_t is absent it defaults to K_d. The result is validated.
inline SystemConfig parse_config(std::istream& in, SystemConfig cfg = {}) {
  using namespace detail;
  std::map<std::string, std::string> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    }
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key or value");
    }
    entries[key] = value;
  }

  for (const auto& [key, v] : entries) {
    if (key == "M") cfg.num_aps = static_cast<int>(to_integer(key, v));
    else if (key == "N") cfg.antennas_per_ap = static_cast<int>(to_integer(key, v));
    else if (key == "K_d") cfg.num_users = static_cast<int>(to_integer(key, v));
    else if (key == "D_km") cfg.area_side_km = to_double(key, v);
    else if (key == "tau") cfg.coherence_symbols = static_cast<int>(to_integer(key, v));
    else if (key == "tau_t") cfg.pilot_symbols = static_cast<int>(to_integer(key, v));
    else if (key == "rho") cfg.max_power = to_double(key, v);
    else if (key == "rho_t") cfg.pilot_power = to_double(key, v);
    else if (key == "sigma_sh_dB") cfg.shadowing_std_db = to_double(key, v);
    else if (key == "d0_km") cfg.breakpoint0_km = to_double(key, v);
    else if (key == "d1_km") cfg.breakpoint1_km = to_double(key, v);
    else if (key == "L_dB") cfg.path_loss_offset_db = to_double(key, v);
    else if (key == "shadowing") {
      if (v == "correlated") cfg.shadowing = ShadowingModel::kCorrelated;
      else if (v == "uncorrelated") cfg.shadowing = ShadowingModel::kUncorrelated;
      else if (v == "none") cfg.shadowing = ShadowingModel::kNone;
      else throw std::invalid_argument("config key 'shadowing': expected correlated|uncorrelated|none");
    } else if (key == "shadow_delta") cfg.shadow_ap_weight = to_double(key, v);
    else if (key == "shadow_decorr_km") cfg.shadow_decorrelation_km = to_double(key, v);
    else if (key == "kappa") cfg.masr_target = to_double(key, v);
    else if (key == "antenna_spacing_over_lambda") cfg.antenna_spacing = to_double(key, v);
    else if (key == "target_x_km") cfg.target.x_km = to_double(key, v);
    else if (key == "target_y_km") cfg.target.y_km = to_double(key, v);
    else if (key == "target_height_m") cfg.target.height_m = to_double(key, v);
    else if (key == "ap_height_m") cfg.ap_height_m = to_double(key, v);
    else if (key == "user_height_m") cfg.user_height_m = to_double(key, v);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_integer(key, v));
    else if (key == "epsilon_bisection") cfg.bisection_tolerance = to_double(key, v);
    else if (key == "e_min_greedy") cfg.greedy_min_gain = to_double(key, v);
    else if (key == "ao_tolerance") cfg.ao_tolerance = to_double(key, v);
    else if (key == "ao_max_iterations") cfg.ao_max_iterations = static_cast<int>(to_integer(key, v));
    else if (key == "solver_tolerance") cfg.solver_tolerance = to_double(key, v);
    else if (key == "solver_max_iterations") cfg.solver_max_iterations = static_cast<int>(to_integer(key, v));
    else if (key == "greedy_power") {
      if (v == "npc") cfg.greedy_power = GreedyPower::kNoPowerControl;
      else if (v == "opc") cfg.greedy_power = GreedyPower::kOptimized;
      else throw std::invalid_argument("config key 'greedy_power': expected npc|opc");
    } else if (key == "literal_per_ap_constraint") cfg.literal_per_ap_constraint = to_bool(key, v);
    else throw std::invalid_argument("unknown config key '" + key + "'");
  }
  if (!entries.count("tau_t") && entries.count("K_d")) cfg.pilot_symbols = cfg.num_users;

  cfg.validate();
  return cfg;
}

inline SystemConfig parse_config_string(const std::string& text, SystemConfig cfg = {}) {
  std::istringstream in(text);
  return parse_config(in, cfg);
}

inline SystemConfig load_config(const std::string& path, SystemConfig cfg = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  return parse_config(in, cfg);
}

}  // namespace isac
