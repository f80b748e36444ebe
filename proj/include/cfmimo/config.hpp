#pragma once

// Scenario description and its flat "key = value" file format.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>

#include "cfmimo/errors.hpp"

namespace cfmimo {

enum class Scheme { kMrt, kFzf };

/// How the receiver noise enters IN. kUnitPower adds its expected power 1;
/// kSampledPower adds a per-realization draw of |z|^2 with z ~ CN(0, 1).
enum class NoiseModel { kUnitPower, kSampledPower };

inline std::string to_string(Scheme s) { return s == Scheme::kMrt ? "mrt" : "fzf"; }
inline std::string to_string(NoiseModel n) {
  return n == NoiseModel::kUnitPower ? "unit" : "sampled";
}

struct SystemConfig {
  int M = 120;  // access points
  int K = 20;   // users
  int N = 2;    // antennas per AP
  int l_p = 10; // pilot length
  double pilot_power_dbm = 20.0;
  double downlink_power_dbm = 23.0;
  double bandwidth_hz = 2e6;
  double noise_density_dbm_hz = -174.0;
  double noise_figure_db = 9.0;
  double shadow_sigma_db = 8.0;
  std::pair<double, double> area_m{1000.0, 1000.0};
  int realizations = 10'000;
  std::uint64_t seed = 1;
  Scheme scheme = Scheme::kMrt;
  std::optional<int> focus_user;
  NoiseModel noise_model = NoiseModel::kUnitPower;

  /// Thermal noise plus noise figure over the bandwidth, in dBm.
  double noise_power_dbm() const {
    return noise_density_dbm_hz + 10.0 * std::log10(bandwidth_hz) + noise_figure_db;
  }
  /// Transmit powers in mW; large-scale gains are divided by the noise power
  /// instead, so rho * beta is the received SNR.
  double rho_p() const { return std::pow(10.0, pilot_power_dbm / 10.0); }
  double rho_d() const { return std::pow(10.0, downlink_power_dbm / 10.0); }

  /// Throws ConfigError naming the first offending field.
  void validate() const {
    if (M < 1) throw ConfigError("M", "need at least one access point");
    if (K < 1) throw ConfigError("K", "need at least one user");
    if (N < 1) throw ConfigError("N", "need at least one antenna per AP");
    if (l_p < 1) throw ConfigError("l_p", "pilot length must be >= 1");
    if (l_p > K) throw ConfigError("l_p", "pilot length must not exceed K");
    if (scheme == Scheme::kFzf && N < l_p + 1) {
      throw ConfigError("N", "FZF precoding needs N >= l_p + 1");
    }
    if (!(bandwidth_hz > 0.0)) throw ConfigError("bandwidth_hz", "must be positive");
    if (!(shadow_sigma_db >= 0.0)) throw ConfigError("shadow_sigma_db", "must be >= 0");
    if (!(area_m.first > 0.0) || !(area_m.second > 0.0)) {
      throw ConfigError("area_m", "both sides must be positive");
    }
    if (realizations < 1) throw ConfigError("realizations", "must be >= 1");
    if (focus_user && (*focus_user < 0 || *focus_user >= K)) {
      throw ConfigError("focus_user", "must be in [0, K)");
    }
    for (double v : {pilot_power_dbm, downlink_power_dbm, noise_density_dbm_hz, noise_figure_db}) {
      if (!std::isfinite(v)) throw ConfigError("power", "power levels must be finite");
    }
  }
};

/// Reference deployments: the defaults with MRT, and N = 11 with FZF.
inline SystemConfig reference_mrt_config() { return SystemConfig{}; }
inline SystemConfig reference_fzf_config() {
  SystemConfig cfg;
  cfg.N = 11;
  cfg.scheme = Scheme::kFzf;
  return cfg;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(const std::string& key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(key, "cannot parse '" + std::string(text) + "' as a number");
  }
  return value;
}

}  // namespace detail

/// Parses the scenario format: one "key = value" per line, '#' starts a
/// comment. Every key must be a SystemConfig field; unknown or repeated keys
/// are errors. Omitted keys keep their defaults.
inline SystemConfig parse_scenario(std::string_view text) {
  SystemConfig cfg;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.npos : eol - pos);
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
    }
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(key, "duplicate key");
    if (value.empty()) throw ConfigError(key, "missing value");

    using detail::parse_number;
    if (key == "M") cfg.M = parse_number<int>(key, value);
    else if (key == "K") cfg.K = parse_number<int>(key, value);
    else if (key == "N") cfg.N = parse_number<int>(key, value);
    else if (key == "l_p") cfg.l_p = parse_number<int>(key, value);
    else if (key == "pilot_power_dbm") cfg.pilot_power_dbm = parse_number<double>(key, value);
    else if (key == "downlink_power_dbm") cfg.downlink_power_dbm = parse_number<double>(key, value);
    else if (key == "bandwidth_hz") cfg.bandwidth_hz = parse_number<double>(key, value);
    else if (key == "noise_density_dbm_hz") cfg.noise_density_dbm_hz = parse_number<double>(key, value);
    else if (key == "noise_figure_db") cfg.noise_figure_db = parse_number<double>(key, value);
    else if (key == "shadow_sigma_db") cfg.shadow_sigma_db = parse_number<double>(key, value);
    else if (key == "realizations") cfg.realizations = parse_number<int>(key, value);
    else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "area_m") {
      const auto split = value.find_first_of(" \tx,");
      if (split == std::string_view::npos) throw ConfigError(key, "expected 'width height'");
      cfg.area_m.first = parse_number<double>(key, detail::trim(value.substr(0, split)));
      cfg.area_m.second = parse_number<double>(key, detail::trim(value.substr(split + 1)));
    } else if (key == "scheme") {
      if (value == "mrt" || value == "MRT") cfg.scheme = Scheme::kMrt;
      else if (value == "fzf" || value == "FZF") cfg.scheme = Scheme::kFzf;
      else throw ConfigError(key, "expected 'mrt' or 'fzf'");
    } else if (key == "focus_user") {
      if (value == "auto") cfg.focus_user.reset();
      else cfg.focus_user = parse_number<int>(key, value);
    } else if (key == "noise_model") {
      if (value == "unit") cfg.noise_model = NoiseModel::kUnitPower;
      else if (value == "sampled") cfg.noise_model = NoiseModel::kSampledPower;
      else throw ConfigError(key, "expected 'unit' or 'sampled'");
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
  cfg.validate();
  return cfg;
}

inline SystemConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("scenario", "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace cfmimo
