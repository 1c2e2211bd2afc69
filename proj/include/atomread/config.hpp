#pragma once

// Flat key-value configuration files with dotted section keys:
//
//   # comment
//   sim.eta_r0_kcps = 39.4
//   analysis.thresholds = 1,2,3
//
// Physical quantities carry their unit in the key suffix (_us, _kcps, _mhz).
// Parsing is strict: every diagnostic names the file, line, and key, and
// unknown keys are rejected so typos cannot silently fall back to defaults.

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "atomread/errors.hpp"
#include "atomread/io_util.hpp"
#include "atomread/levels.hpp"
#include "atomread/sim.hpp"

namespace atomread {

inline constexpr const char* kConstantsEnvVar = "ATOMREAD_CONSTANTS";

class KeyValueConfig {
public:
  static KeyValueConfig parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str(), path.string());
  }

  static KeyValueConfig parse_text(const std::string& text,
                                   std::string source = "<inline>") {
    KeyValueConfig cfg;
    cfg.source_ = std::move(source);
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string stripped = strip(line);
      if (stripped.empty() || stripped[0] == '#') continue;
      const auto eq = stripped.find('=');
      if (eq == std::string::npos) {
        throw DataError(cfg.source_ + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
      }
      const std::string key = strip(stripped.substr(0, eq));
      const std::string value = strip(stripped.substr(eq + 1));
      if (key.empty()) {
        throw DataError(cfg.source_ + ":" + std::to_string(line_no) +
                        ": empty key");
      }
      if (cfg.entries_.count(key) != 0) {
        throw DataError(cfg.source_ + ":" + std::to_string(line_no) +
                        ": duplicate key '" + key + "'");
      }
      cfg.entries_[key] = {value, line_no, false};
    }
    return cfg;
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  std::string get_string(const std::string& key,
                         const std::string& fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    it->second.consumed = true;
    return it->second.value;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    it->second.consumed = true;
    return parse_double(it->second.value, key, it->second.line);
  }

  long long get_int(const std::string& key, long long fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    it->second.consumed = true;
    long long v = 0;
    const std::string& s = it->second.value;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      located_error(key, it->second.line, "expected an integer, got '" + s + "'");
    }
    return v;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    it->second.consumed = true;
    const std::string& s = it->second.value;
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    located_error(key, it->second.line,
                  "expected true/false/1/0, got '" + s + "'");
    return fallback;
  }

  std::vector<long long> get_int_list(const std::string& key,
                                      std::vector<long long> fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    it->second.consumed = true;
    std::vector<long long> out;
    std::istringstream ss(it->second.value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = strip(item);
      long long v = 0;
      auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc() || p != item.data() + item.size()) {
        located_error(key, it->second.line,
                      "expected a comma-separated integer list");
      }
      out.push_back(v);
    }
    if (out.empty()) {
      located_error(key, it->second.line, "expected a non-empty list");
    }
    return out;
  }

  /// Errors out if any key was never consumed by a getter.
  void reject_unknown() const {
    for (const auto& [key, entry] : entries_) {
      if (!entry.consumed) {
        throw DataError(source_ + ":" + std::to_string(entry.line) +
                        ": unknown key '" + key + "'");
      }
    }
  }

  /// Canonical serialization (sorted keys) for fingerprinting outputs.
  std::string canonical_text() const {
    std::string out;
    for (const auto& [key, entry] : entries_) {
      out += key;
      out += '=';
      out += entry.value;
      out += '\n';
    }
    return out;
  }

  std::string fingerprint() const { return to_hex(fnv1a64(canonical_text())); }

  const std::string& source() const { return source_; }

private:
  struct Entry {
    std::string value;
    std::size_t line = 0;
    mutable bool consumed = false;
  };

  static std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  double parse_double(const std::string& s, const std::string& key,
                      std::size_t line) const {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      located_error(key, line, "expected a number, got '" + s + "'");
    }
    return v;
  }

  [[noreturn]] void located_error(const std::string& key, std::size_t line,
                                  const std::string& what) const {
    throw DataError(source_ + ":" + std::to_string(line) + ": key '" + key +
                    "': " + what);
  }

  std::string source_;
  std::map<std::string, Entry> entries_;
};

// ============================================================================
// Level-scheme constants file
// ============================================================================

/// Applies a constants/overrides config onto a LevelScheme. Accepts the
/// atomic constants (linewidth, hyperfine splittings) and the trap shifts.
inline void apply_level_keys(const KeyValueConfig& cfg, const std::string& section,
                             LevelScheme& scheme) {
  const auto k = [&section](const char* name) { return section + "." + name; };
  scheme.natural_linewidth_mhz =
      cfg.get_double(k("natural_linewidth_mhz"), scheme.natural_linewidth_mhz);
  scheme.ground_hyperfine_mhz =
      cfg.get_double(k("ground_hyperfine_mhz"), scheme.ground_hyperfine_mhz);
  scheme.excited_f3_f2_mhz =
      cfg.get_double(k("excited_f3_f2_mhz"), scheme.excited_f3_f2_mhz);
  scheme.excited_f2_f1_mhz =
      cfg.get_double(k("excited_f2_f1_mhz"), scheme.excited_f2_f1_mhz);
  scheme.excited_f1_f0_mhz =
      cfg.get_double(k("excited_f1_f0_mhz"), scheme.excited_f1_f0_mhz);
  scheme.delta_g_mhz = cfg.get_double(k("delta_g_mhz"), scheme.delta_g_mhz);
  for (int m = 0; m <= 3; ++m) {
    const std::string key = k("delta_e3_m") + std::to_string(m) + "_mhz";
    scheme.delta_e3_mhz[static_cast<std::size_t>(m)] =
        cfg.get_double(key, scheme.delta_e3_mhz[static_cast<std::size_t>(m)]);
  }
  for (int m = 0; m <= 2; ++m) {
    const std::string key = k("delta_e2_m") + std::to_string(m) + "_mhz";
    scheme.delta_e2_mhz[static_cast<std::size_t>(m)] =
        cfg.get_double(key, scheme.delta_e2_mhz[static_cast<std::size_t>(m)]);
  }
  for (int m = 0; m <= 1; ++m) {
    const std::string key = k("delta_e1_m") + std::to_string(m) + "_mhz";
    scheme.delta_e1_mhz[static_cast<std::size_t>(m)] =
        cfg.get_double(key, scheme.delta_e1_mhz[static_cast<std::size_t>(m)]);
  }
  scheme.delta_e0_mhz = cfg.get_double(k("delta_e0_mhz"), scheme.delta_e0_mhz);
}

/// Loads a constants file ("atom.*" and "trap.*" keys) onto the default
/// scheme. The ATOMREAD_CONSTANTS environment variable supplies the default
/// path when none is given.
inline LevelScheme load_level_scheme(const std::filesystem::path& path) {
  const KeyValueConfig cfg = KeyValueConfig::parse_file(path);
  LevelScheme scheme;
  cfg.get_string("version", "");  // informational
  apply_level_keys(cfg, "atom", scheme);
  apply_level_keys(cfg, "trap", scheme);
  cfg.reject_unknown();
  return scheme;
}

inline LevelScheme default_level_scheme() {
  if (const char* env = std::getenv(kConstantsEnvVar); env != nullptr && *env) {
    return load_level_scheme(env);
  }
  return LevelScheme{};
}

// ============================================================================
// Run configuration
// ============================================================================

/// Full pipeline configuration: simulation, analysis, fit, probe/levels, and
/// output options. Rates appear in kcps in files and are converted to
/// counts/s here.
struct RunConfig {
  SimConfig sim;
  std::vector<long long> thresholds{1, 2, 3};
  double bin_width_us = 1.0;
  bool post_select = true;
  double fit_r_bg = 0.0;       // counts/s
  long long fit_n_thresh = 1;
  double fit_eta = 1.0;
  int bootstrap_replicates = 100;
  ProbeSpec probe;
  LevelScheme scheme;
  double spectrum_duration_us = 200.0;
  std::filesystem::path output_dir = ".";
  std::string fingerprint;

  static RunConfig from_file(const std::filesystem::path& path) {
    const KeyValueConfig cfg = KeyValueConfig::parse_file(path);
    RunConfig rc;
    rc.fingerprint = cfg.fingerprint();

    const double eta = cfg.get_double("sim.eta", 1.0);
    const double eta_r0 =
        cfg.get_double("sim.eta_r0_kcps", 39.4) * 1e3;
    const double r_bg = cfg.get_double("sim.r_bg_kcps", 1.05) * 1e3;
    const double r_loss = cfg.get_double("sim.r_loss_kcps", 1.31) * 1e3;
    rc.sim.bright_model = BrightModel::from_eta_r0(eta_r0, r_bg, r_loss, eta);
    rc.sim.dark_background =
        cfg.get_double("sim.dark_background_kcps", r_bg / 1e3) * 1e3;
    rc.sim.readout_duration_us =
        cfg.get_double("sim.readout_duration_us", 200.0);
    rc.sim.n_bright_trials = static_cast<std::uint64_t>(
        cfg.get_int("sim.n_bright_trials", 0));
    rc.sim.n_dark_trials =
        static_cast<std::uint64_t>(cfg.get_int("sim.n_dark_trials", 0));
    rc.sim.retention_probability =
        cfg.get_double("sim.retention_probability", 0.971);
    rc.sim.prep_error = cfg.get_double("sim.prep_error", 0.0);
    rc.sim.seed = static_cast<std::uint64_t>(cfg.get_int("sim.seed", 0));
    rc.sim.validate();

    rc.thresholds = cfg.get_int_list("analysis.thresholds", rc.thresholds);
    rc.bin_width_us = cfg.get_double("analysis.bin_width_us", 1.0);
    rc.post_select = cfg.get_bool("analysis.post_select", true);

    rc.fit_r_bg = cfg.get_double("fit.r_bg_kcps", r_bg / 1e3) * 1e3;
    rc.fit_n_thresh = cfg.get_int("fit.n_thresh", 1);
    rc.fit_eta = cfg.get_double("fit.eta", eta);
    rc.bootstrap_replicates =
        static_cast<int>(cfg.get_int("fit.bootstrap_replicates", 100));

    rc.probe.detuning_mhz = cfg.get_double("probe.detuning_mhz", 40.0);
    rc.probe.saturation = cfg.get_double("probe.saturation", 4.0);
    rc.spectrum_duration_us =
        cfg.get_double("spectrum.duration_us", rc.sim.readout_duration_us);

    rc.scheme = default_level_scheme();
    apply_level_keys(cfg, "levels", rc.scheme);

    rc.output_dir = cfg.get_string("output.dir", ".");

    cfg.reject_unknown();
    return rc;
  }
};

}  // namespace atomread
