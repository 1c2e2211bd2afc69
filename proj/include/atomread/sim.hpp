#pragma once

// Seeded Monte Carlo generation of time-tagged readout trials. The bright
// generator realizes exactly the stochastic process behind the counting
// model (Poisson arrivals at the detected rate until an exponential leak
// time, background-only arrivals afterwards), making simulated datasets an
// independent check of the analytic distributions.
//
// Trial timestamps are in microseconds relative to readout start; rates in
// the configs are in counts/s.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "atomread/counting.hpp"
#include "atomread/rng.hpp"

namespace atomread {

enum class PrepState : std::uint8_t { bright, dark };

inline const char* to_string(PrepState s) {
  return s == PrepState::bright ? "bright" : "dark";
}

inline PrepState prep_state_from_string(const std::string& s) {
  if (s == "bright") return PrepState::bright;
  if (s == "dark") return PrepState::dark;
  throw std::invalid_argument("unknown preparation state: " + s);
}

/// One readout experiment: preparation label, photon arrival times, and
/// trap retention flags before/after the readout pulse.
struct TrialRecord {
  std::uint64_t trial_id = 0;
  PrepState prep_state = PrepState::bright;
  std::vector<double> timestamps_us;  // ascending, within [0, duration]
  bool retained_before = true;
  bool retained_after = true;

  long long count() const noexcept {
    return static_cast<long long>(timestamps_us.size());
  }

  void validate(double duration_us) const {
    double prev = 0.0;
    for (double ts : timestamps_us) {
      if (!(ts >= 0.0) || ts > duration_us) {
        throw DataError("trial " + std::to_string(trial_id) +
                        ": timestamp outside readout window");
      }
      if (ts < prev) {
        throw DataError("trial " + std::to_string(trial_id) +
                        ": timestamps not sorted ascending");
      }
      prev = ts;
    }
  }
};

struct SimConfig {
  BrightModel bright_model;
  double dark_background = 0.0;       // counts/s seen for dark-prepared trials
  double readout_duration_us = 200.0;
  std::uint64_t n_bright_trials = 0;
  std::uint64_t n_dark_trials = 0;
  double retention_probability = 0.971;
  double prep_error = 0.0;  // probability a prepared trial is actually the other state
  std::uint64_t seed = 0;

  void validate() const {
    bright_model.validate();
    if (!(readout_duration_us > 0.0)) {
      throw std::domain_error("SimConfig: readout_duration_us must be > 0");
    }
    if (!(dark_background >= 0.0)) {
      throw std::domain_error("SimConfig: dark_background must be >= 0");
    }
    if (retention_probability < 0.0 || retention_probability > 1.0 ||
        prep_error < 0.0 || prep_error > 1.0) {
      throw std::domain_error("SimConfig: probabilities must be in [0, 1]");
    }
  }
};

namespace detail {

/// Appends homogeneous Poisson arrivals on [start, stop) via exponential
/// inter-arrival gaps: exact, streaming, O(counts).
inline void append_arrivals(double rate_per_s, double start_us, double stop_us,
                            RandomStream& stream,
                            std::vector<double>& out_us) {
  if (rate_per_s <= 0.0 || start_us >= stop_us) return;
  const double rate_per_us = rate_per_s * 1e-6;
  double t = start_us;
  for (;;) {
    t += stream.exponential(rate_per_us);
    if (t >= stop_us) break;
    out_us.push_back(t);
  }
}

}  // namespace detail

/// Simulates one bright-prepared trial: arrivals at the detected rate until
/// the leak time (exponential in r_loss), then background-only arrivals.
/// Draw order is fixed: leak time, first-phase arrivals, second-phase
/// arrivals. The caller assigns trial_id and retention flags.
inline TrialRecord simulate_bright_trial(const BrightModel& model,
                                         double duration_us,
                                         RandomStream& stream) {
  model.validate();
  TrialRecord rec;
  rec.prep_state = PrepState::bright;

  const double leak_us =
      stream.exponential(model.r_loss * 1e-6);  // +inf when r_loss == 0
  const double switch_us = std::min(leak_us, duration_us);

  detail::append_arrivals(model.detected_rate(), 0.0, switch_us, stream,
                          rec.timestamps_us);
  if (switch_us < duration_us) {
    // resume background scan from the leak time; fresh exponential gap is
    // exact because the background process is memoryless
    detail::append_arrivals(model.r_bg, switch_us, duration_us, stream,
                            rec.timestamps_us);
  }
  return rec;
}

/// Simulates one dark-prepared trial: background-only Poisson arrivals.
inline TrialRecord simulate_dark_trial(double r_bg, double duration_us,
                                       RandomStream& stream) {
  if (!(r_bg >= 0.0)) throw std::domain_error("simulate_dark_trial: r_bg >= 0");
  TrialRecord rec;
  rec.prep_state = PrepState::dark;
  detail::append_arrivals(r_bg, 0.0, duration_us, stream, rec.timestamps_us);
  return rec;
}

/// Generates the trial with the given id under a dataset config. Bright
/// trials occupy ids [0, n_bright), dark trials follow. Pure function of
/// (config, trial_id): per-trial substreams make generation order and
/// parallelism irrelevant.
inline TrialRecord simulate_trial(const SimConfig& config,
                                  std::uint64_t trial_id) {
  RandomStream stream = RandomStream::substream(config.seed, trial_id);
  const bool prepared_bright = trial_id < config.n_bright_trials;

  // draw order per trial: prep flip, leak/arrivals, retention
  const bool flipped =
      config.prep_error > 0.0 && stream.bernoulli(config.prep_error);
  const bool actually_bright = prepared_bright != flipped;

  TrialRecord rec =
      actually_bright
          ? simulate_bright_trial(config.bright_model,
                                  config.readout_duration_us, stream)
          : simulate_dark_trial(config.dark_background,
                                config.readout_duration_us, stream);
  rec.trial_id = trial_id;
  rec.prep_state = prepared_bright ? PrepState::bright : PrepState::dark;
  rec.retained_before = true;
  rec.retained_after = stream.bernoulli(config.retention_probability);
  return rec;
}

/// Generates the full dataset. With n_threads > 1 the id range is chunked
/// across threads into a preallocated vector; output is identical to the
/// sequential result.
inline std::vector<TrialRecord> simulate_dataset(const SimConfig& config,
                                                 unsigned n_threads = 1) {
  config.validate();
  const std::uint64_t total = config.n_bright_trials + config.n_dark_trials;
  std::vector<TrialRecord> records(total);
  if (total == 0) return records;

  if (n_threads <= 1) {
    for (std::uint64_t id = 0; id < total; ++id) {
      records[id] = simulate_trial(config, id);
    }
    return records;
  }

  std::vector<std::thread> workers;
  const std::uint64_t chunk = (total + n_threads - 1) / n_threads;
  for (unsigned w = 0; w < n_threads; ++w) {
    const std::uint64_t lo = static_cast<std::uint64_t>(w) * chunk;
    const std::uint64_t hi = std::min(total, lo + chunk);
    if (lo >= hi) break;
    workers.emplace_back([&records, &config, lo, hi] {
      for (std::uint64_t id = lo; id < hi; ++id) {
        records[id] = simulate_trial(config, id);
      }
    });
  }
  for (auto& w : workers) w.join();
  return records;
}

}  // namespace atomread
