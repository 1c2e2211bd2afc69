#pragma once

// Time-resolved threshold analysis of trial collections: cumulative counts
// per time bin, bright/dark error proportions per threshold, fidelity curves
// with Wilson 95% intervals, operating-point search, retention statistics,
// and count histograms at a chosen readout time.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "atomread/errors.hpp"
#include "atomread/math.hpp"
#include "atomread/sim.hpp"

namespace atomread {

// ============================================================================
// Cumulative counts
// ============================================================================

/// c[j] = number of timestamps <= j * bin_width_us, for j = 0..n_bins where
/// n_bins = floor(horizon / bin_width). Bins are right-closed. Non-decreasing
/// by construction; throws DataError on unsorted input.
inline std::vector<long long> cumulative_counts(const TrialRecord& trial,
                                                double bin_width_us,
                                                double horizon_us) {
  if (!(bin_width_us > 0.0) || !(horizon_us >= 0.0)) {
    throw std::domain_error("cumulative_counts: need bin_width > 0, horizon >= 0");
  }
  const auto n_bins =
      static_cast<std::size_t>(std::floor(horizon_us / bin_width_us + 1e-9));
  std::vector<long long> c(n_bins + 1, 0);

  double prev = -1.0;
  for (double ts : trial.timestamps_us) {
    if (ts < prev) {
      throw DataError("trial " + std::to_string(trial.trial_id) +
                      ": timestamps not sorted ascending");
    }
    prev = ts;
    // first bin whose right edge covers ts
    auto j = static_cast<std::size_t>(std::ceil(ts / bin_width_us - 1e-9));
    if (ts <= 0.0) j = 0;
    if (j > n_bins) continue;  // beyond the horizon
    c[j] += 1;
  }
  // prefix-sum the per-bin increments into cumulative counts
  for (std::size_t j = 1; j <= n_bins; ++j) c[j] += c[j - 1];
  return c;
}

// ============================================================================
// Fidelity curves
// ============================================================================

/// Error/fidelity traces for one threshold, indexed by time bin.
struct ThresholdCurve {
  long long n_thresh = 0;
  std::vector<double> eps_bright;      // P(count < n_thresh | bright prep)
  std::vector<double> eps_dark;        // P(count >= n_thresh | dark prep)
  std::vector<double> fidelity;        // 1 - (eps_b + eps_d)/2
  std::vector<Interval> eps_bright_ci;
  std::vector<Interval> eps_dark_ci;
  std::vector<double> ci_low;          // 95% interval on fidelity
  std::vector<double> ci_high;
};

struct FidelityCurve {
  double bin_width_us = 1.0;
  std::vector<double> times_us;  // bin right edges, j = 1..n_bins
  long long n_bright = 0;        // sample sizes after post-selection
  long long n_dark = 0;
  std::vector<ThresholdCurve> thresholds;

  const ThresholdCurve& at_threshold(long long n_thresh) const {
    for (const auto& tc : thresholds) {
      if (tc.n_thresh == n_thresh) return tc;
    }
    throw AnalysisError("no curve for threshold " + std::to_string(n_thresh));
  }
};

inline const std::vector<long long> kDefaultThresholds = {1, 2, 3};

namespace detail {

/// For one trial and threshold, the first bin index j at which the
/// cumulative count reaches the threshold (n_bins + 1 if it never does).
inline std::size_t first_bin_at_threshold(const TrialRecord& trial,
                                          long long n_thresh,
                                          double bin_width_us,
                                          std::size_t n_bins) {
  if (trial.count() < n_thresh) return n_bins + 1;
  const double ts = trial.timestamps_us[static_cast<std::size_t>(n_thresh) - 1];
  auto j = static_cast<std::size_t>(std::ceil(ts / bin_width_us - 1e-9));
  if (ts <= 0.0) j = 0;
  return std::min(j, n_bins + 1);
}

inline bool keep_trial(const TrialRecord& t, bool post_select) {
  return !post_select || (t.retained_before && t.retained_after);
}

}  // namespace detail

/// Builds per-bin, per-threshold error proportions and fidelity from bright-
/// and dark-prepared trials. When post_select is set, trials not retained in
/// the trap are dropped first (the retention filter); an empty filtered set
/// is an error naming the filter.
inline FidelityCurve error_curves(std::span<const TrialRecord> bright,
                                  std::span<const TrialRecord> dark,
                                  std::span<const long long> thresholds,
                                  double bin_width_us, double horizon_us,
                                  bool post_select = true) {
  if (!(bin_width_us > 0.0) || !(horizon_us > 0.0)) {
    throw std::domain_error("error_curves: need bin_width, horizon > 0");
  }
  if (thresholds.empty()) {
    throw std::domain_error("error_curves: need at least one threshold");
  }
  for (long long th : thresholds) {
    if (th < 1) throw std::domain_error("error_curves: thresholds must be >= 1");
  }

  const auto n_bins =
      static_cast<std::size_t>(std::floor(horizon_us / bin_width_us + 1e-9));

  FidelityCurve curve;
  curve.bin_width_us = bin_width_us;
  curve.times_us.resize(n_bins);
  for (std::size_t j = 0; j < n_bins; ++j) {
    curve.times_us[j] = static_cast<double>(j + 1) * bin_width_us;
  }

  // count retained trials and unsorted-data errors up front
  std::vector<const TrialRecord*> kept_bright, kept_dark;
  for (const auto& t : bright) {
    if (detail::keep_trial(t, post_select)) kept_bright.push_back(&t);
  }
  for (const auto& t : dark) {
    if (detail::keep_trial(t, post_select)) kept_dark.push_back(&t);
  }
  if (kept_bright.empty() || kept_dark.empty()) {
    throw AnalysisError(
        std::string("error_curves: no trials left after the ") +
        (post_select ? "retention post-selection filter"
                     : "(disabled) post-selection filter") +
        " (bright=" + std::to_string(kept_bright.size()) +
        ", dark=" + std::to_string(kept_dark.size()) + ")");
  }
  curve.n_bright = static_cast<long long>(kept_bright.size());
  curve.n_dark = static_cast<long long>(kept_dark.size());

  for (long long th : thresholds) {
    ThresholdCurve tc;
    tc.n_thresh = th;

    // histogram of "first bin reaching the threshold" over trials, then
    // suffix/prefix sums give below/at-or-above counts per bin
    std::vector<long long> reach_bright(n_bins + 2, 0), reach_dark(n_bins + 2, 0);
    for (const auto* t : kept_bright) {
      reach_bright[detail::first_bin_at_threshold(*t, th, bin_width_us, n_bins)]++;
    }
    for (const auto* t : kept_dark) {
      reach_dark[detail::first_bin_at_threshold(*t, th, bin_width_us, n_bins)]++;
    }

    tc.eps_bright.resize(n_bins);
    tc.eps_dark.resize(n_bins);
    tc.fidelity.resize(n_bins);
    tc.eps_bright_ci.resize(n_bins);
    tc.eps_dark_ci.resize(n_bins);
    tc.ci_low.resize(n_bins);
    tc.ci_high.resize(n_bins);

    long long bright_reached = reach_bright[0];
    long long dark_reached = reach_dark[0];
    for (std::size_t j = 1; j <= n_bins; ++j) {
      bright_reached += reach_bright[j];
      dark_reached += reach_dark[j];
      const long long below_b = curve.n_bright - bright_reached;
      const std::size_t i = j - 1;
      tc.eps_bright[i] =
          static_cast<double>(below_b) / static_cast<double>(curve.n_bright);
      tc.eps_dark[i] =
          static_cast<double>(dark_reached) / static_cast<double>(curve.n_dark);
      tc.fidelity[i] = 1.0 - 0.5 * (tc.eps_bright[i] + tc.eps_dark[i]);
      tc.eps_bright_ci[i] = wilson_interval(below_b, curve.n_bright);
      tc.eps_dark_ci[i] = wilson_interval(dark_reached, curve.n_dark);
      // fidelity interval: combine the two independent binomial variances
      const double var_b =
          tc.eps_bright[i] * (1.0 - tc.eps_bright[i]) /
          static_cast<double>(curve.n_bright);
      const double var_d = tc.eps_dark[i] * (1.0 - tc.eps_dark[i]) /
                           static_cast<double>(curve.n_dark);
      const double half = kZ95 * 0.5 * std::sqrt(var_b + var_d);
      tc.ci_low[i] = std::max(0.0, tc.fidelity[i] - half);
      tc.ci_high[i] = std::min(1.0, tc.fidelity[i] + half);
    }
    curve.thresholds.push_back(std::move(tc));
  }
  return curve;
}

// ============================================================================
// Operating point
// ============================================================================

struct OperatingPoint {
  long long n_thresh = 0;
  double time_us = 0.0;
  double fidelity = 0.0;
  Interval ci;
};

/// Argmax of fidelity over (threshold, bin); ties break toward smaller time,
/// then smaller threshold.
inline OperatingPoint optimal_operating_point(const FidelityCurve& curve) {
  if (curve.thresholds.empty() || curve.times_us.empty()) {
    throw AnalysisError("optimal_operating_point: empty curve");
  }
  OperatingPoint best;
  best.fidelity = -1.0;
  for (const auto& tc : curve.thresholds) {
    for (std::size_t j = 0; j < curve.times_us.size(); ++j) {
      const bool better =
          tc.fidelity[j] > best.fidelity ||
          (tc.fidelity[j] == best.fidelity &&
           (curve.times_us[j] < best.time_us ||
            (curve.times_us[j] == best.time_us && tc.n_thresh < best.n_thresh)));
      if (better) {
        best.n_thresh = tc.n_thresh;
        best.time_us = curve.times_us[j];
        best.fidelity = tc.fidelity[j];
        best.ci = {tc.ci_low[j], tc.ci_high[j]};
      }
    }
  }
  return best;
}

// ============================================================================
// Retention
// ============================================================================

struct RetentionEstimate {
  double proportion = 0.0;
  Interval ci;
  long long n_trials = 0;
};

inline RetentionEstimate retention_rate(std::span<const TrialRecord> trials) {
  if (trials.empty()) {
    throw AnalysisError("retention_rate: no trials");
  }
  long long kept = 0;
  for (const auto& t : trials) kept += t.retained_after ? 1 : 0;
  const auto n = static_cast<long long>(trials.size());
  return {static_cast<double>(kept) / static_cast<double>(n),
          wilson_interval(kept, n), n};
}

// ============================================================================
// Histograms
// ============================================================================

struct CountHistogram {
  double at_time_us = 0.0;
  std::vector<long long> counts_bright;  // frequency per photon number
  std::vector<long long> counts_dark;

  long long total_bright() const {
    long long s = 0;
    for (auto v : counts_bright) s += v;
    return s;
  }
  long long total_dark() const {
    long long s = 0;
    for (auto v : counts_dark) s += v;
    return s;
  }
};

/// Frequency table of cumulative counts at `at_time_us` for both prepared
/// populations of a mixed trial set.
inline CountHistogram histogram_at(std::span<const TrialRecord> trials,
                                   double at_time_us, double horizon_us,
                                   bool post_select = true) {
  if (at_time_us > horizon_us) {
    throw std::domain_error("histogram_at: at_time beyond the readout horizon");
  }
  if (!(at_time_us >= 0.0)) {
    throw std::domain_error("histogram_at: at_time must be >= 0");
  }
  CountHistogram h;
  h.at_time_us = at_time_us;
  for (const auto& t : trials) {
    if (!detail::keep_trial(t, post_select)) continue;
    const auto n = static_cast<std::size_t>(
        std::upper_bound(t.timestamps_us.begin(), t.timestamps_us.end(),
                         at_time_us) -
        t.timestamps_us.begin());
    auto& bins =
        t.prep_state == PrepState::bright ? h.counts_bright : h.counts_dark;
    if (bins.size() <= n) bins.resize(n + 1, 0);
    bins[n] += 1;
  }
  return h;
}

}  // namespace atomread
