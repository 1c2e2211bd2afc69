#pragma once

// Estimation of (eta*R0, R_l) from a measured bright-error curve.
//
// The objective is binomial-weighted least squares between the per-bin error
// proportions and the model curve, minimized by Nelder-Mead simplex descent
// in log-parameter space (with restarts). The quadratic-model covariance
// comes from a Gauss-Newton approximation at the optimum; because cumulative
// bins share trials, reported standard errors should be calibrated by the
// parametric bootstrap over resimulated datasets (bootstrap_calibrate),
// which is what the comparison reports quote.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "atomread/analysis.hpp"
#include "atomread/counting.hpp"
#include "atomread/errors.hpp"
#include "atomread/rng.hpp"
#include "atomread/sim.hpp"

namespace atomread {

// ============================================================================
// Inputs
// ============================================================================

/// One measured error curve: per-bin proportions with the (shared) number of
/// trials behind each proportion. Times in seconds.
struct ErrorCurveData {
  std::vector<double> times_s;
  std::vector<double> eps;
  double n_trials = 0.0;

  void validate() const {
    if (times_s.size() != eps.size()) {
      throw std::domain_error("ErrorCurveData: times/eps size mismatch");
    }
    if (times_s.size() < 10) {
      throw std::domain_error(
          "ErrorCurveData: need at least 10 usable bins to fit");
    }
    if (!(n_trials > 0.0)) {
      throw std::domain_error("ErrorCurveData: n_trials must be > 0");
    }
  }

  static ErrorCurveData from_fidelity_curve(const FidelityCurve& curve,
                                            long long n_thresh) {
    const ThresholdCurve& tc = curve.at_threshold(n_thresh);
    ErrorCurveData d;
    d.n_trials = static_cast<double>(curve.n_bright);
    d.times_s.reserve(curve.times_us.size());
    d.eps.reserve(curve.times_us.size());
    for (std::size_t j = 0; j < curve.times_us.size(); ++j) {
      d.times_s.push_back(curve.times_us[j] * 1e-6);
      d.eps.push_back(tc.eps_bright[j]);
    }
    return d;
  }
};

struct FitOptions {
  enum class Parameterization { log_space, linear };
  Parameterization parameterization = Parameterization::log_space;
  int max_iterations = 600;  // per start
  int max_restarts = 3;
  double simplex_tol = 1e-12;
  double weight_floor = 1e-9;  // epsilon in 1/(p(1-p)/N + epsilon)
};

// ============================================================================
// Result
// ============================================================================

struct FitResult {
  double eta_r0 = 0.0;  // counts/s
  double eta_r0_se = 0.0;
  double r_loss = 0.0;  // 1/s
  double r_loss_se = 0.0;
  double r_bg = 0.0;    // fixed input
  double eta = 1.0;     // fixed input
  long long n_thresh = 1;
  std::array<std::array<double, 2>, 2> covariance{{{0.0, 0.0}, {0.0, 0.0}}};
  double objective_value = 0.0;
  bool bootstrap_calibrated = false;
  int iterations = 0;

  // retained fit inputs; used by the residual-bootstrap band fallback
  ErrorCurveData data;

  double ratio() const { return eta_r0 / r_loss; }

  BrightModel model() const {
    return BrightModel::from_eta_r0(eta_r0, r_bg, r_loss, eta);
  }

  /// Model bright-error at time t (seconds) for the fitted parameters.
  double predict(double t_s) const {
    return bright_error(t_s, n_thresh, model());
  }

  /// 95% band evaluator at the given times (defined with confidence_band).
  struct ConfidenceBand band(std::span<const double> times_s) const;
};

/// Optimizer failed to converge; carries the best iterate found.
class FitError : public std::runtime_error {
public:
  FitError(const std::string& msg, FitResult best)
      : std::runtime_error(msg), best_(std::move(best)) {}
  const FitResult& best_iterate() const noexcept { return best_; }

private:
  FitResult best_;
};

// ============================================================================
// Nelder-Mead
// ============================================================================

namespace detail {

struct SimplexPoint {
  std::array<double, 2> x;
  double f;
};

template <typename F>
inline SimplexPoint nelder_mead_2d(const F& f, std::array<double, 2> start,
                                   double scale, int max_iter, double tol,
                                   int& iterations) {
  std::array<SimplexPoint, 3> s;
  s[0] = {start, f(start)};
  s[1] = {{start[0] + scale, start[1]}, 0.0};
  s[1].f = f(s[1].x);
  s[2] = {{start[0], start[1] + scale}, 0.0};
  s[2].f = f(s[2].x);

  const auto order = [&s] {
    std::sort(s.begin(), s.end(),
              [](const SimplexPoint& a, const SimplexPoint& b) {
                return a.f < b.f;
              });
  };
  order();

  for (int it = 0; it < max_iter; ++it) {
    ++iterations;
    const double spread = std::abs(s[2].f - s[0].f);
    const double size = std::max(std::abs(s[2].x[0] - s[0].x[0]),
                                 std::abs(s[2].x[1] - s[0].x[1])) +
                        std::max(std::abs(s[1].x[0] - s[0].x[0]),
                                 std::abs(s[1].x[1] - s[0].x[1]));
    if (spread <= tol * (std::abs(s[0].f) + tol) && size <= 1e-10) break;

    const std::array<double, 2> centroid = {0.5 * (s[0].x[0] + s[1].x[0]),
                                            0.5 * (s[0].x[1] + s[1].x[1])};
    const auto at = [&centroid, &s](double c) -> std::array<double, 2> {
      return {centroid[0] + c * (centroid[0] - s[2].x[0]),
              centroid[1] + c * (centroid[1] - s[2].x[1])};
    };

    SimplexPoint refl{at(1.0), 0.0};
    refl.f = f(refl.x);
    if (refl.f < s[0].f) {
      SimplexPoint exp_{at(2.0), 0.0};
      exp_.f = f(exp_.x);
      s[2] = exp_.f < refl.f ? exp_ : refl;
    } else if (refl.f < s[1].f) {
      s[2] = refl;
    } else {
      const SimplexPoint& base = refl.f < s[2].f ? refl : s[2];
      SimplexPoint contr{{0.5 * (centroid[0] + base.x[0]),
                          0.5 * (centroid[1] + base.x[1])},
                         0.0};
      contr.f = f(contr.x);
      if (contr.f < base.f) {
        s[2] = contr;
      } else {
        // shrink toward the best vertex
        for (int i = 1; i < 3; ++i) {
          s[i].x = {0.5 * (s[0].x[0] + s[i].x[0]),
                    0.5 * (s[0].x[1] + s[i].x[1])};
          s[i].f = f(s[i].x);
        }
      }
    }
    order();
  }
  return s[0];
}

}  // namespace detail

// ============================================================================
// Fitting
// ============================================================================

namespace detail {

inline double fit_objective(const ErrorCurveData& data, double r_bg,
                            long long n_thresh, double eta_r0, double r_loss,
                            double weight_floor) {
  if (!(eta_r0 > 0.0) || !(r_loss >= 0.0) || !std::isfinite(eta_r0) ||
      !std::isfinite(r_loss)) {
    return std::numeric_limits<double>::infinity();
  }
  const BrightModel m = BrightModel::from_eta_r0(eta_r0, r_bg, r_loss);
  CompensatedSum obj;
  for (std::size_t j = 0; j < data.times_s.size(); ++j) {
    const double p = data.eps[j];
    const double w = 1.0 / (p * (1.0 - p) / data.n_trials + weight_floor);
    const double r = p - bright_error(data.times_s[j], n_thresh, m);
    obj.add(w * r * r);
  }
  return obj.value();
}

/// Slope/plateau heuristic: the early decay of -log(eps) sets the detected
/// rate, the late level sets the leak rate.
inline std::array<double, 2> initial_guess(const ErrorCurveData& data,
                                           double r_bg, long long n_thresh) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t j = 0; j < data.times_s.size(); ++j) {
    if (data.eps[j] < 0.05 || data.eps[j] > 0.9) continue;
    const double x = data.times_s[j];
    const double y = std::log(data.eps[j]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
    if (n >= 40) break;
  }
  double eta_r0 = 4e4;
  if (n >= 3) {
    const double denom = n * sxx - sx * sx;
    if (denom > 0) {
      const double slope = (n * sxy - sx * sy) / denom;
      if (slope < 0) eta_r0 = std::clamp(-slope - r_bg, 1e2, 1e7);
    }
  }
  const double eps_end = std::max(data.eps.back(), 1.0 / (10.0 * data.n_trials));
  const double r_loss = std::clamp(
      eps_end * eta_r0 / static_cast<double>(n_thresh), 1.0, 1e6);
  return {eta_r0, r_loss};
}

}  // namespace detail

/// Fits (eta*R0, R_l) to a bright-error curve with fixed background rate.
/// Throws FitError (carrying the best iterate) if the optimizer exhausts its
/// iteration budget without converging.
inline FitResult fit_bright_error(const ErrorCurveData& data, double r_bg,
                                  long long n_thresh,
                                  std::optional<std::array<double, 2>> guess =
                                      std::nullopt,
                                  const FitOptions& options = {}) {
  data.validate();
  if (n_thresh < 1) throw std::domain_error("fit_bright_error: n_thresh >= 1");
  if (!(r_bg >= 0.0)) throw std::domain_error("fit_bright_error: r_bg >= 0");

  const std::array<double, 2> start =
      guess.value_or(detail::initial_guess(data, r_bg, n_thresh));
  if (!(start[0] > 0.0) || !(start[1] > 0.0)) {
    throw std::domain_error("fit_bright_error: initial guess must be > 0");
  }

  const bool log_space =
      options.parameterization == FitOptions::Parameterization::log_space;
  const auto to_params = [log_space](std::array<double, 2> x) {
    return log_space
               ? std::array<double, 2>{std::exp(x[0]), std::exp(x[1])}
               : x;
  };
  const auto objective = [&](std::array<double, 2> x) {
    const auto p = to_params(x);
    return detail::fit_objective(data, r_bg, n_thresh, p[0], p[1],
                                 options.weight_floor);
  };

  std::array<double, 2> x0 = log_space
                                 ? std::array<double, 2>{std::log(start[0]),
                                                         std::log(start[1])}
                                 : start;
  int iterations = 0;
  detail::SimplexPoint best{x0, objective(x0)};
  const double f_start = best.f;
  double scale = log_space ? 0.4 : 0.2 * std::max(start[0], start[1]);
  bool converged = false;
  for (int attempt = 0; attempt <= options.max_restarts; ++attempt) {
    const detail::SimplexPoint res = detail::nelder_mead_2d(
        objective, best.x, scale, options.max_iterations, options.simplex_tol,
        iterations);
    const double improvement = best.f - res.f;
    if (res.f <= best.f) best = res;
    if (attempt > 0 && improvement <= options.simplex_tol * (std::abs(best.f) + 1.0)) {
      converged = true;  // restart produced no further progress
      break;
    }
    scale *= 0.25;
  }

  FitResult fit;
  const auto params = to_params(best.x);
  fit.eta_r0 = params[0];
  fit.r_loss = params[1];
  fit.r_bg = r_bg;
  fit.n_thresh = n_thresh;
  fit.objective_value = best.f;
  fit.iterations = iterations;
  fit.data = data;

  // Gauss-Newton covariance in linear parameters at the optimum
  const BrightModel m = fit.model();
  double jtj00 = 0, jtj01 = 0, jtj11 = 0;
  const double h0 = std::max(1e-5 * fit.eta_r0, 1e-6);
  const double h1 = std::max(1e-5 * fit.r_loss, 1e-6);
  for (std::size_t j = 0; j < data.times_s.size(); ++j) {
    const double t = data.times_s[j];
    const double p = data.eps[j];
    const double w =
        1.0 / (p * (1.0 - p) / data.n_trials + options.weight_floor);
    const double d0 =
        (bright_error(t, n_thresh,
                      BrightModel::from_eta_r0(fit.eta_r0 + h0, r_bg,
                                               fit.r_loss)) -
         bright_error(t, n_thresh,
                      BrightModel::from_eta_r0(
                          std::max(fit.eta_r0 - h0, 1e-12), r_bg,
                          fit.r_loss))) /
        (2.0 * h0);
    const double d1 =
        (bright_error(t, n_thresh,
                      BrightModel::from_eta_r0(fit.eta_r0, r_bg,
                                               fit.r_loss + h1)) -
         bright_error(t, n_thresh,
                      BrightModel::from_eta_r0(fit.eta_r0, r_bg,
                                               std::max(fit.r_loss - h1,
                                                        0.0)))) /
        (2.0 * h1);
    jtj00 += w * d0 * d0;
    jtj01 += w * d0 * d1;
    jtj11 += w * d1 * d1;
  }
  const double det = jtj00 * jtj11 - jtj01 * jtj01;
  if (det > 0 && jtj00 > 0) {
    fit.covariance = {{{jtj11 / det, -jtj01 / det}, {-jtj01 / det, jtj00 / det}}};
    fit.eta_r0_se = std::sqrt(std::max(0.0, fit.covariance[0][0]));
    fit.r_loss_se = std::sqrt(std::max(0.0, fit.covariance[1][1]));
  }

  if (!converged && !(best.f < f_start) && f_start > 0.0) {
    throw FitError("fit_bright_error: no convergence within iteration budget",
                   fit);
  }
  return fit;
}

// ============================================================================
// Bootstrap calibration of standard errors
// ============================================================================

struct BootstrapSpec {
  int replicates = 100;
  std::uint64_t seed = 0x5eedb007;
  long long n_trials = 0;          // 0: use the fitted curve's sample size
  double bin_width_us = 1.0;
  double duration_us = 0.0;        // 0: use the last time point of the data
};

/// Parametric bootstrap over resimulated datasets: draws `replicates`
/// synthetic datasets at the fitted parameters, refits each, and replaces
/// the standard errors and covariance with the sample statistics. Accounts
/// for the correlation between cumulative-count bins that the quadratic
/// model ignores.
inline FitResult bootstrap_calibrate(const FitResult& fit,
                                     const BootstrapSpec& spec = {}) {
  FitResult out = fit;
  const long long n_trials =
      spec.n_trials > 0 ? spec.n_trials
                        : static_cast<long long>(fit.data.n_trials);
  const double duration_us =
      spec.duration_us > 0 ? spec.duration_us : fit.data.times_s.back() * 1e6;

  std::vector<std::array<double, 2>> draws;
  draws.reserve(static_cast<std::size_t>(spec.replicates));
  const BrightModel model = fit.model();

  for (int b = 0; b < spec.replicates; ++b) {
    SimConfig cfg;
    cfg.bright_model = model;
    cfg.readout_duration_us = duration_us;
    cfg.n_bright_trials = static_cast<std::uint64_t>(n_trials);
    cfg.n_dark_trials = 0;
    cfg.retention_probability = 1.0;
    cfg.seed = substream_seed(spec.seed, static_cast<std::uint64_t>(b));

    const auto n_bins = static_cast<std::size_t>(
        std::floor(duration_us / spec.bin_width_us + 1e-9));
    std::vector<long long> reach(n_bins + 2, 0);
    for (std::uint64_t id = 0; id < cfg.n_bright_trials; ++id) {
      const TrialRecord rec = simulate_trial(cfg, id);
      reach[detail::first_bin_at_threshold(rec, fit.n_thresh,
                                           spec.bin_width_us, n_bins)]++;
    }
    ErrorCurveData d;
    d.n_trials = static_cast<double>(n_trials);
    long long reached = reach[0];
    for (std::size_t j = 1; j <= n_bins; ++j) {
      reached += reach[j];
      d.times_s.push_back(static_cast<double>(j) * spec.bin_width_us * 1e-6);
      d.eps.push_back(static_cast<double>(n_trials - reached) /
                      static_cast<double>(n_trials));
    }
    try {
      const FitResult refit = fit_bright_error(
          d, fit.r_bg, fit.n_thresh,
          std::array<double, 2>{fit.eta_r0, fit.r_loss});
      draws.push_back({refit.eta_r0, refit.r_loss});
    } catch (const FitError& e) {
      draws.push_back({e.best_iterate().eta_r0, e.best_iterate().r_loss});
    }
  }

  if (draws.size() >= 8) {
    double m0 = 0, m1 = 0;
    for (const auto& d : draws) {
      m0 += d[0];
      m1 += d[1];
    }
    m0 /= static_cast<double>(draws.size());
    m1 /= static_cast<double>(draws.size());
    double c00 = 0, c01 = 0, c11 = 0;
    for (const auto& d : draws) {
      c00 += (d[0] - m0) * (d[0] - m0);
      c01 += (d[0] - m0) * (d[1] - m1);
      c11 += (d[1] - m1) * (d[1] - m1);
    }
    const double denom = static_cast<double>(draws.size()) - 1.0;
    out.covariance = {{{c00 / denom, c01 / denom}, {c01 / denom, c11 / denom}}};
    out.eta_r0_se = std::sqrt(out.covariance[0][0]);
    out.r_loss_se = std::sqrt(out.covariance[1][1]);
    out.bootstrap_calibrated = true;
  }
  return out;
}

// ============================================================================
// Confidence bands
// ============================================================================

enum class BandMethod { parametric, residual_bootstrap };

struct ConfidenceBand {
  std::vector<double> times_s;
  std::vector<double> low;
  std::vector<double> high;
  BandMethod method = BandMethod::parametric;
};

/// Pointwise 95% band: parameters are resampled from the fitted Gaussian and
/// the model curve percentiles taken per time point. A covariance that fails
/// its Cholesky factorization triggers the flagged residual-bootstrap
/// fallback (refits on resampled residuals).
inline ConfidenceBand confidence_band(const FitResult& fit,
                                      std::span<const double> times_s,
                                      int n_draws = 2000,
                                      std::uint64_t seed = 0xbadc0ffee) {
  ConfidenceBand band;
  band.times_s.assign(times_s.begin(), times_s.end());

  const auto& cov = fit.covariance;
  const bool zero_cov = cov[0][0] == 0.0 && cov[1][1] == 0.0 && cov[0][1] == 0.0;

  std::vector<std::array<double, 2>> params;
  params.reserve(static_cast<std::size_t>(n_draws));

  double l00 = 0, l10 = 0, l11 = 0;
  bool cholesky_ok = true;
  if (!zero_cov) {
    if (cov[0][0] <= 0.0) {
      cholesky_ok = false;
    } else {
      l00 = std::sqrt(cov[0][0]);
      l10 = cov[0][1] / l00;
      const double rem = cov[1][1] - l10 * l10;
      if (rem < -1e-18 * cov[1][1]) {
        cholesky_ok = false;
      } else {
        l11 = std::sqrt(std::max(0.0, rem));
      }
    }
  }

  if (zero_cov || cholesky_ok) {
    RandomStream stream(seed);
    for (int i = 0; i < n_draws; ++i) {
      if (zero_cov) {
        params.push_back({fit.eta_r0, fit.r_loss});
      } else {
        const double z0 = stream.normal();
        const double z1 = stream.normal();
        params.push_back({std::max(fit.eta_r0 + l00 * z0, 1e-9),
                          std::max(fit.r_loss + l10 * z0 + l11 * z1, 0.0)});
      }
    }
    band.method = BandMethod::parametric;
  } else {
    // residual bootstrap: resample residuals onto the fitted curve, refit
    band.method = BandMethod::residual_bootstrap;
    const auto& data = fit.data;
    std::vector<double> fitted(data.times_s.size());
    std::vector<double> residuals(data.times_s.size());
    for (std::size_t j = 0; j < data.times_s.size(); ++j) {
      fitted[j] = fit.predict(data.times_s[j]);
      residuals[j] = data.eps[j] - fitted[j];
    }
    RandomStream stream(seed);
    const int refits = std::min(n_draws, 200);
    for (int b = 0; b < refits; ++b) {
      ErrorCurveData d = data;
      for (std::size_t j = 0; j < d.eps.size(); ++j) {
        const auto pick = static_cast<std::size_t>(
            stream.uniform() * static_cast<double>(residuals.size()));
        d.eps[j] = std::clamp(
            fitted[j] + residuals[std::min(pick, residuals.size() - 1)], 0.0,
            1.0);
      }
      try {
        const FitResult refit = fit_bright_error(
            d, fit.r_bg, fit.n_thresh,
            std::array<double, 2>{fit.eta_r0, fit.r_loss});
        params.push_back({refit.eta_r0, refit.r_loss});
      } catch (const FitError&) {
        // skip non-converged replicates
      }
    }
    if (params.empty()) params.push_back({fit.eta_r0, fit.r_loss});
  }

  band.low.resize(band.times_s.size());
  band.high.resize(band.times_s.size());
  std::vector<double> values(params.size());
  for (std::size_t j = 0; j < band.times_s.size(); ++j) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      values[i] = bright_error(
          band.times_s[j], fit.n_thresh,
          BrightModel::from_eta_r0(params[i][0], fit.r_bg, params[i][1]));
    }
    std::sort(values.begin(), values.end());
    const auto lo_idx = static_cast<std::size_t>(
        0.025 * static_cast<double>(values.size() - 1) + 0.5);
    const auto hi_idx = static_cast<std::size_t>(
        0.975 * static_cast<double>(values.size() - 1) + 0.5);
    band.low[j] = values[lo_idx];
    band.high[j] = values[hi_idx];
  }
  return band;
}

inline ConfidenceBand FitResult::band(std::span<const double> times_s) const {
  return confidence_band(*this, times_s);
}

// ============================================================================
// Comparison report
// ============================================================================

struct FitReportRow {
  std::string label;
  double eta_r0 = 0.0;
  double eta_r0_se = 0.0;
  double r_loss = 0.0;
  double r_loss_se = 0.0;
  double r_bg = 0.0;
  double ratio = 0.0;
};

struct FitReport {
  std::vector<FitReportRow> rows;
  std::vector<std::string> best_labels;  // all labels attaining the max ratio
  double best_ratio = 0.0;
};

/// Side-by-side comparison of fits; identifies the label(s) with the largest
/// eta_r0 / r_loss ratio (ties reported together, in input order).
inline FitReport fit_report(std::span<const FitResult> fits,
                            std::span<const std::string> labels) {
  if (fits.empty() || fits.size() != labels.size()) {
    throw std::domain_error("fit_report: need one label per fit, >= 1 fit");
  }
  FitReport report;
  report.best_ratio = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < fits.size(); ++i) {
    FitReportRow row;
    row.label = labels[i];
    row.eta_r0 = fits[i].eta_r0;
    row.eta_r0_se = fits[i].eta_r0_se;
    row.r_loss = fits[i].r_loss;
    row.r_loss_se = fits[i].r_loss_se;
    row.r_bg = fits[i].r_bg;
    row.ratio = fits[i].ratio();
    report.best_ratio = std::max(report.best_ratio, row.ratio);
    report.rows.push_back(std::move(row));
  }
  for (const auto& row : report.rows) {
    if (row.ratio == report.best_ratio) report.best_labels.push_back(row.label);
  }
  return report;
}

}  // namespace atomread
