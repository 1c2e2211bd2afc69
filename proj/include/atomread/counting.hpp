#pragma once

// Photon-counting statistics for an emitter that may irreversibly switch
// from an initial detected rate r_initial to a final rate r_final at a
// random exponential time (rate r_loss), plus the threshold error and
// fidelity quantities built on top of them.
//
// Two independent evaluation routes are provided on purpose:
//   * p_total        — no-switch Poisson term plus the switch-time integral,
//                      evaluated by adaptive quadrature, and
//   * p_bright_closed — the closed-form summation for a bright atom.
// They must agree to tight absolute tolerance; the test suite enforces it.
//
// All rates are in counts/s, all times in seconds. Every function here is
// pure and safe to call from any number of threads.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "atomread/math.hpp"
#include "atomread/quadrature.hpp"

namespace atomread {

// ============================================================================
// Parameter sets
// ============================================================================

/// Rates of the switching emitter: scatter at r_initial, switch once at
/// exponential rate r_loss, scatter at r_final afterwards.
struct RateSet {
  double r_initial = 0.0;  // counts/s before the switch
  double r_final = 0.0;    // counts/s after the switch
  double r_loss = 0.0;     // 1/s switch rate; 0 degenerates to pure Poisson

  void validate() const {
    if (!(r_initial >= 0.0) || !std::isfinite(r_initial) ||
        !(r_final >= 0.0) || !std::isfinite(r_final) ||
        !(r_loss >= 0.0) || !std::isfinite(r_loss)) {
      throw std::domain_error("RateSet: rates must be finite and >= 0");
    }
  }
};

/// Bright-state readout model: detector sees eta*r0 + r_bg until the atom
/// leaks (rate r_loss), and r_bg afterwards.
struct BrightModel {
  double eta = 1.0;       // detection efficiency in (0, 1]
  double r0 = 0.0;        // atomic scattering rate, counts/s
  double r_bg = 0.0;      // background rate, counts/s
  double r_loss = 0.0;    // leak rate out of the bright state, 1/s

  double detected_rate() const noexcept { return eta * r0 + r_bg; }
  double eta_r0() const noexcept { return eta * r0; }

  RateSet to_rate_set() const noexcept {
    return {eta * r0 + r_bg, r_bg, r_loss};
  }

  /// Convenience constructor from the detected product eta*r0 (the quantity
  /// reported by fits) plus the measured efficiency.
  static BrightModel from_eta_r0(double eta_r0, double r_bg, double r_loss,
                                 double eta = 1.0) {
    BrightModel m;
    m.eta = eta;
    m.r0 = eta > 0.0 ? eta_r0 / eta : 0.0;
    m.r_bg = r_bg;
    m.r_loss = r_loss;
    m.validate();
    return m;
  }

  void validate() const {
    if (!(eta > 0.0) || eta > 1.0 || !std::isfinite(eta)) {
      throw std::domain_error("BrightModel: eta must be in (0, 1]");
    }
    if (!(r0 >= 0.0) || !(r_bg >= 0.0) || !(r_loss >= 0.0) ||
        !std::isfinite(r0) || !std::isfinite(r_bg) || !std::isfinite(r_loss)) {
      throw std::domain_error("BrightModel: rates must be finite and >= 0");
    }
  }
};

// ============================================================================
// Count probabilities
// ============================================================================

namespace detail {

/// log of the truncated exponential series sum_{k=0..n} z^k / k!.
/// Linear space with compensated summation while representable; streaming
/// log-sum-exp otherwise. Allocation-free (this sits on the fit hot path).
inline double log_partial_exp(double z, long long n) {
  if (z == 0.0 || n < 0) return 0.0;
  if (z <= 700.0) {
    CompensatedSum s;
    s.add(1.0);
    double term = 1.0;
    for (long long k = 1; k <= n; ++k) {
      term *= z / static_cast<double>(k);
      s.add(term);
      if (term < s.value() * 1e-18 && static_cast<double>(k) > z) break;
    }
    return std::log(s.value());
  }
  const double logz = std::log(z);
  double peak = 0.0;   // running max exponent
  double acc = 1.0;    // sum of exp(e_k - peak)
  double log_kfact = 0.0;
  for (long long k = 1; k <= n; ++k) {
    log_kfact += std::log(static_cast<double>(k));
    const double e = static_cast<double>(k) * logz - log_kfact;
    if (e > peak) {
      acc = acc * std::exp(peak - e) + 1.0;
      peak = e;
    } else {
      acc += std::exp(e - peak);
    }
  }
  return peak + std::log(acc);
}

}  // namespace detail

/// Poisson probability of n counts in time t at constant rate r, i.e. the
/// probability that the emitter scatters n photons without switching.
/// Canonical argument order everywhere in this library: (n, t, rate).
inline double p_no_transition(long long n, double t, double r) {
  if (n < 0 || !(t >= 0.0) || !(r >= 0.0) || !std::isfinite(t) ||
      !std::isfinite(r)) {
    throw std::domain_error("p_no_transition: need n >= 0, t >= 0, r >= 0");
  }
  return poisson_pmf(n, r * t);
}

/// Probability of n counts in [0, t] with the switch occurring inside the
/// window. The switch-time integral is evaluated by adaptive Gauss-Kronrod
/// quadrature at relative tolerance 1e-10. The k-fold product of the two
/// Poisson factors collapses, by the binomial theorem, to
/// (r_i*tau + r_f*(t - tau))^n / n!, which is what the integrand uses.
inline double p_with_transition(long long n, double t, const RateSet& rates,
                                double rel_tol = 1e-10) {
  rates.validate();
  if (n < 0 || !(t >= 0.0) || !std::isfinite(t)) {
    throw std::domain_error("p_with_transition: need n >= 0, t >= 0");
  }
  if (rates.r_loss == 0.0 || t == 0.0) return 0.0;

  const double ri = rates.r_initial;
  const double rf = rates.r_final;
  const double rl = rates.r_loss;
  const double log_rl = std::log(rl);
  const double lognorm = std::lgamma(static_cast<double>(n) + 1.0);

  const auto integrand = [&](double tau) -> double {
    double log_f = log_rl - rf * t - (ri - rf + rl) * tau - lognorm;
    if (n > 0) {
      const double m = ri * tau + rf * (t - tau);
      if (m <= 0.0) return 0.0;
      log_f += static_cast<double>(n) * std::log(m);
    }
    return std::exp(log_f);
  };

  const auto q = integrate_adaptive(integrand, 0.0, t, rel_tol);
  return std::clamp(q.value, 0.0, 1.0);
}

/// Total probability of n counts in time t: stay-term plus switch-term.
inline double p_total(long long n, double t, const RateSet& rates,
                      double rel_tol = 1e-10) {
  rates.validate();
  const double stay = std::exp(-rates.r_loss * t) *
                      p_no_transition(n, t, rates.r_initial);
  if (rates.r_loss == 0.0) return stay;
  return stay + p_with_transition(n, t, rates, rel_tol);
}

/// Closed-form count distribution for a bright atom. Algebraically equal to
/// p_total under the BrightModel -> RateSet substitution; evaluated with
/// log-space terms and compensated summation so that n up to a few hundred
/// at kcps rates stays finite.
inline double p_bright_closed(long long n, double t, const BrightModel& model) {
  model.validate();
  if (n < 0 || !(t >= 0.0) || !std::isfinite(t)) {
    throw std::domain_error("p_bright_closed: need n >= 0, t >= 0");
  }

  const double er0 = model.eta_r0();
  const double rbg = model.r_bg;
  const double rl = model.r_loss;
  const double ri = er0 + rbg;

  if (rl == 0.0) return poisson_pmf(n, ri * t);
  if (er0 == 0.0) {
    throw std::domain_error(
        "p_bright_closed: eta*r0 = 0 with r_loss > 0 is degenerate; "
        "use p_total on the equivalent RateSet instead");
  }

  const double stay = std::exp(-rl * t) * poisson_pmf(n, ri * t);

  const double a = er0 + rl;
  const double y = a * rbg * t / er0;  // argument of the background sum
  const double x = a * ri * t / er0;   // argument of the full-rate sum

  const double lead = std::log(rl) - rbg * t - std::log(a) +
                      static_cast<double>(n) * (std::log(er0) - std::log(a));
  const double switch_term =
      std::exp(lead + detail::log_partial_exp(y, n)) -
      std::exp(lead - a * t + detail::log_partial_exp(x, n));

  return std::clamp(stay + switch_term, 0.0, 1.0);
}

// ============================================================================
// Threshold errors and fidelity
// ============================================================================

/// Probability that a bright-prepared atom yields fewer than n_thresh counts
/// by time t (and is therefore misclassified as dark).
inline double bright_error(double t, long long n_thresh,
                           const BrightModel& model) {
  if (n_thresh < 1) {
    throw std::domain_error(
        "bright_error: n_thresh must be >= 1 (threshold 0 declares "
        "everything bright)");
  }
  CompensatedSum s;
  for (long long k = 0; k < n_thresh; ++k) {
    s.add(p_bright_closed(k, t, model));
  }
  return std::clamp(s.value(), 0.0, 1.0);
}

/// Probability that a dark-prepared atom reaches n_thresh or more background
/// counts by time t (and is therefore misclassified as bright).
inline double dark_error(double t, long long n_thresh, double r_bg) {
  if (n_thresh < 1) throw std::domain_error("dark_error: n_thresh must be >= 1");
  if (!(t >= 0.0) || !(r_bg >= 0.0)) {
    throw std::domain_error("dark_error: need t >= 0 and r_bg >= 0");
  }
  return poisson_tail(n_thresh, r_bg * t);
}

/// Readout fidelity 1 - (eps_bright + eps_dark) / 2 at a given threshold and
/// readout time. r_bg_dark is the background rate of the dark-prepared data.
inline double model_fidelity(double t, long long n_thresh,
                             const BrightModel& model, double r_bg_dark) {
  return 1.0 - 0.5 * (bright_error(t, n_thresh, model) +
                      dark_error(t, n_thresh, r_bg_dark));
}

struct FidelityScanPoint {
  double t = 0.0;
  double fidelity = 0.0;
};

/// Scans model_fidelity over a uniform time grid and returns the maximum.
inline FidelityScanPoint scan_model_fidelity(const BrightModel& model,
                                             double r_bg_dark,
                                             long long n_thresh, double t_max,
                                             double t_step) {
  if (!(t_step > 0.0) || !(t_max > 0.0)) {
    throw std::domain_error("scan_model_fidelity: need t_max, t_step > 0");
  }
  FidelityScanPoint best{0.0, 0.0};
  for (double t = t_step; t <= t_max * (1.0 + 1e-12); t += t_step) {
    const double f = model_fidelity(t, n_thresh, model, r_bg_dark);
    if (f > best.fidelity) best = {t, f};
  }
  return best;
}

// ============================================================================
// Truncated pmf container
// ============================================================================

/// Count distribution for n = 0..n_max. The truncation point is chosen so
/// the neglected tail of the dominating Poisson distribution is below
/// tail_tol; consequently sum(probabilities) lies in [1 - tail_tol, 1].
struct CountPMF {
  std::vector<double> probabilities;
  long long n_max = 0;
  double duration = 0.0;  // seconds
  double tail_tol = 0.0;

  double sum() const {
    CompensatedSum s;
    for (double p : probabilities) s.add(p);
    return s.value();
  }
};

namespace detail {

inline long long pmf_truncation(const RateSet& rates, double t,
                                double tail_tol) {
  const double dominant = std::max(rates.r_initial, rates.r_final);
  return poisson_tail_quantile(dominant * t, tail_tol);
}

}  // namespace detail

/// Tabulates p_total over the adaptively truncated support.
inline CountPMF pmf_total(double t, const RateSet& rates,
                          double tail_tol = 1e-12) {
  rates.validate();
  const long long n_max = detail::pmf_truncation(rates, t, tail_tol);
  CountPMF pmf;
  pmf.n_max = n_max;
  pmf.duration = t;
  pmf.tail_tol = tail_tol;
  pmf.probabilities.resize(static_cast<std::size_t>(n_max) + 1);
  for (long long n = 0; n <= n_max; ++n) {
    pmf.probabilities[static_cast<std::size_t>(n)] = p_total(n, t, rates);
  }
  return pmf;
}

/// Tabulates the closed-form bright distribution over the same support rule.
inline CountPMF pmf_bright(double t, const BrightModel& model,
                           double tail_tol = 1e-12) {
  model.validate();
  const long long n_max =
      detail::pmf_truncation(model.to_rate_set(), t, tail_tol);
  CountPMF pmf;
  pmf.n_max = n_max;
  pmf.duration = t;
  pmf.tail_tol = tail_tol;
  pmf.probabilities.resize(static_cast<std::size_t>(n_max) + 1);
  for (long long n = 0; n <= n_max; ++n) {
    pmf.probabilities[static_cast<std::size_t>(n)] =
        p_bright_closed(n, t, model);
  }
  return pmf;
}

}  // namespace atomread
