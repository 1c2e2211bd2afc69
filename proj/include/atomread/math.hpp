#pragma once

// Log-space Poisson arithmetic, compensated summation, and the small set of
// statistical helpers (Wilson intervals, chi-squared tails) used across the
// library. Everything here is pure and thread-safe.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace atomread {

inline constexpr double kZ95 = 1.959963984540054;  // two-sided 95% normal quantile

// ============================================================================
// Compensated (Neumaier) summation
// ============================================================================

class CompensatedSum {
public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  double value() const noexcept { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// ============================================================================
// Poisson pmf / cdf / tail in log space
// ============================================================================

/// log of the Poisson pmf with the given mean; -inf where the mass is zero.
inline double log_poisson_pmf(long long n, double mean) {
  if (n < 0 || mean < 0 || !std::isfinite(mean)) {
    throw std::domain_error("log_poisson_pmf: need n >= 0 and finite mean >= 0");
  }
  if (mean == 0.0) {
    return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  if (n == 0) return -mean;
  return static_cast<double>(n) * std::log(mean) - mean -
         std::lgamma(static_cast<double>(n) + 1.0);
}

inline double poisson_pmf(long long n, double mean) {
  return std::exp(log_poisson_pmf(n, mean));
}

/// P(N >= n) for N ~ Poisson(mean). Stable on both sides of the mean: the
/// shorter of {head, tail} is summed directly.
inline double poisson_tail(long long n, double mean) {
  if (n <= 0) return 1.0;
  if (mean < 0 || !std::isfinite(mean)) {
    throw std::domain_error("poisson_tail: need finite mean >= 0");
  }
  if (mean == 0.0) return 0.0;

  if (static_cast<double>(n) <= mean) {
    // head is short: tail = 1 - sum_{k<n} pmf(k)
    CompensatedSum head;
    double term = std::exp(-mean);
    for (long long k = 0; k < n; ++k) {
      if (k > 0) term *= mean / static_cast<double>(k);
      head.add(term);
    }
    return std::max(0.0, 1.0 - head.value());
  }

  // tail is short: sum forward from n until negligible
  CompensatedSum tail;
  double term = poisson_pmf(n, mean);
  long long k = n;
  while (term > 0.0) {
    tail.add(term);
    ++k;
    term *= mean / static_cast<double>(k);
    if (term < tail.value() * 1e-18 && k > n + 4) break;
  }
  return std::min(1.0, tail.value());
}

/// P(N <= n) for N ~ Poisson(mean).
inline double poisson_cdf(long long n, double mean) {
  if (n < 0) return 0.0;
  return std::max(0.0, 1.0 - poisson_tail(n + 1, mean));
}

/// Smallest m with P(Poisson(mean) > m) < tail_tol. Used to pick pmf
/// truncation points.
inline long long poisson_tail_quantile(double mean, double tail_tol) {
  if (mean < 0 || tail_tol <= 0) {
    throw std::domain_error("poisson_tail_quantile: bad arguments");
  }
  if (mean == 0.0) return 0;
  long long m = static_cast<long long>(mean);
  // coarse jump out by standard deviations, then refine downward
  const double sd = std::sqrt(mean);
  m += static_cast<long long>(10.0 * sd) + 10;
  while (poisson_tail(m + 1, mean) >= tail_tol) {
    m += static_cast<long long>(sd) + 10;
  }
  while (m > 0 && poisson_tail(m, mean) < tail_tol) --m;
  return m;
}

// ============================================================================
// log-sum-exp with compensation
// ============================================================================

inline double log_sum_exp(std::span<const double> log_terms) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : log_terms) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  CompensatedSum s;
  for (double v : log_terms) s.add(std::exp(v - m));
  return m + std::log(s.value());
}

// ============================================================================
// Wilson score interval
// ============================================================================

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// 95% Wilson score interval for a binomial proportion.
inline Interval wilson_interval(long long successes, long long n, double z = kZ95) {
  if (n <= 0 || successes < 0 || successes > n) {
    throw std::domain_error("wilson_interval: need 0 <= successes <= n, n > 0");
  }
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  Interval iv{std::max(0.0, center - half), std::min(1.0, center + half)};
  if (successes == 0) iv.low = 0.0;   // exact endpoints, no roundoff residue
  if (successes == n) iv.high = 1.0;
  return iv;
}

// ============================================================================
// Regularized incomplete gamma (for chi-squared tail probabilities)
// ============================================================================

namespace detail {

inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16) {
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
  }
  throw std::runtime_error("gamma_p_series: no convergence");
}

inline double gamma_q_contfrac(double a, double x) {
  // modified Lentz continued fraction
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) {
      return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
  }
  throw std::runtime_error("gamma_q_contfrac: no convergence");
}

}  // namespace detail

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a,x)/Gamma(a).
inline double gamma_q(double a, double x) {
  if (a <= 0 || x < 0) throw std::domain_error("gamma_q: need a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_contfrac(a, x);
}

/// Upper-tail p-value of a chi-squared statistic.
inline double chi_squared_pvalue(double chi2, double dof) {
  if (chi2 < 0 || dof <= 0) {
    throw std::domain_error("chi_squared_pvalue: need chi2 >= 0, dof > 0");
  }
  return gamma_q(0.5 * dof, 0.5 * chi2);
}

}  // namespace atomread
