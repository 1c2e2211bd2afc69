#pragma once

// Exact squared Wigner 3j and 6j symbols over rational arithmetic.
//
// Angular momenta enter as doubled integers (two_j = 2j) so half-integer
// values stay exact. The squared symbols are rational numbers: the square
// roots in the Racah formulas appear only through triangle coefficients and
// (j +- m)! products, which square away, leaving factorial sums that GMP
// rationals evaluate exactly. Selection-rule zeros are therefore exact
// zeros, not small floats.

#include <gmpxx.h>

#include <algorithm>
#include <stdexcept>

namespace atomread::wigner {

using Rational = mpq_class;

namespace detail {

inline mpz_class factorial(long n) {
  if (n < 0) throw std::domain_error("wigner: factorial of negative value");
  mpz_class r;
  mpz_fac_ui(r.get_mpz_t(), static_cast<unsigned long>(n));
  return r;
}

/// Triangle coefficient squared:
///   delta(a,b,c)^2-free form = (a+b-c)! (a-b+c)! (-a+b+c)! / (a+b+c+1)!
/// Returns 0 (and sets ok=false) when the triangle rule fails.
inline Rational triangle(long two_a, long two_b, long two_c, bool& ok) {
  const long s1 = (two_a + two_b - two_c) / 2;
  const long s2 = (two_a - two_b + two_c) / 2;
  const long s3 = (-two_a + two_b + two_c) / 2;
  if ((two_a + two_b + two_c) % 2 != 0 || s1 < 0 || s2 < 0 || s3 < 0) {
    ok = false;
    return Rational(0);
  }
  ok = true;
  const long s4 = (two_a + two_b + two_c) / 2 + 1;
  return Rational(factorial(s1) * factorial(s2) * factorial(s3), factorial(s4));
}

}  // namespace detail

/// Squared Wigner 3j symbol (j1 j2 j3; m1 m2 m3), arguments doubled.
inline Rational three_j_squared(long two_j1, long two_j2, long two_j3,
                                long two_m1, long two_m2, long two_m3) {
  // selection rules
  if (two_m1 + two_m2 + two_m3 != 0) return Rational(0);
  if (std::abs(two_m1) > two_j1 || std::abs(two_m2) > two_j2 ||
      std::abs(two_m3) > two_j3) {
    return Rational(0);
  }
  if ((two_j1 + two_m1) % 2 != 0 || (two_j2 + two_m2) % 2 != 0 ||
      (two_j3 + two_m3) % 2 != 0) {
    throw std::domain_error("three_j_squared: j and m must differ by an integer");
  }
  bool ok = false;
  const Rational tri = detail::triangle(two_j1, two_j2, two_j3, ok);
  if (!ok) return Rational(0);

  const long j1pm = (two_j1 + two_m1) / 2, j1mm = (two_j1 - two_m1) / 2;
  const long j2pm = (two_j2 + two_m2) / 2, j2mm = (two_j2 - two_m2) / 2;
  const long j3pm = (two_j3 + two_m3) / 2, j3mm = (two_j3 - two_m3) / 2;
  const long j12m3 = (two_j1 + two_j2 - two_j3) / 2;
  const long a1 = (two_j3 - two_j2 + two_m1) / 2;  // j3 - j2 + m1
  const long a2 = (two_j3 - two_j1 - two_m2) / 2;  // j3 - j1 - m2

  const long t_lo = std::max({0L, -a1, -a2});
  const long t_hi = std::min({j12m3, j1mm, j2pm});
  if (t_lo > t_hi) return Rational(0);

  Rational sum(0);
  for (long t = t_lo; t <= t_hi; ++t) {
    const Rational term(1, detail::factorial(t) * detail::factorial(a1 + t) *
                               detail::factorial(a2 + t) *
                               detail::factorial(j12m3 - t) *
                               detail::factorial(j1mm - t) *
                               detail::factorial(j2pm - t));
    if (t % 2 == 0) {
      sum += term;
    } else {
      sum -= term;
    }
  }

  Rational prefactor = tri;
  prefactor *= Rational(detail::factorial(j1pm) * detail::factorial(j1mm) *
                        detail::factorial(j2pm) * detail::factorial(j2mm) *
                        detail::factorial(j3pm) * detail::factorial(j3mm));
  Rational result = prefactor * sum * sum;
  result.canonicalize();
  return result;
}

/// Squared Wigner 6j symbol {j1 j2 j3; j4 j5 j6}, arguments doubled.
inline Rational six_j_squared(long two_j1, long two_j2, long two_j3,
                              long two_j4, long two_j5, long two_j6) {
  bool ok1 = false, ok2 = false, ok3 = false, ok4 = false;
  const Rational t1 = detail::triangle(two_j1, two_j2, two_j3, ok1);
  const Rational t2 = detail::triangle(two_j1, two_j5, two_j6, ok2);
  const Rational t3 = detail::triangle(two_j4, two_j2, two_j6, ok3);
  const Rational t4 = detail::triangle(two_j4, two_j5, two_j3, ok4);
  if (!ok1 || !ok2 || !ok3 || !ok4) return Rational(0);

  const long s123 = (two_j1 + two_j2 + two_j3) / 2;
  const long s156 = (two_j1 + two_j5 + two_j6) / 2;
  const long s426 = (two_j4 + two_j2 + two_j6) / 2;
  const long s453 = (two_j4 + two_j5 + two_j3) / 2;
  const long p1245 = (two_j1 + two_j2 + two_j4 + two_j5) / 2;
  const long p2356 = (two_j2 + two_j3 + two_j5 + two_j6) / 2;
  const long p3146 = (two_j3 + two_j1 + two_j6 + two_j4) / 2;

  const long t_lo = std::max({s123, s156, s426, s453});
  const long t_hi = std::min({p1245, p2356, p3146});
  if (t_lo > t_hi) return Rational(0);

  Rational sum(0);
  for (long t = t_lo; t <= t_hi; ++t) {
    const Rational term(
        detail::factorial(t + 1),
        detail::factorial(t - s123) * detail::factorial(t - s156) *
            detail::factorial(t - s426) * detail::factorial(t - s453) *
            detail::factorial(p1245 - t) * detail::factorial(p2356 - t) *
            detail::factorial(p3146 - t));
    if (t % 2 == 0) {
      sum += term;
    } else {
      sum -= term;
    }
  }

  Rational result = t1 * t2 * t3 * t4 * sum * sum;
  result.canonicalize();
  return result;
}

}  // namespace atomread::wigner
