#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "atomread/math.hpp"
#include "atomread/quadrature.hpp"

using namespace atomread;

TEST_CASE("poisson pmf basics") {
  CHECK(poisson_pmf(0, 0.0) == 1.0);
  CHECK(poisson_pmf(3, 0.0) == 0.0);
  CHECK(poisson_pmf(0, 2.5) == Catch::Approx(std::exp(-2.5)).epsilon(1e-15));
  // recurrence p(n+1)/p(n) = mean/(n+1)
  const double mean = 7.3;
  for (long long n = 0; n < 40; ++n) {
    CHECK(poisson_pmf(n + 1, mean) ==
          Catch::Approx(poisson_pmf(n, mean) * mean / double(n + 1))
              .epsilon(1e-12));
  }
  CHECK_THROWS_AS(poisson_pmf(-1, 1.0), std::domain_error);
  CHECK_THROWS_AS(poisson_pmf(1, -1.0), std::domain_error);
}

TEST_CASE("poisson tail and cdf are complementary and stable") {
  for (double mean : {1e-8, 0.112, 1.0, 17.5, 800.0, 5e4}) {
    for (long long n : {0LL, 1LL, 2LL, 5LL, 50LL}) {
      const double tail = poisson_tail(n, mean);
      CHECK(tail >= 0.0);
      CHECK(tail <= 1.0);
      if (n > 0) {
        CHECK(poisson_cdf(n - 1, mean) ==
              Catch::Approx(1.0 - tail).margin(1e-12));
      }
    }
    // monotone in n
    double prev = 1.0;
    for (long long n = 0; n <= 30; ++n) {
      const double t = poisson_tail(n, mean);
      CHECK(t <= prev + 1e-15);
      prev = t;
    }
  }
  // small-mean tail keeps relative precision (no 1-minus cancellation)
  CHECK(poisson_tail(2, 1e-6) == Catch::Approx(5e-13).epsilon(1e-5));
}

TEST_CASE("poisson tail quantile bounds the mass") {
  for (double mean : {0.5, 40.0, 8000.0}) {
    const long long m = poisson_tail_quantile(mean, 1e-12);
    CHECK(poisson_tail(m + 1, mean) < 1e-12);
    CHECK(poisson_tail(m, mean) >= 1e-12);
  }
  CHECK(poisson_tail_quantile(0.0, 1e-12) == 0);
}

TEST_CASE("compensated summation beats naive accumulation") {
  CompensatedSum s;
  s.add(1.0);
  for (int i = 0; i < 10; ++i) s.add(1e-17);
  CHECK(s.value() == Catch::Approx(1.0 + 1e-16).epsilon(1e-15));
}

TEST_CASE("log_sum_exp handles large spreads") {
  const std::vector<double> terms = {-1000.0, -1001.0, -999.0};
  const double expect =
      -999.0 + std::log(1.0 + std::exp(-1.0) + std::exp(-2.0));
  CHECK(log_sum_exp(terms) == Catch::Approx(expect).epsilon(1e-14));
}

TEST_CASE("wilson interval") {
  // golden values for k=8, n=10 at z=1.96 (textbook example)
  const Interval iv = wilson_interval(8, 10);
  CHECK(iv.low == Catch::Approx(0.4901625).margin(2e-4));
  CHECK(iv.high == Catch::Approx(0.9433476).margin(2e-4));
  // degenerate ends stay in [0,1]
  const Interval zero = wilson_interval(0, 50);
  CHECK(zero.low == 0.0);
  CHECK(zero.high > 0.0);
  const Interval one = wilson_interval(50, 50);
  CHECK(one.high == 1.0);
  CHECK(one.low < 1.0);
  CHECK_THROWS_AS(wilson_interval(5, 0), std::domain_error);
  CHECK_THROWS_AS(wilson_interval(-1, 10), std::domain_error);
}

TEST_CASE("chi squared tail probabilities match standard critical values") {
  // library of (chi2, dof, upper p) critical points
  CHECK(chi_squared_pvalue(3.841458820694124, 1) ==
        Catch::Approx(0.05).epsilon(1e-9));
  CHECK(chi_squared_pvalue(18.307038053275146, 10) ==
        Catch::Approx(0.05).epsilon(1e-9));
  CHECK(chi_squared_pvalue(29.58829844973331, 10) ==
        Catch::Approx(0.001).epsilon(1e-8));
  CHECK(chi_squared_pvalue(0.0, 5) == 1.0);
}

TEST_CASE("adaptive quadrature integrates smooth functions to tolerance") {
  const auto r1 = integrate_adaptive([](double x) { return x * x; }, 0.0, 3.0);
  CHECK(r1.value == Catch::Approx(9.0).epsilon(1e-12));

  const auto r2 =
      integrate_adaptive([](double x) { return std::exp(-x); }, 0.0, 50.0);
  CHECK(r2.value == Catch::Approx(1.0).epsilon(1e-10));

  // oscillatory-but-smooth
  const auto r3 = integrate_adaptive([](double x) { return std::sin(x); },
                                     0.0, 3.14159265358979323846);
  CHECK(r3.value == Catch::Approx(2.0).epsilon(1e-12));

  // a narrow boundary layer forces real subdivision
  const double a = 1e5;
  const auto r4 = integrate_adaptive(
      [a](double x) { return a * std::exp(-a * x); }, 0.0, 1.0);
  CHECK(r4.value == Catch::Approx(1.0).epsilon(1e-9));

  CHECK_THROWS_AS(
      integrate_adaptive([](double x) { return x; }, 1.0, 0.0),
      std::domain_error);
}

TEST_CASE("quadrature reports non-convergence with the achieved tolerance") {
  // noise-like integrand: the Gauss/Kronrod estimates never agree at any
  // subdivision scale, so the evaluation budget runs out
  try {
    integrate_adaptive(
        [](double x) {
          double ignore;
          return std::modf(std::sin(x * 12345.678) * 43758.5453, &ignore);
        },
        0.0, 1.0, 1e-10);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.achieved_tolerance() > 1e-10);
    CHECK(std::string(e.what()).find("tolerance") != std::string::npos);
  }
}
