#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "atomread/counting.hpp"
#include "atomread/sim.hpp"
#include "reference_params.hpp"
#include "test_util.hpp"

using namespace atomread;

TEST_CASE("bright trials: Poisson mean in the leak-free background-free limit") {
  const BrightModel m = BrightModel::from_eta_r0(40e3, 0.0, 0.0);
  const double duration_us = 200.0;
  const std::uint64_t n = 100000;
  double total = 0.0;
  for (std::uint64_t id = 0; id < n; ++id) {
    auto stream = RandomStream::substream(424242, id);
    total += static_cast<double>(
        simulate_bright_trial(m, duration_us, stream).count());
  }
  const double mean = total / static_cast<double>(n);
  const double expect = 40e3 * duration_us * 1e-6;  // 8 counts
  const double se = std::sqrt(expect / static_cast<double>(n));
  CHECK(std::abs(mean - expect) < 4 * se);
}

TEST_CASE("identical seeds reproduce identical records") {
  const BrightModel m = BrightModel::from_eta_r0(39.4e3, 1.05e3, 1.31e3);
  auto s1 = RandomStream::substream(7, 123);
  auto s2 = RandomStream::substream(7, 123);
  const TrialRecord a = simulate_bright_trial(m, 200.0, s1);
  const TrialRecord b = simulate_bright_trial(m, 200.0, s2);
  REQUIRE(a.timestamps_us.size() == b.timestamps_us.size());
  for (std::size_t i = 0; i < a.timestamps_us.size(); ++i) {
    CHECK(a.timestamps_us[i] == b.timestamps_us[i]);
  }
}

TEST_CASE("simulated count histogram passes goodness-of-fit vs closed form") {
  const BrightModel m = BrightModel::from_eta_r0(
      refparams::kProbe40.eta_r0, refparams::kProbe40.r_bg,
      refparams::kProbe40.r_loss, refparams::kDetectionEfficiency);
  const std::uint64_t n = 200000;
  const auto hist = testutil::bright_count_histogram(m, 200.0, n, 31337);
  const CountPMF pmf = pmf_bright(200e-6, m);
  const double p = testutil::gof_chi2_pvalue(
      hist, pmf, static_cast<long long>(n));
  CHECK(p > 0.01);
}

TEST_CASE("dark trials: empty at zero background, Poisson otherwise") {
  auto stream = RandomStream::substream(5, 0);
  CHECK(simulate_dark_trial(0.0, 200.0, stream).count() == 0);

  const double r_bg = 0.7e3;
  const double duration_us = 200.0;
  const std::uint64_t n = 100000;
  double total = 0.0;
  std::vector<long long> hist;
  for (std::uint64_t id = 0; id < n; ++id) {
    auto s = RandomStream::substream(99, id);
    const auto rec = simulate_dark_trial(r_bg, duration_us, s);
    total += static_cast<double>(rec.count());
    const auto c = static_cast<std::size_t>(rec.count());
    if (hist.size() <= c) hist.resize(c + 1, 0);
    hist[c] += 1;
  }
  const double expect = r_bg * duration_us * 1e-6;
  CHECK(total / static_cast<double>(n) ==
        Catch::Approx(expect).margin(4 * std::sqrt(expect / double(n))));

  // empirical exceedance fractions track the dark-error tail probabilities
  for (long long k : {1LL, 2LL, 3LL}) {
    long long ge = 0;
    for (std::size_t i = static_cast<std::size_t>(k); i < hist.size(); ++i) {
      ge += hist[i];
    }
    const double frac = static_cast<double>(ge) / static_cast<double>(n);
    const double model = dark_error(duration_us * 1e-6, k, r_bg);
    const double se = std::sqrt(model * (1 - model) / double(n));
    CHECK(std::abs(frac - model) < 5 * se + 1e-9);
  }
}

TEST_CASE("dataset generation: counts, determinism, parallel equivalence") {
  SimConfig cfg;
  cfg.bright_model = BrightModel::from_eta_r0(39.4e3, 1.05e3, 1.31e3);
  cfg.dark_background = 0.7e3;
  cfg.n_bright_trials = 0;
  cfg.n_dark_trials = 0;
  cfg.seed = 1;
  CHECK(simulate_dataset(cfg).empty());

  cfg.n_bright_trials = 4000;
  cfg.n_dark_trials = 3000;
  const auto seq = simulate_dataset(cfg, 1);
  const auto par = simulate_dataset(cfg, 4);
  REQUIRE(seq.size() == par.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    REQUIRE(seq[i].trial_id == par[i].trial_id);
    REQUIRE(seq[i].prep_state == par[i].prep_state);
    REQUIRE(seq[i].retained_after == par[i].retained_after);
    REQUIRE(seq[i].timestamps_us == par[i].timestamps_us);
  }

  // prepared populations split by id range
  for (std::size_t i = 0; i < 4000; ++i) {
    REQUIRE(seq[i].prep_state == PrepState::bright);
  }
  for (std::size_t i = 4000; i < seq.size(); ++i) {
    REQUIRE(seq[i].prep_state == PrepState::dark);
  }
}

TEST_CASE("empirical below-threshold fractions agree with bright_error") {
  // exchangeability with the analytic model across a parameter grid
  struct Case {
    double eta_r0, r_bg, r_loss;
  };
  const Case cases[] = {
      {39.4e3, 1.05e3, 1.31e3},
      {58.7e3, 1.13e3, 4.1e3},
      {12e3, 0.4e3, 6e3},
  };
  const double t_us = 160.0;
  const std::uint64_t n = 1000000;
  int case_idx = 0;
  for (const auto& c : cases) {
    const BrightModel m = BrightModel::from_eta_r0(c.eta_r0, c.r_bg, c.r_loss);
    for (long long thr : {1LL, 2LL}) {
      long long below = 0;
      for (std::uint64_t id = 0; id < n; ++id) {
        auto stream =
            RandomStream::substream(777000 + static_cast<std::uint64_t>(case_idx), id);
        if (simulate_bright_trial(m, t_us, stream).count() < thr) ++below;
      }
      const double frac = static_cast<double>(below) / static_cast<double>(n);
      const double model = bright_error(t_us * 1e-6, thr, m);
      const double se = std::sqrt(model * (1 - model) / double(n));
      // two-sided binomial z-test at alpha = 0.001
      CHECK(std::abs(frac - model) < 3.2905 * se);
    }
    ++case_idx;
  }
}

TEST_CASE("generated records always satisfy the trial invariants") {
  std::mt19937_64 eng(2);
  std::uniform_real_distribution<double> eta_r0(0.1e3, 90e3);
  std::uniform_real_distribution<double> bg(0.0, 4e3);
  std::uniform_real_distribution<double> loss(0.0, 50e3);
  std::uniform_real_distribution<double> dur(1.0, 400.0);
  for (int rep = 0; rep < 200; ++rep) {
    const BrightModel m = BrightModel::from_eta_r0(eta_r0(eng), bg(eng), loss(eng));
    const double duration_us = dur(eng);
    auto stream = RandomStream::substream(555, static_cast<std::uint64_t>(rep));
    const TrialRecord rec = simulate_bright_trial(m, duration_us, stream);
    REQUIRE_NOTHROW(rec.validate(duration_us));
    for (double ts : rec.timestamps_us) {
      REQUIRE(ts >= 0.0);
      REQUIRE(ts < duration_us);
    }
  }
}

TEST_CASE("retention flags and preparation-error admixture") {
  SimConfig cfg;
  cfg.bright_model = BrightModel::from_eta_r0(39.4e3, 1.05e3, 1.31e3);
  cfg.dark_background = 0.7e3;
  cfg.n_bright_trials = 50000;
  cfg.n_dark_trials = 0;
  cfg.retention_probability = 0.971;
  cfg.seed = 4;
  const auto data = simulate_dataset(cfg);
  long long kept = 0;
  for (const auto& r : data) kept += r.retained_after ? 1 : 0;
  const double frac = double(kept) / double(data.size());
  const double se = std::sqrt(0.971 * 0.029 / double(data.size()));
  CHECK(std::abs(frac - 0.971) < 4 * se);

  // full admixture turns bright-prepared trials into background-only ones
  cfg.prep_error = 1.0;
  cfg.n_bright_trials = 20000;
  const auto flipped = simulate_dataset(cfg);
  double total = 0.0;
  for (const auto& r : flipped) {
    total += static_cast<double>(r.count());
    CHECK(r.prep_state == PrepState::bright);  // label stays as prepared
  }
  const double mean = total / double(flipped.size());
  const double expect = cfg.dark_background * cfg.readout_duration_us * 1e-6;
  CHECK(mean == Catch::Approx(expect).margin(0.02));
}
