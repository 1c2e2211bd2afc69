#pragma once

// Ground-manifold rate equations with the excited states adiabatically
// eliminated: every excitation event instantaneously redistributes
// population through the spontaneous branching ratios. The readout pulse
// (microseconds) is slow against the excited lifetime (tens of ns), so the
// ground populations obey a linear 8-state system
//
//   dP/dt = A P,   A[g'][g] = sum_e R(g,e) B(e,g') - delta(g,g') sum_e R(g,e)
//
// whose columns sum to zero (probability conserved). Alongside the
// populations we integrate the cumulative flux into F=1 attributed to each
// excited manifold, which quantifies the off-resonant pumping pathways.

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "atomread/errors.hpp"
#include "atomread/levels.hpp"

namespace atomread {

// ============================================================================
// Populations
// ============================================================================

struct PopulationVector {
  std::array<double, kNumGround> p{};

  double sum() const {
    double s = 0.0;
    for (double v : p) s += v;
    return s;
  }

  double f1_total() const { return p[0] + p[1] + p[2]; }
  double f2_total() const { return p[3] + p[4] + p[5] + p[6] + p[7]; }

  void validate(double tol = 1e-12) const {
    for (double v : p) {
      if (!(v >= 0.0)) throw std::domain_error("PopulationVector: negative entry");
    }
    if (std::abs(sum() - 1.0) > tol) {
      throw std::domain_error("PopulationVector: probabilities must sum to 1");
    }
  }

  /// Uniform population over the F=2 sublevels (bright-prepared readout).
  static PopulationVector uniform_f2() {
    PopulationVector v;
    for (std::size_t i = 3; i < kNumGround; ++i) v.p[i] = 0.2;
    return v;
  }
};

// ============================================================================
// Excitation channels
// ============================================================================

/// One pi-driven excitation channel, cached in probe-frame coordinates so a
/// detuning scan only re-evaluates the Lorentzian.
struct Channel {
  std::size_t g = 0;              // ground_index
  std::size_t e = 0;              // excited_index
  double strength = 0.0;          // relative to the cycling transition
  double resonance_mhz = 0.0;     // probe detuning at which it is resonant
};

/// The excitation channels of a level scheme plus the decay branching table.
/// Public so tests can build reduced systems (e.g. a single closed channel).
struct ChannelSet {
  std::vector<Channel> channels;
  // branching[e][g]: decay probability of excited index e into ground index g
  std::array<std::array<double, kNumGround>, kNumExcited> branching{};
  std::array<Manifold, kNumExcited> excited_manifold{};
  double natural_linewidth_mhz = 6.0666;

  static ChannelSet build(const LevelScheme& scheme) {
    ChannelSet set;
    set.natural_linewidth_mhz = scheme.natural_linewidth_mhz;
    for (const Sublevel& e : excited_sublevels()) {
      const std::size_t ei = excited_index(e);
      set.excited_manifold[ei] = e.manifold;
      set.branching[ei] = branching_ratios(e);
      for (const Sublevel& g : ground_sublevels()) {
        if (g.m_f != e.m_f) continue;
        const double s = relative_strength(g, e, 0);
        if (s == 0.0) continue;
        set.channels.push_back({ground_index(g), ei, s,
                                channel_resonance_mhz(g, e, scheme)});
      }
    }
    return set;
  }
};

/// Per-detuning rate tables derived from a ChannelSet.
struct RateTable {
  // rate[g][e], 1/s
  std::array<std::array<double, kNumExcited>, kNumGround> rate{};
  std::array<double, kNumGround> scatter_rate{};  // sum over e
  std::array<std::array<double, kNumGround>, kNumGround> generator{};
  // leak_rate[manifold][g]: rate of population flow g -> (F=1) via that
  // excited manifold
  std::array<std::array<double, kNumGround>, 4> leak_rate{};

  static RateTable build(const ChannelSet& set, const ProbeSpec& probe) {
    probe.validate();
    RateTable table;
    std::array<double, kNumGround> s_total{};
    for (const Channel& c : set.channels) {
      s_total[c.g] += probe.saturation * c.strength;
    }
    for (const Channel& c : set.channels) {
      const double detuning = probe.detuning_mhz - c.resonance_mhz;
      const double r = detail::lorentzian_rate(
          c.strength, probe.saturation * c.strength, s_total[c.g], detuning,
          set.natural_linewidth_mhz);
      table.rate[c.g][c.e] += r;
      table.scatter_rate[c.g] += r;
    }
    for (std::size_t g = 0; g < kNumGround; ++g) {
      table.generator[g][g] -= table.scatter_rate[g];
      for (std::size_t e = 0; e < kNumExcited; ++e) {
        const double r = table.rate[g][e];
        if (r == 0.0) continue;
        const auto mf = static_cast<std::size_t>(
            manifold_f(set.excited_manifold[e]));
        double to_f1 = 0.0;
        for (std::size_t g2 = 0; g2 < kNumGround; ++g2) {
          table.generator[g2][g] += r * set.branching[e][g2];
          if (g2 < 3) to_f1 += set.branching[e][g2];
        }
        table.leak_rate[mf][g] += r * to_f1;
      }
    }
    return table;
  }
};

// ============================================================================
// Evolution
// ============================================================================

struct EvolveOptions {
  double abs_tol = 1e-10;       // per-step population error control
  double initial_step_us = 0.05;
  long long max_steps = 4'000'000;
  bool store_trajectory = true;
};

struct Trajectory {
  std::vector<double> times_us;
  std::vector<PopulationVector> populations;
  // cumulative population transferred into F=1 via each excited manifold
  std::array<double, 4> f1_flux_by_excited_f{};

  const PopulationVector& final_populations() const {
    return populations.back();
  }
};

namespace detail {

// state layout: 8 populations + 4 leak-flux accumulators
using RateState = std::array<double, kNumGround + 4>;

inline RateState derivative(const RateTable& table, const RateState& y) {
  RateState dy{};
  for (std::size_t g2 = 0; g2 < kNumGround; ++g2) {
    double acc = 0.0;
    for (std::size_t g = 0; g < kNumGround; ++g) {
      acc += table.generator[g2][g] * y[g];
    }
    dy[g2] = acc;
  }
  for (std::size_t mf = 0; mf < 4; ++mf) {
    double acc = 0.0;
    for (std::size_t g = 0; g < kNumGround; ++g) {
      acc += table.leak_rate[mf][g] * y[g];
    }
    dy[kNumGround + mf] = acc;
  }
  return dy;
}

inline RateState rk4_step(const RateTable& table, const RateState& y,
                          double h_s) {
  const RateState k1 = derivative(table, y);
  RateState tmp;
  for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * h_s * k1[i];
  const RateState k2 = derivative(table, tmp);
  for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * h_s * k2[i];
  const RateState k3 = derivative(table, tmp);
  for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + h_s * k3[i];
  const RateState k4 = derivative(table, tmp);
  RateState out;
  for (std::size_t i = 0; i < y.size(); ++i) {
    out[i] = y[i] + h_s / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return out;
}

}  // namespace detail

/// Integrates the ground-manifold rate equations over `duration_us` with an
/// RK4 step-doubling controller at the requested absolute tolerance.
inline Trajectory evolve_populations(const PopulationVector& initial,
                                     const ChannelSet& set,
                                     const ProbeSpec& probe,
                                     double duration_us,
                                     const EvolveOptions& options = {}) {
  initial.validate();
  if (!(duration_us >= 0.0)) {
    throw std::domain_error("evolve_populations: duration must be >= 0");
  }
  const RateTable table = RateTable::build(set, probe);

  detail::RateState y{};
  for (std::size_t i = 0; i < kNumGround; ++i) y[i] = initial.p[i];

  Trajectory traj;
  const auto record = [&](double t_us) {
    if (!options.store_trajectory && t_us < duration_us) return;
    PopulationVector v;
    for (std::size_t i = 0; i < kNumGround; ++i) v.p[i] = y[i];
    traj.times_us.push_back(t_us);
    traj.populations.push_back(v);
  };
  record(0.0);

  double t_us = 0.0;
  double h_us = std::min(options.initial_step_us, duration_us);
  long long steps = 0;
  while (t_us < duration_us) {
    if (++steps > options.max_steps) {
      throw NumericError(
          "evolve_populations: step budget exhausted at t=" +
              std::to_string(t_us) + " us; step size " + std::to_string(h_us),
          h_us);
    }
    h_us = std::min(h_us, duration_us - t_us);
    const double h_s = h_us * 1e-6;

    const detail::RateState full = detail::rk4_step(table, y, h_s);
    detail::RateState half = detail::rk4_step(table, y, 0.5 * h_s);
    half = detail::rk4_step(table, half, 0.5 * h_s);

    double err = 0.0;
    for (std::size_t i = 0; i < kNumGround; ++i) {
      err = std::max(err, std::abs(full[i] - half[i]) / 15.0);
    }

    if (err <= options.abs_tol) {
      y = half;
      // clamp roundoff negatives and renormalize the population block
      double sum = 0.0;
      for (std::size_t i = 0; i < kNumGround; ++i) {
        if (y[i] < 0.0) y[i] = 0.0;
        sum += y[i];
      }
      for (std::size_t i = 0; i < kNumGround; ++i) y[i] /= sum;
      t_us += h_us;
      record(t_us);
    }

    const double grow =
        err > 0.0 ? 0.9 * std::pow(options.abs_tol / err, 0.2) : 5.0;
    h_us *= std::clamp(grow, 0.2, 5.0);
  }

  for (std::size_t mf = 0; mf < 4; ++mf) {
    traj.f1_flux_by_excited_f[mf] = y[kNumGround + mf];
  }
  return traj;
}

// ============================================================================
// Spectra
// ============================================================================

struct SpectrumPoint {
  double detuning_mhz = 0.0;
  double total_rate = 0.0;  // photons/s at end-of-pulse populations
  PopulationVector populations;
  std::array<double, 4> f1_flux_by_excited_f{};
};

/// Evolves the system at each probe detuning and reports the quasi-steady
/// total scattering rate plus the end-of-pulse sublevel populations.
inline std::vector<SpectrumPoint> scan_detunings(
    const std::vector<double>& detunings_mhz, const ProbeSpec& probe_template,
    const ChannelSet& set, double duration_us,
    const PopulationVector& initial = PopulationVector::uniform_f2(),
    const EvolveOptions& options = {.store_trajectory = false}) {
  std::vector<SpectrumPoint> points;
  points.reserve(detunings_mhz.size());
  for (double d : detunings_mhz) {
    if (!std::isfinite(d)) {
      throw std::domain_error("scan_detunings: detunings must be finite");
    }
    ProbeSpec probe = probe_template;
    probe.detuning_mhz = d;
    const Trajectory traj =
        evolve_populations(initial, set, probe, duration_us, options);
    const RateTable table = RateTable::build(set, probe);
    SpectrumPoint pt;
    pt.detuning_mhz = d;
    pt.populations = traj.final_populations();
    pt.f1_flux_by_excited_f = traj.f1_flux_by_excited_f;
    for (std::size_t g = 0; g < kNumGround; ++g) {
      pt.total_rate += pt.populations.p[g] * table.scatter_rate[g];
    }
    points.push_back(pt);
  }
  return points;
}

/// Total fluorescence rate versus probe detuning.
inline std::vector<SpectrumPoint> fluorescence_spectrum(
    const std::vector<double>& detunings_mhz, const ProbeSpec& probe_template,
    const LevelScheme& scheme, double duration_us) {
  return scan_detunings(detunings_mhz, probe_template,
                        ChannelSet::build(scheme), duration_us);
}

/// Per-sublevel ground populations versus probe detuning (same scan; kept as
/// a separate entry point for the population-focused consumers).
inline std::vector<SpectrumPoint> population_spectrum(
    const std::vector<double>& detunings_mhz, const ProbeSpec& probe_template,
    const LevelScheme& scheme, double duration_us) {
  return scan_detunings(detunings_mhz, probe_template,
                        ChannelSet::build(scheme), duration_us);
}

/// Peak location and full width at half maximum of a sampled spectrum,
/// with linear interpolation at the half-maximum crossings.
struct PeakShape {
  double peak_mhz = 0.0;
  double peak_value = 0.0;
  double fwhm_mhz = 0.0;
};

inline PeakShape peak_and_fwhm(const std::vector<SpectrumPoint>& points) {
  if (points.size() < 3) throw std::domain_error("peak_and_fwhm: need >= 3 points");
  std::size_t imax = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].total_rate > points[imax].total_rate) imax = i;
  }
  PeakShape shape;
  shape.peak_mhz = points[imax].detuning_mhz;
  shape.peak_value = points[imax].total_rate;
  const double half = 0.5 * shape.peak_value;

  const auto cross = [&](std::size_t a, std::size_t b) {
    const double x0 = points[a].detuning_mhz, y0 = points[a].total_rate;
    const double x1 = points[b].detuning_mhz, y1 = points[b].total_rate;
    return x0 + (half - y0) * (x1 - x0) / (y1 - y0);
  };

  double left = points.front().detuning_mhz;
  for (std::size_t i = imax; i-- > 0;) {
    if (points[i].total_rate < half) {
      left = cross(i, i + 1);
      break;
    }
  }
  double right = points.back().detuning_mhz;
  for (std::size_t i = imax + 1; i < points.size(); ++i) {
    if (points[i].total_rate < half) {
      right = cross(i - 1, i);
      break;
    }
  }
  shape.fwhm_mhz = right - left;
  return shape;
}

}  // namespace atomread
