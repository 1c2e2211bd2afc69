#pragma once

// The 87Rb D2 sublevel structure probed by pi-polarized light: sublevel
// bookkeeping, light-shifted transition detunings, exact relative transition
// strengths from angular-momentum algebra, spontaneous-decay branching, and
// the per-channel saturated scattering rate.
//
// Strengths are squared dipole matrix elements normalized to the cycling
// transition |2,+2> -> |3',+3>; they are exact rationals (see wigner.hpp),
// so forbidden channels are exactly zero.

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "atomread/wigner.hpp"

namespace atomread {

// nuclear spin and electronic angular momenta of the 87Rb D2 line (doubled)
inline constexpr long kTwoNuclearSpin = 3;   // I = 3/2
inline constexpr long kTwoJGround = 1;       // J  = 1/2 (5S1/2)
inline constexpr long kTwoJExcited = 3;      // J' = 3/2 (5P3/2)

enum class Manifold {
  ground_f1,
  ground_f2,
  excited_f0,
  excited_f1,
  excited_f2,
  excited_f3,
};

inline bool is_ground(Manifold m) {
  return m == Manifold::ground_f1 || m == Manifold::ground_f2;
}

inline int manifold_f(Manifold m) {
  switch (m) {
    case Manifold::ground_f1: return 1;
    case Manifold::ground_f2: return 2;
    case Manifold::excited_f0: return 0;
    case Manifold::excited_f1: return 1;
    case Manifold::excited_f2: return 2;
    case Manifold::excited_f3: return 3;
  }
  throw std::domain_error("manifold_f: invalid manifold");
}

struct Sublevel {
  Manifold manifold = Manifold::ground_f2;
  int m_f = 0;

  int f() const { return manifold_f(manifold); }
  bool ground() const { return is_ground(manifold); }

  void validate() const {
    if (std::abs(m_f) > f()) {
      throw std::domain_error("Sublevel: |m_F| must be <= F");
    }
  }

  bool operator==(const Sublevel&) const = default;
};

inline constexpr std::size_t kNumGround = 8;
inline constexpr std::size_t kNumExcited = 16;

/// Ground sublevels in index order: F=1 m=-1..1, then F=2 m=-2..2.
inline const std::array<Sublevel, kNumGround>& ground_sublevels() {
  static const std::array<Sublevel, kNumGround> levels = {{
      {Manifold::ground_f1, -1}, {Manifold::ground_f1, 0},
      {Manifold::ground_f1, 1},  {Manifold::ground_f2, -2},
      {Manifold::ground_f2, -1}, {Manifold::ground_f2, 0},
      {Manifold::ground_f2, 1},  {Manifold::ground_f2, 2},
  }};
  return levels;
}

/// Excited sublevels in index order: F'=0, F'=1 m=-1..1, F'=2 m=-2..2,
/// F'=3 m=-3..3.
inline const std::array<Sublevel, kNumExcited>& excited_sublevels() {
  static const std::array<Sublevel, kNumExcited> levels = [] {
    std::array<Sublevel, kNumExcited> out{};
    std::size_t i = 0;
    const Manifold manifolds[] = {Manifold::excited_f0, Manifold::excited_f1,
                                  Manifold::excited_f2, Manifold::excited_f3};
    for (Manifold m : manifolds) {
      const int f = manifold_f(m);
      for (int mf = -f; mf <= f; ++mf) out[i++] = {m, mf};
    }
    return out;
  }();
  return levels;
}

inline std::size_t ground_index(const Sublevel& s) {
  s.validate();
  if (!s.ground()) throw std::domain_error("ground_index: not a ground sublevel");
  return s.manifold == Manifold::ground_f1
             ? static_cast<std::size_t>(s.m_f + 1)
             : static_cast<std::size_t>(3 + s.m_f + 2);
}

inline std::size_t excited_index(const Sublevel& s) {
  s.validate();
  if (s.ground()) throw std::domain_error("excited_index: not an excited sublevel");
  const int f = s.f();
  const int base[] = {0, 1, 4, 9};  // cumulative multiplicities
  return static_cast<std::size_t>(base[f] + s.m_f + f);
}

// ============================================================================
// Level scheme (shifts and splittings)
// ============================================================================

/// Energy bookkeeping for the probed manifold. Trap-induced shifts of the
/// ground manifold (uniform) and of F'=3 (per |m|) default to the values of
/// this apparatus; atomic constants default to the standard 87Rb D2 values
/// and are normally loaded from a constants file.
struct LevelScheme {
  double delta_g_mhz = -27.0;                          // ground AC-Stark shift
  std::array<double, 4> delta_e3_mhz{21.0, 19.0, 13.0, 3.0};  // F'=3 by |m|
  std::array<double, 3> delta_e2_mhz{0.0, 0.0, 0.0};   // F'=2 by |m|
  std::array<double, 2> delta_e1_mhz{0.0, 0.0};        // F'=1 by |m|
  double delta_e0_mhz = 0.0;

  double ground_hyperfine_mhz = 6834.683;  // F=1 below F=2
  double excited_f3_f2_mhz = 266.650;
  double excited_f2_f1_mhz = 156.947;
  double excited_f1_f0_mhz = 72.218;
  double natural_linewidth_mhz = 6.0666;

  /// Stark shift of an excited sublevel.
  double excited_shift_mhz(const Sublevel& e) const {
    const auto am = static_cast<std::size_t>(std::abs(e.m_f));
    switch (e.manifold) {
      case Manifold::excited_f3: return delta_e3_mhz[am];
      case Manifold::excited_f2: return delta_e2_mhz[am];
      case Manifold::excited_f1: return delta_e1_mhz[am];
      case Manifold::excited_f0: return delta_e0_mhz;
      default:
        throw std::domain_error("excited_shift_mhz: not an excited sublevel");
    }
  }

  /// Hyperfine offset of an excited manifold relative to F'=3.
  double excited_hyperfine_offset_mhz(Manifold m) const {
    switch (m) {
      case Manifold::excited_f3: return 0.0;
      case Manifold::excited_f2: return -excited_f3_f2_mhz;
      case Manifold::excited_f1: return -excited_f3_f2_mhz - excited_f2_f1_mhz;
      case Manifold::excited_f0:
        return -excited_f3_f2_mhz - excited_f2_f1_mhz - excited_f1_f0_mhz;
      default:
        throw std::domain_error("excited_hyperfine_offset_mhz: not excited");
    }
  }
};

/// Readout probe: detuning is quoted relative to the untrapped-atom
/// F=2 -> F'=3 resonance. Polarization is fixed pi (q = 0).
struct ProbeSpec {
  double detuning_mhz = 0.0;
  double saturation = 4.0;  // on-resonance s of the strongest transition

  void validate() const {
    if (!(saturation >= 0.0) || !std::isfinite(detuning_mhz)) {
      throw std::domain_error("ProbeSpec: need s >= 0 and finite detuning");
    }
  }
};

// ============================================================================
// Transition strengths and branching
// ============================================================================

/// Exact squared dipole strength of ground -> excited with polarization q,
/// relative to the cycling transition. Zero (exactly) when selection rules
/// forbid the transition.
inline wigner::Rational relative_strength_exact(const Sublevel& g,
                                                const Sublevel& e, int q) {
  g.validate();
  e.validate();
  if (!g.ground() || e.ground()) {
    throw std::domain_error("relative_strength: need ground -> excited");
  }
  if (q < -1 || q > 1) {
    throw std::domain_error("relative_strength: q must be in {-1, 0, +1}");
  }

  // explicit return type: gmpxx expression templates must not escape
  const auto line_strength = [](const Sublevel& gs, const Sublevel& es,
                                int pol) -> wigner::Rational {
    const long two_fg = 2 * gs.f();
    const long two_fe = 2 * es.f();
    const wigner::Rational w3 = wigner::three_j_squared(
        two_fe, 2, two_fg, -2 * es.m_f, 2 * pol, 2 * gs.m_f);
    const wigner::Rational w6 =
        wigner::six_j_squared(kTwoJGround, kTwoJExcited, 2, two_fe, two_fg,
                              kTwoNuclearSpin);
    return wigner::Rational((two_fe + 1) * (two_fg + 1)) * w3 * w6;
  };

  static const wigner::Rational cycling = line_strength(
      {Manifold::ground_f2, 2}, {Manifold::excited_f3, 3}, 1);
  wigner::Rational rel = line_strength(g, e, q) / cycling;
  rel.canonicalize();
  return rel;
}

inline double relative_strength(const Sublevel& g, const Sublevel& e, int q) {
  return relative_strength_exact(g, e, q).get_d();
}

/// Spontaneous-decay branching probabilities of an excited sublevel over the
/// 8 ground sublevels (indexed per ground_index). Sums to 1 exactly in
/// rational arithmetic before the final double conversion.
inline std::array<double, kNumGround> branching_ratios(const Sublevel& e) {
  e.validate();
  if (e.ground()) throw std::domain_error("branching_ratios: need excited level");

  std::array<wigner::Rational, kNumGround> strengths;
  wigner::Rational total(0);
  for (const Sublevel& g : ground_sublevels()) {
    const int q = e.m_f - g.m_f;
    wigner::Rational s(0);
    if (q >= -1 && q <= 1) s = relative_strength_exact(g, e, q);
    strengths[ground_index(g)] = s;
    total += s;
  }
  if (total == 0) {
    throw std::domain_error("branching_ratios: level has no decay channel");
  }
  std::array<double, kNumGround> out{};
  for (std::size_t i = 0; i < kNumGround; ++i) {
    wigner::Rational b = strengths[i] / total;
    b.canonicalize();
    out[i] = b.get_d();
  }
  return out;
}

// ============================================================================
// Shifted detunings and channel rates
// ============================================================================

/// Probe-frame resonance position of a transition: the probe detuning (from
/// the untrapped F=2 -> F'=3 line) at which this channel is resonant, after
/// trap shifts and hyperfine offsets.
inline double channel_resonance_mhz(const Sublevel& g, const Sublevel& e,
                                    const LevelScheme& scheme) {
  double res = scheme.excited_shift_mhz(e) - scheme.delta_g_mhz +
               scheme.excited_hyperfine_offset_mhz(e.manifold);
  if (g.manifold == Manifold::ground_f1) res += scheme.ground_hyperfine_mhz;
  return res;
}

/// Detuning of the probe from the light-shifted transition frequency.
/// Throws for a forbidden pair.
inline double shifted_detuning(const Sublevel& g, const Sublevel& e,
                               const ProbeSpec& probe,
                               const LevelScheme& scheme) {
  const int q = e.m_f - g.m_f;
  if (q < -1 || q > 1 || relative_strength_exact(g, e, q) == 0) {
    throw std::domain_error("shifted_detuning: forbidden transition");
  }
  return probe.detuning_mhz - channel_resonance_mhz(g, e, scheme);
}

namespace detail {

/// Total pi-polarized saturation seen by one ground sublevel.
inline double total_saturation(const Sublevel& g, const ProbeSpec& probe) {
  double s = 0.0;
  for (const Sublevel& e : excited_sublevels()) {
    if (e.m_f != g.m_f) continue;
    s += probe.saturation * relative_strength(g, e, 0);
  }
  return s;
}

inline double lorentzian_rate(double strength, double s_channel, double s_total,
                              double detuning_mhz, double linewidth_mhz) {
  if (strength <= 0.0) return 0.0;
  const double gamma_rad = 2.0 * std::numbers::pi * linewidth_mhz * 1e6;
  const double x = 2.0 * detuning_mhz / linewidth_mhz;
  return 0.5 * gamma_rad * s_channel / (1.0 + s_total + x * x);
}

}  // namespace detail

/// Photon scattering rate (1/s) of one pi-driven channel: the saturated
/// Lorentzian with this channel's strength-scaled saturation and the total
/// saturation of its ground sublevel in the denominator.
inline double excitation_rate(const Sublevel& g, const Sublevel& e,
                              const ProbeSpec& probe,
                              const LevelScheme& scheme) {
  probe.validate();
  const double strength = (e.m_f == g.m_f) ? relative_strength(g, e, 0) : 0.0;
  if (strength == 0.0) return 0.0;
  const double detuning = shifted_detuning(g, e, probe, scheme);
  return detail::lorentzian_rate(strength, probe.saturation * strength,
                                 detail::total_saturation(g, probe), detuning,
                                 scheme.natural_linewidth_mhz);
}

}  // namespace atomread
