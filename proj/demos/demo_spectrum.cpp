// Rate-equation scan over probe detuning: fluorescence spectrum, dark-state
// pumping, and the sublevel populations at a few detunings.

#include <cstdio>

#include "atomread/rate_equations.hpp"

using namespace atomread;

int main() {
  const LevelScheme scheme;  // built-in 87Rb D2 defaults
  ProbeSpec probe;
  probe.saturation = 4.0;

  std::vector<double> detunings;
  for (double d = 16.0; d <= 76.0; d += 1.0) detunings.push_back(d);
  const auto points = fluorescence_spectrum(detunings, probe, scheme, 200.0);

  const PeakShape shape = peak_and_fwhm(points);
  std::printf("fluorescence peak %+.1f MHz, FWHM %.1f MHz\n\n", shape.peak_mhz,
              shape.fwhm_mhz);

  std::printf("detuning   rate(1/s)   P(F=1)   P(|2,0>)\n");
  for (std::size_t i = 0; i < points.size(); i += 8) {
    const auto& pt = points[i];
    std::printf("%+7.1f   %9.3e   %.4f   %.4f\n", pt.detuning_mhz,
                pt.total_rate, pt.populations.f1_total(), pt.populations.p[5]);
  }
  return 0;
}
