#pragma once

// Published reference parameters of the readout apparatus used across the
// test and acceptance suites: fitted (eta*R0, R_l) with their quoted
// standard errors and the measured background for three probe detunings,
// plus the measured detection efficiency, trial counts, and retention.
// Rates in counts/s, times in seconds unless suffixed otherwise.

namespace refparams {

struct ProbeRow {
  const char* label;
  double r_bg;        // counts/s
  double eta_r0;      // counts/s
  double eta_r0_se;   // counts/s
  double r_loss;      // 1/s
  double r_loss_se;   // 1/s
  double quoted_ratio;
};

inline constexpr ProbeRow kProbe40{"+40 MHz", 1.05e3, 39.4e3, 0.2e3,
                                   1.31e3, 0.04e3, 30.08};
inline constexpr ProbeRow kProbe46{"+46 MHz", 1.13e3, 58.7e3, 0.5e3,
                                   4.1e3, 0.1e3, 14.3};
inline constexpr ProbeRow kProbe52{"+52 MHz", 1.12e3, 33.6e3, 0.3e3,
                                   3.63e3, 0.1e3, 8.2};
inline constexpr ProbeRow kProbeRows[] = {kProbe40, kProbe46, kProbe52};

inline constexpr double kDetectionEfficiency = 0.0096;
inline constexpr double kFidelityRunBackground = 0.7e3;  // counts/s
inline constexpr double kReadoutDurationUs = 200.0;
inline constexpr long long kBrightTrials = 3583;
inline constexpr long long kDarkTrials = 3550;
inline constexpr double kRetention = 0.971;

// measured fidelity operating points (value, uncertainty, time, time window)
inline constexpr double kPeakF1 = 0.950;
inline constexpr double kPeakF1Err = 0.003;
inline constexpr double kPeakF1TimeUs = 84.0;
inline constexpr double kPeakF2 = 0.976;
inline constexpr double kPeakF2Err = 0.002;
inline constexpr double kPeakF2TimeUs = 160.0;

}  // namespace refparams
