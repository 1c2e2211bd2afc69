// Closed-form count statistics for a bright-prepared atom: tabulates the
// distribution, threshold errors, and the fidelity operating point for one
// parameter set.

#include <cstdio>

#include "atomread/counting.hpp"

using namespace atomread;

int main() {
  // detected rate 39.4 kcps, background 0.7 kcps, leak 1.31 kcps
  const BrightModel model = BrightModel::from_eta_r0(39.4e3, 0.7e3, 1.31e3);
  const double t = 200e-6;

  std::printf("count distribution at %.0f us:\n", t * 1e6);
  const CountPMF pmf = pmf_bright(t, model);
  for (long long n = 0; n <= 15; ++n) {
    std::printf("  P(n = %2lld) = %.6f\n", n, pmf.probabilities[n]);
  }
  std::printf("  (sum over n <= %lld: %.12f)\n\n", pmf.n_max, pmf.sum());

  for (long long thr : {1LL, 2LL, 3LL}) {
    std::printf("threshold %lld: eps_bright = %.5f, eps_dark = %.5f, "
                "fidelity = %.5f\n",
                thr, bright_error(t, thr, model), dark_error(t, thr, 0.7e3),
                model_fidelity(t, thr, model, 0.7e3));
  }

  const auto peak = scan_model_fidelity(model, 0.7e3, 2, 300e-6, 1e-6);
  std::printf("\nbest two-photon operating point: F = %.5f at %.0f us\n",
              peak.fidelity, peak.t * 1e6);
  return 0;
}
