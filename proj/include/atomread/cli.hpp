#pragma once

// Command-line pipeline glue: simulate / analyze / fit / spectrum /
// distribution / report subcommands that bind the library modules together
// and emit plot-ready tables. Every output is deterministic for a fixed
// (config, seed) pair.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "atomread/analysis.hpp"
#include "atomread/config.hpp"
#include "atomread/counting.hpp"
#include "atomread/fitting.hpp"
#include "atomread/rate_equations.hpp"
#include "atomread/sim.hpp"
#include "atomread/tables.hpp"
#include "atomread/trials_io.hpp"

namespace atomread {

namespace cli_detail {

inline std::string format_kcps(double rate_per_s) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", rate_per_s / 1e3);
  return buf;
}

/// Options fingerprint for table provenance when no config file is involved.
inline std::string options_fingerprint(const std::vector<std::string>& parts) {
  std::string joined;
  for (const auto& p : parts) {
    joined += p;
    joined += '\n';
  }
  return to_hex(fnv1a64(joined));
}

// ----------------------------------------------------------------------------
// simulate
// ----------------------------------------------------------------------------

inline int cmd_simulate(const std::string& config_path,
                        const std::string& out_path,
                        std::optional<std::uint64_t> seed_override,
                        unsigned threads, std::ostream& out) {
  RunConfig rc = RunConfig::from_file(config_path);
  if (seed_override) rc.sim.seed = *seed_override;
  const auto records = simulate_dataset(rc.sim, threads);
  save_trials(records, out_path);
  out << "wrote " << records.size() << " trials (" << rc.sim.n_bright_trials
      << " bright, " << rc.sim.n_dark_trials << " dark) to " << out_path
      << "\n"
      << "seed " << rc.sim.seed << ", config " << rc.fingerprint << "\n";
  return 0;
}

// ----------------------------------------------------------------------------
// analyze
// ----------------------------------------------------------------------------

inline int cmd_analyze(const std::string& trials_path, double bin_width_us,
                       double horizon_us, std::vector<long long> thresholds,
                       bool post_select, const std::string& out_path,
                       double histogram_at_us,
                       const std::string& histogram_out, std::ostream& out) {
  if (histogram_at_us > 0.0 && histogram_at_us > horizon_us) {
    throw std::domain_error(
        "conflicting options: --histogram-at lies beyond --horizon");
  }
  std::vector<TrialRecord> bright, dark;
  std::vector<TrialRecord> all;
  for_each_trial(trials_path, [&](const TrialRecord& rec) {
    (rec.prep_state == PrepState::bright ? bright : dark).push_back(rec);
    all.push_back(rec);
  });

  const FidelityCurve curve = error_curves(bright, dark, thresholds,
                                           bin_width_us, horizon_us,
                                           post_select);

  Table table;
  table.add_meta("source", trials_path);
  {
    std::ifstream in(trials_path, std::ios::binary);
    const std::string content{std::istreambuf_iterator<char>(in),
                              std::istreambuf_iterator<char>()};
    table.add_meta("source_hash", to_hex(fnv1a64(content)));
  }
  table.add_meta("options",
                 options_fingerprint({std::to_string(bin_width_us),
                                      std::to_string(horizon_us),
                                      std::to_string(post_select)}));
  table.add_meta("n_bright", std::to_string(curve.n_bright));
  table.add_meta("n_dark", std::to_string(curve.n_dark));
  table.add_meta("bin_width_us", std::to_string(bin_width_us));
  table.add_meta("post_select", post_select ? "true" : "false");
  table.columns.push_back("time_us");
  for (const auto& tc : curve.thresholds) {
    const std::string suffix = std::to_string(tc.n_thresh);
    table.columns.push_back("eps_bright_" + suffix);
    table.columns.push_back("eps_dark_" + suffix);
    table.columns.push_back("fidelity_" + suffix);
    table.columns.push_back("fidelity_ci_low_" + suffix);
    table.columns.push_back("fidelity_ci_high_" + suffix);
  }
  for (std::size_t j = 0; j < curve.times_us.size(); ++j) {
    std::vector<double> row{curve.times_us[j]};
    for (const auto& tc : curve.thresholds) {
      row.push_back(tc.eps_bright[j]);
      row.push_back(tc.eps_dark[j]);
      row.push_back(tc.fidelity[j]);
      row.push_back(tc.ci_low[j]);
      row.push_back(tc.ci_high[j]);
    }
    table.rows.push_back(std::move(row));
  }
  table.write(out_path);

  const OperatingPoint best = optimal_operating_point(curve);
  const RetentionEstimate retention = retention_rate(all);
  out << "wrote " << out_path << "\n";
  char line[160];
  std::snprintf(line, sizeof(line),
                "optimal operating point: threshold %lld at %.0f us, "
                "fidelity %.4f [%.4f, %.4f]\n",
                best.n_thresh, best.time_us, best.fidelity, best.ci.low,
                best.ci.high);
  out << line;
  std::snprintf(line, sizeof(line),
                "retention: %.4f [%.4f, %.4f] over %lld trials\n",
                retention.proportion, retention.ci.low, retention.ci.high,
                retention.n_trials);
  out << line;

  if (!histogram_out.empty()) {
    const CountHistogram hist =
        histogram_at(all, histogram_at_us > 0 ? histogram_at_us : horizon_us,
                     horizon_us, post_select);
    Table ht;
    ht.add_meta("source", trials_path);
    ht.add_meta("at_time_us", std::to_string(hist.at_time_us));
    ht.columns = {"photon_count", "bright_trials", "dark_trials"};
    const std::size_t n_rows =
        std::max(hist.counts_bright.size(), hist.counts_dark.size());
    for (std::size_t n = 0; n < n_rows; ++n) {
      ht.rows.push_back(
          {static_cast<double>(n),
           n < hist.counts_bright.size()
               ? static_cast<double>(hist.counts_bright[n])
               : 0.0,
           n < hist.counts_dark.size()
               ? static_cast<double>(hist.counts_dark[n])
               : 0.0});
    }
    ht.write(histogram_out);
    out << "wrote " << histogram_out << "\n";
  }
  return 0;
}

// ----------------------------------------------------------------------------
// fit
// ----------------------------------------------------------------------------

inline int cmd_fit(const std::string& curve_path, double r_bg_kcps,
                   long long n_thresh, double eta, int bootstrap,
                   std::uint64_t seed, const std::string& label,
                   const std::string& out_path, const std::string& band_path,
                   std::ostream& out) {
  const LoadedTable table = load_table(curve_path);
  ErrorCurveData data;
  const auto times_us = table.column("time_us");
  const auto eps = table.column("eps_bright_" + std::to_string(n_thresh));
  for (std::size_t i = 0; i < times_us.size(); ++i) {
    data.times_s.push_back(times_us[i] * 1e-6);
    data.eps.push_back(eps[i]);
  }
  const std::string n_bright = table.meta_value("n_bright");
  if (n_bright.empty()) {
    throw DataError(curve_path + ": missing n_bright metadata");
  }
  data.n_trials = std::stod(n_bright);

  FitResult fit = fit_bright_error(data, r_bg_kcps * 1e3, n_thresh);
  fit.eta = eta;
  if (bootstrap > 0) {
    BootstrapSpec spec;
    spec.replicates = bootstrap;
    spec.seed = seed;
    fit = bootstrap_calibrate(fit, spec);
  }

  std::ostringstream report;
  report << "# bright-error model fit\n";
  report << "label = " << (label.empty() ? curve_path : label) << "\n";
  report << "n_thresh = " << fit.n_thresh << "\n";
  report << "eta = " << fit.eta << "\n";
  report << "r_bg_kcps = " << format_kcps(fit.r_bg) << "\n";
  report << "eta_r0_kcps = " << format_kcps(fit.eta_r0) << "\n";
  report << "eta_r0_se_kcps = " << format_kcps(fit.eta_r0_se) << "\n";
  report << "r_loss_kcps = " << format_kcps(fit.r_loss) << "\n";
  report << "r_loss_se_kcps = " << format_kcps(fit.r_loss_se) << "\n";
  char ratio_buf[32];
  std::snprintf(ratio_buf, sizeof(ratio_buf), "%.6g", fit.ratio());
  report << "ratio = " << ratio_buf << "\n";
  report << "objective = " << fit.objective_value << "\n";
  report << "bootstrap_calibrated = "
         << (fit.bootstrap_calibrated ? "true" : "false") << "\n";
  if (out_path.empty() || out_path == "-") {
    out << report.str();
  } else {
    atomic_write_file(out_path, report.str());
    out << "wrote " << out_path << "\n";
  }
  out << "eta_r0 = " << format_kcps(fit.eta_r0) << " +- "
      << format_kcps(fit.eta_r0_se) << " kcps, r_loss = "
      << format_kcps(fit.r_loss) << " +- " << format_kcps(fit.r_loss_se)
      << " kcps, ratio = " << ratio_buf << "\n";

  if (!band_path.empty()) {
    const ConfidenceBand band = confidence_band(fit, data.times_s);
    Table bt;
    bt.add_meta("source", curve_path);
    bt.add_meta("seed", std::to_string(seed));
    bt.add_meta("method", band.method == BandMethod::parametric
                              ? "parametric"
                              : "residual_bootstrap");
    bt.columns = {"time_us", "eps_fit", "band_low", "band_high"};
    for (std::size_t i = 0; i < data.times_s.size(); ++i) {
      bt.rows.push_back({data.times_s[i] * 1e6, fit.predict(data.times_s[i]),
                         band.low[i], band.high[i]});
    }
    bt.write(band_path);
    out << "wrote " << band_path << "\n";
  }
  return 0;
}

// ----------------------------------------------------------------------------
// spectrum
// ----------------------------------------------------------------------------

inline int cmd_spectrum(double from_mhz, double to_mhz, int points,
                        double saturation, double duration_us,
                        const std::string& constants_path,
                        const std::string& out_path, std::ostream& out) {
  if (!(from_mhz < to_mhz)) {
    throw std::domain_error(
        "conflicting options: --from must be strictly below --to");
  }
  if (points < 3) throw std::domain_error("--points must be >= 3");

  const LevelScheme scheme = constants_path.empty()
                                 ? default_level_scheme()
                                 : load_level_scheme(constants_path);
  ProbeSpec probe;
  probe.saturation = saturation;
  std::vector<double> detunings(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    detunings[static_cast<std::size_t>(i)] =
        from_mhz + (to_mhz - from_mhz) * i / (points - 1);
  }
  const auto spectrum =
      fluorescence_spectrum(detunings, probe, scheme, duration_us);

  Table table;
  table.add_meta("options", options_fingerprint(
                                {std::to_string(from_mhz),
                                 std::to_string(to_mhz), std::to_string(points),
                                 std::to_string(saturation),
                                 std::to_string(duration_us)}));
  table.add_meta("saturation", std::to_string(saturation));
  table.add_meta("duration_us", std::to_string(duration_us));
  table.columns = {"detuning_mhz", "scatter_rate_per_s", "pop_f1_total"};
  for (const Sublevel& g : ground_sublevels()) {
    table.columns.push_back("pop_f" + std::to_string(g.f()) + "_m" +
                            (g.m_f < 0 ? std::string("minus") : std::string(
                                             g.m_f > 0 ? "plus" : "")) +
                            std::to_string(std::abs(g.m_f)));
  }
  table.columns.push_back("f1_flux_via_fprime1");
  table.columns.push_back("f1_flux_via_fprime2");
  for (const auto& pt : spectrum) {
    std::vector<double> row{pt.detuning_mhz, pt.total_rate,
                            pt.populations.f1_total()};
    for (double p : pt.populations.p) row.push_back(p);
    row.push_back(pt.f1_flux_by_excited_f[1]);
    row.push_back(pt.f1_flux_by_excited_f[2]);
    table.rows.push_back(std::move(row));
  }
  table.write(out_path);

  const PeakShape shape = peak_and_fwhm(spectrum);
  char line[120];
  std::snprintf(line, sizeof(line),
                "peak %.2f MHz, FWHM %.2f MHz, peak rate %.4g /s\n",
                shape.peak_mhz, shape.fwhm_mhz, shape.peak_value);
  out << "wrote " << out_path << "\n" << line;
  return 0;
}

// ----------------------------------------------------------------------------
// distribution
// ----------------------------------------------------------------------------

inline int cmd_distribution(double eta_r0_kcps, double r_loss_kcps,
                            double r_bg_kcps, double t_us, double eta,
                            const std::string& out_path, std::ostream& out) {
  const BrightModel model = BrightModel::from_eta_r0(
      eta_r0_kcps * 1e3, r_bg_kcps * 1e3, r_loss_kcps * 1e3, eta);
  const double t = t_us * 1e-6;
  const CountPMF pmf = pmf_bright(t, model);

  Table table;
  table.add_meta("eta_r0_kcps", std::to_string(eta_r0_kcps));
  table.add_meta("r_loss_kcps", std::to_string(r_loss_kcps));
  table.add_meta("r_bg_kcps", std::to_string(r_bg_kcps));
  table.add_meta("t_us", std::to_string(t_us));
  table.columns = {"n", "probability"};
  for (std::size_t n = 0; n < pmf.probabilities.size(); ++n) {
    table.rows.push_back({static_cast<double>(n), pmf.probabilities[n]});
  }
  if (out_path.empty() || out_path == "-") {
    out << table.render();
  } else {
    table.write(out_path);
    out << "wrote " << out_path << "\n";
  }
  char line[160];
  std::snprintf(line, sizeof(line),
                "sum %.12f over n <= %lld; eps_bright(1) %.6g, "
                "eps_bright(2) %.6g\n",
                pmf.sum(), pmf.n_max, bright_error(t, 1, model),
                bright_error(t, 2, model));
  out << line;
  return 0;
}

// ----------------------------------------------------------------------------
// report
// ----------------------------------------------------------------------------

inline int cmd_report(const std::vector<std::string>& fit_paths,
                      const std::string& out_path, std::ostream& out) {
  std::vector<FitResult> fits;
  std::vector<std::string> labels;
  for (const auto& path : fit_paths) {
    const KeyValueConfig cfg = KeyValueConfig::parse_file(path);
    FitResult fit;
    fit.eta_r0 = cfg.get_double("eta_r0_kcps", 0.0) * 1e3;
    fit.eta_r0_se = cfg.get_double("eta_r0_se_kcps", 0.0) * 1e3;
    fit.r_loss = cfg.get_double("r_loss_kcps", 0.0) * 1e3;
    fit.r_loss_se = cfg.get_double("r_loss_se_kcps", 0.0) * 1e3;
    fit.r_bg = cfg.get_double("r_bg_kcps", 0.0) * 1e3;
    fit.n_thresh = cfg.get_int("n_thresh", 1);
    fit.eta = cfg.get_double("eta", 1.0);
    labels.push_back(cfg.get_string("label", path));
    cfg.get_double("ratio", 0.0);
    cfg.get_double("objective", 0.0);
    cfg.get_string("bootstrap_calibrated", "");
    cfg.reject_unknown();
    fits.push_back(fit);
  }
  const FitReport report = fit_report(fits, labels);

  std::ostringstream text;
  text << "label, r_bg_kcps, eta_r0_kcps, eta_r0_se_kcps, r_loss_kcps, "
          "r_loss_se_kcps, ratio\n";
  for (const auto& row : report.rows) {
    char line[200];
    std::snprintf(line, sizeof(line), "%s, %.6g, %.6g, %.6g, %.6g, %.6g, %.4f\n",
                  row.label.c_str(), row.r_bg / 1e3, row.eta_r0 / 1e3,
                  row.eta_r0_se / 1e3, row.r_loss / 1e3, row.r_loss_se / 1e3,
                  row.ratio);
    text << line;
  }
  text << "best ratio: ";
  for (std::size_t i = 0; i < report.best_labels.size(); ++i) {
    if (i > 0) text << ", ";
    text << report.best_labels[i];
  }
  char best[40];
  std::snprintf(best, sizeof(best), " (%.4f)\n", report.best_ratio);
  text << best;

  if (out_path.empty() || out_path == "-") {
    out << text.str();
  } else {
    atomic_write_file(out_path, text.str());
    out << "wrote " << out_path << "\n";
  }
  return 0;
}

}  // namespace cli_detail

/// Entry point shared by the binary and the in-process tests: parses argv,
/// dispatches the subcommand pipelines, reports errors on stderr, and
/// returns the process exit status.
inline int run_command(std::vector<std::string> args,
                       std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  CLI::App app{"single-atom fluorescence readout toolkit"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a trial dataset");
  std::string sim_config, sim_out = "dataset.trials";
  std::uint64_t sim_seed = 0;
  bool sim_seed_set = false;
  unsigned sim_threads = 1;
  sim->add_option("--config", sim_config, "run configuration file")
      ->required();
  sim->add_option("--out", sim_out, "output trial file");
  sim->add_option("--seed", sim_seed, "override the config seed")
      ->each([&sim_seed_set](const std::string&) { sim_seed_set = true; });
  sim->add_option("--threads", sim_threads, "worker threads")
      ->check(CLI::Range(1u, 64u));

  // analyze
  auto* ana = app.add_subcommand("analyze", "time-resolved fidelity analysis");
  std::string ana_trials, ana_out = "curves.csv", ana_hist_out;
  double ana_bin = 1.0, ana_horizon = 200.0, ana_hist_at = 0.0;
  std::vector<long long> ana_thresholds = {1, 2, 3};
  bool ana_no_post_select = false;
  ana->add_option("trials", ana_trials, "trial file")->required();
  ana->add_option("--bin-width", ana_bin, "bin width in us");
  ana->add_option("--horizon", ana_horizon, "analysis horizon in us");
  ana->add_option("--thresholds", ana_thresholds,
                  "photon thresholds (comma-separated or repeated)")
      ->delimiter(',');
  ana->add_flag("--no-post-select", ana_no_post_select,
                "keep trials that lost the atom");
  ana->add_option("--out", ana_out, "curve table output");
  ana->add_option("--histogram-at", ana_hist_at,
                  "histogram snapshot time in us");
  ana->add_option("--histogram-out", ana_hist_out, "histogram table output");

  // fit
  auto* fit = app.add_subcommand("fit", "fit the bright-error model");
  std::string fit_curve, fit_out, fit_band, fit_label;
  double fit_rbg = 0.0, fit_eta = 1.0;
  long long fit_nthresh = 1;
  int fit_bootstrap = 100;
  std::uint64_t fit_seed = 0x5eedb007;
  fit->add_option("curve", fit_curve, "curve table from analyze")->required();
  fit->add_option("--rbg", fit_rbg, "measured background rate, kcps")
      ->required();
  fit->add_option("--nthresh", fit_nthresh, "threshold of the fitted curve");
  fit->add_option("--eta", fit_eta, "measured detection efficiency");
  fit->add_option("--bootstrap", fit_bootstrap,
                  "bootstrap replicates for errors (0 disables)");
  fit->add_option("--seed", fit_seed, "bootstrap seed");
  fit->add_option("--label", fit_label, "label recorded in the report");
  fit->add_option("--out", fit_out, "fit report output ('-' for stdout)");
  fit->add_option("--band", fit_band, "95% confidence band table output");

  // spectrum
  auto* spec = app.add_subcommand(
      "spectrum", "rate-equation fluorescence spectrum scan");
  double sp_from = 10.0, sp_to = 90.0, sp_sat = 4.0, sp_dur = 200.0;
  int sp_points = 161;
  std::string sp_constants, sp_out = "spectrum.csv";
  spec->add_option("--from", sp_from, "scan start, MHz from the free-atom line");
  spec->add_option("--to", sp_to, "scan end, MHz");
  spec->add_option("--points", sp_points, "number of scan points");
  spec->add_option("--saturation", sp_sat, "probe saturation parameter");
  spec->add_option("--duration", sp_dur, "pulse duration, us");
  spec->add_option("--constants", sp_constants, "level-scheme constants file");
  spec->add_option("--out", sp_out, "spectrum table output");

  // distribution
  auto* dist = app.add_subcommand(
      "distribution", "closed-form bright count distribution");
  double d_eta_r0 = 39.4, d_rl = 1.31, d_rbg = 1.05, d_t = 200.0,
         d_eta = 1.0;
  std::string d_out;
  dist->add_option("--eta-r0", d_eta_r0, "detected atom rate, kcps")
      ->required();
  dist->add_option("--rl", d_rl, "leak rate, kcps")->required();
  dist->add_option("--rbg", d_rbg, "background rate, kcps")->required();
  dist->add_option("--t", d_t, "readout time, us")->required();
  dist->add_option("--eta", d_eta, "detection efficiency");
  dist->add_option("--out", d_out, "output table ('-' or empty for stdout)");

  // report
  auto* rep = app.add_subcommand("report", "compare fit results");
  std::vector<std::string> rep_fits;
  std::string rep_out;
  rep->add_option("fits", rep_fits, "fit report files")->required();
  rep->add_option("--out", rep_out, "comparison output ('-' for stdout)");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("atomread");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << e.what() << "\n";
    err << "run with --help for usage\n";
    return 2;
  }

  try {
    if (sim->parsed()) {
      return cli_detail::cmd_simulate(
          sim_config, sim_out,
          sim_seed_set ? std::optional<std::uint64_t>(sim_seed) : std::nullopt,
          sim_threads, out);
    }
    if (ana->parsed()) {
      return cli_detail::cmd_analyze(ana_trials, ana_bin, ana_horizon,
                                     ana_thresholds, !ana_no_post_select,
                                     ana_out, ana_hist_at, ana_hist_out, out);
    }
    if (fit->parsed()) {
      return cli_detail::cmd_fit(fit_curve, fit_rbg, fit_nthresh, fit_eta,
                                 fit_bootstrap, fit_seed, fit_label, fit_out,
                                 fit_band, out);
    }
    if (spec->parsed()) {
      return cli_detail::cmd_spectrum(sp_from, sp_to, sp_points, sp_sat,
                                      sp_dur, sp_constants, sp_out, out);
    }
    if (dist->parsed()) {
      return cli_detail::cmd_distribution(d_eta_r0, d_rl, d_rbg, d_t, d_eta,
                                          d_out, out);
    }
    if (rep->parsed()) {
      return cli_detail::cmd_report(rep_fits, rep_out, out);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << "no subcommand\n";
  return 2;
}

inline int run_command(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_command(std::move(args));
}

}  // namespace atomread
