#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "conveyor/dephasing_estimate.hpp"
#include "conveyor/errors.hpp"
#include "conveyor/lattice_spectrum.hpp"
#include "conveyor/scenario.hpp"

using namespace conveyor;

namespace {

constexpr int exit_config = 2;
constexpr int exit_verification = 3;

struct Options {
  std::string config;
  std::string out;
  std::string preset;
  std::string table_cache;
  std::size_t workers = 0;
  bool oracle = false;
  bool quiet = false;
  double omega_r_kHz = 1.6;
  double temperature_uK = 40.0;
  bool half_amplitude = false;
  double distance_mm = 0.2;
};

// Physical parameters from --config when given, otherwise the defaults.
Scenario base_scenario(const Options& opt) {
  if (!opt.config.empty()) return load_config(opt.config);
  return validate_config(preset_config("fig3a"));
}

int cmd_spectrum(const Options& opt) {
  const Scenario s = base_scenario(opt);
  const BoundSpectrum spec = s.spectrum();
  const ConvergenceReport check = refinement_drift(spec);
  const TrapConstants tc = trap_constants(s.params);
  const double uK = 1e-6 * constants::boltzmann;

  std::printf("bound states          %zu\n", spec.n_bound());
  std::printf("trap frequency        %.4g kHz (harmonic)\n", tc.frequency * 1e-3);
  std::printf("max acceleration      %.5g m/s^2\n", tc.max_acceleration);
  std::printf("E1                    %.6g uK\n", spec.energies[0] / uK);
  std::printf("E2 - E1               %.6g uK\n", spec.level_spacing(0) / uK);
  std::printf("min trip time (sine)  %.5g ms\n",
              1e3 * min_transport_time(ProfileKind::sine, s.distance, tc.max_acceleration));
  std::printf("min trip time (tri)   %.5g ms\n",
              1e3 * min_transport_time(ProfileKind::triangle, s.distance, tc.max_acceleration));
  std::printf("grid refinement drift %.3g\n", check.max_relative_drift);

  if (!opt.out.empty()) {
    std::ofstream out(opt.out);
    if (!out) throw Error("cannot write " + opt.out);
    out << "level,energy_uK,spacing_to_next_kHz\n";
    for (std::size_t i = 0; i < spec.n_bound(); ++i) {
      out << i + 1 << ',' << spec.energies[i] / uK << ',';
      if (i + 1 < spec.n_bound()) {
        out << spec.level_spacing(i) / (constants::two_pi * constants::hbar) * 1e-3;
      }
      out << '\n';
    }
  }
  return 0;
}

int cmd_sweep(const Options& opt) {
  if (opt.config.empty() == opt.preset.empty()) {
    throw ConfigError({"sweep needs exactly one of --config, --preset"});
  }
  Scenario s = opt.config.empty() ? validate_config(preset_config(opt.preset))
                                  : load_config(opt.config);
  if (!opt.table_cache.empty()) s.table_cache_dir = opt.table_cache;
  for (const auto& w : s.warnings) std::cerr << "warning: " << w << '\n';

  RunOptions run;
  run.workers = opt.workers;
  if (!opt.quiet) {
    run.progress = [](std::size_t done, std::size_t total) {
      std::fprintf(stderr, "\r%zu / %zu points", done, total);
      if (done == total) std::fputc('\n', stderr);
    };
  }
  const SweepResult result = run_scenario(s, run);
  const std::string out = opt.out.empty() ? (s.name.empty() ? "sweep" : s.name) + ".csv" : opt.out;
  for (const auto& path : write_sweep_files(out, result, s.outputs.populations)) {
    std::cout << "wrote " << path.string() << '\n';
  }

  if (opt.oracle) {
    const OracleReport report = scenario_oracle_check(s, 5, opt.workers);
    const std::string report_path = std::filesystem::path(out).replace_extension(".oracle.csv");
    std::ofstream file(report_path);
    write_oracle_report(file, report);
    write_oracle_report(std::cout, report);
    std::cout << "wrote " << report_path << '\n';
    if (!report.passed()) return exit_verification;
  }
  return 0;
}

int cmd_estimate(const Options& opt) {
  const Scenario s = base_scenario(opt);
  TransverseParams transverse;
  transverse.angular_frequency = constants::two_pi * opt.omega_r_kHz * 1e3;
  transverse.temperature = opt.temperature_uK * 1e-6;
  const auto convention =
      opt.half_amplitude ? AmplitudeConvention::half : AmplitudeConvention::full;
  const Gamma0Estimate e = estimate_gamma0(s.params, transverse, convention);
  const double uK = 1e-6 * constants::boltzmann;
  const double kHz = constants::two_pi * 1e3;

  std::printf("U_min, U_max          %.6g, %.6g uK\n", e.excursion.depth_min / uK,
              e.excursion.depth_max / uK);
  std::printf("w_min/2pi, w_max/2pi  %.6g, %.6g kHz\n", e.excursion.omega_min / kHz,
              e.excursion.omega_max / kHz);
  std::printf("dw0/2pi (%s)        %.6g kHz\n", opt.half_amplitude ? "half" : "full",
              e.delta_omega0 / kHz);
  std::printf("tau                   %.6g us\n", e.tau * 1e6);
  std::printf("gamma0/2pi            %.6g kHz\n", e.gamma0 / kHz);
  std::printf("residual              %.3g\n", e.residual);
  if (e.diverged) {
    std::printf("warning: tau spans more than 1000 transverse periods\n");
    return exit_verification;
  }
  return 0;
}

int cmd_oracle(const Options& opt) {
  const Scenario s = base_scenario(opt);
  const OracleReport report = standard_oracle_check(s.params, s.distance, {3.0, 5.0, 10.0},
                                                    200, opt.workers);
  write_oracle_report(std::cout, report);
  if (!opt.out.empty()) {
    std::ofstream out(opt.out);
    write_oracle_report(out, report);
  }
  return report.passed() ? 0 : exit_verification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optical conveyor transport simulator"};
  app.require_subcommand(1);
  Options opt;

  auto* spectrum = app.add_subcommand("spectrum", "Bound states and trap constants");
  auto* sweep = app.add_subcommand("sweep", "Run a configured or preset sweep");
  auto* estimate = app.add_subcommand("estimate-gamma0", "Dephasing-rate estimate");
  auto* oracle = app.add_subcommand("oracle-check", "Engine vs grid propagation check");

  for (auto* sub : {spectrum, sweep, estimate, oracle}) {
    sub->add_option("--config", opt.config, "Scenario config file")->check(CLI::ExistingFile);
  }
  for (auto* sub : {spectrum, sweep, oracle}) {
    sub->add_option("--out", opt.out, "Output CSV path");
  }
  for (auto* sub : {sweep, oracle}) {
    sub->add_option("--workers", opt.workers, "Worker threads (0: all cores)");
  }
  sweep->add_option("--preset", opt.preset, "Figure preset")
      ->check(CLI::IsMember({"fig3a", "fig3b", "fig5", "fig6"}));
  sweep->add_flag("--oracle", opt.oracle, "Cross-check 5 points against the grid oracle");
  sweep->add_option("--table-cache", opt.table_cache, "Operator-table cache directory");
  sweep->add_flag("--quiet", opt.quiet, "No progress output");
  estimate->add_option("--omega-r-kHz", opt.omega_r_kHz, "Transverse frequency / 2pi (kHz)");
  estimate->add_option("--temperature-uK", opt.temperature_uK, "Atom temperature (uK)");
  estimate->add_flag("--half-amplitude", opt.half_amplitude,
                     "Use (w_max - w_min) / 2 as the modulation amplitude");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config;
  }

  try {
    if (*spectrum) return cmd_spectrum(opt);
    if (*sweep) return cmd_sweep(opt);
    if (*estimate) return cmd_estimate(opt);
    if (*oracle) return cmd_oracle(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error:\n" << e.what() << '\n';
    return exit_config;
  } catch (const VerificationError& e) {
    std::cerr << "verification failed: " << e.what() << '\n';
    return exit_verification;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
