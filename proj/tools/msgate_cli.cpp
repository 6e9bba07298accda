// Batch front-end: solve | trajectory | evolve | noise-sweep | parity.
// Every data file gets a .meta.json sidecar carrying the config echo, the
// toolkit version, and the seeds actually used, so runs are reproducible from
// the outputs alone.  Commands exit nonzero when an in-process assertion
// fails.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "msgate/dynamics.hpp"
#include "msgate/io.hpp"
#include "msgate/noise.hpp"
#include "msgate/pipeline.hpp"
#include "msgate/solver.hpp"
#include "msgate/tomography.hpp"
#include "msgate/trajectory.hpp"
#include "msgate/version.hpp"

namespace {

using nlohmann::json;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "run configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "seed override")->each([&](const std::string&) {
    args.seed_given = true;
  });
  cmd->add_option("--threads", args.threads, "worker thread count")
      ->check(CLI::PositiveNumber);
}

std::uint64_t resolve_seed(const CommonArgs& args, const msgate::RunConfig& cfg) {
  if (args.seed_given) return args.seed;
  return static_cast<std::uint64_t>(msgate::config_int(cfg, nullptr, "seed", 0));
}

json config_echo(const msgate::RunConfig& cfg) {
  json globals = json::object();
  for (const auto& [k, v] : cfg.globals) globals[k] = v;
  json schemes = json::array();
  for (const auto& s : cfg.schemes) {
    json sec = json::object();
    for (const auto& [k, v] : s) sec[k] = v;
    schemes.push_back(sec);
  }
  return json{{"globals", globals}, {"schemes", schemes}};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw msgate::invalid_parameter("cannot open output file: " + path);
  out << text;
}

void write_sidecar(const std::string& data_path, const std::string& command,
                   const msgate::RunConfig& cfg, std::uint64_t seed) {
  json meta{{"version", msgate::version},
            {"command", command},
            {"seed", seed},
            {"config", config_echo(cfg)}};
  write_text(data_path + ".meta.json", meta.dump(2) + "\n");
}

std::string out_path(const CommonArgs& args, const std::string& name) {
  std::filesystem::create_directories(args.out_dir);
  return (std::filesystem::path(args.out_dir) / name).string();
}

msgate::ThermalSpec config_thermal(const msgate::RunConfig& cfg) {
  msgate::ThermalSpec t;
  t.nbar = msgate::config_double(cfg, nullptr, "nbar", 0.0);
  t.fock_cutoff = static_cast<int>(msgate::config_int(cfg, nullptr, "fock_cutoff", 0));
  return t;
}

msgate::ErrorModel config_errors(const msgate::RunConfig& cfg) {
  msgate::ErrorModel e;
  e.static_detuning =
      msgate::hz_to_rad(msgate::config_double(cfg, nullptr, "static_detuning_hz", 0.0));
  e.zeeman_peak_hz[0] = msgate::config_double(cfg, nullptr, "zeeman1_hz", 0.0);
  e.zeeman_peak_hz[1] = msgate::config_double(cfg, nullptr, "zeeman2_hz", 0.0);
  e.heating_rate = msgate::config_double(cfg, nullptr, "heating_rate", 0.0);
  e.compensation = msgate::config_bool(cfg, nullptr, "compensation", false);
  return e;
}

const char* kind_string(const msgate::GateSolution& sol) {
  switch (sol.envelope.kind()) {
    case msgate::EnvelopeKind::Square: return "square";
    case msgate::EnvelopeKind::SinN: return "sin2";
    case msgate::EnvelopeKind::Walsh: return "walsh";
  }
  return "unknown";
}

int run_solve(const CommonArgs& args) {
  auto cfg = msgate::load_config(args.config_path);
  auto sols = msgate::config_solutions(cfg);
  std::uint64_t seed = resolve_seed(args, cfg);
  json records = json::array();
  bool ok = true;
  for (const auto& sol : sols) {
    auto rep = msgate::verify_closure(sol);
    double duty =
        sol.envelope.pulse_energy() /
        (sol.omega_ms() * sol.omega_ms() * sol.tau());
    json rec{{"kind", kind_string(sol)},
             {"omega_ms_hz", sol.omega_ms() / msgate::two_pi},
             {"k_or_loops", sol.order},
             {"tau_s", sol.tau()},
             {"delta_hz", sol.delta / msgate::two_pi},
             {"phase_sign", sol.phase_sign},
             {"energy_rel", duty},
             {"closure_residuals",
              json{{"f", rep.f_residual}, {"g", rep.g_residual}, {"a", rep.a_residual}}}};
    if (sol.envelope.kind() == msgate::EnvelopeKind::Walsh)
      rec["walsh_index"] = sol.envelope.walsh_index();
    records.push_back(rec);
    if (!rep.pass(1e-8)) {
      ok = false;
      std::cerr << "closure verification failed for " << msgate::scheme_label(sol)
                << ": residuals (" << rep.f_residual << ", " << rep.g_residual << ", "
                << rep.a_residual << ")\n";
    }
  }
  std::string path = out_path(args, "gates.json");
  write_text(path, records.dump(2) + "\n");
  write_sidecar(path, "solve", cfg, seed);
  return ok ? 0 : 1;
}

int run_trajectory(const CommonArgs& args) {
  auto cfg = msgate::load_config(args.config_path);
  auto sols = msgate::config_solutions(cfg);
  std::uint64_t seed = resolve_seed(args, cfg);
  int points = static_cast<int>(msgate::config_int(cfg, nullptr, "num_points", 400));
  for (const auto& sol : sols) {
    auto traj = msgate::sample_trajectory(sol.envelope, sol.delta, points);
    std::vector<std::vector<std::string>> rows;
    rows.reserve(traj.times.size());
    for (std::size_t i = 0; i < traj.times.size(); ++i)
      rows.push_back({msgate::format_double(traj.times[i]),
                      msgate::format_double(traj.f[i]),
                      msgate::format_double(traj.g[i]),
                      msgate::format_double(traj.a[i])});
    std::string path =
        out_path(args, "trajectory_" + msgate::scheme_label(sol) + ".csv");
    msgate::write_csv(path, "t_s,F,G,A", rows);
    write_sidecar(path, "trajectory", cfg, seed);
  }
  return 0;
}

int run_evolve(const CommonArgs& args) {
  auto cfg = msgate::load_config(args.config_path);
  auto sols = msgate::config_solutions(cfg);
  std::uint64_t seed = resolve_seed(args, cfg);
  auto thermal = config_thermal(cfg);
  int points = static_cast<int>(msgate::config_int(cfg, nullptr, "points", 201));
  double t_max_rel = msgate::config_double(cfg, nullptr, "t_max_rel", 1.0);
  if (points < 1 || t_max_rel <= 0.0)
    throw msgate::invalid_parameter("evolve: points >= 1 and t_max_rel > 0 required");
  bool ok = true;
  for (const auto& sol : sols) {
    std::vector<double> times(points);
    for (int i = 0; i < points; ++i)
      times[i] = points == 1 ? 0.0 : t_max_rel * sol.tau() * i / (points - 1);
    auto rec = msgate::analytic_populations(sol, thermal, times);
    std::vector<std::vector<std::string>> rows;
    rows.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i)
      rows.push_back({msgate::format_double(rec.times[i]),
                      msgate::format_double(rec.p0[i]),
                      msgate::format_double(rec.p1[i]),
                      msgate::format_double(rec.p2[i])});
    std::string path =
        out_path(args, "populations_" + msgate::scheme_label(sol) + ".csv");
    msgate::write_csv(path, "t_s,p0,p1,p2", rows);
    write_sidecar(path, "evolve", cfg, seed);

    auto at_tau = msgate::analytic_populations(sol, thermal, {sol.tau()});
    if (std::abs(at_tau.p0[0] - 0.5) > 1e-6 || at_tau.p1[0] > 1e-6 ||
        std::abs(at_tau.p2[0] - 0.5) > 1e-6) {
      ok = false;
      std::cerr << "closure populations off for " << msgate::scheme_label(sol) << ": ("
                << at_tau.p0[0] << ", " << at_tau.p1[0] << ", " << at_tau.p2[0]
                << ")\n";
    }
  }
  return ok ? 0 : 1;
}

int run_noise_sweep(const CommonArgs& args) {
  auto cfg = msgate::load_config(args.config_path);
  auto sols = msgate::config_solutions(cfg);
  std::uint64_t seed = resolve_seed(args, cfg);
  auto thermal = config_thermal(cfg);

  std::vector<double> grid = msgate::config_list(cfg, "fwhm_grid_hz");
  if (grid.empty()) {
    double lo = msgate::config_double(cfg, nullptr, "fwhm_min_hz", 0.0);
    double hi = msgate::config_double(cfg, nullptr, "fwhm_max_hz", 1000.0);
    int n = static_cast<int>(msgate::config_int(cfg, nullptr, "fwhm_points", 11));
    if (n < 1) throw msgate::invalid_parameter("noise-sweep: fwhm_points >= 1");
    grid.resize(n);
    for (int i = 0; i < n; ++i) grid[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  }

  std::string method_name =
      msgate::config_string(cfg, nullptr, "method", "quasistatic");
  msgate::NoiseKind method;
  if (method_name == "quasistatic") {
    method = msgate::NoiseKind::QuasiStatic;
  } else if (method_name == "ou") {
    method = msgate::NoiseKind::OrnsteinUhlenbeck;
  } else {
    throw msgate::invalid_parameter("noise-sweep: method must be quasistatic or ou");
  }

  msgate::NoiseSpec base;
  base.samples = static_cast<int>(msgate::config_int(cfg, nullptr, "samples", 200));
  base.corr_time = msgate::config_double(cfg, nullptr, "corr_time_s", 0.0);
  base.seed = seed;

  auto rows = msgate::sweep(sols, grid, method, thermal, base, args.threads);

  std::vector<std::vector<std::string>> csv;
  csv.reserve(rows.size());
  for (const auto& row : rows)
    csv.push_back({row.scheme, msgate::format_double(row.fwhm_hz),
                   msgate::format_double(row.fidelity),
                   msgate::format_double(row.stderr_)});
  std::string path = out_path(args, "sweep.csv");
  msgate::write_csv(path, "scheme,fwhm_hz,fidelity,stderr", csv);
  write_sidecar(path, "noise-sweep", cfg, seed);

  bool ok = true;
  std::size_t nf = grid.size();
  for (const auto& row : rows)
    if (row.fwhm_hz == 0.0 && std::abs(row.fidelity - 1.0) > 1e-8) {
      ok = false;
      std::cerr << "fwhm=0 fidelity departs from 1 for " << row.scheme << ": "
                << row.fidelity << "\n";
    }
  if (msgate::config_bool(cfg, nullptr, "assert_ordering", false)) {
    for (std::size_t fi = 0; fi < nf; ++fi) {
      if (grid[fi] == 0.0) continue;
      for (std::size_t si = 0; si + 1 < sols.size(); ++si) {
        double a = rows[si * nf + fi].fidelity;
        double b = rows[(si + 1) * nf + fi].fidelity;
        if (!(1.0 - a < 1.0 - b)) {
          ok = false;
          std::cerr << "robustness ordering violated at fwhm=" << grid[fi] << " Hz: "
                    << rows[si * nf + fi].scheme << " vs "
                    << rows[(si + 1) * nf + fi].scheme << "\n";
        }
      }
    }
  }
  return ok ? 0 : 1;
}

int run_parity(const CommonArgs& args) {
  auto cfg = msgate::load_config(args.config_path);
  auto sols = msgate::config_solutions(cfg);
  if (sols.empty())
    throw msgate::invalid_parameter("parity: config must declare a [scheme]");
  std::uint64_t seed = resolve_seed(args, cfg);
  auto thermal = config_thermal(cfg);
  auto errors = config_errors(cfg);
  const auto& sol = sols.front();

  msgate::HistogramModel model;
  model.lambda_dark = msgate::config_double(cfg, nullptr, "lambda_dark", 2.0);
  model.lambda_bright = msgate::config_double(cfg, nullptr, "lambda_bright", 30.0);
  model.validate();
  double eps_spam = msgate::config_double(cfg, nullptr, "epsilon_spam", 0.0);
  std::string conv_name =
      msgate::config_string(cfg, nullptr, "spam_convention", "symmetric_linear");
  msgate::SpamConvention convention;
  if (conv_name == "symmetric_linear") {
    convention = msgate::SpamConvention::SymmetricLinear;
  } else if (conv_name == "divide_only") {
    convention = msgate::SpamConvention::DivideOnly;
  } else {
    throw msgate::invalid_parameter("parity: unknown spam_convention " + conv_name);
  }
  int phase_points = static_cast<int>(msgate::config_int(cfg, nullptr, "phase_points", 12));
  int scans = static_cast<int>(msgate::config_int(cfg, nullptr, "scans", 2));
  auto shots_per_phase = static_cast<std::uint64_t>(
      msgate::config_int(cfg, nullptr, "shots_per_phase", 300));
  auto population_shots = static_cast<std::uint64_t>(
      msgate::config_int(cfg, nullptr, "population_shots", 3600));
  int resamples = static_cast<int>(msgate::config_int(cfg, nullptr, "resamples", 1000));
  double tolerance = msgate::config_double(cfg, nullptr, "fidelity_tolerance", 0.005);
  if (phase_points < 4 || scans < 1)
    throw msgate::invalid_parameter("parity: need phase_points >= 4 and scans >= 1");

  auto fock = msgate::fock_propagate(sol, errors, thermal);
  auto truth = msgate::truth_from_state(fock.rho);
  double true_fidelity = fock.bell_fidelity;

  auto phases = msgate::default_phase_grid(phase_points);
  auto data = msgate::simulate_experiment(
      truth, model, population_shots, phases,
      shots_per_phase * static_cast<std::uint64_t>(scans), eps_spam, seed);

  // scan CSV from the Poissonian extraction
  std::vector<std::vector<std::string>> scan_rows;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    auto p = msgate::fit_poissonians(data.phase_histograms[i], model);
    scan_rows.push_back(
        {msgate::format_double(phases[i]), msgate::format_double(p[0] - p[1] + p[2]),
         std::to_string(data.phase_histograms[i].total())});
  }
  std::string scan_path = out_path(args, "parity_scan.csv");
  msgate::write_csv(scan_path, "phase_rad,parity,shots", scan_rows);
  write_sidecar(scan_path, "parity", cfg, seed);

  std::vector<std::vector<std::string>> hist_rows;
  for (std::size_t c = 0; c < data.population.counts.size(); ++c)
    if (data.population.counts[c])
      hist_rows.push_back({std::to_string(c), std::to_string(data.population.counts[c])});
  std::string hist_path = out_path(args, "population_histogram.csv");
  msgate::write_csv(hist_path, "count,occurrences", hist_rows);
  write_sidecar(hist_path, "parity", cfg, seed);

  json estimates = json::array();
  std::vector<msgate::FidelityEstimate> ests;
  for (auto method :
       {msgate::FidelityMethod::Poissonian, msgate::FidelityMethod::Threshold}) {
    auto estimator = [&](const msgate::ParityExperiment& d) {
      return msgate::estimate_fidelity(d, model, method, eps_spam, convention);
    };
    std::uint64_t sm = seed ^ (0xB007u + static_cast<std::uint64_t>(method));
    auto est = msgate::bootstrap(data, estimator, resamples, msgate::splitmix64(sm),
                                 args.threads, method, eps_spam > 0.0);
    ests.push_back(est);
    estimates.push_back(json{{"method", msgate::fidelity_method_name(method)},
                             {"mean", est.mean},
                             {"ci68", {est.ci68[0], est.ci68[1]}},
                             {"spam_corrected", est.spam_corrected},
                             {"convention", msgate::spam_convention_name(convention)}});
  }
  json out{{"true_fidelity", true_fidelity},
           {"epsilon_spam", eps_spam},
           {"resamples", resamples},
           {"seed", seed},
           {"estimates", estimates}};
  std::string fid_path = out_path(args, "fidelity.json");
  write_text(fid_path, out.dump(2) + "\n");
  write_sidecar(fid_path, "parity", cfg, seed);

  bool ok = true;
  for (const auto& est : ests)
    if (std::abs(est.mean - true_fidelity) > tolerance) {
      ok = false;
      std::cerr << "estimate " << est.mean << " departs from simulated fidelity "
                << true_fidelity << " by more than " << tolerance << "\n";
    }
  double se0 = (ests[0].ci68[1] - ests[0].ci68[0]) / 2.0;
  double se1 = (ests[1].ci68[1] - ests[1].ci68[0]) / 2.0;
  if (std::abs(ests[0].mean - ests[1].mean) >
      2.0 * std::sqrt(se0 * se0 + se1 * se1)) {
    ok = false;
    std::cerr << "Poissonian and threshold estimates disagree beyond 2 combined "
                 "standard errors\n";
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Molmer-Sorensen amplitude-modulated gate toolkit"};
  app.require_subcommand(1);

  CommonArgs solve_args, traj_args, evolve_args, sweep_args, parity_args;
  auto* solve_cmd = app.add_subcommand("solve", "solve gate parameters and verify closure");
  add_common(solve_cmd, solve_args);
  auto* traj_cmd = app.add_subcommand("trajectory", "phase-space trajectory tables");
  add_common(traj_cmd, traj_args);
  auto* evolve_cmd = app.add_subcommand("evolve", "population dynamics tables");
  add_common(evolve_cmd, evolve_args);
  auto* sweep_cmd = app.add_subcommand("noise-sweep", "robustness comparison sweep");
  add_common(sweep_cmd, sweep_args);
  auto* parity_cmd = app.add_subcommand("parity", "synthetic parity-scan fidelity estimate");
  add_common(parity_cmd, parity_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve_cmd->parsed()) return run_solve(solve_args);
    if (traj_cmd->parsed()) return run_trajectory(traj_args);
    if (evolve_cmd->parsed()) return run_evolve(evolve_args);
    if (sweep_cmd->parsed()) return run_noise_sweep(sweep_args);
    if (parity_cmd->parsed()) return run_parity(parity_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
