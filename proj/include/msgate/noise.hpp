#pragma once

// Injected motional-frequency noise: quasi-static Gaussian averaging (the
// analytic-model path behind the robustness comparisons) and Ornstein-Uhlenbeck
// Monte Carlo over the Fock oracle.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "common.hpp"
#include "dynamics.hpp"
#include "gauss_hermite.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace msgate {

enum class NoiseKind { QuasiStatic, OrnsteinUhlenbeck };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::QuasiStatic;
  double fwhm = 0.0;       // Hz, sideband lineshape FWHM
  double corr_time = 0.0;  // s; <= 0 picks the default 10 tau (OU only)
  int samples = 1;
  std::uint64_t seed = 0;
};

inline double fwhm_to_sigma(double fwhm) {
  if (fwhm < 0.0) throw invalid_parameter("fwhm must be >= 0");
  return fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
}

// E_eps[fidelity(eps)] with eps ~ N(0, sigma^2); node count doubled until the
// change drops below 1e-8.
inline double quasistatic_average(const GateSolution& sol, const NoiseSpec& noise,
                                  const ThermalSpec& thermal) {
  if (noise.kind != NoiseKind::QuasiStatic)
    throw invalid_parameter("quasistatic_average: noise.kind must be QuasiStatic");
  double sigma = hz_to_rad(fwhm_to_sigma(noise.fwhm));
  auto f = [&](double eps) { return static_detuning_fidelity(sol, eps, thermal); };
  if (sigma == 0.0) return f(0.0);
  double prev = gaussian_mean(f, sigma, 32);
  for (int n = 64; n <= 512; n *= 2) {
    double cur = gaussian_mean(f, sigma, n);
    if (std::abs(cur - prev) < 1e-8) return cur;
    prev = cur;
  }
  throw numeric_failure("quasistatic_average: node doubling did not converge", 0.0);
}

struct McSummary {
  double mean = 0.0;
  double stderr_ = 0.0;
  int samples = 0;
};

namespace detail {

// Stationary OU path sampled on the propagator step grid; the value is held
// constant across each step.
inline std::vector<double> ou_path(const std::vector<double>& grid, double sigma,
                                   double corr_time, Rng& rng) {
  std::vector<double> path(grid.size() > 1 ? grid.size() - 1 : 0);
  if (path.empty()) return path;
  double x = sigma * rng.normal();
  path[0] = x;
  for (std::size_t i = 1; i < path.size(); ++i) {
    double dt = grid[i] - grid[i - 1];
    double a = std::exp(-dt / corr_time);
    x = a * x + sigma * std::sqrt(1.0 - a * a) * rng.normal();
    path[i] = x;
  }
  return path;
}

}  // namespace detail

// Monte Carlo over OU mode-frequency trajectories, each sample propagated by
// the Fock oracle with the time-dependent offset. stream_a/stream_b route the
// per-sample RNG so sweep cells stay independent of scheduling.
inline McSummary ou_noise_mc(const GateSolution& sol, const NoiseSpec& noise,
                             const ErrorModel& errors, const ThermalSpec& thermal,
                             int threads = 1, std::uint64_t stream_a = 0,
                             std::uint64_t stream_b = 0) {
  if (noise.kind != NoiseKind::OrnsteinUhlenbeck)
    throw invalid_parameter("ou_noise_mc: noise.kind must be OrnsteinUhlenbeck");
  if (noise.samples < 1) throw invalid_parameter("ou_noise_mc: samples must be >= 1");
  double tau = sol.tau();
  double corr = noise.corr_time > 0.0 ? noise.corr_time : 10.0 * tau;
  double sigma = hz_to_rad(fwhm_to_sigma(noise.fwhm));
  int cutoff = detail::resolve_cutoff(thermal);
  auto weights = thermal_weights(thermal.nbar);
  if (static_cast<int>(weights.size()) >= cutoff)
    throw invalid_parameter("ou_noise_mc: cutoff too small for requested nbar");

  std::vector<double> fid(noise.samples);
  parallel_for(noise.samples, threads, [&](int s) {
    Rng rng = Rng::stream(noise.seed, stream_a, stream_b, static_cast<std::uint64_t>(s));
    detail::FockPropagator prop(sol, errors, cutoff);
    auto path = detail::ou_path(prop.step_times(), sigma, corr, rng);
    auto eps = [&](int i) { return errors.static_detuning + path[i]; };
    SpinDensity acc{};
    for (std::size_t n0 = 0; n0 < weights.size(); ++n0) {
      auto psi = prop.initial_state(static_cast<int>(n0));
      prop.run(psi, eps);
      auto part = prop.spin_density(psi);
      for (int i = 0; i < 16; ++i) acc[i] += weights[n0] * part[i];
    }
    fid[s] = bell_fidelity(acc, sol.phase_sign);
  });

  McSummary out;
  out.samples = noise.samples;
  double sum = 0.0;
  for (double v : fid) sum += v;
  out.mean = sum / noise.samples;
  if (noise.samples > 1) {
    double ss = 0.0;
    for (double v : fid) ss += (v - out.mean) * (v - out.mean);
    out.stderr_ = std::sqrt(ss / (static_cast<double>(noise.samples) *
                                  (noise.samples - 1)));
  }
  return out;
}

inline std::string scheme_label(const GateSolution& sol) {
  const PulseEnvelope& env = sol.envelope;
  switch (env.kind()) {
    case EnvelopeKind::Square:
      return "square_" + std::to_string(sol.order);
    case EnvelopeKind::SinN:
      return "sin" + std::to_string(env.n()) + "_k" + std::to_string(sol.order);
    case EnvelopeKind::Walsh:
      return "walsh" + std::to_string(env.walsh_index()) + "_" +
             std::to_string(sol.order);
  }
  return "unknown";
}

struct SweepRow {
  std::string scheme;
  double fwhm_hz = 0.0;
  double fidelity = 0.0;
  double stderr_ = 0.0;
};

// Full scheme x fwhm cross product, rows in deterministic scheme-major order.
inline std::vector<SweepRow> sweep(const std::vector<GateSolution>& sols,
                                   const std::vector<double>& fwhm_grid,
                                   NoiseKind method, const ThermalSpec& thermal,
                                   const NoiseSpec& base = {}, int threads = 1) {
  std::vector<SweepRow> rows(sols.size() * fwhm_grid.size());
  auto cell = [&](int flat) {
    int si = flat / static_cast<int>(fwhm_grid.size());
    int fi = flat % static_cast<int>(fwhm_grid.size());
    NoiseSpec spec = base;
    spec.kind = method;
    spec.fwhm = fwhm_grid[fi];
    SweepRow& row = rows[flat];
    row.scheme = scheme_label(sols[si]);
    row.fwhm_hz = spec.fwhm;
    if (method == NoiseKind::QuasiStatic) {
      row.fidelity = quasistatic_average(sols[si], spec, thermal);
      row.stderr_ = 0.0;
    } else {
      auto mc = ou_noise_mc(sols[si], spec, ErrorModel{}, thermal, 1,
                            static_cast<std::uint64_t>(si),
                            static_cast<std::uint64_t>(fi));
      row.fidelity = mc.mean;
      row.stderr_ = mc.stderr_;
    }
  };
  parallel_for(static_cast<int>(rows.size()), threads, cell);
  return rows;
}

}  // namespace msgate
