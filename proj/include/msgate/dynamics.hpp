#pragma once

// Spin dynamics: fast analytic populations/fidelity in terms of (F, G, A) with
// thermal motion, and the truncated-Fock oracle wrappers.
//
// With U(t) = e^{-iA Sy^2} e^{-iG Sy x} e^{-iF Sy p} acting on |dd> and the
// motion thermal, decomposing in the S_y basis and tracing the mode with
// Gaussian moments gives, with E = exp[-(F^2+G^2)(2 nbar + 1)/4] and the
// entangling phase Phi = -A - F G / 2:
//   p0 = (3 + 4 E cos(Phi) + E^4) / 8
//   p1 = (1 - E^4) / 4
//   p2 = (3 - 4 E cos(Phi) + E^4) / 8
//   F_bell = (3 + E^4) / 8 - phase_sign * E sin(Phi) / 2
// The expressions hold for any drive-phase history (H is linear in x, p), so
// the same formulas power the static-detuning fast path.

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "common.hpp"
#include "fock.hpp"
#include "solver.hpp"
#include "trajectory.hpp"

namespace msgate {

// Two-spin density matrix, row-major in the basis (uu, ud, du, dd).
using SpinDensity = std::array<cxd, 16>;

struct PopulationRecord {
  std::vector<double> times;
  std::vector<double> p0, p1, p2;
};

struct FockResult {
  SpinDensity rho{};
  double p0 = 0.0, p1 = 0.0, p2 = 0.0;
  double bell_fidelity = 0.0;
  double norm_defect = 0.0;   // |1 - norm| (closed) or |1 - trace| (open)
  double top_occupancy = 0.0; // weight in the top three Fock levels
  int fock_cutoff = 0;
};

inline double bell_fidelity(const SpinDensity& rho, int phase_sign) {
  // target (|uu> + i * phase_sign * |dd>)/sqrt2
  return 0.5 * (rho[0].real() + rho[15].real()) - phase_sign * rho[3].imag();
}

inline std::array<double, 3> populations(const SpinDensity& rho) {
  return {rho[15].real(), rho[5].real() + rho[10].real(), rho[0].real()};
}

namespace detail {

struct AnalyticPoint {
  double e, phi;
};

inline AnalyticPoint analytic_point(const FGA& v, double nbar) {
  double e = std::exp(-(v.f * v.f + v.g * v.g) * (2.0 * nbar + 1.0) / 4.0);
  return {e, -v.a - 0.5 * v.f * v.g};
}

inline std::array<double, 3> analytic_pops(const AnalyticPoint& q) {
  double e4 = q.e * q.e * q.e * q.e;
  double c = 4.0 * q.e * std::cos(q.phi);
  return {(3.0 + c + e4) / 8.0, (1.0 - e4) / 4.0, (3.0 - c + e4) / 8.0};
}

inline double analytic_bell(const AnalyticPoint& q, int phase_sign) {
  double e4 = q.e * q.e * q.e * q.e;
  return (3.0 + e4) / 8.0 - phase_sign * q.e * std::sin(q.phi) / 2.0;
}

inline void check_times(const std::vector<double>& times) {
  if (times.empty()) throw invalid_parameter("times sequence is empty");
  if (times.front() < 0.0) throw invalid_parameter("times must be nonnegative");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (times[i] <= times[i - 1])
      throw invalid_parameter("times must be strictly increasing");
}

// F, G, A along a sorted time grid; exact forms where available, otherwise one
// carried quadrature pass.
inline std::vector<FGA> fga_series(const PulseEnvelope& env, double delta,
                                   const std::vector<double>& times) {
  std::vector<FGA> out;
  out.reserve(times.size());
  bool exact = true;
  try {
    out.push_back(fga_exact(env, delta, times.front()));
  } catch (const unsupported_shape&) {
    exact = false;
  } catch (const invalid_parameter&) {
    exact = false;
  }
  if (exact) {
    for (std::size_t i = 1; i < times.size(); ++i)
      out.push_back(fga_exact(env, delta, times[i]));
    return out;
  }
  out.clear();
  detail::FgaIntegrator integ(env, delta, 1e-10);
  for (double t : times) out.push_back(integ.advance_to(t));
  return out;
}

}  // namespace detail

inline PopulationRecord analytic_populations(const GateSolution& sol,
                                             const ThermalSpec& thermal,
                                             const std::vector<double>& times) {
  detail::check_times(times);
  if (thermal.nbar < 0.0) throw invalid_parameter("nbar must be >= 0");
  auto series = detail::fga_series(sol.envelope, sol.delta, times);
  PopulationRecord rec;
  rec.times = times;
  rec.p0.reserve(times.size());
  rec.p1.reserve(times.size());
  rec.p2.reserve(times.size());
  for (const FGA& v : series) {
    auto p = detail::analytic_pops(detail::analytic_point(v, thermal.nbar));
    rec.p0.push_back(p[0]);
    rec.p1.push_back(p[1]);
    rec.p2.push_back(p[2]);
  }
  return rec;
}

inline double static_detuning_fidelity(const GateSolution& sol, double epsilon,
                                       const ThermalSpec& thermal) {
  // fga_exact rejects sin^2 tone degeneracies (epsilon near -delta or
  // -delta +- omega_1); fall back to quadrature for those offsets.
  FGA v;
  try {
    v = fga_exact(sol.envelope, sol.delta + epsilon, sol.tau());
  } catch (const unsupported_shape&) {
    v = fga_quadrature(sol.envelope, sol.delta + epsilon, sol.tau());
  } catch (const invalid_parameter&) {
    v = fga_quadrature(sol.envelope, sol.delta + epsilon, sol.tau());
  }
  return detail::analytic_bell(detail::analytic_point(v, thermal.nbar),
                               sol.phase_sign);
}

struct FockOptions {
  double step_scale = 1.0;    // multiplies the mandated step bound (<= 1 tightens)
  double thermal_tail = 1e-8;
  std::vector<double> sample_times;  // optional mid-gate sampling grid
};

namespace detail {

inline int resolve_cutoff(const ThermalSpec& thermal) {
  if (thermal.fock_cutoff > 0) return thermal.fock_cutoff;
  return auto_cutoff(thermal.nbar);
}

// Indices into the propagator step grid matching the requested sample times.
inline std::vector<int> locate_samples(const std::vector<double>& grid,
                                       const std::vector<double>& wanted,
                                       double tau) {
  std::vector<int> idx;
  idx.reserve(wanted.size());
  for (double t : wanted) {
    auto it = std::lower_bound(grid.begin(), grid.end(), t - 1e-12 * tau);
    if (it == grid.end() || std::abs(*it - t) > 1e-9 * tau)
      throw numeric_failure("fock: sample time missing from the step grid",
                            it == grid.end() ? -1.0 : std::abs(*it - t));
    idx.push_back(static_cast<int>(it - grid.begin()));
  }
  return idx;
}

template <class Rho>
inline double block_top_weight(const Rho& diag_getter, int n, int levels = 3) {
  double w = 0.0;
  for (int s = 0; s < 4; ++s)
    for (int m = std::max(0, n - levels); m < n; ++m) w += diag_getter(s, m);
  return w;
}

}  // namespace detail

// Runs the oracle and reports the final spin state; when opts.sample_times is
// set, `record` (if non-null) receives thermally averaged populations there.
inline FockResult fock_propagate(const GateSolution& sol, const ErrorModel& errors,
                                 const ThermalSpec& thermal,
                                 const FockOptions& opts = {},
                                 PopulationRecord* record = nullptr) {
  if (thermal.nbar < 0.0) throw invalid_parameter("nbar must be >= 0");
  int cutoff = detail::resolve_cutoff(thermal);
  double tau = sol.tau();
  std::vector<double> samples = opts.sample_times;
  if (!samples.empty()) detail::check_times(samples);

  FockResult res;
  res.fock_cutoff = cutoff;
  std::vector<std::array<cxd, 16>> sampled(samples.size());

  if (errors.heating_rate > 0.0) {
    detail::FockDensityPropagator dp(sol, errors, cutoff, opts.step_scale, samples);
    auto rho = dp.initial_thermal(thermal.nbar, opts.thermal_tail);
    auto idx = detail::locate_samples(dp.base().step_times(), samples, tau);
    std::size_t cursor = 0;
    dp.run(rho,
           [&](int step, double) {
             while (cursor < idx.size() && idx[cursor] == step)
               sampled[cursor++] = dp.spin_density(rho);
           },
           errors.static_detuning);
    auto spin = dp.spin_density(rho);
    for (int i = 0; i < 16; ++i) res.rho[i] = spin[i];
    double tr = 0.0;
    int n = dp.base().cutoff();
    for (int s = 0; s < 4; ++s)
      for (int m = 0; m < n; ++m)
        tr += rho[(static_cast<std::size_t>(s) * n + m) * (4 * n) + s * n + m].real();
    res.norm_defect = std::abs(1.0 - tr);
    res.top_occupancy = detail::block_top_weight(
        [&](int s, int m) {
          return rho[(static_cast<std::size_t>(s) * n + m) * (4 * n) + s * n + m].real();
        },
        n);
  } else {
    detail::FockPropagator prop(sol, errors, cutoff, opts.step_scale, samples);
    auto idx = detail::locate_samples(prop.step_times(), samples, tau);
    auto weights = thermal_weights(thermal.nbar, opts.thermal_tail);
    if (static_cast<int>(weights.size()) >= cutoff)
      throw invalid_parameter("fock: cutoff too small for requested nbar");
    SpinDensity acc{};
    double worst_norm = 0.0, top = 0.0;
    for (std::size_t n0 = 0; n0 < weights.size(); ++n0) {
      auto psi = prop.initial_state(static_cast<int>(n0));
      std::size_t cursor = 0;
      prop.run(
          psi, [&](int) { return errors.static_detuning; },
          [&](int step, double) {
            while (cursor < idx.size() && idx[cursor] == step) {
              auto part = prop.spin_density(psi);
              for (int i = 0; i < 16; ++i) sampled[cursor][i] += weights[n0] * part[i];
              ++cursor;
            }
          });
      auto part = prop.spin_density(psi);
      double norm = 0.0;
      for (int i = 0; i < 4; ++i) norm += part[i * 4 + i].real();
      worst_norm = std::max(worst_norm, std::abs(1.0 - norm));
      for (int i = 0; i < 16; ++i) acc[i] += weights[n0] * part[i];
      int n = prop.cutoff();
      top += weights[n0] * detail::block_top_weight(
                               [&](int s, int m) { return std::norm(psi[s * n + m]); }, n);
    }
    res.rho = acc;
    res.norm_defect = worst_norm;
    res.top_occupancy = top;
  }

  if (res.top_occupancy > 1e-8)
    throw numeric_failure(
        "fock: significant weight at the Fock cutoff; increase fock_cutoff",
        res.top_occupancy);

  auto p = populations(res.rho);
  res.p0 = p[0];
  res.p1 = p[1];
  res.p2 = p[2];
  res.bell_fidelity = msgate::bell_fidelity(res.rho, sol.phase_sign);
  if (record) {
    record->times = samples;
    record->p0.resize(samples.size());
    record->p1.resize(samples.size());
    record->p2.resize(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      auto pp = populations(sampled[i]);
      record->p0[i] = pp[0];
      record->p1[i] = pp[1];
      record->p2[i] = pp[2];
    }
  }
  return res;
}

inline PopulationRecord fock_populations(const GateSolution& sol,
                                         const ErrorModel& errors,
                                         const ThermalSpec& thermal,
                                         const std::vector<double>& times,
                                         double step_scale = 1.0) {
  FockOptions opts;
  opts.step_scale = step_scale;
  opts.sample_times = times;
  PopulationRecord rec;
  fock_propagate(sol, errors, thermal, opts, &rec);
  return rec;
}

}  // namespace msgate
