#pragma once

// Gate-parameter solutions: (tau, delta) pairs that close the phase-space
// loop with |A(tau)| = pi/2 for each envelope family.

#include <cmath>
#include <optional>
#include <string>

#include "common.hpp"
#include "envelope.hpp"
#include "trajectory.hpp"

namespace msgate {

struct GateSolution {
  PulseEnvelope envelope;  // duration set to the solved tau
  double delta = 0.0;      // rad/s
  int order = 0;           // k for sin^2, loop count for square/Walsh
  int phase_sign = -1;     // sign of A(tau)

  double tau() const { return envelope.duration(); }
  double omega_ms() const { return envelope.omega_ms(); }
};

struct ClosureReport {
  double f_residual = 0.0;
  double g_residual = 0.0;
  double a_residual = 0.0;  // | |A(tau)| - pi/2 |

  bool pass(double tol) const {
    return f_residual < tol && g_residual < tol && a_residual < tol;
  }
};

namespace detail {

// A(tau_k) = -(Omega^2 tau^2 / pi) c_K with K = 2(k+1); setting |A| = pi/2
// fixes tau_k = pi / (Omega sqrt(2 c_K)).
inline double sin2_cK(int k) {
  double K = 2.0 * (k + 1);
  return 1.0 / (4 * K) + 1.0 / (16 * (K - 2)) + 1.0 / (16 * (K + 2));
}

}  // namespace detail

inline GateSolution solve_sin2(double omega_ms, int k) {
  if (omega_ms <= 0.0) throw invalid_parameter("solve_sin2: omega_ms must be positive");
  if (k < 1) throw unsupported_order("solve_sin2: order k must be >= 1 (k = 0 is degenerate)");
  double tau = pi / (omega_ms * std::sqrt(2.0 * detail::sin2_cK(k)));
  GateSolution sol{PulseEnvelope::sinn(omega_ms, 2, 1, tau), two_pi * (k + 1) / tau, k, -1};
  return sol;
}

inline GateSolution solve_square(double omega_ms, int loops) {
  if (omega_ms <= 0.0) throw invalid_parameter("solve_square: omega_ms must be positive");
  if (loops < 1) throw invalid_parameter("solve_square: need loops >= 1");
  double delta = 2.0 * omega_ms * std::sqrt(static_cast<double>(loops));
  double tau = two_pi * loops / delta;
  return {PulseEnvelope::square(omega_ms, tau), delta, loops, -1};
}

// Sign modulation demands one phase-space loop per Walsh segment so that each
// segment closes on its own; index 0 degenerates to the plain square gate.
inline GateSolution solve_walsh(double omega_ms, int loops, int walsh_index) {
  if (walsh_index < 0) throw invalid_parameter("solve_walsh: negative walsh_index");
  GateSolution base = solve_square(omega_ms, loops);
  if (walsh_index > 0) {
    int segs = walsh_segment_count(walsh_index);
    if (loops != segs)
      throw invalid_parameter("solve_walsh: index " + std::to_string(walsh_index) +
                              " requires exactly " + std::to_string(segs) + " loops");
  }
  return {PulseEnvelope::walsh(omega_ms, base.tau(), walsh_index), base.delta, loops, -1};
}

inline ClosureReport verify_closure(const GateSolution& sol, double tol = 1e-10) {
  FGA end = fga_quadrature(sol.envelope, sol.delta, sol.tau(), tol);
  return {std::abs(end.f), std::abs(end.g), std::abs(std::abs(end.a) - pi / 2)};
}

// Always-available fallback: bracketed root search for tau on the quadrature
// value of |A(tau)| at fixed delta*tau = 2pi(k+1).
inline GateSolution solve_sin2_bracketed(double omega_ms, int k) {
  if (omega_ms <= 0.0) throw invalid_parameter("solve_sin2_bracketed: omega_ms must be positive");
  if (k < 1) throw unsupported_order("solve_sin2_bracketed: order k must be >= 1");
  auto abs_a = [&](double tau) {
    PulseEnvelope env = PulseEnvelope::sinn(omega_ms, 2, 1, tau);
    return std::abs(fga_quadrature(env, two_pi * (k + 1) / tau, tau, 1e-12).a);
  };
  // |A| grows as tau^2 at fixed k, so the closed-form estimate brackets easily.
  double guess = pi / (omega_ms * std::sqrt(2.0 * detail::sin2_cK(k)));
  double lo = 0.8 * guess, hi = 1.25 * guess;
  double flo = abs_a(lo) - pi / 2, fhi = abs_a(hi) - pi / 2;
  for (int grow = 0; (flo > 0 || fhi < 0) && grow < 40; ++grow) {
    if (flo > 0) { lo *= 0.8; flo = abs_a(lo) - pi / 2; }
    if (fhi < 0) { hi *= 1.25; fhi = abs_a(hi) - pi / 2; }
  }
  if (flo > 0 || fhi < 0)
    throw numeric_failure("solve_sin2_bracketed: failed to bracket |A| = pi/2", flo);
  for (int i = 0; i < 200 && (hi - lo) > 1e-15 * hi; ++i) {
    double mid = 0.5 * (lo + hi);
    if (abs_a(mid) - pi / 2 < 0)
      lo = mid;
    else
      hi = mid;
  }
  double tau = 0.5 * (lo + hi);
  return {PulseEnvelope::sinn(omega_ms, 2, 1, tau), two_pi * (k + 1) / tau, k, -1};
}

struct EnergyMatch {
  GateSolution solution;
  double energy_ratio = 0.0;  // matched energy / reference energy
};

// Picks the largest order in the target family whose pulse energy does not
// exceed the reference's at equal peak Omega_MS.  Plain nearest-energy would
// overshoot the reference by design intent ("without increasing the pulse
// energy"), so the floor rule is used.
//
// free_param: Walsh index when family == Walsh, otherwise an upper bound on
// the scanned order (<= 0 selects the default bound of 200).
inline EnergyMatch match_energy(const GateSolution& reference, EnvelopeKind family,
                                int free_param = 0) {
  double omega = reference.omega_ms();
  double ref_energy = reference.envelope.pulse_energy();
  auto solve_at = [&](int p) -> GateSolution {
    switch (family) {
      case EnvelopeKind::SinN: return solve_sin2(omega, p);
      case EnvelopeKind::Square: return solve_square(omega, p);
      case EnvelopeKind::Walsh: return solve_walsh(omega, p, free_param);
    }
    throw invalid_parameter("match_energy: unknown family");
  };
  if (family == EnvelopeKind::Walsh) {
    int loops = free_param > 0 ? walsh_segment_count(free_param) : reference.order;
    GateSolution sol = solve_at(loops);
    return {sol, sol.envelope.pulse_energy() / ref_energy};
  }
  int bound = free_param > 0 ? free_param : 200;
  std::optional<GateSolution> best;
  for (int p = 1; p <= bound; ++p) {
    GateSolution sol = solve_at(p);
    if (sol.envelope.pulse_energy() <= ref_energy * (1.0 + 1e-12))
      best = sol;
    else
      break;  // energy is monotone in the order
  }
  if (!best) best = solve_at(1);
  return {*best, best->envelope.pulse_energy() / ref_energy};
}

}  // namespace msgate
