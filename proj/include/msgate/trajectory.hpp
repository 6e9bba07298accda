#pragma once

// Phase-space functions of the gate drive:
//   F(t) = -sqrt2 * int_0^t Omega(t') cos(delta t') dt'
//   G(t) = -sqrt2 * int_0^t Omega(t') sin(delta t') dt'
//   A(t) =  sqrt2 * int_0^t F(t') Omega(t') sin(delta t') dt'
// computed by closed form where available and by adaptive embedded
// Runge-Kutta quadrature in general.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "common.hpp"
#include "envelope.hpp"

namespace msgate {

struct FGA {
  double f = 0.0;
  double g = 0.0;
  double a = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<double> f;
  std::vector<double> g;
  std::vector<double> a;
};

namespace detail {

// Dormand-Prince 5(4) pair on the three-component system (F, G, A).
// A is accumulated on the same adaptive grid as F, so the nested integral
// costs no extra evaluations.
class FgaIntegrator {
 public:
  FgaIntegrator(const PulseEnvelope& env, double delta, double tol)
      : env_(env), delta_(delta) {
    if (tol <= 0.0) throw invalid_parameter("fga_quadrature: tol must be positive");
    // Local control a notch below the requested absolute accuracy.
    atol_fg_ = 0.1 * tol;
    atol_a_ = tol;
    breakpoints_ = env.breakpoints();
  }

  // Advance the running state from its current time to t (t must not decrease).
  FGA advance_to(double t) {
    while (time_ < t) {
      double stop = next_stop(t);
      integrate_span(time_, stop);
      time_ = stop;
    }
    return state_;
  }

 private:
  std::array<double, 3> rhs(double t, const std::array<double, 3>& y) const {
    double om = env_.evaluate(t);
    double c = std::cos(delta_ * t);
    double s = std::sin(delta_ * t);
    return {-sqrt2 * om * c, -sqrt2 * om * s, sqrt2 * y[0] * om * s};
  }

  double next_stop(double t) const {
    double stop = t;
    for (double b : breakpoints_)
      if (b > time_ + 1e-18 && b < stop) stop = b;
    return stop;
  }

  void integrate_span(double t0, double t1) {
    if (t1 <= t0) return;
    // Past the pulse the integrands vanish identically.
    if (t0 >= env_.duration()) return;
    std::array<double, 3> y{state_.f, state_.g, state_.a};
    double t = t0;
    double h = std::min(t1 - t0, initial_step());
    int rejected_in_a_row = 0;
    for (long iter = 0; iter < 20'000'000; ++iter) {
      if (t >= t1 - 1e-18 * std::max(1.0, std::abs(t1))) break;
      h = std::min(h, t1 - t);
      auto k1 = rhs(t, y);
      auto at = [&](double frac, const std::array<double, 3>& incr) {
        std::array<double, 3> yy;
        for (int i = 0; i < 3; ++i) yy[i] = y[i] + h * incr[i];
        return rhs(t + frac * h, yy);
      };
      auto k2 = at(1.0 / 5, {k1[0] / 5, k1[1] / 5, k1[2] / 5});
      auto lc = [&](std::initializer_list<double> w,
                    std::initializer_list<const std::array<double, 3>*> ks) {
        std::array<double, 3> r{0, 0, 0};
        auto wi = w.begin();
        for (auto kp : ks) {
          for (int i = 0; i < 3; ++i) r[i] += *wi * (*kp)[i];
          ++wi;
        }
        return r;
      };
      auto k3 = at(3.0 / 10, lc({3.0 / 40, 9.0 / 40}, {&k1, &k2}));
      auto k4 = at(4.0 / 5, lc({44.0 / 45, -56.0 / 15, 32.0 / 9}, {&k1, &k2, &k3}));
      auto k5 = at(8.0 / 9,
                   lc({19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
                      {&k1, &k2, &k3, &k4}));
      auto k6 = at(1.0, lc({9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
                            -5103.0 / 18656},
                           {&k1, &k2, &k3, &k4, &k5}));
      auto y5inc = lc({35.0 / 384, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
                      {&k1, &k3, &k4, &k5, &k6});
      std::array<double, 3> ynew;
      for (int i = 0; i < 3; ++i) ynew[i] = y[i] + h * y5inc[i];
      auto k7 = rhs(t + h, ynew);
      auto errv = lc({71.0 / 57600, -71.0 / 16695, 71.0 / 1920, -17253.0 / 339200,
                      22.0 / 525, -1.0 / 40},
                     {&k1, &k3, &k4, &k5, &k6, &k7});
      double err = 0.0;
      for (int i = 0; i < 3; ++i) {
        double atol = (i == 2) ? atol_a_ : atol_fg_;
        err = std::max(err, std::abs(h * errv[i]) / atol);
      }
      if (err <= 1.0) {
        t += h;
        y = ynew;
        rejected_in_a_row = 0;
      } else if (++rejected_in_a_row > 60) {
        throw numeric_failure("fga_quadrature: step control stalled", err * atol_fg_);
      }
      double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
      h *= std::clamp(fac, 0.2, 5.0);
      if (h < 1e-16 * std::max(1.0, std::abs(t1)))
        throw numeric_failure("fga_quadrature: step underflow", err * atol_fg_);
    }
    state_ = {y[0], y[1], y[2]};
  }

  double initial_step() const {
    // A fraction of the fastest oscillation period in the integrand.
    double wmax = std::max(std::abs(delta_), 1.0 / env_.duration());
    return 0.05 * two_pi / wmax;
  }

  const PulseEnvelope& env_;
  double delta_;
  double atol_fg_;
  double atol_a_;
  std::vector<double> breakpoints_;
  FGA state_{};
  double time_ = 0.0;
};

// Piecewise-constant envelopes (square, Walsh) integrate in elementary terms
// segment by segment; exact and branch-free enough for tight sweeps.
inline FGA fga_piecewise_const(const PulseEnvelope& env, double delta, double t) {
  double om = env.omega_ms();
  double tau = env.duration();
  double tend = std::min(t, tau);
  if (tend <= 0.0) return {};
  std::vector<int> signs;
  if (env.kind() == EnvelopeKind::Square)
    signs.assign(1, 1);
  else
    signs = env.segments();
  auto nseg = static_cast<int>(signs.size());
  FGA r;
  for (int j = 0; j < nseg; ++j) {
    double a0 = tau * j / nseg;
    double a1 = std::min(tau * (j + 1) / nseg, tend);
    if (a1 <= a0) break;
    double so = signs[j] * om;
    double s0 = std::sin(delta * a0), c0 = std::cos(delta * a0);
    double s1 = std::sin(delta * a1), c1 = std::cos(delta * a1);
    double fj = r.f;
    r.f = fj - sqrt2 * so * (s1 - s0) / delta;
    r.g = r.g + sqrt2 * so * (c1 - c0) / delta;
    r.a += sqrt2 * so * (fj + sqrt2 * so * s0 / delta) * (c0 - c1) / delta -
           2.0 * so * so / delta *
               ((a1 - a0) / 2.0 - (std::sin(2 * delta * a1) - std::sin(2 * delta * a0)) / (4 * delta));
  }
  return r;
}

/// sin^2 envelope at arbitrary detuning: the drive splits into three tones
// nu = {delta, delta + w1, delta - w1} with weights {1/2, -1/4, -1/4} Omega,
// and every integral reduces to sums over tone pairs.
inline FGA fga_sin2_tones(const PulseEnvelope& env, double delta, double t) {
  double om = env.omega_ms();
  double tau = env.duration();
  double w1 = two_pi / tau;
  double tend = std::min(t, tau);
  if (tend <= 0.0) return {};
  std::array<double, 3> nu{delta, delta + w1, delta - w1};
  std::array<double, 3> gw{om / 2, -om / 4, -om / 4};
  for (double v : nu)
    if (std::abs(v) * tau < 1e-9)
      throw invalid_parameter("fga_closed_form: sin^2 form degenerate at |delta| ~ 2pi/tau or 0");
  auto S = [&](double ni, double nj) {
    if (ni == nj) return tend / 2.0 - std::sin(2 * ni * tend) / (4 * ni);
    return 0.5 * (std::sin((ni - nj) * tend) / (ni - nj) - std::sin((ni + nj) * tend) / (ni + nj));
  };
  FGA r;
  for (int i = 0; i < 3; ++i) {
    r.f -= sqrt2 * gw[i] * std::sin(nu[i] * tend) / nu[i];
    r.g -= sqrt2 * gw[i] * (1.0 - std::cos(nu[i] * tend)) / nu[i];
    for (int j = 0; j < 3; ++j) r.a -= 2.0 * (gw[i] * gw[j] / nu[i]) * S(nu[i], nu[j]);
  }
  return r;
}

}  // namespace detail

inline FGA fga_quadrature(const PulseEnvelope& env, double delta, double t,
                          double tol = 1e-10) {
  if (t < 0.0) throw invalid_parameter("fga_quadrature: t must be nonnegative");
  if (t == 0.0) return {};
  detail::FgaIntegrator integ(env, delta, tol);
  return integ.advance_to(t);
}

inline FGA fga_closed_form(const PulseEnvelope& env, double delta, double t) {
  double tend = std::min(t, env.duration());
  switch (env.kind()) {
    case EnvelopeKind::Square: {
      if (tend <= 0.0) return {};
      double om = env.omega_ms();
      FGA r;
      r.f = -sqrt2 * om * std::sin(delta * tend) / delta;
      r.g = sqrt2 * om * (std::cos(delta * tend) - 1.0) / delta;
      r.a = -om * om * tend / delta +
            om * om * std::sin(2 * delta * tend) / (2 * delta * delta);
      return r;
    }
    case EnvelopeKind::SinN:
      if (env.n() != 2 || env.m() != 1)
        throw unsupported_shape("fga_closed_form: only sin^2 with m = 1 has a closed form");
      return detail::fga_sin2_tones(env, delta, t);
    case EnvelopeKind::Walsh:
      throw unsupported_shape("fga_closed_form: no closed form for Walsh envelopes");
  }
  throw unsupported_shape("fga_closed_form: unknown envelope kind");
}

/// Fast exact path used by the noise sweeps: closed form for square/sin^2,
// per-segment elementary integrals for Walsh.
inline FGA fga_exact(const PulseEnvelope& env, double delta, double t) {
  if (env.kind() == EnvelopeKind::Walsh)
    return detail::fga_piecewise_const(env, delta, t);
  return fga_closed_form(env, delta, t);
}

inline Trajectory sample_trajectory(const PulseEnvelope& env, double delta,
                                    int num_points, double tol = 1e-10) {
  if (num_points < 2) throw invalid_parameter("sample_trajectory: need num_points >= 2");
  Trajectory traj;
  traj.times.reserve(num_points);
  traj.f.reserve(num_points);
  traj.g.reserve(num_points);
  traj.a.reserve(num_points);
  detail::FgaIntegrator integ(env, delta, tol);
  double tau = env.duration();
  for (int i = 0; i < num_points; ++i) {
    double t = tau * i / (num_points - 1);
    FGA v = integ.advance_to(t);
    traj.times.push_back(t);
    traj.f.push_back(v.f);
    traj.g.push_back(v.g);
    traj.a.push_back(v.a);
  }
  return traj;
}

}  // namespace msgate
