#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "msgate/rng.hpp"
#include "msgate/solver.hpp"
#include "msgate/trajectory.hpp"

using namespace msgate;

namespace {
constexpr double omega = two_pi * 1180.0;
}

TEST_CASE("trajectory integrals vanish at t=0", "[trajectory]") {
  for (const auto& env : {make_square(omega, 1e-3), make_sinn(omega, 2, 1, 1e-3),
                          make_walsh(omega, 1e-3, 7)}) {
    auto v = fga_quadrature(env, two_pi * 4000.0, 0.0);
    CHECK(v.f == 0.0);
    CHECK(v.g == 0.0);
    CHECK(v.a == 0.0);
  }
}

TEST_CASE("square-pulse quadrature matches the elementary antiderivative",
          "[trajectory]") {
  double tau = 1.2e-3;
  auto env = make_square(omega, tau);
  auto rng = Rng(11u);
  for (int i = 0; i < 20; ++i) {
    double delta = two_pi * (500.0 + 9000.0 * rng.uniform());
    double t = tau * rng.uniform();
    auto v = fga_quadrature(env, delta, t);
    double f_ref = -std::sqrt(2.0) * omega * std::sin(delta * t) / delta;
    double g_ref = std::sqrt(2.0) * omega * (std::cos(delta * t) - 1.0) / delta;
    CHECK(v.f == Catch::Approx(f_ref).margin(1e-10));
    CHECK(v.g == Catch::Approx(g_ref).margin(1e-10));
  }
}

TEST_CASE("shaped gate closes with a quarter-turn phase", "[trajectory]") {
  auto sol = solve_sin2(omega, 17);
  auto v = fga_quadrature(sol.envelope, sol.delta, sol.tau());
  CHECK(std::abs(v.f) < 1e-6);
  CHECK(std::abs(v.g) < 1e-6);
  CHECK(v.a == Catch::Approx(-pi / 2).margin(1e-6));
  CHECK(sol.delta == Catch::Approx(two_pi * 18.0 / sol.tau()).epsilon(1e-13));
}

TEST_CASE("square closed form at integer loops", "[trajectory]") {
  double tau = 1.3e-3;
  auto env = make_square(omega, tau);
  for (int loops : {1, 2, 5}) {
    double delta = two_pi * loops / tau;
    auto v = fga_closed_form(env, delta, tau);
    CHECK(std::abs(v.f) < 1e-12);
    CHECK(std::abs(v.g) < 1e-12);
    double a_ref = -two_pi * loops * omega * omega / (delta * delta);
    CHECK(v.a == Catch::Approx(a_ref).epsilon(1e-12));
    auto q = fga_quadrature(env, delta, tau, 1e-11);
    CHECK(v.a == Catch::Approx(q.a).margin(1e-9));
  }
}

TEST_CASE("shaped-gate phase matches the orthogonality closed form",
          "[trajectory]") {
  for (int k : {1, 2, 17, 20}) {
    double tau = 2.5e-3;
    double delta = two_pi * (k + 1.0) / tau;
    auto env = make_sinn(omega, 2, 1, tau);
    double bigk = 2.0 * (k + 1.0);
    double a_ref = -(omega * omega * tau * tau / pi) *
                   (1.0 / (4.0 * bigk) + 1.0 / (16.0 * (bigk - 2.0)) +
                    1.0 / (16.0 * (bigk + 2.0)));
    auto cf = fga_closed_form(env, delta, tau);
    CHECK(cf.a == Catch::Approx(a_ref).epsilon(1e-12));
    auto q = fga_quadrature(env, delta, tau, 1e-11);
    CHECK(cf.a == Catch::Approx(q.a).margin(1e-9));
  }
}

TEST_CASE("loop closure across the gate-order family", "[trajectory]") {
  double tau = 2.0e-3;
  auto env = make_sinn(omega, 2, 1, tau);
  for (int k = 1; k <= 25; ++k) {
    double delta = two_pi * (k + 1.0) / tau;
    auto v = fga_quadrature(env, delta, tau);
    CHECK(std::abs(v.f) < 1e-9);
    CHECK(std::abs(v.g) < 1e-9);
  }
}

TEST_CASE("closed forms agree with quadrature on random cases", "[trajectory]") {
  auto rng = Rng(29u);
  double tau = 1.8e-3;
  auto sq = make_square(omega, tau);
  auto s2 = make_sinn(omega, 2, 1, tau);
  for (int i = 0; i < 100; ++i) {
    double delta = two_pi * (300.0 + 9700.0 * rng.uniform());
    double t = tau * rng.uniform();
    for (const auto& env : {sq, s2}) {
      auto cf = fga_closed_form(env, delta, t);
      auto q = fga_quadrature(env, delta, t, 1e-11);
      CHECK(cf.f == Catch::Approx(q.f).margin(1e-9));
      CHECK(cf.g == Catch::Approx(q.g).margin(1e-9));
      CHECK(cf.a == Catch::Approx(q.a).margin(1e-9));
    }
  }
}

TEST_CASE("piecewise-constant fast path covers walsh envelopes", "[trajectory]") {
  auto rng = Rng(31u);
  double tau = 1.1e-3;
  auto env = make_walsh(omega, tau, 7);
  for (int i = 0; i < 25; ++i) {
    double delta = two_pi * (500.0 + 9000.0 * rng.uniform());
    double t = tau * rng.uniform();
    auto ex = fga_exact(env, delta, t);
    auto q = fga_quadrature(env, delta, t, 1e-11);
    CHECK(ex.f == Catch::Approx(q.f).margin(1e-9));
    CHECK(ex.g == Catch::Approx(q.g).margin(1e-9));
    CHECK(ex.a == Catch::Approx(q.a).margin(1e-9));
  }
}

TEST_CASE("integrals freeze once the drive is off", "[trajectory]") {
  auto sol = solve_sin2(omega, 3);
  auto at_tau = fga_exact(sol.envelope, sol.delta, sol.tau());
  auto later = fga_exact(sol.envelope, sol.delta, 1.7 * sol.tau());
  CHECK(at_tau.f == later.f);
  CHECK(at_tau.g == later.g);
  CHECK(at_tau.a == later.a);
  auto q_tau = fga_quadrature(sol.envelope, sol.delta, sol.tau());
  auto q_later = fga_quadrature(sol.envelope, sol.delta, 1.7 * sol.tau());
  CHECK(q_tau.f == Catch::Approx(q_later.f).margin(1e-12));
  CHECK(q_tau.a == Catch::Approx(q_later.a).margin(1e-12));
}

TEST_CASE("unsupported kinds are rejected by the closed form", "[trajectory]") {
  CHECK_THROWS_AS(fga_closed_form(make_sinn(omega, 3, 1, 1e-3), two_pi * 4e3, 5e-4),
                  unsupported_shape);
  CHECK_THROWS_AS(fga_closed_form(make_walsh(omega, 1e-3, 7), two_pi * 4e3, 5e-4),
                  unsupported_shape);
}

TEST_CASE("soft pulse edges make the trajectory stationary at closure",
          "[trajectory]") {
  auto sol = solve_sin2(omega, 17);
  double tau = sol.tau();
  double h = 1e-4 * tau;
  auto a = fga_quadrature(sol.envelope, sol.delta, tau - h, 1e-12);
  auto b = fga_quadrature(sol.envelope, sol.delta, tau, 1e-12);
  double scale = std::sqrt(2.0) * omega;  // mid-pulse |dF/dt| magnitude
  CHECK(std::abs(b.f - a.f) / h < 1e-6 * scale);
  CHECK(std::abs(b.g - a.g) / h < 1e-6 * scale);
  CHECK(std::abs(b.a - a.a) / h < 1e-6 * scale);
}

TEST_CASE("displacement scales linearly and phase quadratically in the drive",
          "[trajectory]") {
  double tau = 1.9e-3;
  double delta = two_pi * 3700.0;
  double t = 0.77 * tau;
  auto v1 = fga_quadrature(make_sinn(omega, 2, 1, tau), delta, t);
  auto v2 = fga_quadrature(make_sinn(2.0 * omega, 2, 1, tau), delta, t);
  CHECK(v2.f == Catch::Approx(2.0 * v1.f).epsilon(1e-9));
  CHECK(v2.g == Catch::Approx(2.0 * v1.g).epsilon(1e-9));
  CHECK(v2.a == Catch::Approx(4.0 * v1.a).epsilon(1e-9));
}

TEST_CASE("sampled square loop lies on a circle", "[trajectory]") {
  auto sol = solve_square(omega, 1);
  auto traj = sample_trajectory(sol.envelope, sol.delta, 400);
  double r = std::sqrt(2.0) * omega / sol.delta;
  double worst = 0.0;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    double dg = traj.g[i] + r;  // circle centered at (G,F) = (-r, 0)
    double dev = std::abs(std::hypot(dg, traj.f[i]) - r);
    worst = std::max(worst, dev);
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("shaped loops stay closer to the origin than the square loop",
          "[trajectory]") {
  auto shaped = solve_sin2(omega, 1);
  auto square = solve_square(omega, 1);
  auto ts = sample_trajectory(shaped.envelope, shaped.delta, 2000);
  auto tq = sample_trajectory(square.envelope, square.delta, 2000);
  double max_s = 0.0, max_q = 0.0;
  for (std::size_t i = 0; i < ts.times.size(); ++i)
    max_s = std::max(max_s, std::hypot(ts.g[i], ts.f[i]));
  for (std::size_t i = 0; i < tq.times.size(); ++i)
    max_q = std::max(max_q, std::hypot(tq.g[i], tq.f[i]));
  CHECK(max_s < max_q);
}

TEST_CASE("multi-loop square trajectory revisits the origin once per loop",
          "[trajectory]") {
  auto sol = solve_square(omega, 7);
  double r = std::sqrt(2.0) * omega / sol.delta;
  for (int j = 1; j <= 7; ++j) {
    auto v = fga_exact(sol.envelope, sol.delta, j * sol.tau() / 7.0);
    CHECK(std::hypot(v.f, v.g) < 1e-9);
    if (j < 7) {
      auto mid = fga_exact(sol.envelope, sol.delta, (j + 0.5) * sol.tau() / 7.0);
      CHECK(std::hypot(mid.f, mid.g) > r);  // loop apex between the returns
    }
  }
}

TEST_CASE("two-point sampling returns the endpoints", "[trajectory]") {
  auto sol = solve_sin2(omega, 2);
  auto traj = sample_trajectory(sol.envelope, sol.delta, 2);
  REQUIRE(traj.times.size() == 2);
  CHECK(traj.times.front() == 0.0);
  CHECK(traj.times.back() == Catch::Approx(sol.tau()));
  CHECK(std::abs(traj.f.back()) < 1e-9);
  CHECK(std::abs(traj.g.back()) < 1e-9);
  CHECK_THROWS_AS(sample_trajectory(sol.envelope, sol.delta, 1), invalid_parameter);
}
