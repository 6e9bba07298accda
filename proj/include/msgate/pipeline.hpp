#pragma once

// Bridges gate dynamics to the statistical layer: analysis-pulse observables
// of a two-spin density matrix, and full synthetic parity experiments
// (population block measured without the analysis pulse, parity block from a
// phase scan) with an optional SPAM channel applied before detection.
//
// The SPAM channel is rho -> (1-eps) rho + eps (|uu><uu| + |dd><dd|)/2; the
// admixture carries no coherence, so the parity amplitude scales by (1-eps)
// and the spam_correct linear form inverts the fidelity exactly.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dynamics.hpp"
#include "rng.hpp"
#include "tomography.hpp"

namespace msgate {

namespace detail {

inline Eigen::Matrix4cd to_eigen(const SpinDensity& rho) {
  Eigen::Matrix4cd m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = rho[r * 4 + c];
  return m;
}

// pi/2 analysis pulse about the equatorial axis (cos phi, sin phi) on both
// ions: r = (I - i (cos phi X + sin phi Y)) / sqrt2.
inline Eigen::Matrix4cd analysis_pulse(double phi) {
  Eigen::Matrix2cd r;
  cxd off(0.0, -1.0);
  r << 1.0, off * std::exp(cxd(0.0, -phi)), off * std::exp(cxd(0.0, phi)), 1.0;
  r /= sqrt2;
  Eigen::Matrix4cd big;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d)
          big(2 * a + b, 2 * c + d) = r(a, c) * r(b, d);
  return big;
}

}  // namespace detail

// Populations (0, 1, 2 ions bright) after the analysis pulse with phase phi.
inline std::array<double, 3> analyzed_populations(const SpinDensity& rho, double phi) {
  Eigen::Matrix4cd r = detail::analysis_pulse(phi);
  Eigen::Matrix4cd p = r * detail::to_eigen(rho) * r.adjoint();
  return {p(3, 3).real(), p(1, 1).real() + p(2, 2).real(), p(0, 0).real()};
}

inline double analyzed_parity(const SpinDensity& rho, double phi) {
  auto p = analyzed_populations(rho, phi);
  return p[0] - p[1] + p[2];
}

// Ground truth of a synthetic experiment: bare populations plus the parity
// curve parity(phi) = offset + amplitude * cos(2 phi + phase_offset).
struct ExperimentTruth {
  std::array<double, 3> populations{1.0, 0.0, 0.0};
  double amplitude = 0.0;
  double phase_offset = 0.0;
  double offset = 0.0;

  double parity(double phi) const {
    return offset + amplitude * std::cos(2.0 * phi + phase_offset);
  }
  double fidelity() const {
    return (populations[0] + populations[2]) / 2.0 + amplitude / 2.0;
  }
};

// Exact parity-curve coefficients of a state; algebraically equivalent to
// scanning analyzed_parity but closed-form in the density-matrix entries.
inline ExperimentTruth truth_from_state(const SpinDensity& rho) {
  ExperimentTruth t;
  t.populations = populations(rho);
  double alpha = -2.0 * rho[3].real();  // cos(2 phi) coefficient, from <uu|rho|dd>
  double beta = 2.0 * rho[3].imag();
  t.offset = 2.0 * rho[6].real();       // <ud|rho|du> cross coherence
  t.amplitude = std::hypot(alpha, beta);
  t.phase_offset = t.amplitude > 0.0 ? std::atan2(-beta, alpha) : 0.0;
  return t;
}

inline std::vector<double> default_phase_grid(int points) {
  if (points < 1) throw invalid_parameter("phase grid needs at least one point");
  std::vector<double> phases(points);
  for (int i = 0; i < points; ++i) phases[i] = pi * i / points;
  return phases;
}

// Synthesizes the two measurement blocks.  The parity block assumes the
// even-outcome weight splits evenly between 0 and 2 bright (exact for the
// ideal gate state; the parity estimate depends only on the even/odd split).
inline ParityExperiment simulate_experiment(const ExperimentTruth& truth,
                                            const HistogramModel& model,
                                            std::uint64_t population_shots,
                                            const std::vector<double>& phases,
                                            std::uint64_t shots_per_phase,
                                            double epsilon_spam, std::uint64_t seed) {
  if (epsilon_spam < 0.0 || epsilon_spam >= 1.0)
    throw invalid_parameter("simulate_experiment: need 0 <= epsilon_spam < 1");
  ParityExperiment out;
  std::array<double, 3> pops;
  std::array<double, 3> mix{0.5, 0.0, 0.5};
  for (int j = 0; j < 3; ++j)
    pops[j] = (1.0 - epsilon_spam) * truth.populations[j] + epsilon_spam * mix[j];
  Rng rng_pop = Rng::stream(seed, 0);
  out.population = simulate_counts(pops, model, population_shots, rng_pop);
  out.phases = phases;
  out.phase_histograms.reserve(phases.size());
  for (std::size_t i = 0; i < phases.size(); ++i) {
    double par = (1.0 - epsilon_spam) * truth.parity(phases[i]);
    std::array<double, 3> p{(1.0 + par) / 4.0, (1.0 - par) / 2.0, (1.0 + par) / 4.0};
    Rng rng = Rng::stream(seed, 1 + static_cast<std::uint64_t>(i));
    out.phase_histograms.push_back(simulate_counts(p, model, shots_per_phase, rng));
  }
  return out;
}

}  // namespace msgate
