#pragma once

// Statistical layer: fluorescence-count synthesis, population estimation by
// Poisson-mixture ML and by threshold binning, parity fitting, SPAM
// correction, and bootstrap confidence intervals.
//
// Count model: a shot with j bright ions draws Poisson(j lambda_bright +
// (2-j) lambda_dark).  Population vectors are indexed by the number of bright
// ions.  Note the threshold estimator's large-sample limit is the binned law
// q_j = sum_i p_i P(bin j | mean_i), which approaches the true populations only
// when the components are well separated; the Poisson-mixture ML models the
// overlap and is consistent regardless.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace msgate {

struct HistogramModel {
  double lambda_dark = 2.0;
  double lambda_bright = 30.0;
  double window = 400e-6;  // s, detection window; metadata only

  std::array<double, 3> means() const {
    return {2.0 * lambda_dark, lambda_bright + lambda_dark, 2.0 * lambda_bright};
  }
  void validate() const {
    if (lambda_dark < 0.0 || !(lambda_bright > lambda_dark))
      throw ill_conditioned("histogram model requires lambda_bright > lambda_dark >= 0");
  }
};

struct Histogram {
  std::vector<std::uint64_t> counts;  // counts[c] = occurrences of photon count c

  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto v : counts) s += v;
    return s;
  }
  void add(int c, std::uint64_t times = 1) {
    if (c < 0) throw invalid_parameter("negative photon count");
    if (counts.size() <= static_cast<std::size_t>(c)) counts.resize(c + 1, 0);
    counts[c] += times;
  }
};

inline Histogram simulate_counts(const std::array<double, 3>& populations,
                                 const HistogramModel& model, std::uint64_t shots,
                                 Rng& rng) {
  model.validate();
  double sum = populations[0] + populations[1] + populations[2];
  if (std::abs(sum - 1.0) > 1e-9 ||
      *std::min_element(populations.begin(), populations.end()) < -1e-12)
    throw invalid_parameter("simulate_counts: populations must be normalized");
  auto mu = model.means();
  std::vector<double> w(populations.begin(), populations.end());
  Histogram h;
  for (std::uint64_t s = 0; s < shots; ++s) {
    int j = rng.categorical(w);
    h.add(static_cast<int>(rng.poisson(mu[j])));
  }
  return h;
}

inline Histogram simulate_counts(const std::array<double, 3>& populations,
                                 const HistogramModel& model, std::uint64_t shots,
                                 std::uint64_t seed) {
  Rng rng(seed);
  return simulate_counts(populations, model, shots, rng);
}

namespace detail {

inline double log_poisson_pmf(int c, double mu) {
  if (mu <= 0.0) return c == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return c * std::log(mu) - mu - std::lgamma(c + 1.0);
}

}  // namespace detail

// ML weights of the three-component Poisson mixture with fixed means.  The
// log-likelihood is concave in the weights, so EM converges to the global
// maximum.
inline std::array<double, 3> fit_poissonians(const Histogram& hist,
                                             const HistogramModel& model) {
  model.validate();
  std::uint64_t total = hist.total();
  if (total == 0) throw invalid_parameter("fit_poissonians: empty histogram");
  auto mu = model.means();
  std::size_t nbins = hist.counts.size();
  std::array<std::vector<double>, 3> logp;
  for (int j = 0; j < 3; ++j) {
    logp[j].resize(nbins);
    for (std::size_t c = 0; c < nbins; ++c)
      logp[j][c] = detail::log_poisson_pmf(static_cast<int>(c), mu[j]);
  }
  std::array<double, 3> w{1.0 / 3, 1.0 / 3, 1.0 / 3};
  for (int iter = 0; iter < 20000; ++iter) {
    std::array<double, 3> acc{};
    for (std::size_t c = 0; c < nbins; ++c) {
      if (hist.counts[c] == 0) continue;
      std::array<double, 3> lw;
      double mx = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < 3; ++j) {
        lw[j] = w[j] > 0.0 ? std::log(w[j]) + logp[j][c]
                           : -std::numeric_limits<double>::infinity();
        mx = std::max(mx, lw[j]);
      }
      if (!std::isfinite(mx)) continue;  // count impossible under every component
      double denom = 0.0;
      for (int j = 0; j < 3; ++j) denom += std::exp(lw[j] - mx);
      for (int j = 0; j < 3; ++j)
        acc[j] += hist.counts[c] * std::exp(lw[j] - mx) / denom;
    }
    double norm = acc[0] + acc[1] + acc[2];
    std::array<double, 3> next{acc[0] / norm, acc[1] / norm, acc[2] / norm};
    double delta = 0.0;
    for (int j = 0; j < 3; ++j) delta = std::max(delta, std::abs(next[j] - w[j]));
    w = next;
    if (delta < 1e-13) break;
  }
  return w;
}

// Joint ML of (lambda_dark, lambda_bright) from the four reference histograms
// (both dark, each single bright, both bright): Poisson means 2 ld, lb + ld,
// lb + ld, 2 lb share parameters, solved by Newton on the score.
inline HistogramModel calibrate_model(const Histogram& both_dark,
                                      const Histogram& bright_first,
                                      const Histogram& bright_second,
                                      const Histogram& both_bright) {
  auto stats = [](const Histogram& h) {
    double c = 0.0, s = 0.0;
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      c += static_cast<double>(h.counts[i]) * static_cast<double>(i);
      s += static_cast<double>(h.counts[i]);
    }
    return std::pair<double, double>(c, s);
  };
  auto [cdd, sdd] = stats(both_dark);
  auto [c1, s1] = stats(bright_first);
  auto [c2, s2] = stats(bright_second);
  auto [cbb, sbb] = stats(both_bright);
  if (sdd == 0 || s1 == 0 || s2 == 0 || sbb == 0)
    throw calibration_error("calibrate_model: empty reference histogram");
  double cs = c1 + c2, ss = s1 + s2;

  double ld = std::max(cdd / (2.0 * sdd), 1e-9);
  double lb = std::max(cbb / (2.0 * sbb), 2e-9);
  for (int iter = 0; iter < 200; ++iter) {
    double m = ld + lb;
    double g1 = cdd / ld - 2.0 * sdd + cs / m - ss;
    double g2 = cbb / lb - 2.0 * sbb + cs / m - ss;
    double hmm = -cs / (m * m);
    double h11 = -cdd / (ld * ld) + hmm;
    double h22 = -cbb / (lb * lb) + hmm;
    double det = h11 * h22 - hmm * hmm;
    if (std::abs(det) < 1e-300) break;
    double dld = -(h22 * g1 - hmm * g2) / det;
    double dlb = -(h11 * g2 - hmm * g1) / det;
    double scale = 1.0;
    while ((ld + scale * dld <= 0.0 || lb + scale * dlb <= 0.0) && scale > 1e-6)
      scale /= 2;
    ld += scale * dld;
    lb += scale * dlb;
    if (std::abs(dld) + std::abs(dlb) < 1e-12 * (1.0 + ld + lb)) break;
  }
  if (!(lb > ld))
    throw calibration_error("calibrate_model: bright reference not brighter than dark");
  HistogramModel model;
  model.lambda_dark = ld;
  model.lambda_bright = lb;
  return model;
}

// Bin fractions: counts <= t1 -> 0 bright, t1 < counts <= t2 -> 1 bright,
// counts > t2 -> 2 bright.
inline std::array<double, 3> threshold_bin(const Histogram& hist,
                                           std::pair<int, int> thresholds) {
  auto [t1, t2] = thresholds;
  if (t1 > t2) throw invalid_parameter("threshold_bin: need t1 <= t2");
  std::uint64_t total = hist.total();
  if (total == 0) throw invalid_parameter("threshold_bin: empty histogram");
  std::array<std::uint64_t, 3> bins{};
  for (std::size_t c = 0; c < hist.counts.size(); ++c) {
    int b = static_cast<int>(c) <= t1 ? 0 : (static_cast<int>(c) <= t2 ? 1 : 2);
    bins[b] += hist.counts[c];
  }
  return {static_cast<double>(bins[0]) / total, static_cast<double>(bins[1]) / total,
          static_cast<double>(bins[2]) / total};
}

// Integer thresholds minimizing total misclassification probability under the
// calibrated mixture with equal priors (exhaustive scan).
inline std::pair<int, int> default_thresholds(const HistogramModel& model) {
  model.validate();
  auto mu = model.means();
  int kmax = static_cast<int>(std::ceil(mu[2] + 10.0 * std::sqrt(mu[2]) + 20.0));
  std::array<std::vector<double>, 3> cdf;
  for (int j = 0; j < 3; ++j) {
    cdf[j].resize(kmax + 1);
    double pmf = std::exp(-mu[j]);
    double acc = pmf;
    cdf[j][0] = acc;
    for (int c = 1; c <= kmax; ++c) {
      pmf *= mu[j] / c;
      acc += pmf;
      cdf[j][c] = acc;
    }
  }
  double best = std::numeric_limits<double>::infinity();
  std::pair<int, int> arg{0, 0};
  for (int t1 = 0; t1 <= kmax; ++t1)
    for (int t2 = t1; t2 <= kmax; ++t2) {
      double err = (1.0 - cdf[0][t1]) + (cdf[1][t1] + 1.0 - cdf[1][t2]) + cdf[2][t2];
      if (err < best) {
        best = err;
        arg = {t1, t2};
      }
    }
  return arg;
}

struct ParityScan {
  std::vector<double> phases;  // rad
  std::vector<double> parity;  // in [-1, 1]
  int shots_per_phase = 0;
};

struct ParityFit {
  double amplitude = 0.0;     // >= 0
  double phase_offset = 0.0;  // rad; parity(phi) = A cos(2 phi + phi0)
};

inline ParityFit fit_parity(const ParityScan& scan) {
  std::size_t n = scan.phases.size();
  if (scan.parity.size() != n)
    throw invalid_parameter("fit_parity: phases/parity length mismatch");
  std::vector<double> distinct;
  for (double p : scan.phases) {
    bool seen = false;
    for (double d : distinct)
      if (std::abs(p - d) < 1e-12) seen = true;
    if (!seen) distinct.push_back(p);
  }
  if (distinct.size() < 4)
    throw invalid_parameter("fit_parity: need at least 4 distinct phases");
  double scc = 0, sss = 0, scs = 0, scy = 0, ssy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double c = std::cos(2.0 * scan.phases[i]);
    double s = std::sin(2.0 * scan.phases[i]);
    scc += c * c;
    sss += s * s;
    scs += c * s;
    scy += c * scan.parity[i];
    ssy += s * scan.parity[i];
  }
  double det = scc * sss - scs * scs;
  if (det < 1e-9 * static_cast<double>(n) * n)
    throw fit_error("fit_parity: rank-deficient phase design (phases equal mod pi)");
  double a = (sss * scy - scs * ssy) / det;
  double b = (scc * ssy - scs * scy) / det;
  ParityFit f;
  f.amplitude = std::hypot(a, b);
  f.phase_offset = f.amplitude > 0.0 ? std::atan2(-b, a) : 0.0;
  return f;
}

inline double fidelity_from_parity(double p_uu, double p_dd,
                                   double parity_amplitude) {
  auto in01 = [](double x) { return x >= -1e-12 && x <= 1.0 + 1e-12; };
  if (!in01(p_uu) || !in01(p_dd) || !in01(parity_amplitude))
    throw invalid_parameter("fidelity_from_parity: arguments must lie in [0, 1]");
  return std::clamp((p_uu + p_dd) / 2.0 + parity_amplitude / 2.0, 0.0, 1.0);
}

enum class SpamConvention { SymmetricLinear, DivideOnly };

inline const char* spam_convention_name(SpamConvention c) {
  return c == SpamConvention::SymmetricLinear ? "symmetric_linear" : "divide_only";
}

inline double spam_correct(double raw, double epsilon_spam,
                           SpamConvention convention = SpamConvention::SymmetricLinear) {
  if (epsilon_spam < 0.0 || epsilon_spam >= 1.0)
    throw invalid_parameter("spam_correct: need 0 <= epsilon_spam < 1");
  double corrected = convention == SpamConvention::SymmetricLinear
                         ? (raw - epsilon_spam / 2.0) / (1.0 - epsilon_spam)
                         : raw / (1.0 - epsilon_spam);
  return std::clamp(corrected, 0.0, 1.0);
}

inline std::array<double, 3> spam_correct(
    const std::array<double, 3>& raw, double epsilon_spam,
    SpamConvention convention = SpamConvention::SymmetricLinear) {
  if (epsilon_spam < 0.0 || epsilon_spam >= 1.0)
    throw invalid_parameter("spam_correct: need 0 <= epsilon_spam < 1");
  std::array<double, 3> mix{0.5, 0.0, 0.5};
  std::array<double, 3> out;
  for (int j = 0; j < 3; ++j) {
    double c = convention == SpamConvention::SymmetricLinear
                   ? (raw[j] - epsilon_spam * mix[j]) / (1.0 - epsilon_spam)
                   : raw[j] / (1.0 - epsilon_spam);
    out[j] = std::clamp(c, 0.0, 1.0);
  }
  return out;
}

enum class FidelityMethod { Poissonian, Threshold, ParityCombined };

inline const char* fidelity_method_name(FidelityMethod m) {
  switch (m) {
    case FidelityMethod::Poissonian: return "poissonian";
    case FidelityMethod::Threshold: return "threshold";
    case FidelityMethod::ParityCombined: return "parity_combined";
  }
  return "unknown";
}

struct FidelityEstimate {
  double mean = 0.0;
  std::array<double, 2> ci68{0.0, 0.0};
  FidelityMethod method = FidelityMethod::Poissonian;
  bool spam_corrected = false;
};

// Raw data of one fidelity experiment: a population block measured without the
// analysis pulse, and a phase-scanned parity block.
struct ParityExperiment {
  Histogram population;
  std::vector<double> phases;
  std::vector<Histogram> phase_histograms;
};

// Point estimate: populations and per-phase parities extracted with the chosen
// method, parity amplitude from the least-squares fit, then the fidelity
// formula and optional SPAM correction.
inline double estimate_fidelity(const ParityExperiment& data,
                                const HistogramModel& model, FidelityMethod method,
                                double epsilon_spam = 0.0,
                                SpamConvention convention = SpamConvention::SymmetricLinear) {
  if (method == FidelityMethod::ParityCombined)
    throw invalid_parameter(
        "estimate_fidelity: ParityCombined is reserved for the joint-ML method");
  if (data.phases.size() != data.phase_histograms.size())
    throw invalid_parameter("estimate_fidelity: phases/histograms length mismatch");
  auto thresholds = default_thresholds(model);
  auto extract = [&](const Histogram& h) {
    return method == FidelityMethod::Poissonian ? fit_poissonians(h, model)
                                                : threshold_bin(h, thresholds);
  };
  auto pops = extract(data.population);
  ParityScan scan;
  scan.phases = data.phases;
  scan.parity.reserve(data.phases.size());
  for (const Histogram& h : data.phase_histograms) {
    auto p = extract(h);
    scan.parity.push_back(p[0] - p[1] + p[2]);
    scan.shots_per_phase = static_cast<int>(h.total());
  }
  double amp = fit_parity(scan).amplitude;
  double raw = fidelity_from_parity(pops[2], pops[0], std::min(amp, 1.0));
  return spam_correct(raw, epsilon_spam, convention);
}

namespace detail {

inline Histogram resample_histogram(const Histogram& h, Rng& rng) {
  std::uint64_t total = h.total();
  std::vector<double> cdf(h.counts.size());
  double acc = 0.0;
  for (std::size_t c = 0; c < h.counts.size(); ++c) {
    acc += static_cast<double>(h.counts[c]) / total;
    cdf[c] = acc;
  }
  Histogram out;
  out.counts.resize(h.counts.size(), 0);
  for (std::uint64_t s = 0; s < total; ++s) {
    double u = rng.uniform();
    auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    std::size_t c = it == cdf.end() ? cdf.size() - 1
                                    : static_cast<std::size_t>(it - cdf.begin());
    ++out.counts[c];
  }
  return out;
}

inline double percentile(const std::vector<double>& sorted, double q) {
  double pos = q * (sorted.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  double frac = pos - lo;
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace detail

// Nonparametric bootstrap: population block and each phase histogram resampled
// independently; 68% interval from the 16th/84th percentiles of the resampled
// estimates; the reported mean is the estimate on the original data.
inline FidelityEstimate bootstrap(
    const ParityExperiment& data,
    const std::function<double(const ParityExperiment&)>& estimator, int resamples,
    std::uint64_t seed, int threads = 1,
    FidelityMethod method = FidelityMethod::Poissonian, bool spam_corrected = false) {
  if (resamples < 100)
    throw invalid_parameter("bootstrap: need at least 100 resamples");
  std::vector<double> est(resamples);
  parallel_for(resamples, threads, [&](int r) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(r));
    ParityExperiment re;
    re.population = detail::resample_histogram(data.population, rng);
    re.phases = data.phases;
    re.phase_histograms.reserve(data.phase_histograms.size());
    for (const Histogram& h : data.phase_histograms)
      re.phase_histograms.push_back(detail::resample_histogram(h, rng));
    est[r] = estimator(re);
  });
  std::sort(est.begin(), est.end());
  FidelityEstimate out;
  out.mean = estimator(data);
  out.ci68 = {std::min(detail::percentile(est, 0.16), out.mean),
              std::max(detail::percentile(est, 0.84), out.mean)};
  out.method = method;
  out.spam_corrected = spam_corrected;
  return out;
}

}  // namespace msgate
