#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "msgate/rng.hpp"
#include "msgate/tomography.hpp"

using namespace msgate;

namespace {

double poisson_cdf(int k, double mu) {
  double p = std::exp(-mu), cdf = p;
  for (int c = 1; c <= k; ++c) {
    p *= mu / c;
    cdf += p;
  }
  return cdf;
}

}  // namespace

TEST_CASE("histogram model basics", "[tomography]") {
  HistogramModel model;
  auto mu = model.means();
  CHECK(mu[0] == 4.0);
  CHECK(mu[1] == 32.0);
  CHECK(mu[2] == 60.0);

  HistogramModel bad;
  bad.lambda_bright = bad.lambda_dark;
  CHECK_THROWS_AS(bad.validate(), ill_conditioned);

  Histogram h;
  h.add(2, 10);
  h.add(5);
  CHECK(h.total() == 11);
  CHECK(h.counts[2] == 10);
  CHECK_THROWS_AS(h.add(-1), invalid_parameter);
}

TEST_CASE("count simulator hits the component means", "[tomography]") {
  HistogramModel model;
  auto dark = simulate_counts({1.0, 0.0, 0.0}, model, 200000, 3u);
  auto bright = simulate_counts({0.0, 0.0, 1.0}, model, 200000, 4u);
  auto mean_of = [](const Histogram& h) {
    double c = 0.0;
    for (std::size_t i = 0; i < h.counts.size(); ++i)
      c += static_cast<double>(h.counts[i]) * i;
    return c / h.total();
  };
  CHECK(mean_of(dark) == Catch::Approx(4.0).margin(0.05));
  CHECK(mean_of(bright) == Catch::Approx(60.0).margin(0.1));
  CHECK(dark.total() == 200000);

  auto again = simulate_counts({1.0, 0.0, 0.0}, model, 1000, 3u);
  auto once = simulate_counts({1.0, 0.0, 0.0}, model, 1000, 3u);
  CHECK(again.counts == once.counts);
  CHECK_THROWS_AS(simulate_counts({0.7, 0.0, 0.0}, model, 10, 1u),
                  invalid_parameter);
}

TEST_CASE("poisson mixture fit recovers synthetic populations", "[tomography]") {
  HistogramModel model;

  auto pure = simulate_counts({1.0, 0.0, 0.0}, model, 10000, 21u);
  auto wp = fit_poissonians(pure, model);
  CHECK(wp[0] >= 0.99);

  auto mixed = simulate_counts({0.5, 0.0, 0.5}, model, 10000, 22u);
  auto wm = fit_poissonians(mixed, model);
  CHECK(wm[0] == Catch::Approx(0.5).margin(0.02));
  CHECK(wm[1] == Catch::Approx(0.0).margin(0.02));
  CHECK(wm[2] == Catch::Approx(0.5).margin(0.02));
  CHECK(wm[0] + wm[1] + wm[2] == Catch::Approx(1.0).margin(1e-12));

  Histogram spike;
  spike.add(2, 20000);
  auto ws = fit_poissonians(spike, model);
  CHECK(ws[0] > 0.999);

  HistogramModel degenerate;
  degenerate.lambda_bright = degenerate.lambda_dark;
  CHECK_THROWS_AS(fit_poissonians(mixed, degenerate), ill_conditioned);
}

TEST_CASE("estimators converge with the shot count", "[tomography]") {
  HistogramModel model;
  model.lambda_bright = 60.0;
  std::array<double, 3> truth{0.45, 0.10, 0.45};
  auto thresholds = default_thresholds(model);
  for (auto method : {FidelityMethod::Poissonian, FidelityMethod::Threshold}) {
    double prev_err = 1.0;
    for (std::uint64_t shots : {1000ull, 10000ull, 100000ull}) {
      auto hist = simulate_counts(truth, model, shots, 77u + shots);
      auto est = method == FidelityMethod::Poissonian
                     ? fit_poissonians(hist, model)
                     : threshold_bin(hist, thresholds);
      double err = 0.0;
      for (int i = 0; i < 3; ++i) err = std::max(err, std::abs(est[i] - truth[i]));
      if (shots == 100000ull) {
        double se = std::sqrt(0.45 * 0.55 / static_cast<double>(shots));
        CHECK(err < 3.0 * se);
      }
      CHECK(err < prev_err + 0.02);  // decreasing, modulo sampling noise
      prev_err = err;
    }
  }
}

TEST_CASE("model calibration from reference histograms", "[tomography]") {
  HistogramModel truth;
  auto dd = simulate_counts({1, 0, 0}, truth, 20000, 31u);
  auto b1 = simulate_counts({0, 1, 0}, truth, 20000, 32u);
  auto b2 = simulate_counts({0, 1, 0}, truth, 20000, 33u);
  auto bb = simulate_counts({0, 0, 1}, truth, 20000, 34u);
  auto model = calibrate_model(dd, b1, b2, bb);
  CHECK(model.lambda_dark == Catch::Approx(truth.lambda_dark).epsilon(0.02));
  CHECK(model.lambda_bright == Catch::Approx(truth.lambda_bright).epsilon(0.02));

  CHECK_THROWS_AS(calibrate_model(dd, dd, dd, dd), calibration_error);
  Histogram empty;
  CHECK_THROWS_AS(calibrate_model(empty, b1, b2, bb), calibration_error);
}

TEST_CASE("threshold binning separates the three count bands", "[tomography]") {
  HistogramModel model;  // (2, 30)
  auto dark = simulate_counts({1, 0, 0}, model, 20000, 41u);
  auto bins = threshold_bin(dark, {8, 22});
  double tail = poisson_cdf(8, 4.0);
  double se = std::sqrt(tail * (1.0 - tail) / 20000.0);
  CHECK(bins[0] == Catch::Approx(tail).margin(3.0 * se));
  CHECK(bins[0] > 0.97);

  auto mixed = simulate_counts({0.5, 0.0, 0.5}, model, 10000, 42u);
  auto mixed_bins = threshold_bin(mixed, default_thresholds(model));
  CHECK(mixed_bins[0] == Catch::Approx(0.5).margin(0.02));
  CHECK(mixed_bins[2] == Catch::Approx(0.5).margin(0.02));

  auto degen = threshold_bin(mixed, {8, 8});
  CHECK(degen[1] == 0.0);
  CHECK_THROWS_AS(threshold_bin(mixed, {9, 8}), invalid_parameter);
}

TEST_CASE("default thresholds minimize the misclassification rate",
          "[tomography]") {
  HistogramModel model;  // (2, 30)
  auto [t1, t2] = default_thresholds(model);
  CHECK(t1 == 13);
  CHECK(t2 == 44);
}

TEST_CASE("binned fractions follow the mixture law", "[tomography]") {
  HistogramModel model;
  model.lambda_bright = 60.0;
  std::array<double, 3> p{0.45, 0.10, 0.45};
  auto thresholds = default_thresholds(model);
  auto hist = simulate_counts(p, model, 200000, 51u);
  auto q = threshold_bin(hist, thresholds);
  auto mu = model.means();
  for (int b = 0; b < 3; ++b) {
    double pred = 0.0;
    for (int j = 0; j < 3; ++j) {
      double in_bin =
          b == 0 ? poisson_cdf(thresholds.first, mu[j])
                 : (b == 1 ? poisson_cdf(thresholds.second, mu[j]) -
                                 poisson_cdf(thresholds.first, mu[j])
                           : 1.0 - poisson_cdf(thresholds.second, mu[j]));
      pred += p[j] * in_bin;
    }
    double se = std::sqrt(std::max(pred * (1.0 - pred), 1e-9) / 200000.0);
    CHECK(q[b] == Catch::Approx(pred).margin(3.0 * se));
  }
}

TEST_CASE("parity fit on exact and sampled oscillations", "[tomography]") {
  ParityScan scan;
  for (int i = 0; i < 12; ++i) {
    double phi = pi * i / 12.0;
    scan.phases.push_back(phi);
    scan.parity.push_back(0.99 * std::cos(2.0 * phi));
  }
  scan.shots_per_phase = 600;
  auto fit = fit_parity(scan);
  CHECK(fit.amplitude == Catch::Approx(0.99).margin(1e-10));
  CHECK(fit.phase_offset == Catch::Approx(0.0).margin(1e-10));

  ParityScan flat = scan;
  for (auto& v : flat.parity) v = 0.0;
  CHECK(fit_parity(flat).amplitude == Catch::Approx(0.0).margin(1e-12));

  // finite shots: binomial sampling of each parity point
  Rng rng(61u);
  ParityScan noisy = scan;
  double var_amp = 0.0;
  for (std::size_t i = 0; i < noisy.phases.size(); ++i) {
    double par = 0.99 * std::cos(2.0 * noisy.phases[i]);
    int n = 600, up = 0;
    for (int s = 0; s < n; ++s)
      if (rng.uniform() < (1.0 + par) / 2.0) ++up;
    noisy.parity[i] = (2.0 * up - n) / static_cast<double>(n);
    double vi = (1.0 - par * par) / n;
    var_amp += vi * std::cos(2.0 * noisy.phases[i]) * std::cos(2.0 * noisy.phases[i]);
  }
  var_amp *= 4.0 / (noisy.phases.size() * noisy.phases.size());
  auto nf = fit_parity(noisy);
  CHECK(std::abs(nf.amplitude - 0.99) < 3.0 * std::sqrt(var_amp) + 1e-9);

  ParityScan few;
  few.phases = {0.0, 0.5, 1.0};
  few.parity = {1.0, 0.5, -0.5};
  CHECK_THROWS_AS(fit_parity(few), invalid_parameter);

  // four distinct phases, but all equal mod pi: the cos/sin design collapses
  ParityScan aliased;
  aliased.phases = {0.0, pi, 2.0 * pi, 3.0 * pi};
  aliased.parity = {1.0, 1.0, 1.0, 1.0};
  CHECK_THROWS_AS(fit_parity(aliased), fit_error);
}

TEST_CASE("parity fidelity formula", "[tomography]") {
  CHECK(fidelity_from_parity(0.5, 0.5, 1.0) == 1.0);
  CHECK(fidelity_from_parity(0.5, 0.5, 0.0) == 0.5);
  CHECK(fidelity_from_parity(0.497, 0.498, 0.995) ==
        Catch::Approx(0.995).margin(1e-12));

  Rng rng(71u);
  for (int i = 0; i < 50; ++i) {
    double uu = 0.5 * rng.uniform(), dd = 0.5 * rng.uniform();
    double a = rng.uniform();
    double base = fidelity_from_parity(uu, dd, a);
    CHECK(fidelity_from_parity(uu + 0.01, dd, a) >= base);
    CHECK(fidelity_from_parity(uu, dd + 0.01, a) >= base);
    CHECK(fidelity_from_parity(uu, dd, std::min(a + 0.01, 1.0)) >= base);
  }
}

TEST_CASE("spam correction inverts the forward channel", "[tomography]") {
  CHECK(spam_correct(0.83, 0.0) == 0.83);
  CHECK(spam_correct(1.0, 0.015) == 1.0);  // clipped

  double eps = 0.015;
  for (double f : {0.2, 0.5, 0.9, 0.995}) {
    double raw = (1.0 - eps) * f + eps / 2.0;
    CHECK(spam_correct(raw, eps) == Catch::Approx(f).margin(1e-12));
    double raw_div = (1.0 - eps) * f;
    CHECK(spam_correct(raw_div, eps, SpamConvention::DivideOnly) ==
          Catch::Approx(f).margin(1e-12));
  }

  std::array<double, 3> p{0.3, 0.2, 0.5};
  std::array<double, 3> forward;
  for (int i = 0; i < 3; ++i)
    forward[i] = (1.0 - eps) * p[i] + eps * (i == 1 ? 0.0 : 0.5);
  auto back = spam_correct(forward, eps);
  for (int i = 0; i < 3; ++i) CHECK(back[i] == Catch::Approx(p[i]).margin(1e-12));
}

TEST_CASE("bootstrap interval behavior", "[tomography]") {
  HistogramModel model;
  auto estimator = [&](const ParityExperiment& d) {
    return estimate_fidelity(d, model, FidelityMethod::Threshold);
  };

  // zero-variance data: every histogram concentrated on one count value
  ParityExperiment flat;
  flat.population.add(2, 500);
  for (int i = 0; i < 6; ++i) {
    flat.phases.push_back(pi * i / 6.0);
    Histogram h;
    h.add(60, 300);
    flat.phase_histograms.push_back(h);
  }
  auto fe = bootstrap(flat, estimator, 150, 9u);
  CHECK(fe.ci68[0] == fe.mean);
  CHECK(fe.ci68[1] == fe.mean);

  CHECK_THROWS_AS(bootstrap(flat, estimator, 50, 9u), invalid_parameter);

  // determinism on scattered data
  ParityExperiment data;
  data.population = simulate_counts({0.5, 0.0, 0.5}, model, 600, 81u);
  for (int i = 0; i < 6; ++i) {
    double phi = pi * i / 6.0;
    data.phases.push_back(phi);
    double par = 0.97 * std::sin(2.0 * phi);
    std::array<double, 3> pp{(1.0 + par) / 4.0, (1.0 - par) / 2.0,
                             (1.0 + par) / 4.0};
    data.phase_histograms.push_back(simulate_counts(pp, model, 200, 90u + i));
  }
  auto e1 = bootstrap(data, estimator, 150, 17u);
  auto e2 = bootstrap(data, estimator, 150, 17u);
  CHECK(e1.mean == e2.mean);
  CHECK(e1.ci68[0] == e2.ci68[0]);
  CHECK(e1.ci68[1] == e2.ci68[1]);
  CHECK(e1.ci68[0] <= e1.mean);
  CHECK(e1.ci68[1] >= e1.mean);
  CHECK(e1.ci68[1] > e1.ci68[0]);
  auto e3 = bootstrap(data, estimator, 150, 18u);
  CHECK((e1.ci68[0] != e3.ci68[0] || e1.ci68[1] != e3.ci68[1]));
}

TEST_CASE("combined-method tag is reserved", "[tomography]") {
  HistogramModel model;
  ParityExperiment data;
  data.population.add(2, 10);
  CHECK_THROWS_AS(
      estimate_fidelity(data, model, FidelityMethod::ParityCombined),
      invalid_parameter);
  CHECK(std::string(fidelity_method_name(FidelityMethod::Poissonian)) ==
        "poissonian");
  CHECK(std::string(spam_convention_name(SpamConvention::DivideOnly)) ==
        "divide_only");
}
