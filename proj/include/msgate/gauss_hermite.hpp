#pragma once

// Gauss-Hermite nodes/weights (physicists' convention, weight e^{-x^2}) from
// the Golub-Welsch tridiagonal; used for deterministic averages over Gaussian
// parameter distributions:  E[f(eps)] = pi^{-1/2} sum_i w_i f(sqrt2 sigma x_i).

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "common.hpp"

namespace msgate {

struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussHermite gauss_hermite(int n) {
  if (n < 1) throw invalid_parameter("gauss_hermite: need at least one node");
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    double b = std::sqrt(i / 2.0);
    j(i, i - 1) = b;
    j(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  if (es.info() != Eigen::Success)
    throw numeric_failure("gauss_hermite: eigensolver failed", 0.0);
  GaussHermite gh;
  gh.nodes.resize(n);
  gh.weights.resize(n);
  const double mu0 = std::sqrt(pi);  // integral of the weight
  for (int i = 0; i < n; ++i) {
    gh.nodes[i] = es.eigenvalues()(i);
    double v0 = es.eigenvectors()(0, i);
    gh.weights[i] = mu0 * v0 * v0;
  }
  return gh;
}

// Mean of f under N(0, sigma^2), deterministic.
template <class F>
double gaussian_mean(F&& f, double sigma, int nodes) {
  if (sigma == 0.0) return f(0.0);
  GaussHermite gh = gauss_hermite(nodes);
  double acc = 0.0;
  for (int i = 0; i < nodes; ++i)
    acc += gh.weights[i] * f(sqrt2 * sigma * gh.nodes[i]);
  return acc / std::sqrt(pi);
}

}  // namespace msgate
