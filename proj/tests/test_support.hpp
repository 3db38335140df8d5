#pragma once

// Shared fixtures for the test binaries.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <cstdint>
#include <random>
#include <vector>

#include "imputebench/imputebench.hpp"

namespace testsupport {

using imputebench::Dataset;
using imputebench::Index;

/// n draws from N(mu, sigma) via an independent Cholesky factor.
inline Eigen::MatrixXd mvnDraws(Index n, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma, std::uint64_t seed) {
  const Eigen::MatrixXd L = sigma.llt().matrixL();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd out(n, mu.size());
  Eigen::VectorXd e(mu.size());
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < mu.size(); ++j) e[j] = z(rng);
    out.row(i) = (mu + L * e).transpose();
  }
  return out;
}

inline Eigen::MatrixXd equicorrelation(Index p, double rho) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Constant(p, p, rho);
  s.diagonal().setOnes();
  return s;
}

inline double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd x = a.array() - a.mean();
  const Eigen::ArrayXd y = b.array() - b.mean();
  return (x * y).sum() / std::sqrt((x * x).sum() * (y * y).sum());
}

/// RMSE over masked cells of column j.
inline double maskedRmse(const Dataset& truth, const Dataset& completed, const imputebench::MissingMask& mask, Index j) {
  double ss = 0.0;
  Index count = 0;
  for (Index i = 0; i < truth.rows(); ++i) {
    if (!mask(i, j)) continue;
    const double d = truth.values()(i, j) - completed.values()(i, j);
    ss += d * d;
    ++count;
  }
  return std::sqrt(ss / static_cast<double>(count));
}

/// Dataset with mask read off NaN cells of `values`.
inline Dataset withNaNMissing(const Eigen::MatrixXd& values) {
  imputebench::MissingMask mask(values.rows(), values.cols());
  for (Index j = 0; j < values.cols(); ++j) {
    for (Index i = 0; i < values.rows(); ++i) mask.set(i, j, std::isnan(values(i, j)));
  }
  return Dataset(Dataset::defaultNames(values.cols()), values, mask);
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace testsupport
