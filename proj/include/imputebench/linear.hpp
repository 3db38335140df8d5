#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "imputebench/error.hpp"

namespace imputebench {

struct LinearModel {
  Eigen::VectorXd coefficients;  // intercept first, then one per predictor
  double residualSd = 0.0;
  double ridgePenalty = 0.0;

  double intercept() const { return coefficients[0]; }
  auto slopes() const { return coefficients.tail(coefficients.size() - 1); }

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const {
    if (X.cols() != coefficients.size() - 1) throw Error(Errc::DimensionMismatch, "predictor count mismatch");
    return (X * slopes()).array() + intercept();
  }
};

/// Least squares (optionally ridge, intercept unpenalized) of y on X plus an
/// intercept. Solved by column-pivoted QR on centered data, with the ridge
/// entering as sqrt(penalty) * I rows appended to the design.
inline LinearModel fitLinear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double ridgePenalty = 0.0) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (y.size() != n) throw Error(Errc::DimensionMismatch, "X and y row counts differ");
  if (n < p + 2) throw Error(Errc::TooFewRows, "need at least p + 2 rows, have " + std::to_string(n));
  if (ridgePenalty < 0.0) throw Error(Errc::InvalidOption, "ridge penalty must be >= 0");

  const Eigen::RowVectorXd xMean = X.colwise().mean();
  const double yMean = y.mean();

  Eigen::MatrixXd design(n + (ridgePenalty > 0.0 ? p : 0), p);
  Eigen::VectorXd response = Eigen::VectorXd::Zero(design.rows());
  design.topRows(n) = X.rowwise() - xMean;
  response.head(n) = y.array() - yMean;
  if (ridgePenalty > 0.0) {
    design.bottomRows(p) = std::sqrt(ridgePenalty) * Eigen::MatrixXd::Identity(p, p);
  }

  Eigen::VectorXd slopes = Eigen::VectorXd::Zero(p);
  if (p > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    // Relative pivot threshold, scaled to the largest column norm.
    qr.setThreshold(1e-10);
    if (qr.rank() < p) {
      throw Error(Errc::SingularDesign, "design has rank " + std::to_string(qr.rank()) + " < " + std::to_string(p));
    }
    slopes = qr.solve(response);
  }

  LinearModel model;
  model.ridgePenalty = ridgePenalty;
  model.coefficients.resize(p + 1);
  model.coefficients[0] = yMean - xMean.dot(slopes);
  model.coefficients.tail(p) = slopes;

  const Eigen::VectorXd resid = y - model.predict(X);
  model.residualSd = std::sqrt(resid.squaredNorm() / static_cast<double>(n - p - 1));
  return model;
}

/// Ridge penalty used when a plain fit is singular: 1e-6 * trace(X'X) / p.
inline double stabilizingPenalty(const Eigen::MatrixXd& X) {
  if (X.cols() == 0) return 0.0;
  const double tr = X.squaredNorm();
  const double pen = 1e-6 * tr / static_cast<double>(X.cols());
  return pen > 0.0 ? pen : 1e-6;
}

/// Plain fit, retried once with the stabilizing ridge on SingularDesign.
inline LinearModel fitLinearStabilized(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  try {
    return fitLinear(X, y, 0.0);
  } catch (const Error& e) {
    if (e.code() != Errc::SingularDesign) throw;
  }
  return fitLinear(X, y, stabilizingPenalty(X));
}

}  // namespace imputebench
