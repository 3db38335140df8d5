#pragma once

// Synthetic complete datasets drawn from N(0, Sigma), optionally augmented
// with an interaction column and a step column.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "imputebench/dataset.hpp"
#include "imputebench/error.hpp"
#include "imputebench/random.hpp"

namespace imputebench {

enum class CovarianceRecipe { Identity, ConstantCorrelation, Toeplitz, UserMatrix };

struct SyntheticSpec {
  Index n = 1000;
  Index p = 10;
  CovarianceRecipe recipe = CovarianceRecipe::Identity;
  double rho = 0.0;
  Eigen::MatrixXd userMatrix;  // used with UserMatrix
  bool nonlinearAugment = false;
  std::uint64_t generatorSeed = 0;
};

inline Eigen::MatrixXd covarianceOf(const SyntheticSpec& spec) {
  const Index p = spec.p;
  switch (spec.recipe) {
    case CovarianceRecipe::Identity:
      return Eigen::MatrixXd::Identity(p, p);
    case CovarianceRecipe::ConstantCorrelation: {
      Eigen::MatrixXd s = Eigen::MatrixXd::Constant(p, p, spec.rho);
      s.diagonal().setOnes();
      return s;
    }
    case CovarianceRecipe::Toeplitz: {
      Eigen::MatrixXd s(p, p);
      for (Index i = 0; i < p; ++i) {
        for (Index j = 0; j < p; ++j) s(i, j) = std::pow(spec.rho, static_cast<double>(std::abs(i - j)));
      }
      return s;
    }
    case CovarianceRecipe::UserMatrix:
      if (spec.userMatrix.rows() != p || spec.userMatrix.cols() != p) {
        throw Error(Errc::DimensionMismatch, "user covariance must be p x p");
      }
      return spec.userMatrix;
  }
  return Eigen::MatrixXd::Identity(p, p);
}

/// Lower factor F with F * F^T = sigma, from a pivoted LDL^T. Accepts
/// semi-definite input; throws NotPsd otherwise.
inline Eigen::MatrixXd covarianceFactor(const Eigen::MatrixXd& sigma) {
  if (!sigma.isApprox(sigma.transpose(), 1e-12)) throw Error(Errc::NotPsd, "covariance is not symmetric");
  Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma);
  if (ldlt.info() != Eigen::Success) throw Error(Errc::NotPsd, "covariance factorization failed");
  const Eigen::VectorXd d = ldlt.vectorD();
  const double scale = std::max(1.0, sigma.diagonal().cwiseAbs().maxCoeff());
  if (d.minCoeff() < -1e-10 * scale) throw Error(Errc::NotPsd, "covariance is not positive semi-definite");
  Eigen::MatrixXd L = ldlt.matrixL();
  const Eigen::MatrixXd factor = ldlt.transpositionsP().transpose() * (L * d.cwiseMax(0.0).cwiseSqrt().asDiagonal());
  return factor;
}

inline Dataset generateSynthetic(const SyntheticSpec& spec) {
  if (spec.n < 1 || spec.p < 1) throw Error(Errc::DimensionMismatch, "synthetic data needs n >= 1 and p >= 1");
  if (spec.nonlinearAugment && spec.p < 3) throw Error(Errc::DimensionMismatch, "augmentation needs p >= 3");
  const Eigen::MatrixXd factor = covarianceFactor(covarianceOf(spec));
  const Index extra = spec.nonlinearAugment ? 2 : 0;
  Eigen::MatrixXd values(spec.n, spec.p + extra);
  Rng rng(spec.generatorSeed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd z(spec.p);
  for (Index i = 0; i < spec.n; ++i) {
    for (Index j = 0; j < spec.p; ++j) z[j] = gauss(rng);
    values.row(i).head(spec.p) = (factor * z).transpose();
    if (spec.nonlinearAugment) {
      values(i, spec.p) = values(i, 0) * values(i, 1) + 0.1 * gauss(rng);
      values(i, spec.p + 1) = (values(i, 2) >= 0.0 ? 1.0 : 0.0) + 0.1 * gauss(rng);
    }
  }
  return Dataset(std::move(values));
}

}  // namespace imputebench
