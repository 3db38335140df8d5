#pragma once

// Multivariate normal kernels: Schur-complement conditioning and the EM
// algorithm for (mu, Sigma) under an arbitrary missing mask.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include "imputebench/dataset.hpp"
#include "imputebench/error.hpp"

namespace imputebench {

struct MvnParams {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
};

using IndexList = std::vector<Index>;

namespace detail {

inline Eigen::MatrixXd subMatrix(const Eigen::MatrixXd& m, const IndexList& rows, const IndexList& cols) {
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) out(static_cast<Index>(r), static_cast<Index>(c)) = m(rows[r], cols[c]);
  }
  return out;
}

inline Eigen::VectorXd subVector(const Eigen::VectorXd& v, const IndexList& idx) {
  Eigen::VectorXd out(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Index>(k)] = v[idx[k]];
  return out;
}

/// Symmetrizes and zeroes eigenvalues in [-tol, 0). Throws if any eigenvalue
/// is below -tol.
inline Eigen::MatrixXd clipToPsd(const Eigen::MatrixXd& sigma, double tol = 1e-8) {
  Eigen::MatrixXd sym = 0.5 * (sigma + sigma.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() == Eigen::Success) return sym;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  Eigen::VectorXd vals = eig.eigenvalues();
  if (vals.minCoeff() < -tol) {
    throw Error(Errc::DegenerateSigma, "covariance eigenvalue " + std::to_string(vals.minCoeff()) + " below PSD tolerance");
  }
  vals = vals.cwiseMax(0.0);
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace detail

/// Conditional law of x[missing] given x[observed] for one missingness
/// pattern: mean = mu_M + gain * (x_O - mu_O), covariance fixed.
struct ConditionalLaw {
  IndexList observed;
  IndexList missing;
  Eigen::MatrixXd gain;        // |M| x |O|
  Eigen::MatrixXd covariance;  // |M| x |M|
  double logDetObserved = 0.0;
  Eigen::MatrixXd observedPrecision;  // inverse of Sigma_OO

  /// ridgeFallback adds a small diagonal ridge when Sigma_OO is singular;
  /// otherwise singularity raises SingularObservedBlock.
  static ConditionalLaw build(const MvnParams& theta, IndexList observedIdx, IndexList missingIdx,
                              bool ridgeFallback = false) {
    ConditionalLaw law;
    law.observed = std::move(observedIdx);
    law.missing = std::move(missingIdx);
    const auto nO = static_cast<Index>(law.observed.size());
    const auto nM = static_cast<Index>(law.missing.size());
    law.covariance = detail::subMatrix(theta.sigma, law.missing, law.missing);
    if (nO == 0) {
      law.gain = Eigen::MatrixXd::Zero(nM, 0);
      law.observedPrecision.resize(0, 0);
      return law;
    }
    Eigen::MatrixXd sOO = detail::subMatrix(theta.sigma, law.observed, law.observed);
    Eigen::LLT<Eigen::MatrixXd> llt(sOO);
    if (llt.info() != Eigen::Success || llt.matrixLLT().diagonal().minCoeff() <= 1e-150) {
      if (!ridgeFallback) throw Error(Errc::SingularObservedBlock, "observed covariance block is not invertible");
      const double scale = std::max(sOO.diagonal().mean(), 1e-12);
      double ridge = 1e-10 * scale;
      for (int attempt = 0; attempt < 12; ++attempt, ridge *= 10.0) {
        llt.compute(sOO + ridge * Eigen::MatrixXd::Identity(nO, nO));
        if (llt.info() == Eigen::Success) break;
      }
      if (llt.info() != Eigen::Success) throw Error(Errc::DegenerateSigma, "observed block singular after ridge");
    }
    law.logDetObserved = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    law.observedPrecision = llt.solve(Eigen::MatrixXd::Identity(nO, nO));
    if (nM > 0) {
      const Eigen::MatrixXd sMO = detail::subMatrix(theta.sigma, law.missing, law.observed);
      law.gain = sMO * law.observedPrecision;
      law.covariance -= law.gain * sMO.transpose();
      law.covariance = 0.5 * (law.covariance + law.covariance.transpose());
    } else {
      law.gain.resize(0, nO);
    }
    return law;
  }

  Eigen::VectorXd conditionalMean(const MvnParams& theta, const Eigen::VectorXd& observedValues) const {
    Eigen::VectorXd m = detail::subVector(theta.mu, missing);
    if (!observed.empty()) m += gain * (observedValues - detail::subVector(theta.mu, observed));
    return m;
  }

  /// Log density of the observed coordinates under theta.
  double observedLogDensity(const MvnParams& theta, const Eigen::VectorXd& observedValues) const {
    if (observed.empty()) return 0.0;
    const Eigen::VectorXd d = observedValues - detail::subVector(theta.mu, observed);
    const double quad = d.dot(observedPrecision * d);
    return -0.5 * (static_cast<double>(observed.size()) * std::log(2.0 * std::numbers::pi) + logDetObserved + quad);
  }
};

struct ConditionalNormal {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

inline ConditionalNormal conditionalNormal(const MvnParams& theta, const IndexList& observedIdx,
                                           const Eigen::VectorXd& observedValues, const IndexList& missingIdx) {
  const Index p = theta.mu.size();
  std::vector<char> seen(static_cast<std::size_t>(p), 0);
  for (const auto* set : {&observedIdx, &missingIdx}) {
    for (Index k : *set) {
      if (k < 0 || k >= p || seen[static_cast<std::size_t>(k)]) {
        throw Error(Errc::DimensionMismatch, "index sets must be disjoint subsets of 0..p-1");
      }
      seen[static_cast<std::size_t>(k)] = 1;
    }
  }
  if (observedValues.size() != static_cast<Index>(observedIdx.size())) {
    throw Error(Errc::DimensionMismatch, "observed values do not match observed indices");
  }
  MvnParams clipped{theta.mu, detail::clipToPsd(theta.sigma)};
  const auto law = ConditionalLaw::build(clipped, observedIdx, missingIdx);
  return {law.conditionalMean(clipped, observedValues), law.covariance};
}

/// Rows grouped by identical missingness pattern.
struct PatternGroup {
  IndexList observed;
  IndexList missing;
  std::vector<Index> rows;
};

inline std::vector<PatternGroup> groupByPattern(const MissingMask& mask) {
  std::map<std::vector<std::uint8_t>, std::size_t> lookup;
  std::vector<PatternGroup> groups;
  std::vector<std::uint8_t> key(static_cast<std::size_t>(mask.cols()));
  for (Index i = 0; i < mask.rows(); ++i) {
    for (Index j = 0; j < mask.cols(); ++j) key[static_cast<std::size_t>(j)] = mask(i, j) ? 1 : 0;
    auto [it, inserted] = lookup.try_emplace(key, groups.size());
    if (inserted) {
      PatternGroup g;
      for (Index j = 0; j < mask.cols(); ++j) (key[static_cast<std::size_t>(j)] ? g.missing : g.observed).push_back(j);
      groups.push_back(std::move(g));
    }
    groups[it->second].rows.push_back(i);
  }
  return groups;
}

struct EmResult {
  MvnParams theta;
  int iterations = 0;
  bool converged = false;
  std::vector<double> logLikelihood;  // observed-data log-likelihood at each iterate, starting value first
};

class NoConvergenceError : public Error {
 public:
  NoConvergenceError(EmResult last, const std::string& what) : Error(Errc::NoConvergence, what), last_(std::move(last)) {}
  const EmResult& lastIterate() const noexcept { return last_; }

 private:
  EmResult last_;
};

namespace detail {

struct EStep {
  Eigen::VectorXd sum;
  Eigen::MatrixXd crossProducts;
  double logLikelihood = 0.0;
};

inline EStep expectation(const Dataset& data, const std::vector<PatternGroup>& groups, const MvnParams& theta) {
  const Index n = data.rows();
  const Index p = data.cols();
  Eigen::MatrixXd filled(n, p);
  Eigen::MatrixXd condCov = Eigen::MatrixXd::Zero(p, p);
  double ll = 0.0;
  Eigen::VectorXd xo;
  for (const auto& g : groups) {
    const auto law = ConditionalLaw::build(theta, g.observed, g.missing, true);
    xo.resize(static_cast<Index>(g.observed.size()));
    for (Index i : g.rows) {
      for (std::size_t k = 0; k < g.observed.size(); ++k) {
        const Index j = g.observed[k];
        xo[static_cast<Index>(k)] = data.values()(i, j);
        filled(i, j) = xo[static_cast<Index>(k)];
      }
      ll += law.observedLogDensity(theta, xo);
      if (!g.missing.empty()) {
        const Eigen::VectorXd xm = law.conditionalMean(theta, xo);
        for (std::size_t k = 0; k < g.missing.size(); ++k) filled(i, g.missing[k]) = xm[static_cast<Index>(k)];
      }
    }
    if (!g.missing.empty()) {
      const double rows = static_cast<double>(g.rows.size());
      for (std::size_t a = 0; a < g.missing.size(); ++a) {
        for (std::size_t b = 0; b < g.missing.size(); ++b) {
          condCov(g.missing[a], g.missing[b]) += rows * law.covariance(static_cast<Index>(a), static_cast<Index>(b));
        }
      }
    }
  }
  EStep out;
  out.sum = filled.colwise().sum().transpose();
  out.crossProducts = filled.transpose() * filled + condCov;
  out.logLikelihood = ll;
  return out;
}

inline MvnParams maximization(const EStep& e, Index n) {
  MvnParams next;
  const double dn = static_cast<double>(n);
  next.mu = e.sum / dn;
  next.sigma = clipToPsd(e.crossProducts / dn - next.mu * next.mu.transpose());
  return next;
}

}  // namespace detail

/// Observed-data log-likelihood of theta.
inline double observedLogLikelihood(const Dataset& data, const MvnParams& theta) {
  return detail::expectation(data, groupByPattern(data.mask()), theta).logLikelihood;
}

/// EM for the MLE of (mu, Sigma). Converged when the largest absolute change
/// in any entry of mu or Sigma falls below tol.
inline EmResult emMvn(const Dataset& data, double tol = 1e-6, int maxIter = 500) {
  const Index n = data.rows();
  const Index p = data.cols();
  if (maxIter < 1) throw Error(Errc::InvalidOption, "maxIter must be >= 1");

  EmResult result;
  result.theta.mu.resize(p);
  result.theta.sigma = Eigen::MatrixXd::Zero(p, p);
  for (Index j = 0; j < p; ++j) {
    const auto obs = data.observed(j);
    if (obs.size() < 2) throw Error(Errc::TooFewObserved, "column " + data.columnNames()[j] + " has < 2 observed values");
    double m = 0.0;
    for (double x : obs) m += x;
    m /= static_cast<double>(obs.size());
    double v = 0.0;
    for (double x : obs) v += (x - m) * (x - m);
    result.theta.mu[j] = m;
    result.theta.sigma(j, j) = v / static_cast<double>(obs.size());
  }

  const auto groups = groupByPattern(data.mask());
  const bool complete = data.complete();
  for (int iter = 1; iter <= maxIter; ++iter) {
    const auto e = detail::expectation(data, groups, result.theta);
    result.logLikelihood.push_back(e.logLikelihood);
    MvnParams next = detail::maximization(e, n);
    const double delta = std::max((next.mu - result.theta.mu).cwiseAbs().maxCoeff(),
                                  (next.sigma - result.theta.sigma).cwiseAbs().maxCoeff());
    result.theta = std::move(next);
    result.iterations = iter;
    // Complete data: the first M-step is already the fixed point.
    if (complete || delta < tol) {
      result.converged = true;
      result.logLikelihood.push_back(detail::expectation(data, groups, result.theta).logLikelihood);
      return result;
    }
  }
  result.logLikelihood.push_back(detail::expectation(data, groups, result.theta).logLikelihood);
  throw NoConvergenceError(result, "EM did not converge in " + std::to_string(maxIter) + " iterations");
}

}  // namespace imputebench
