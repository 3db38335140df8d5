#pragma once

// MCAR amputation, a MAR negative control, and the pairwise Welch t-test
// battery used to check MCAR behavior of a mask.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "imputebench/dataset.hpp"
#include "imputebench/error.hpp"
#include "imputebench/parallel.hpp"
#include "imputebench/random.hpp"
#include "imputebench/stats.hpp"

namespace imputebench {

enum class AmputationPolicy { ExactCount, Bernoulli };

struct AmputationPlan {
  double percentage = 0.0;
  AmputationPolicy policy = AmputationPolicy::ExactCount;
  std::uint64_t seed = 0;
};

namespace detail {
inline void checkAmputationInput(const Dataset& data, double percentage) {
  if (!(percentage >= 0.0 && percentage <= 1.0)) throw Error(Errc::PercentOutOfRange, "percentage must lie in [0, 1]");
  if (!data.complete()) throw Error(Errc::AlreadyMissing, "amputation expects a complete dataset");
}
}  // namespace detail

/// Deletes cells independently per column. ExactCount masks exactly
/// round(percentage * n) rows of every column; Bernoulli masks each cell with
/// probability percentage. Column j draws from the stream deriveSeed(seed, j).
inline Dataset amputeMcar(const Dataset& data, const AmputationPlan& plan) {
  detail::checkAmputationInput(data, plan.percentage);
  const Index n = data.rows();
  MissingMask mask(n, data.cols());
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index j = 0; j < data.cols(); ++j) {
    Rng rng(deriveSeed(plan.seed, static_cast<std::uint64_t>(j)));
    if (plan.policy == AmputationPolicy::ExactCount) {
      const auto target = static_cast<Index>(std::llround(plan.percentage * static_cast<double>(n)));
      std::iota(order.begin(), order.end(), Index{0});
      for (Index k = 0; k < target; ++k) {
        std::uniform_int_distribution<Index> pick(k, n - 1);
        std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(pick(rng))]);
        mask.set(order[static_cast<std::size_t>(k)], j, true);
      }
    } else {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (Index i = 0; i < n; ++i) mask.set(i, j, u(rng) < plan.percentage);
    }
  }
  Dataset out = data;
  out.setMask(std::move(mask));
  return out;
}

/// MAR negative control: cells of every column other than the driver are
/// deleted with probability logistic(intercept + slope * z_i), z the
/// standardized driver. The intercept is found by bisection so the expected
/// deletion rate over the sample equals percentage.
inline Dataset amputeMarControl(const Dataset& data, Index driverColumn, double percentage, std::uint64_t seed,
                                double slope = 2.0) {
  detail::checkAmputationInput(data, percentage);
  if (driverColumn < 0 || driverColumn >= data.cols()) throw Error(Errc::DimensionMismatch, "driver column out of range");
  const Index n = data.rows();
  MissingMask mask(n, data.cols());
  Dataset out = data;
  if (percentage == 0.0 || data.cols() == 1) return out;

  double mean = 0.0;
  for (Index i = 0; i < n; ++i) mean += data.values()(i, driverColumn);
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (Index i = 0; i < n; ++i) ss += std::pow(data.values()(i, driverColumn) - mean, 2);
  const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  if (!(sd > 0.0)) throw Error(Errc::ZeroVariance, "driver column has zero variance");

  std::vector<double> z(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = (data.values()(i, driverColumn) - mean) / sd;
  auto rateAt = [&](double intercept) {
    double acc = 0.0;
    for (double zi : z) acc += 1.0 / (1.0 + std::exp(-(intercept + slope * zi)));
    return acc / static_cast<double>(n);
  };
  std::vector<double> prob(static_cast<std::size_t>(n), 1.0);
  if (percentage < 1.0) {
    double lo = -50.0;
    double hi = 50.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (rateAt(mid) < percentage ? lo : hi) = mid;
    }
    const double intercept = 0.5 * (lo + hi);
    for (Index i = 0; i < n; ++i) {
      prob[static_cast<std::size_t>(i)] = 1.0 / (1.0 + std::exp(-(intercept + slope * z[static_cast<std::size_t>(i)])));
    }
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Index j = 0; j < data.cols(); ++j) {
    if (j == driverColumn) continue;
    Rng rng(deriveSeed(seed, static_cast<std::uint64_t>(j)));
    for (Index i = 0; i < n; ++i) mask.set(i, j, u(rng) < prob[static_cast<std::size_t>(i)]);
  }
  out.setMask(std::move(mask));
  return out;
}

struct McarPairResult {
  Index indicatorColumn = 0;
  Index valueColumn = 0;
  double tStatistic = 0.0;
  double degreesOfFreedom = 0.0;
  double pValue = 1.0;
};

struct McarDiagnosticReport {
  std::vector<McarPairResult> pairResults;
  double alpha = 0.05;
  std::size_t rejectedPairs = 0;            // p < alpha
  std::size_t rejectedPairsBonferroni = 0;  // p < alpha / number of tested pairs
  std::size_t skippedPairs = 0;

  double rejectionFraction() const {
    return pairResults.empty() ? 0.0 : static_cast<double>(rejectedPairs) / static_cast<double>(pairResults.size());
  }
};

/// For every ordered pair (i, j), i != j, compares column j's observed values
/// between rows where column i is missing and rows where it is observed.
/// Pairs with a group smaller than 2 are skipped. Output order is (i, j)
/// lexicographic regardless of worker count.
inline McarDiagnosticReport mcarDiagnostic(const Dataset& data, double alpha = 0.05, std::size_t workers = 1) {
  const Index p = data.cols();
  std::vector<std::pair<Index, Index>> pairs;
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) {
      if (i != j) pairs.emplace_back(i, j);
    }
  }
  std::vector<McarPairResult> results(pairs.size());
  std::vector<char> eligible(pairs.size(), 0);
  parallelFor(pairs.size(), workers, [&](std::size_t k) {
    const auto [ind, val] = pairs[k];
    std::vector<double> whenMissing;
    std::vector<double> whenObserved;
    for (Index r = 0; r < data.rows(); ++r) {
      if (data.missing(r, val)) continue;
      (data.missing(r, ind) ? whenMissing : whenObserved).push_back(data.values()(r, val));
    }
    if (whenMissing.size() < 2 || whenObserved.size() < 2) return;
    const auto t = welchTTest(whenMissing, whenObserved);
    results[k] = {ind, val, t.statistic, t.df1, t.pValue};
    eligible[k] = 1;
  });

  McarDiagnosticReport report;
  report.alpha = alpha;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (eligible[k]) {
      report.pairResults.push_back(results[k]);
    } else {
      ++report.skippedPairs;
    }
  }
  const double bonferroni = report.pairResults.empty() ? alpha : alpha / static_cast<double>(report.pairResults.size());
  for (const auto& r : report.pairResults) {
    if (r.pValue < alpha) ++report.rejectedPairs;
    if (r.pValue < bonferroni) ++report.rejectedPairsBonferroni;
  }
  return report;
}

}  // namespace imputebench
