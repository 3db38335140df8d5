#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "test_support.hpp"

using namespace imputebench;

namespace {

Dataset gaussian(Index n, Index p, double rho, std::uint64_t seed) {
  return Dataset(testsupport::mvnDraws(n, Eigen::VectorXd::Zero(p), testsupport::equicorrelation(p, rho), seed));
}

Errc codeOf(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return Errc::Io;
}

}  // namespace

TEST(AmputeMcar, ZeroPercentLeavesDataUnchanged) {
  const auto d = gaussian(100, 3, 0.2, 1);
  const auto out = amputeMcar(d, {0.0, AmputationPolicy::ExactCount, 4});
  EXPECT_FALSE(out.mask().any());
  EXPECT_EQ(out.values(), d.values());
  EXPECT_FALSE(amputeMcar(d, {0.0, AmputationPolicy::Bernoulli, 4}).mask().any());
}

TEST(AmputeMcar, FullPercentMasksEverything) {
  const auto out = amputeMcar(gaussian(40, 3, 0.0, 2), {1.0, AmputationPolicy::ExactCount, 1});
  EXPECT_EQ(out.mask().count(), 40 * 3);
}

TEST(AmputeMcar, ExactCountPerColumn) {
  const auto out = amputeMcar(gaussian(1000, 4, 0.0, 3), {0.25, AmputationPolicy::ExactCount, 10});
  for (Index j = 0; j < 4; ++j) EXPECT_EQ(out.mask().count(j), 250);
}

TEST(AmputeMcar, ExactCountRoundsAcrossSeeds) {
  const auto d = gaussian(333, 3, 0.0, 4);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const double pct = 0.05 + 0.01 * static_cast<double>(seed);
    const auto out = amputeMcar(d, {pct, AmputationPolicy::ExactCount, seed});
    for (Index j = 0; j < 3; ++j) EXPECT_EQ(out.mask().count(j), std::llround(pct * 333.0));
  }
}

TEST(AmputeMcar, ObservedCellsBitExactAcrossSeeds) {
  const auto d = gaussian(200, 4, 0.5, 5);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (auto policy : {AmputationPolicy::ExactCount, AmputationPolicy::Bernoulli}) {
      const auto out = amputeMcar(d, {0.3, policy, seed});
      for (Index j = 0; j < 4; ++j) {
        for (Index i = 0; i < 200; ++i) {
          if (out.missing(i, j)) continue;
          EXPECT_EQ(std::memcmp(&out.values()(i, j), &d.values()(i, j), sizeof(double)), 0);
        }
      }
    }
  }
}

TEST(AmputeMcar, DeterministicGivenSeed) {
  const auto d = gaussian(500, 3, 0.0, 6);
  for (auto policy : {AmputationPolicy::ExactCount, AmputationPolicy::Bernoulli}) {
    EXPECT_EQ(amputeMcar(d, {0.2, policy, 77}).mask(), amputeMcar(d, {0.2, policy, 77}).mask());
    EXPECT_FALSE(amputeMcar(d, {0.2, policy, 77}).mask() == amputeMcar(d, {0.2, policy, 78}).mask());
  }
}

TEST(AmputeMcar, BernoulliRateMatchesPercentage) {
  const auto out = amputeMcar(gaussian(20000, 2, 0.0, 7), {0.2, AmputationPolicy::Bernoulli, 3});
  // 4 binomial standard deviations at n = 20000, p = 0.2.
  const double tol = 4.0 * std::sqrt(0.2 * 0.8 / 20000.0);
  for (Index j = 0; j < 2; ++j) EXPECT_NEAR(out.mask().missingFraction(j), 0.2, tol);
}

TEST(AmputeMcar, IndicatorsIndependentAcrossColumns) {
  const auto d = gaussian(10000, 3, 0.0, 8);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto out = amputeMcar(d, {0.25, AmputationPolicy::ExactCount, seed});
    for (Index a = 0; a < 3; ++a) {
      for (Index b = a + 1; b < 3; ++b) {
        Eigen::VectorXd ia(10000), ib(10000);
        for (Index i = 0; i < 10000; ++i) {
          ia[i] = out.missing(i, a);
          ib[i] = out.missing(i, b);
        }
        EXPECT_LT(std::fabs(testsupport::pearson(ia, ib)), 0.05);
      }
    }
  }
}

TEST(AmputeMcar, Errors) {
  const auto d = gaussian(10, 2, 0.0, 9);
  EXPECT_EQ(codeOf([&] { amputeMcar(d, {1.5, AmputationPolicy::ExactCount, 0}); }), Errc::PercentOutOfRange);
  EXPECT_EQ(codeOf([&] { amputeMcar(d, {-0.1, AmputationPolicy::ExactCount, 0}); }), Errc::PercentOutOfRange);
  const auto holed = amputeMcar(d, {0.2, AmputationPolicy::ExactCount, 0});
  EXPECT_EQ(codeOf([&] { amputeMcar(holed, {0.2, AmputationPolicy::ExactCount, 0}); }), Errc::AlreadyMissing);
}

TEST(AmputeMarControl, ZeroPercentMasksNothing) {
  EXPECT_FALSE(amputeMarControl(gaussian(100, 3, 0.0, 1), 0, 0.0, 1).mask().any());
}

TEST(AmputeMarControl, MarginalRateCalibrated) {
  const auto d = gaussian(20000, 3, 0.3, 2);
  const auto out = amputeMarControl(d, 0, 0.2, 5, 2.0);
  EXPECT_EQ(out.mask().count(0), 0);
  for (Index j = 1; j < 3; ++j) EXPECT_NEAR(out.mask().missingFraction(j), 0.2, 0.01);
}

TEST(AmputeMarControl, MissingnessIncreasesWithDriver) {
  const auto d = gaussian(20000, 2, 0.0, 3);
  const auto out = amputeMarControl(d, 0, 0.2, 9, 2.0);
  double hi = 0.0, lo = 0.0;
  Index nHi = 0, nLo = 0;
  for (Index i = 0; i < d.rows(); ++i) {
    if (d.values()(i, 0) > 0.0) {
      hi += out.missing(i, 1);
      ++nHi;
    } else {
      lo += out.missing(i, 1);
      ++nLo;
    }
  }
  EXPECT_GT(hi / static_cast<double>(nHi), 2.0 * lo / static_cast<double>(nLo));
}

TEST(AmputeMarControl, Errors) {
  const auto d = gaussian(50, 2, 0.0, 4);
  EXPECT_EQ(codeOf([&] { amputeMarControl(d, 0, 1.2, 0); }), Errc::PercentOutOfRange);
  Eigen::MatrixXd c = d.values();
  c.col(0).setConstant(3.0);
  EXPECT_EQ(codeOf([&] { amputeMarControl(Dataset(c), 0, 0.2, 0); }), Errc::ZeroVariance);
}

TEST(McarDiagnostic, IdenticalGroupsGiveUnitPValue) {
  // Column 1 is constant, so every split of it compares identical values.
  Eigen::MatrixXd v(8, 2);
  v.col(0) << 1, 2, 3, 4, 5, 6, 7, 8;
  v.col(1).setConstant(2.5);
  Dataset d(v);
  d.markMissing(0, 0);
  d.markMissing(1, 0);
  d.markMissing(2, 0);
  const auto r = mcarDiagnostic(d);
  ASSERT_EQ(r.pairResults.size(), 1u);
  EXPECT_EQ(r.pairResults[0].indicatorColumn, 0);
  EXPECT_EQ(r.pairResults[0].valueColumn, 1);
  EXPECT_EQ(r.pairResults[0].tStatistic, 0.0);
  EXPECT_NEAR(r.pairResults[0].pValue, 1.0, 1e-9);
  EXPECT_EQ(r.skippedPairs, 1u);  // column 1 has no missing cells to split column 0
}

TEST(McarDiagnostic, PairEntriesAreWellFormed) {
  const auto d = amputeMcar(gaussian(2000, 4, 0.5, 5), {0.25, AmputationPolicy::ExactCount, 1});
  const auto r = mcarDiagnostic(d, 0.05);
  EXPECT_EQ(r.pairResults.size(), 12u);
  for (const auto& pr : r.pairResults) {
    EXPECT_NE(pr.indicatorColumn, pr.valueColumn);
    EXPECT_GE(pr.pValue, 0.0);
    EXPECT_LE(pr.pValue, 1.0);
    EXPECT_GT(pr.degreesOfFreedom, 0.0);
  }
  EXPECT_LE(r.rejectedPairsBonferroni, r.rejectedPairs);
}

TEST(McarDiagnostic, IndependentOfWorkerCount) {
  const auto d = amputeMcar(gaussian(3000, 5, 0.4, 6), {0.2, AmputationPolicy::Bernoulli, 2});
  const auto a = mcarDiagnostic(d, 0.05, 1);
  const auto b = mcarDiagnostic(d, 0.05, 4);
  ASSERT_EQ(a.pairResults.size(), b.pairResults.size());
  for (std::size_t k = 0; k < a.pairResults.size(); ++k) {
    EXPECT_EQ(a.pairResults[k].pValue, b.pairResults[k].pValue);
    EXPECT_EQ(a.pairResults[k].indicatorColumn, b.pairResults[k].indicatorColumn);
  }
  EXPECT_EQ(a.rejectedPairs, b.rejectedPairs);
}

TEST(McarDiagnostic, SlopeZeroControlBehavesLikeMcar) {
  // 40 replicates keeps this quick; the 200-replicate calibration runs in the
  // acceptance suite.
  std::size_t rejected = 0, total = 0;
  for (std::uint64_t rep = 0; rep < 40; ++rep) {
    const auto d = amputeMarControl(gaussian(2000, 3, 0.5, 100 + rep), 0, 0.2, rep, 0.0);
    const auto r = mcarDiagnostic(d);
    rejected += r.rejectedPairs;
    total += r.pairResults.size();
  }
  EXPECT_NEAR(static_cast<double>(rejected) / static_cast<double>(total), 0.05, 0.04);
}

TEST(McarDiagnostic, MarControlFlagsDriverPairs) {
  const auto d = amputeMarControl(gaussian(20000, 3, 0.5, 7), 0, 0.2, 3, 2.0);
  const auto r = mcarDiagnostic(d);
  // Indicators of columns 1 and 2 split the driver column 0.
  for (const auto& pr : r.pairResults) {
    if (pr.valueColumn == 0) {
      EXPECT_LT(pr.pValue, 0.01);
    }
  }
}
