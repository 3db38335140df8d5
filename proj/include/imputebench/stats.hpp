#pragma once

// Reference distributions (Student t, Fisher F) via the regularized
// incomplete beta function, and the two hypothesis tests built on them.

#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "imputebench/error.hpp"

namespace imputebench {

struct TestResult {
  double statistic = 0.0;
  double df1 = 0.0;  // t: Welch-Satterthwaite df; F: between-groups df
  double df2 = 0.0;  // F only: within-groups df
  double pValue = 1.0;
  bool degenerate = false;  // both groups constant (Welch)
};

namespace detail {

// Modified Lentz evaluation of the incomplete beta continued fraction.
inline double betaContinuedFraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incompleteBeta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double lnFront = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(lnFront);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::betaContinuedFraction(a, b, x) / a;
  return 1.0 - front * detail::betaContinuedFraction(b, a, 1.0 - x) / b;
}

/// P(|T| >= |t|) for Student t with df degrees of freedom.
inline double studentTwoSidedP(double t, double df) {
  if (std::isinf(t)) return 0.0;
  return incompleteBeta(df / 2.0, 0.5, df / (df + t * t));
}

/// P(F >= f) for Fisher F(df1, df2).
inline double fisherUpperP(double f, double df1, double df2) {
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return incompleteBeta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f));
}

namespace detail {
inline double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}
inline double sampleVariance(std::span<const double> v, double m) {
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}
}  // namespace detail

/// Two-sample Welch t-test, two-sided.
inline TestResult welchTTest(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw Error(Errc::TooFewObserved, "Welch t-test needs >= 2 values per group");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = detail::mean(a);
  const double mb = detail::mean(b);
  const double va = detail::sampleVariance(a, ma) / na;
  const double vb = detail::sampleVariance(b, mb) / nb;
  TestResult r;
  if (va + vb == 0.0) {
    r.degenerate = true;
    r.df1 = na + nb - 2.0;
    if (ma == mb) {
      r.statistic = 0.0;
      r.pValue = 1.0;
    } else {
      r.statistic = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      r.pValue = 0.0;
    }
    return r;
  }
  r.statistic = (ma - mb) / std::sqrt(va + vb);
  r.df1 = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  r.pValue = studentTwoSidedP(r.statistic, r.df1);
  return r;
}

/// One-way ANOVA F test across groups.
inline TestResult anovaOneWay(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw Error(Errc::TooFewObserved, "ANOVA needs at least 2 groups");
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw Error(Errc::TooFewObserved, "ANOVA needs >= 2 values per group");
    total += std::accumulate(g.begin(), g.end(), 0.0);
    count += g.size();
  }
  const double grand = total / static_cast<double>(count);
  double ssb = 0.0;
  double ssw = 0.0;
  for (const auto& g : groups) {
    const double m = detail::mean(g);
    ssb += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double x : g) ssw += (x - m) * (x - m);
  }
  if (!(ssw > 0.0)) throw Error(Errc::ZeroWithinVariance, "all groups are constant");
  TestResult r;
  r.df1 = static_cast<double>(groups.size() - 1);
  r.df2 = static_cast<double>(count - groups.size());
  r.statistic = (ssb / r.df1) / (ssw / r.df2);
  r.pValue = fisherUpperP(r.statistic, r.df1, r.df2);
  return r;
}

}  // namespace imputebench
