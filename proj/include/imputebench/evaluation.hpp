#pragma once

// RMSE scoring against retained truth, score summaries, ANOVA similarity
// tests between methods, and per-variable rank consolidation.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "imputebench/dataset.hpp"
#include "imputebench/error.hpp"
#include "imputebench/imputers.hpp"
#include "imputebench/stats.hpp"

namespace imputebench {

inline double rmse(std::span<const double> actual, std::span<const double> imputed) {
  if (actual.empty()) throw Error(Errc::EmptyInput, "rmse of empty vectors");
  if (actual.size() != imputed.size()) throw Error(Errc::ShapeMismatch, "rmse inputs differ in length");
  double ss = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) ss += (actual[i] - imputed[i]) * (actual[i] - imputed[i]);
  return std::sqrt(ss / static_cast<double>(actual.size()));
}

/// Per-column RMSE over masked cells; columns without masked cells are
/// absent (nullopt), not zero.
inline std::vector<std::optional<double>> scoreImputation(const Dataset& truth, const Dataset& completed,
                                                          const MissingMask& mask) {
  if (truth.rows() != completed.rows() || truth.cols() != completed.cols() || mask.rows() != truth.rows() ||
      mask.cols() != truth.cols()) {
    throw Error(Errc::ShapeMismatch, "truth, completed and mask shapes differ");
  }
  if (!truth.complete() || !completed.complete()) throw Error(Errc::ShapeMismatch, "truth and completed must be complete");
  std::vector<std::optional<double>> out(static_cast<std::size_t>(truth.cols()));
  std::vector<double> a;
  std::vector<double> b;
  for (Index j = 0; j < truth.cols(); ++j) {
    a.clear();
    b.clear();
    for (Index i = 0; i < truth.rows(); ++i) {
      if (!mask(i, j)) continue;
      a.push_back(truth.values()(i, j));
      b.push_back(completed.values()(i, j));
    }
    if (!a.empty()) out[static_cast<std::size_t>(j)] = rmse(a, b);
  }
  return out;
}

struct CellScore {
  Method method = Method::Mean;
  double pct = 0.0;  // fraction in (0, 1)
  int sample = 0;
  int iteration = 0;
  Index variableIndex = 0;
  std::string variable;
  double rmse = 0.0;
};

inline bool samePct(double a, double b) { return std::fabs(a - b) < 1e-9; }

/// Canonical record order: (method, pct, sample, iteration, variable).
inline void sortScores(std::vector<CellScore>& scores) {
  std::stable_sort(scores.begin(), scores.end(), [](const CellScore& a, const CellScore& b) {
    return std::tie(a.method, a.pct, a.sample, a.iteration, a.variableIndex) <
           std::tie(b.method, b.pct, b.sample, b.iteration, b.variableIndex);
  });
}

struct ScoreSummary {
  Method method = Method::Mean;
  double pct = 0.0;
  Index variableIndex = 0;
  std::string variable;
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double min = 0.0;
  double q1 = 0.0;
  double q2 = 0.0;
  double q3 = 0.0;
  double q4 = 0.0;  // maximum
  std::optional<double> sd;
};

/// Type-7 (linear interpolation) quantile of sorted data.
inline double quantileSorted(std::span<const double> sorted, double prob) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline ScoreSummary summarizeValues(std::vector<double> values) {
  ScoreSummary s;
  std::sort(values.begin(), values.end());
  s.count = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.min = values.front();
  // Constant scores summarize exactly, free of summation rounding.
  s.mean = s.min == values.back() ? s.min : sum / static_cast<double>(values.size());
  s.q1 = quantileSorted(values, 0.25);
  s.q2 = s.median = quantileSorted(values, 0.5);
  s.q3 = quantileSorted(values, 0.75);
  s.q4 = values.back();
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

/// One summary per (method, pct, variable), in canonical order.
inline std::vector<ScoreSummary> summarizeScores(const std::vector<CellScore>& scores) {
  using Key = std::tuple<Method, double, Index>;
  std::map<Key, std::pair<std::string, std::vector<double>>> groups;
  for (const auto& s : scores) {
    auto& g = groups[Key{s.method, s.pct, s.variableIndex}];
    g.first = s.variable;
    g.second.push_back(s.rmse);
  }
  std::vector<ScoreSummary> out;
  for (auto& [key, group] : groups) {
    auto s = summarizeValues(std::move(group.second));
    std::tie(s.method, s.pct, s.variableIndex) = key;
    s.variable = group.first;
    out.push_back(std::move(s));
  }
  return out;
}

struct PairSimilarity {
  Method first = Method::Mean;
  Method second = Method::Mean;
  std::optional<TestResult> test;  // absent when within variance is zero
  bool similar = false;
};

struct VariableSimilarity {
  Index variableIndex = 0;
  std::string variable;
  std::optional<TestResult> overall;
  bool overallSimilar = false;
  bool skipped = false;  // overall test hit ZeroWithinVariance
  std::vector<PairSimilarity> pairs;
};

struct SimilarityReport {
  std::vector<Method> methods;
  double alpha = 0.05;
  std::vector<VariableSimilarity> variables;
  std::size_t overallSimilarCount = 0;
  std::vector<std::size_t> pairSimilarCounts;  // aligned with variables[*].pairs
};

/// ANOVA over the selected methods' RMSE samples for every variable, plus
/// every two-method ANOVA. "Similar" means p >= alpha.
inline SimilarityReport similarityAnova(const std::vector<CellScore>& scores, const std::vector<Method>& methods,
                                        double alpha = 0.05) {
  if (methods.size() < 2) throw Error(Errc::InvalidOption, "similarity needs at least two methods");
  std::map<Index, std::string> names;
  std::map<std::pair<Index, Method>, std::vector<double>> samples;
  for (const auto& s : scores) {
    if (std::find(methods.begin(), methods.end(), s.method) == methods.end()) continue;
    names[s.variableIndex] = s.variable;
    samples[{s.variableIndex, s.method}].push_back(s.rmse);
  }
  SimilarityReport report;
  report.methods = methods;
  report.alpha = alpha;
  std::size_t pairCount = methods.size() * (methods.size() - 1) / 2;
  report.pairSimilarCounts.assign(pairCount, 0);

  auto tryAnova = [](const std::vector<std::vector<double>>& groups) -> std::optional<TestResult> {
    try {
      return anovaOneWay(groups);
    } catch (const Error& e) {
      if (e.code() == Errc::ZeroWithinVariance) return std::nullopt;
      throw;
    }
  };

  for (const auto& [var, name] : names) {
    VariableSimilarity vs;
    vs.variableIndex = var;
    vs.variable = name;
    std::vector<std::vector<double>> groups;
    for (auto m : methods) {
      const auto it = samples.find({var, m});
      if (it == samples.end() || it->second.size() < 2) {
        throw Error(Errc::MissingCell, "method " + std::string(methodName(m)) + " has < 2 scores for " + name);
      }
      groups.push_back(it->second);
    }
    vs.overall = tryAnova(groups);
    vs.skipped = !vs.overall;
    vs.overallSimilar = vs.overall && vs.overall->pValue >= alpha;
    if (vs.overallSimilar) ++report.overallSimilarCount;
    std::size_t k = 0;
    for (std::size_t a = 0; a < methods.size(); ++a) {
      for (std::size_t b = a + 1; b < methods.size(); ++b, ++k) {
        PairSimilarity ps{methods[a], methods[b], tryAnova({groups[a], groups[b]}), false};
        ps.similar = ps.test && ps.test->pValue >= alpha;
        if (ps.similar) ++report.pairSimilarCounts[k];
        vs.pairs.push_back(ps);
      }
    }
    report.variables.push_back(std::move(vs));
  }
  return report;
}

/// Min-rank ("competition") ranking, 1 = smallest value. NaN ranks last.
inline std::vector<int> minRanks(std::span<const double> values) {
  std::vector<int> ranks(values.size(), 1);
  for (std::size_t i = 0; i < values.size(); ++i) {
    int below = 0;
    for (std::size_t j = 0; j < values.size(); ++j) {
      if (j == i) continue;
      const bool jNan = std::isnan(values[j]);
      const bool iNan = std::isnan(values[i]);
      if (!jNan && (iNan || values[j] < values[i])) ++below;
    }
    ranks[i] = below + 1;
  }
  return ranks;
}

inline double medianOf(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return quantileSorted(v, 0.5);
}

/// Half-up rounding to integer.
inline int roundHalfUp(double x) { return static_cast<int>(std::floor(x + 0.5)); }

struct RankConsolidation {
  double average = 0.0;
  double median = 0.0;
};

struct PctRanks {
  double pct = 0.0;
  // [method][variable]; variables in ascending index order
  std::vector<std::vector<int>> meanRanks;
  std::vector<std::vector<int>> sdRanks;
  std::vector<RankConsolidation> meanRank;  // per method
  std::vector<RankConsolidation> sdRank;
};

struct RankTable {
  std::vector<Method> methods;
  std::vector<Index> variables;
  std::vector<PctRanks> pcts;
};

/// Ranks methods per (variable, pct) by mean RMSE and by sd of RMSE, then
/// consolidates per method by average and median rank across variables.
/// A cell with a single score has no sd and ranks last on the sd statistic.
inline RankTable buildRankTable(const std::vector<ScoreSummary>& summary, const std::vector<double>& pcts,
                                std::vector<Method> methods = {std::begin(kAllMethods), std::end(kAllMethods)}) {
  RankTable table;
  table.methods = methods;
  std::vector<Index> vars;
  for (const auto& s : summary) {
    if (std::find(vars.begin(), vars.end(), s.variableIndex) == vars.end()) vars.push_back(s.variableIndex);
  }
  std::sort(vars.begin(), vars.end());
  table.variables = vars;
  if (methods.empty() || vars.empty()) throw Error(Errc::MissingOutputs, "nothing to rank");

  auto find = [&](Method m, double pct, Index var) -> const ScoreSummary& {
    for (const auto& s : summary) {
      if (s.method == m && samePct(s.pct, pct) && s.variableIndex == var) return s;
    }
    throw Error(Errc::MissingCell, "no scores for method " + std::string(methodName(m)) + ", variable " +
                                       std::to_string(var) + ", pct " + std::to_string(pct));
  };

  const std::size_t M = methods.size();
  for (double pct : pcts) {
    PctRanks pr;
    pr.pct = pct;
    pr.meanRanks.assign(M, {});
    pr.sdRanks.assign(M, {});
    for (Index var : vars) {
      std::vector<double> means(M);
      std::vector<double> sds(M);
      for (std::size_t k = 0; k < M; ++k) {
        const auto& s = find(methods[k], pct, var);
        means[k] = s.mean;
        sds[k] = s.sd.value_or(std::numeric_limits<double>::quiet_NaN());
      }
      const auto rm = minRanks(means);
      const auto rs = minRanks(sds);
      for (std::size_t k = 0; k < M; ++k) {
        pr.meanRanks[k].push_back(rm[k]);
        pr.sdRanks[k].push_back(rs[k]);
      }
    }
    for (std::size_t k = 0; k < M; ++k) {
      auto consolidate = [](const std::vector<int>& ranks) {
        std::vector<double> r(ranks.begin(), ranks.end());
        double sum = 0.0;
        for (double x : r) sum += x;
        return RankConsolidation{sum / static_cast<double>(r.size()), medianOf(r)};
      };
      pr.meanRank.push_back(consolidate(pr.meanRanks[k]));
      pr.sdRank.push_back(consolidate(pr.sdRanks[k]));
    }
    table.pcts.push_back(std::move(pr));
  }
  return table;
}

}  // namespace imputebench
