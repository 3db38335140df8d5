#pragma once

// The six imputation strategies behind one interface. Every strategy writes
// only masked cells; observed cells are carried over bit-for-bit.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "imputebench/dataset.hpp"
#include "imputebench/error.hpp"
#include "imputebench/forest.hpp"
#include "imputebench/linear.hpp"
#include "imputebench/mvn.hpp"
#include "imputebench/pmm.hpp"
#include "imputebench/random.hpp"

namespace imputebench {

enum class Method { Mean, Mice, Mi, Amelia, Hmisc, MissForest };

inline constexpr Method kAllMethods[] = {Method::Mean,   Method::Mice,  Method::Mi,
                                         Method::Amelia, Method::Hmisc, Method::MissForest};

constexpr std::string_view methodName(Method m) noexcept {
  switch (m) {
    case Method::Mean: return "mean";
    case Method::Mice: return "mice";
    case Method::Mi: return "mi";
    case Method::Amelia: return "amelia";
    case Method::Hmisc: return "hmisc";
    case Method::MissForest: return "missforest";
  }
  return "unknown";
}

inline Method parseMethod(std::string_view name) {
  for (auto m : kAllMethods) {
    if (methodName(m) == name) return m;
  }
  throw Error(Errc::InvalidOption, "unknown method '" + std::string(name) + "'");
}

/// Method plus string-valued options, validated against the method's keys.
class ImputerSpec {
 public:
  ImputerSpec() = default;
  ImputerSpec(Method method, std::map<std::string, std::string> options = {}, std::uint64_t seed = 0)
      : method_(method), options_(std::move(options)), seed_(seed) {
    const auto allowed = allowedKeys(method_);
    for (const auto& [key, value] : options_) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        throw Error(Errc::InvalidOption, "option '" + key + "' is not valid for method " + std::string(methodName(method_)));
      }
    }
  }

  Method method() const noexcept { return method_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::map<std::string, std::string>& options() const noexcept { return options_; }

  ImputerSpec withSeed(std::uint64_t seed) const {
    ImputerSpec copy = *this;
    copy.seed_ = seed;
    return copy;
  }

  int count(const std::string& key, int fallback) const {
    const auto it = options_.find(key);
    if (it == options_.end()) return fallback;
    std::size_t used = 0;
    int value = 0;
    try {
      value = std::stoi(it->second, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != it->second.size() || value < 1) {
      throw Error(Errc::InvalidOption, "option " + key + " must be an integer >= 1");
    }
    return value;
  }
  /// Like count() but 0 is allowed.
  int nonNegative(const std::string& key, int fallback) const {
    const auto it = options_.find(key);
    if (it != options_.end() && it->second == "0") return 0;
    return count(key, fallback);
  }
  double real(const std::string& key, double fallback) const {
    const auto it = options_.find(key);
    if (it == options_.end()) return fallback;
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(it->second, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != it->second.size() || !(value > 0.0)) throw Error(Errc::InvalidOption, "option " + key + " must be > 0");
    return value;
  }
  bool flag(const std::string& key, bool fallback) const {
    const auto it = options_.find(key);
    if (it == options_.end()) return fallback;
    if (it->second == "on" || it->second == "true" || it->second == "1") return true;
    if (it->second == "off" || it->second == "false" || it->second == "0") return false;
    throw Error(Errc::InvalidOption, "option " + key + " must be on or off");
  }

  static std::vector<std::string> allowedKeys(Method m) {
    switch (m) {
      case Method::Mean: return {};
      case Method::Mice: return {"cycles"};
      case Method::Mi: return {"cycles", "chains"};
      case Method::Amelia: return {"m", "tol", "maxIter", "noise"};
      case Method::Hmisc: return {"iterations", "burnIn", "k"};
      case Method::MissForest: return {"treeCount", "maxIter", "mtry", "minLeaf", "workers"};
    }
    return {};
  }

 private:
  Method method_ = Method::Mean;
  std::map<std::string, std::string> options_;
  std::uint64_t seed_ = 0;
};

struct ImputationDiagnostics {
  int iterations = 0;
  std::vector<double> changePerCycle;  // MICE/mi/Hmisc: max |change|; missForest: normalized squared change
  int pooled = 1;
  std::optional<bool> converged;
  std::optional<double> convergenceRatio;  // mi: largest between/within chain ratio
  std::vector<int> emIterations;           // Amelia: per replicate
  std::vector<std::pair<Index, Index>> collinearPairs;
  std::optional<double> conditionNumber;
  std::size_t missingPatterns = 0;
  int burnIn = 0;
};

struct ImputationResult {
  Dataset completed;
  ImputationDiagnostics diagnostics;
  ImputerSpec spec;
};

namespace detail {

struct MissingCells {
  std::vector<Index> observedRows;
  std::vector<Index> missingRows;
};

inline std::vector<MissingCells> splitRows(const Dataset& data) {
  std::vector<MissingCells> out(static_cast<std::size_t>(data.cols()));
  for (Index j = 0; j < data.cols(); ++j) {
    for (Index i = 0; i < data.rows(); ++i) {
      (data.missing(i, j) ? out[static_cast<std::size_t>(j)].missingRows : out[static_cast<std::size_t>(j)].observedRows)
          .push_back(i);
    }
    if (out[static_cast<std::size_t>(j)].observedRows.empty()) {
      throw Error(Errc::AllMissingColumn, "column " + data.columnNames()[static_cast<std::size_t>(j)] + " has no observed cells");
    }
  }
  return out;
}

/// Columns with at least one masked cell, ascending by missing count (ties by
/// column index).
inline std::vector<Index> visitOrder(const std::vector<MissingCells>& cells) {
  std::vector<Index> order;
  for (std::size_t j = 0; j < cells.size(); ++j) {
    if (!cells[j].missingRows.empty()) order.push_back(static_cast<Index>(j));
  }
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return cells[static_cast<std::size_t>(a)].missingRows.size() < cells[static_cast<std::size_t>(b)].missingRows.size();
  });
  return order;
}

inline Eigen::MatrixXd meanFilled(const Dataset& data, const std::vector<MissingCells>& cells) {
  Eigen::MatrixXd w = data.values();
  for (Index j = 0; j < data.cols(); ++j) {
    const auto& c = cells[static_cast<std::size_t>(j)];
    double sum = 0.0;
    for (Index i : c.observedRows) sum += data.values()(i, j);
    const double mean = sum / static_cast<double>(c.observedRows.size());
    for (Index i : c.missingRows) w(i, j) = mean;
  }
  return w;
}

/// Rows `rows` of w with column `skip` removed.
inline Eigen::MatrixXd predictorRows(const Eigen::MatrixXd& w, const std::vector<Index>& rows, Index skip) {
  Eigen::MatrixXd X(static_cast<Index>(rows.size()), w.cols() - 1);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Index c = 0;
    for (Index j = 0; j < w.cols(); ++j) {
      if (j != skip) X(static_cast<Index>(r), c++) = w(rows[r], j);
    }
  }
  return X;
}

inline Eigen::VectorXd columnRows(const Eigen::MatrixXd& w, const std::vector<Index>& rows, Index col) {
  Eigen::VectorXd y(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) y[static_cast<Index>(r)] = w(rows[r], col);
  return y;
}

inline Dataset finalize(const Dataset& data, const Eigen::MatrixXd& w) {
  Eigen::MatrixXd values = data.values();
  for (Index j = 0; j < data.cols(); ++j) {
    for (Index i = 0; i < data.rows(); ++i) {
      if (!data.missing(i, j)) continue;
      if (!std::isfinite(w(i, j))) throw Error(Errc::NonFiniteResult, "imputed value is not finite");
      values(i, j) = w(i, j);
    }
  }
  return Dataset(data.columnNames(), std::move(values));
}

inline void requireColumns(const Dataset& data, Index minimum) {
  if (data.cols() < minimum) throw Error(Errc::DimensionMismatch, "method needs at least " + std::to_string(minimum) + " columns");
}

}  // namespace detail

/// Column-mean replacement.
inline ImputationResult imputeMean(const Dataset& data) {
  const auto cells = detail::splitRows(data);
  ImputationResult result{detail::finalize(data, detail::meanFilled(data, cells)), {}, ImputerSpec(Method::Mean)};
  return result;
}

/// Chained equations with deterministic regression predictions, starting
/// from mean placeholders.
inline ImputationResult imputeMice(const Dataset& data, int cycles = 10) {
  if (cycles < 1) throw Error(Errc::InvalidOption, "cycles must be >= 1");
  ImputationResult result{Dataset{}, {}, ImputerSpec(Method::Mice, {{"cycles", std::to_string(cycles)}})};
  const auto cells = detail::splitRows(data);
  const auto order = detail::visitOrder(cells);
  Eigen::MatrixXd w = detail::meanFilled(data, cells);
  if (!order.empty()) detail::requireColumns(data, 2);
  for (int cycle = 0; cycle < cycles && !order.empty(); ++cycle) {
    double change = 0.0;
    for (Index v : order) {
      const auto& c = cells[static_cast<std::size_t>(v)];
      const auto model = fitLinearStabilized(detail::predictorRows(w, c.observedRows, v), detail::columnRows(w, c.observedRows, v));
      const Eigen::VectorXd pred = model.predict(detail::predictorRows(w, c.missingRows, v));
      for (std::size_t k = 0; k < c.missingRows.size(); ++k) {
        const Index i = c.missingRows[k];
        change = std::max(change, std::fabs(pred[static_cast<Index>(k)] - w(i, v)));
        w(i, v) = pred[static_cast<Index>(k)];
      }
    }
    result.diagnostics.changePerCycle.push_back(change);
    result.diagnostics.iterations = cycle + 1;
  }
  result.completed = detail::finalize(data, w);
  return result;
}

namespace detail {

struct CollinearityScan {
  Eigen::MatrixXd correlation;
  double conditionNumber = 0.0;
  std::vector<std::pair<Index, Index>> flagged;
};

/// Pairwise-complete correlations of observed cells.
inline CollinearityScan scanCollinearity(const Dataset& data, double threshold = 0.999) {
  const Index p = data.cols();
  CollinearityScan scan;
  scan.correlation = Eigen::MatrixXd::Identity(p, p);
  for (Index a = 0; a < p; ++a) {
    for (Index b = a + 1; b < p; ++b) {
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      double count = 0;
      for (Index i = 0; i < data.rows(); ++i) {
        if (data.missing(i, a) || data.missing(i, b)) continue;
        const double x = data.values()(i, a);
        const double y = data.values()(i, b);
        sa += x;
        sb += y;
        saa += x * x;
        sbb += y * y;
        sab += x * y;
        count += 1;
      }
      double r = 0.0;
      if (count >= 2) {
        const double cov = sab - sa * sb / count;
        const double va = saa - sa * sa / count;
        const double vb = sbb - sb * sb / count;
        if (va > 0 && vb > 0) r = std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
      }
      scan.correlation(a, b) = scan.correlation(b, a) = r;
      if (std::fabs(r) > threshold) scan.flagged.emplace_back(a, b);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scan.correlation, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().cwiseAbs().minCoeff();
  const double hi = eig.eigenvalues().cwiseAbs().maxCoeff();
  scan.conditionNumber = lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
  return scan;
}

// Gelman-Rubin style ratio over the second half of each chain's trace.
inline std::optional<double> chainRatio(const std::vector<std::vector<double>>& traces) {
  if (traces.size() < 2) return std::nullopt;
  const std::size_t len = traces.front().size();
  const std::size_t start = len / 2;
  const std::size_t L = len - start;
  if (L < 2) return std::nullopt;
  std::vector<double> means;
  double within = 0.0;
  for (const auto& t : traces) {
    double m = 0.0;
    for (std::size_t k = start; k < len; ++k) m += t[k];
    m /= static_cast<double>(L);
    double v = 0.0;
    for (std::size_t k = start; k < len; ++k) v += (t[k] - m) * (t[k] - m);
    within += v / static_cast<double>(L - 1);
    means.push_back(m);
  }
  within /= static_cast<double>(traces.size());
  double grand = 0.0;
  for (double m : means) grand += m;
  grand /= static_cast<double>(means.size());
  double between = 0.0;
  for (double m : means) between += (m - grand) * (m - grand);
  between *= static_cast<double>(L) / static_cast<double>(means.size() - 1);
  if (within <= 0.0) return between <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double pooled = (static_cast<double>(L) - 1.0) / static_cast<double>(L) * within + between / static_cast<double>(L);
  return std::sqrt(pooled / within);
}

}  // namespace detail

/// Chained equations drawing each imputation from the fitted conditional
/// normal (prediction plus residual noise), with a collinearity scan that
/// switches affected models to ridge, several chains, and chain averaging.
inline ImputationResult imputeMi(const Dataset& data, int cycles = 10, int chains = 4, std::uint64_t seed = 0) {
  if (cycles < 1 || chains < 1) throw Error(Errc::InvalidOption, "cycles and chains must be >= 1");
  ImputationResult result{
      Dataset{}, {}, ImputerSpec(Method::Mi, {{"cycles", std::to_string(cycles)}, {"chains", std::to_string(chains)}}, seed)};
  const auto cells = detail::splitRows(data);
  const auto order = detail::visitOrder(cells);
  auto& diag = result.diagnostics;
  diag.missingPatterns = groupByPattern(data.mask()).size();
  if (order.empty()) {
    result.completed = detail::finalize(data, data.values());
    return result;
  }
  detail::requireColumns(data, 2);
  const auto scan = detail::scanCollinearity(data);
  diag.collinearPairs = scan.flagged;
  diag.conditionNumber = scan.conditionNumber;

  auto needsRidge = [&](Index target) {
    for (const auto& [a, b] : scan.flagged) {
      if (a != target && b != target) return true;
    }
    return false;
  };

  const Index p = data.cols();
  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(data.rows(), p);
  // traces[v][chain][cycle] = mean of column v's imputed cells
  std::vector<std::vector<std::vector<double>>> traces(static_cast<std::size_t>(p),
                                                       std::vector<std::vector<double>>(static_cast<std::size_t>(chains)));
  std::vector<double> change(static_cast<std::size_t>(cycles), 0.0);
  for (int chain = 0; chain < chains; ++chain) {
    Rng rng(deriveSeed(seed, static_cast<std::uint64_t>(chain)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd w = detail::meanFilled(data, cells);
    for (int cycle = 0; cycle < cycles; ++cycle) {
      for (Index v : order) {
        const auto& c = cells[static_cast<std::size_t>(v)];
        const Eigen::MatrixXd X = detail::predictorRows(w, c.observedRows, v);
        const Eigen::VectorXd y = detail::columnRows(w, c.observedRows, v);
        const auto model = needsRidge(v) ? fitLinear(X, y, stabilizingPenalty(X)) : fitLinearStabilized(X, y);
        const Eigen::VectorXd pred = model.predict(detail::predictorRows(w, c.missingRows, v));
        double sum = 0.0;
        for (std::size_t k = 0; k < c.missingRows.size(); ++k) {
          const Index i = c.missingRows[k];
          const double draw = pred[static_cast<Index>(k)] + model.residualSd * gauss(rng);
          change[static_cast<std::size_t>(cycle)] = std::max(change[static_cast<std::size_t>(cycle)], std::fabs(draw - w(i, v)));
          w(i, v) = draw;
          sum += draw;
        }
        traces[static_cast<std::size_t>(v)][static_cast<std::size_t>(chain)].push_back(sum / static_cast<double>(c.missingRows.size()));
      }
    }
    pooled += w;
  }
  pooled /= static_cast<double>(chains);

  std::optional<double> worst;
  for (Index v : order) {
    const auto r = detail::chainRatio(traces[static_cast<std::size_t>(v)]);
    if (r && (!worst || *r > *worst)) worst = r;
  }
  diag.convergenceRatio = worst;
  if (worst) diag.converged = *worst < 1.2;
  diag.iterations = cycles;
  diag.pooled = chains;
  diag.changePerCycle = change;
  result.completed = detail::finalize(data, pooled);
  return result;
}

namespace detail {
// Symmetric square root of a PSD matrix.
inline Eigen::MatrixXd psdSqrt(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return m;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}
}  // namespace detail

/// Bootstrap + EM: each replicate fits (mu, Sigma) on a bootstrap resample,
/// then draws every missing block from its conditional normal given the
/// row's observed cells. Replicates are pooled by averaging.
inline ImputationResult imputeAmelia(const Dataset& data, int m = 5, double tol = 1e-6, int maxIter = 500,
                                     std::uint64_t seed = 0, bool noise = true) {
  if (m < 1 || maxIter < 1 || !(tol > 0)) throw Error(Errc::InvalidOption, "m, maxIter must be >= 1 and tol > 0");
  ImputationResult result{Dataset{},
                          {},
                          ImputerSpec(Method::Amelia,
                                      {{"m", std::to_string(m)},
                                       {"tol", std::to_string(tol)},
                                       {"maxIter", std::to_string(maxIter)},
                                       {"noise", noise ? "on" : "off"}},
                                      seed)};
  const auto cells = detail::splitRows(data);
  if (data.complete()) {
    result.completed = detail::finalize(data, data.values());
    return result;
  }
  if (data.rows() <= data.cols()) throw Error(Errc::TooFewRows, "Amelia needs n > p");
  (void)observedColumnStats(data);

  const auto groups = groupByPattern(data.mask());
  result.diagnostics.missingPatterns = groups.size();
  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(data.rows(), data.cols());
  for (int r = 0; r < m; ++r) {
    const std::uint64_t replicateSeed = deriveSeed(seed, static_cast<std::uint64_t>(r));
    const Dataset resample = data.selectRows(bootstrapSample(data.rows(), deriveSeed(replicateSeed, 0)));
    EmResult em;
    try {
      em = emMvn(resample, tol, maxIter);
    } catch (const Error& e) {
      throw Error(e.code(), "replicate " + std::to_string(r) + ": " + e.what());
    }
    result.diagnostics.emIterations.push_back(em.iterations);

    Rng rng(deriveSeed(replicateSeed, 1));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd w = data.values();
    Eigen::VectorXd xo;
    Eigen::VectorXd z;
    for (const auto& g : groups) {
      if (g.missing.empty()) continue;
      const auto law = ConditionalLaw::build(em.theta, g.observed, g.missing, true);
      const Eigen::MatrixXd root = noise ? detail::psdSqrt(law.covariance) : Eigen::MatrixXd();
      xo.resize(static_cast<Index>(g.observed.size()));
      z.resize(static_cast<Index>(g.missing.size()));
      for (Index i : g.rows) {
        for (std::size_t k = 0; k < g.observed.size(); ++k) xo[static_cast<Index>(k)] = data.values()(i, g.observed[k]);
        Eigen::VectorXd draw = law.conditionalMean(em.theta, xo);
        if (noise) {
          for (Index k = 0; k < z.size(); ++k) z[k] = gauss(rng);
          draw += root * z;
        }
        for (std::size_t k = 0; k < g.missing.size(); ++k) w(i, g.missing[k]) = draw[static_cast<Index>(k)];
      }
    }
    for (Index j = 0; j < data.cols(); ++j) {
      for (Index i : cells[static_cast<std::size_t>(j)].missingRows) pooled(i, j) += w(i, j);
    }
  }
  pooled /= static_cast<double>(m);
  result.diagnostics.pooled = m;
  result.diagnostics.iterations = m;
  result.completed = detail::finalize(data, pooled);
  return result;
}

/// Bootstrap regression + predictive mean matching. Missing cells start as
/// random draws from the column's observed values; each iteration refits
/// every incomplete column on a bootstrap resample of its observed rows and
/// replaces missing cells by a donor among the k nearest predictions. The
/// first burnIn iterations are burn-in; the last iteration is returned.
inline ImputationResult imputeHmisc(const Dataset& data, int iterations = 10, int burnIn = 3, int k = 5,
                                    std::uint64_t seed = 0) {
  if (iterations < 1 || burnIn < 0 || k < 1) throw Error(Errc::InvalidOption, "iterations, k >= 1 and burnIn >= 0 required");
  if (burnIn >= iterations) throw Error(Errc::InvalidOption, "burnIn must be smaller than iterations");
  ImputationResult result{Dataset{},
                          {},
                          ImputerSpec(Method::Hmisc,
                                      {{"iterations", std::to_string(iterations)},
                                       {"burnIn", std::to_string(burnIn)},
                                       {"k", std::to_string(k)}},
                                      seed)};
  result.diagnostics.burnIn = burnIn;
  const auto cells = detail::splitRows(data);
  const auto order = detail::visitOrder(cells);
  if (order.empty()) {
    result.completed = detail::finalize(data, data.values());
    return result;
  }
  detail::requireColumns(data, 2);

  Rng rng(deriveSeed(seed, 0));
  Eigen::MatrixXd w = data.values();
  for (Index j = 0; j < data.cols(); ++j) {
    const auto& c = cells[static_cast<std::size_t>(j)];
    std::uniform_int_distribution<std::size_t> pick(0, c.observedRows.size() - 1);
    for (Index i : c.missingRows) w(i, j) = data.values()(c.observedRows[pick(rng)], j);
  }

  for (int it = 0; it < iterations; ++it) {
    double change = 0.0;
    for (Index v : order) {
      const auto& c = cells[static_cast<std::size_t>(v)];
      if (static_cast<std::size_t>(k) > c.observedRows.size()) throw Error(Errc::EmptyDonorPool, "fewer donors than k");
      const auto boot = bootstrapSample(static_cast<Index>(c.observedRows.size()),
                                        stableHash({seed, 1, static_cast<std::uint64_t>(it), static_cast<std::uint64_t>(v)}));
      std::vector<Index> fitRows;
      fitRows.reserve(boot.size());
      for (Index b : boot) fitRows.push_back(c.observedRows[static_cast<std::size_t>(b)]);
      const auto model = fitLinearStabilized(detail::predictorRows(w, fitRows, v), detail::columnRows(w, fitRows, v));
      const Eigen::VectorXd donorPred = model.predict(detail::predictorRows(w, c.observedRows, v));
      const Eigen::VectorXd donorValues = detail::columnRows(w, c.observedRows, v);
      const DonorPool pool(std::span<const double>(donorPred.data(), static_cast<std::size_t>(donorPred.size())),
                           std::span<const double>(donorValues.data(), static_cast<std::size_t>(donorValues.size())));
      const Eigen::VectorXd missPred = model.predict(detail::predictorRows(w, c.missingRows, v));
      for (std::size_t q = 0; q < c.missingRows.size(); ++q) {
        const Index i = c.missingRows[q];
        const double value = pool.match(missPred[static_cast<Index>(q)], static_cast<std::size_t>(k), rng);
        change = std::max(change, std::fabs(value - w(i, v)));
        w(i, v) = value;
      }
    }
    result.diagnostics.changePerCycle.push_back(change);
  }
  result.diagnostics.iterations = iterations;
  result.completed = detail::finalize(data, w);
  return result;
}

struct MissForestOptions {
  int treeCount = 64;
  int maxIter = 10;
  int mtry = 0;
  int minLeaf = 5;
  std::size_t workers = 1;
};

/// Iterative random-forest imputation. Stops when the normalized squared
/// change of the imputed cells increases (returning the previous iterate) or
/// after maxIter passes.
inline ImputationResult imputeMissForest(const Dataset& data, const MissForestOptions& options, std::uint64_t seed = 0) {
  if (options.treeCount < 1 || options.maxIter < 1) throw Error(Errc::InvalidOption, "treeCount and maxIter must be >= 1");
  ImputationResult result{Dataset{},
                          {},
                          ImputerSpec(Method::MissForest,
                                      {{"treeCount", std::to_string(options.treeCount)},
                                       {"maxIter", std::to_string(options.maxIter)},
                                       {"minLeaf", std::to_string(options.minLeaf)}},
                                      seed)};
  const auto cells = detail::splitRows(data);
  const auto order = detail::visitOrder(cells);
  Eigen::MatrixXd w = detail::meanFilled(data, cells);
  if (order.empty()) {
    result.completed = detail::finalize(data, w);
    return result;
  }
  detail::requireColumns(data, 2);

  ForestOptions forestOptions{options.treeCount, options.mtry, options.minLeaf, options.workers};
  Eigen::MatrixXd previous = w;
  double lastDelta = std::numeric_limits<double>::infinity();
  auto& diag = result.diagnostics;
  diag.converged = false;
  for (int it = 0; it < options.maxIter; ++it) {
    const Eigen::MatrixXd before = w;
    for (Index v : order) {
      const auto& c = cells[static_cast<std::size_t>(v)];
      const auto forest = fitForest(detail::predictorRows(w, c.observedRows, v), detail::columnRows(w, c.observedRows, v),
                                    forestOptions, stableHash({seed, static_cast<std::uint64_t>(it), static_cast<std::uint64_t>(v)}));
      const Eigen::VectorXd pred = predictForest(forest, detail::predictorRows(w, c.missingRows, v));
      for (std::size_t k = 0; k < c.missingRows.size(); ++k) w(c.missingRows[k], v) = pred[static_cast<Index>(k)];
    }
    double num = 0.0;
    double den = 0.0;
    for (Index v : order) {
      for (Index i : cells[static_cast<std::size_t>(v)].missingRows) {
        num += (w(i, v) - before(i, v)) * (w(i, v) - before(i, v));
        den += w(i, v) * w(i, v);
      }
    }
    const double delta = den > 0.0 ? num / den : 0.0;
    diag.changePerCycle.push_back(delta);
    if (delta > lastDelta) {
      w = previous;
      diag.converged = true;
      break;
    }
    diag.iterations = it + 1;
    previous = w;
    lastDelta = delta;
  }
  result.completed = detail::finalize(data, w);
  return result;
}

/// Dispatches on spec.method() with the spec's options and seed.
inline ImputationResult impute(const Dataset& data, const ImputerSpec& spec) {
  ImputationResult result;
  switch (spec.method()) {
    case Method::Mean:
      result = imputeMean(data);
      break;
    case Method::Mice:
      result = imputeMice(data, spec.count("cycles", 10));
      break;
    case Method::Mi:
      result = imputeMi(data, spec.count("cycles", 10), spec.count("chains", 4), spec.seed());
      break;
    case Method::Amelia:
      result = imputeAmelia(data, spec.count("m", 5), spec.real("tol", 1e-6), spec.count("maxIter", 500), spec.seed(),
                            spec.flag("noise", true));
      break;
    case Method::Hmisc:
      result = imputeHmisc(data, spec.count("iterations", 10), spec.nonNegative("burnIn", 3), spec.count("k", 5), spec.seed());
      break;
    case Method::MissForest: {
      MissForestOptions o;
      o.treeCount = spec.count("treeCount", 64);
      o.maxIter = spec.count("maxIter", 10);
      o.mtry = spec.nonNegative("mtry", 0);
      o.minLeaf = spec.count("minLeaf", 5);
      o.workers = static_cast<std::size_t>(spec.count("workers", 1));
      result = imputeMissForest(data, o, spec.seed());
      break;
    }
  }
  result.spec = spec;
  return result;
}

}  // namespace imputebench
