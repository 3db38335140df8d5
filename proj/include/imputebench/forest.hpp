#pragma once

// Regression trees grown by greedy variance reduction, bagged into a random
// forest.

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "imputebench/error.hpp"
#include "imputebench/parallel.hpp"
#include "imputebench/random.hpp"

namespace imputebench {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // rows with x[feature] <= threshold go left
  int left = -1;
  int right = -1;
  double value = 0.0;  // mean response of training rows in the node
  int count = 0;       // training rows (bootstrap multiplicity included)

  bool leaf() const noexcept { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  template <typename Row>
  double predict(const Row& x) const {
    int k = 0;
    while (!nodes[static_cast<std::size_t>(k)].leaf()) {
      const auto& node = nodes[static_cast<std::size_t>(k)];
      k = x[node.feature] <= node.threshold ? node.left : node.right;
    }
    return nodes[static_cast<std::size_t>(k)].value;
  }
};

struct ForestOptions {
  int treeCount = 64;
  int mtry = 0;  // 0 selects max(1, floor(p / 3))
  int minLeaf = 5;
  std::size_t workers = 1;
};

struct Forest {
  std::vector<RegressionTree> trees;
  int treeCount = 0;
  int mtry = 0;
  int minLeaf = 0;
  Eigen::Index features = 0;
};

namespace detail {

/// Row order of every column of X, ascending by value (ties by row).
inline std::vector<std::vector<Eigen::Index>> columnOrders(const Eigen::MatrixXd& X) {
  std::vector<std::vector<Eigen::Index>> orders(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index f = 0; f < X.cols(); ++f) {
    auto& order = orders[static_cast<std::size_t>(f)];
    order.resize(static_cast<std::size_t>(X.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return X(a, f) < X(b, f); });
  }
  return orders;
}

// Grows one tree on a bootstrap sample. Distinct drawn rows become "units"
// weighted by their bootstrap multiplicity. For every feature the units are
// kept sorted by that feature's value, and every node owns the same
// contiguous range [begin, end) in all of those per-feature lists. Splitting
// a node stable-partitions its range in each list, so no per-node sorting is
// needed.
class TreeGrower {
 public:
  TreeGrower(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::vector<Eigen::Index>>& orders,
             int mtry, int minLeaf)
      : X_(X), y_(y), orders_(orders), mtry_(mtry), minLeaf_(minLeaf) {}

  RegressionTree grow(const std::vector<Eigen::Index>& slotRows, Rng& rng) {
    const auto n = slotRows.size();
    const auto p = static_cast<std::size_t>(X_.cols());
    std::vector<std::uint32_t> multiplicity(static_cast<std::size_t>(X_.rows()), 0);
    for (auto r : slotRows) ++multiplicity[static_cast<std::size_t>(r)];
    std::vector<std::uint32_t> unitOfRow(multiplicity.size(), 0);
    unitRow_.clear();
    for (std::size_t r = 0; r < multiplicity.size(); ++r) {
      if (multiplicity[r] == 0) continue;
      unitOfRow[r] = static_cast<std::uint32_t>(unitRow_.size());
      unitRow_.push_back(static_cast<Eigen::Index>(r));
    }
    const auto units = unitRow_.size();
    unitW_.resize(units);
    unitY_.resize(units);
    unitWY_.resize(units);
    for (std::size_t u = 0; u < units; ++u) {
      const auto r = unitRow_[u];
      unitW_[u] = multiplicity[static_cast<std::size_t>(r)];
      unitY_[u] = y_[r];
      unitWY_[u] = static_cast<double>(unitW_[u]) * y_[r];
    }
    unitX_.resize(p);
    for (std::size_t f = 0; f < p; ++f) {
      unitX_[f].resize(units);
      for (std::size_t u = 0; u < units; ++u) unitX_[f][u] = X_(unitRow_[u], static_cast<Eigen::Index>(f));
    }
    for (auto& buffer : sorted_) buffer.assign(p, std::vector<std::uint32_t>(units));
    for (std::size_t f = 0; f < p; ++f) {
      std::size_t k = 0;
      for (auto r : orders_[f]) {
        if (multiplicity[static_cast<std::size_t>(r)] != 0) sorted_[0][f][k++] = unitOfRow[static_cast<std::size_t>(r)];
      }
    }
    goesLeft_.assign(units, 0);
    featurePool_.resize(p);
    inverse_.resize(n + 1);
    inverse_[0] = 0.0;
    for (std::size_t k = 1; k <= n; ++k) inverse_[k] = 1.0 / static_cast<double>(k);

    RegressionTree tree;
    // A node at depth d reads its lists from sorted_[d % 2].
    struct Pending {
      int node;
      std::size_t begin;
      std::size_t end;
      std::size_t weight;
      int depth;
    };
    std::vector<Pending> stack;
    double rootSum = 0.0;
    for (double v : unitWY_) rootSum += v;
    tree.nodes.push_back(makeNode(rootSum, n));
    stack.push_back({0, 0, units, n, 0});
    const auto splittable = 2 * static_cast<std::size_t>(minLeaf_);
    while (!stack.empty()) {
      const Pending task = stack.back();
      stack.pop_back();
      if (task.weight < splittable) continue;
      const auto& lists = sorted_[static_cast<std::size_t>(task.depth % 2)];
      const auto split = bestSplit(lists, task.begin, task.end, task.weight, rng);
      if (split.feature < 0) continue;
      const auto mid = task.begin + split.leftUnits;
      const auto rightWeight = task.weight - split.leftWeight;
      // Children too small to split need no reordering.
      if (split.leftWeight >= splittable || rightWeight >= splittable) {
        partition(lists, sorted_[static_cast<std::size_t>((task.depth + 1) % 2)], task.begin, task.end, split);
      }
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back(makeNode(split.leftSum, split.leftWeight));
      const int right = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back(makeNode(split.total - split.leftSum, rightWeight));
      auto& parent = tree.nodes[static_cast<std::size_t>(task.node)];
      parent.feature = split.feature;
      parent.threshold = split.threshold;
      parent.left = left;
      parent.right = right;
      stack.push_back({right, mid, task.end, rightWeight, task.depth + 1});
      stack.push_back({left, task.begin, mid, split.leftWeight, task.depth + 1});
    }
    return tree;
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
    std::size_t leftUnits = 0;
    std::size_t leftWeight = 0;
    double leftSum = 0.0;
    double total = 0.0;
  };

  static TreeNode makeNode(double sum, std::size_t count) {
    TreeNode node;
    node.count = static_cast<int>(count);
    node.value = sum / static_cast<double>(count);
    return node;
  }

  using Lists = std::vector<std::vector<std::uint32_t>>;

  Split bestSplit(const Lists& lists, std::size_t begin, std::size_t end, std::size_t weight, Rng& rng) {
    const auto& any = lists[0];
    double total = 0.0;
    double yMin = unitY_[any[begin]];
    double yMax = yMin;
    for (auto k = begin; k < end; ++k) {
      const auto u = any[k];
      total += unitWY_[u];
      yMin = std::min(yMin, unitY_[u]);
      yMax = std::max(yMax, unitY_[u]);
    }
    Split best;
    if (yMin == yMax) return best;
    const double parentScore = total * total * inverse_[weight];
    best.total = total;

    // mtry features without replacement: partial Fisher-Yates.
    std::iota(featurePool_.begin(), featurePool_.end(), 0);
    const auto p = featurePool_.size();
    for (std::size_t k = 0; k < static_cast<std::size_t>(mtry_); ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, p - 1);
      std::swap(featurePool_[k], featurePool_[pick(rng)]);
    }

    const auto minLeaf = static_cast<std::size_t>(minLeaf_);
    for (std::size_t f = 0; f < static_cast<std::size_t>(mtry_); ++f) {
      const int feature = featurePool_[f];
      const auto& list = lists[static_cast<std::size_t>(feature)];
      const auto& column = unitX_[static_cast<std::size_t>(feature)];
      if (column[list[begin]] == column[list[end - 1]]) continue;
      double leftSum = 0.0;
      std::size_t nLeft = 0;
      double current = column[list[begin]];
      for (auto k = begin; k + 1 < end; ++k) {
        const auto u = list[k];
        leftSum += unitWY_[u];
        nLeft += unitW_[u];
        const double here = current;
        current = column[list[k + 1]];
        if (nLeft < minLeaf) continue;
        if (weight - nLeft < minLeaf) break;
        if (here == current) continue;
        const double rightSum = total - leftSum;
        const double score = leftSum * leftSum * inverse_[nLeft] + rightSum * rightSum * inverse_[weight - nLeft];
        const double gain = score - parentScore;
        if (gain > best.gain) {
          best.gain = gain;
          best.feature = feature;
          best.leftUnits = k + 1 - begin;
          best.leftWeight = nLeft;
          best.leftSum = leftSum;
          double t = 0.5 * (here + current);
          if (!(t < current)) t = here;
          best.threshold = t;
        }
      }
    }
    return best;
  }

  // Stable split of [begin, end) of every list from `in` into `out`.
  void partition(const Lists& in, Lists& out, std::size_t begin, std::size_t end, const Split& split) {
    const auto& column = unitX_[static_cast<std::size_t>(split.feature)];
    for (auto k = begin; k < end; ++k) {
      const auto u = in[0][k];
      goesLeft_[u] = column[u] <= split.threshold ? 1 : 0;
    }
    const auto mid = begin + split.leftUnits;
    for (std::size_t f = 0; f < in.size(); ++f) {
      const auto* src = in[f].data();
      auto* dst = out[f].data();
      std::size_t l = begin;
      std::size_t r = mid;
      // Branchless: the outcome is unpredictable in other features' order.
      for (auto k = begin; k < end; ++k) {
        const auto u = src[k];
        const std::size_t g = goesLeft_[u];
        dst[g ? l : r] = u;
        l += g;
        r += 1 - g;
      }
    }
  }

  const Eigen::MatrixXd& X_;
  const Eigen::VectorXd& y_;
  const std::vector<std::vector<Eigen::Index>>& orders_;
  int mtry_;
  int minLeaf_;
  std::vector<Eigen::Index> unitRow_;
  std::vector<std::uint32_t> unitW_;
  std::vector<double> unitY_;
  std::vector<double> unitWY_;
  std::vector<std::vector<double>> unitX_;
  Lists sorted_[2];
  std::vector<std::uint8_t> goesLeft_;
  std::vector<int> featurePool_;
  std::vector<double> inverse_;  // inverse_[k] = 1 / k
};

}  // namespace detail

/// Bagged regression forest. Tree t uses the seed stableHash(seed, t) for
/// both its bootstrap sample and its per-node feature draws, so results do
/// not depend on the worker count.
inline Forest fitForest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ForestOptions& options,
                        std::uint64_t seed) {
  const auto n = X.rows();
  const auto p = X.cols();
  if (y.size() != n) throw Error(Errc::DimensionMismatch, "X and y row counts differ");
  if (options.treeCount < 1) throw Error(Errc::InvalidOption, "treeCount must be >= 1");
  if (options.minLeaf < 1) throw Error(Errc::InvalidOption, "minLeaf must be >= 1");
  if (p < 1) throw Error(Errc::DimensionMismatch, "forest needs at least one predictor");
  const int mtry = options.mtry > 0 ? options.mtry : std::max(1, static_cast<int>(p / 3));
  if (mtry > p) throw Error(Errc::InvalidOption, "mtry exceeds predictor count");
  if (n < 2 * options.minLeaf) throw Error(Errc::TooFewRows, "forest needs n >= 2 * minLeaf");

  Forest forest;
  forest.treeCount = options.treeCount;
  forest.mtry = mtry;
  forest.minLeaf = options.minLeaf;
  forest.features = p;
  forest.trees.resize(static_cast<std::size_t>(options.treeCount));
  const auto orders = detail::columnOrders(X);
  parallelFor(forest.trees.size(), options.workers, [&](std::size_t t) {
    Rng rng(stableHash({seed, static_cast<std::uint64_t>(t)}));
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    for (auto& r : rows) r = pick(rng);
    detail::TreeGrower grower(X, y, orders, mtry, options.minLeaf);
    forest.trees[t] = grower.grow(rows, rng);
  });
  return forest;
}

inline Eigen::VectorXd predictForest(const Forest& forest, const Eigen::MatrixXd& X) {
  if (X.cols() != forest.features) throw Error(Errc::DimensionMismatch, "predictor count differs from training");
  Eigen::VectorXd out(X.rows());
  Eigen::VectorXd row(X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    row = X.row(i).transpose();
    double sum = 0.0;
    for (const auto& tree : forest.trees) sum += tree.predict(row);
    out[i] = sum / static_cast<double>(forest.trees.size());
  }
  return out;
}

}  // namespace imputebench
