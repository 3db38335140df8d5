#pragma once

// Dataset representation, missing mask and observed-statistics
// standardization.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "imputebench/error.hpp"

namespace imputebench {

using Index = Eigen::Index;

/// Boolean matrix, true = missing. Column-major like Eigen::MatrixXd.
class MissingMask {
 public:
  MissingMask() = default;
  MissingMask(Index rows, Index cols, bool value = false)
      : rows_(rows), cols_(cols), flags_(static_cast<std::size_t>(rows * cols), value ? 1 : 0) {}

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }

  bool operator()(Index i, Index j) const { return flags_[offset(i, j)] != 0; }
  void set(Index i, Index j, bool missing) { flags_[offset(i, j)] = missing ? 1 : 0; }

  Index count(Index j) const {
    Index c = 0;
    for (Index i = 0; i < rows_; ++i) c += flags_[offset(i, j)];
    return c;
  }
  Index count() const {
    Index c = 0;
    for (auto f : flags_) c += f;
    return c;
  }
  double missingFraction(Index j) const {
    return rows_ == 0 ? 0.0 : static_cast<double>(count(j)) / static_cast<double>(rows_);
  }
  bool any() const {
    for (auto f : flags_) {
      if (f) return true;
    }
    return false;
  }
  bool rowHasMissing(Index i) const {
    for (Index j = 0; j < cols_; ++j) {
      if ((*this)(i, j)) return true;
    }
    return false;
  }

  bool operator==(const MissingMask&) const = default;

 private:
  std::size_t offset(Index i, Index j) const {
    return static_cast<std::size_t>(j * rows_ + i);
  }

  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<std::uint8_t> flags_;
};

/// Column-named numeric matrix paired with a missing mask. Masked cells hold
/// a quiet NaN; numeric kernels never read them.
class Dataset {
 public:
  Dataset() = default;

  Dataset(std::vector<std::string> names, Eigen::MatrixXd values, MissingMask mask)
      : names_(std::move(names)), values_(std::move(values)), mask_(std::move(mask)) {
    validate();
    poisonMasked();
  }

  /// Complete dataset (all-false mask).
  Dataset(std::vector<std::string> names, const Eigen::MatrixXd& values)
      : Dataset(std::move(names), values, MissingMask(values.rows(), values.cols())) {}

  /// Complete dataset with generated names X0..X{p-1}.
  explicit Dataset(const Eigen::MatrixXd& values) : Dataset(defaultNames(values.cols()), values) {}

  Index rows() const noexcept { return values_.rows(); }
  Index cols() const noexcept { return values_.cols(); }

  const std::vector<std::string>& columnNames() const noexcept { return names_; }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  Eigen::MatrixXd& values() noexcept { return values_; }
  const MissingMask& mask() const noexcept { return mask_; }

  bool missing(Index i, Index j) const { return mask_(i, j); }
  bool complete() const { return !mask_.any(); }

  /// Replaces the mask and poisons newly masked cells.
  void setMask(MissingMask mask) {
    if (mask.rows() != rows() || mask.cols() != cols()) {
      throw Error(Errc::DimensionMismatch, "mask shape does not match values");
    }
    mask_ = std::move(mask);
    poisonMasked();
  }

  /// Marks a cell missing and poisons it.
  void markMissing(Index i, Index j) {
    mask_.set(i, j, true);
    values_(i, j) = std::numeric_limits<double>::quiet_NaN();
  }

  /// Fills a masked cell and clears its flag.
  void fill(Index i, Index j, double value) {
    values_(i, j) = value;
    mask_.set(i, j, false);
  }

  /// Observed values of column j in row order.
  std::vector<double> observed(Index j) const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(rows()));
    for (Index i = 0; i < rows(); ++i) {
      if (!mask_(i, j)) out.push_back(values_(i, j));
    }
    return out;
  }

  /// Rows selected by index (duplicates allowed), mask carried along.
  Dataset selectRows(const std::vector<Index>& rowsIdx) const {
    Eigen::MatrixXd v(static_cast<Index>(rowsIdx.size()), cols());
    MissingMask m(v.rows(), cols());
    for (Index r = 0; r < v.rows(); ++r) {
      const Index src = rowsIdx[static_cast<std::size_t>(r)];
      v.row(r) = values_.row(src);
      for (Index j = 0; j < cols(); ++j) m.set(r, j, mask_(src, j));
    }
    return Dataset(names_, std::move(v), std::move(m));
  }

  static std::vector<std::string> defaultNames(Index p) {
    std::vector<std::string> out;
    for (Index j = 0; j < p; ++j) out.push_back("X" + std::to_string(j));
    return out;
  }

 private:
  void validate() const {
    if (values_.rows() < 1 || values_.cols() < 1) {
      throw Error(Errc::DimensionMismatch, "dataset needs n >= 1 and p >= 1");
    }
    if (mask_.rows() != values_.rows() || mask_.cols() != values_.cols()) {
      throw Error(Errc::DimensionMismatch, "mask shape does not match values");
    }
    if (static_cast<Index>(names_.size()) != values_.cols()) {
      throw Error(Errc::DimensionMismatch, "column name count does not match p");
    }
  }
  void poisonMasked() {
    for (Index j = 0; j < cols(); ++j) {
      for (Index i = 0; i < rows(); ++i) {
        if (mask_(i, j)) values_(i, j) = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }

  std::vector<std::string> names_;
  Eigen::MatrixXd values_;
  MissingMask mask_;
};

struct StandardizationParams {
  Eigen::VectorXd means;
  Eigen::VectorXd sds;

  static StandardizationParams identity(Index p) {
    return {Eigen::VectorXd::Zero(p), Eigen::VectorXd::Ones(p)};
  }
};

/// Per-column mean and sample sd (n-1) over observed cells only.
inline StandardizationParams observedColumnStats(const Dataset& data) {
  const Index p = data.cols();
  StandardizationParams params{Eigen::VectorXd(p), Eigen::VectorXd(p)};
  for (Index j = 0; j < p; ++j) {
    double sum = 0.0;
    Index count = 0;
    for (Index i = 0; i < data.rows(); ++i) {
      if (data.missing(i, j)) continue;
      sum += data.values()(i, j);
      ++count;
    }
    if (count < 2) {
      throw Error(Errc::TooFewObserved, "column " + data.columnNames()[j] + " has fewer than 2 observed cells");
    }
    const double mean = sum / static_cast<double>(count);
    double ss = 0.0;
    for (Index i = 0; i < data.rows(); ++i) {
      if (data.missing(i, j)) continue;
      const double d = data.values()(i, j) - mean;
      ss += d * d;
    }
    if (!(ss > 0.0)) {
      throw Error(Errc::ZeroVariance, "column " + data.columnNames()[j] + " has constant observed values");
    }
    params.means[j] = mean;
    params.sds[j] = std::sqrt(ss / static_cast<double>(count - 1));
  }
  return params;
}

namespace detail {
inline void checkParams(const Dataset& data, const StandardizationParams& params) {
  if (params.means.size() != data.cols() || params.sds.size() != data.cols()) {
    throw Error(Errc::DimensionMismatch, "standardization params do not match column count");
  }
}
}  // namespace detail

inline Dataset standardize(const Dataset& data, const StandardizationParams& params) {
  detail::checkParams(data, params);
  Dataset out = data;
  for (Index j = 0; j < data.cols(); ++j) {
    for (Index i = 0; i < data.rows(); ++i) {
      if (!data.missing(i, j)) {
        out.values()(i, j) = (data.values()(i, j) - params.means[j]) / params.sds[j];
      }
    }
  }
  return out;
}

inline Dataset unstandardize(const Dataset& data, const StandardizationParams& params) {
  detail::checkParams(data, params);
  Dataset out = data;
  for (Index j = 0; j < data.cols(); ++j) {
    for (Index i = 0; i < data.rows(); ++i) {
      if (!data.missing(i, j)) {
        out.values()(i, j) = data.values()(i, j) * params.sds[j] + params.means[j];
      }
    }
  }
  return out;
}

/// Rows with no masked cell, order preserved.
inline Dataset completeRows(const Dataset& data) {
  std::vector<Index> keep;
  for (Index i = 0; i < data.rows(); ++i) {
    if (!data.mask().rowHasMissing(i)) keep.push_back(i);
  }
  if (keep.empty()) throw Error(Errc::EmptyResult, "no complete rows");
  return data.selectRows(keep);
}

}  // namespace imputebench
