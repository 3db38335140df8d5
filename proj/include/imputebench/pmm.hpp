#pragma once

// Predictive mean matching: pick an observed donor whose model prediction is
// nearest to the prediction for the missing cell.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "imputebench/error.hpp"
#include "imputebench/random.hpp"

namespace imputebench {

/// Donors sorted by prediction, for repeated k-nearest lookups.
class DonorPool {
 public:
  DonorPool(std::span<const double> predicted, std::span<const double> values) {
    if (predicted.size() != values.size()) throw Error(Errc::DimensionMismatch, "donor predictions and values differ in length");
    if (predicted.empty()) throw Error(Errc::EmptyDonorPool, "no observed donors");
    donors_.reserve(predicted.size());
    for (std::size_t i = 0; i < predicted.size(); ++i) donors_.push_back({predicted[i], values[i], i});
    std::sort(donors_.begin(), donors_.end(), [](const Donor& a, const Donor& b) {
      return a.predicted < b.predicted || (a.predicted == b.predicted && a.index < b.index);
    });
  }

  std::size_t size() const noexcept { return donors_.size(); }

  /// Indices (original order) of the k nearest donors; ties on distance go to
  /// the lower original index.
  std::vector<std::size_t> nearest(double target, std::size_t k) const {
    std::vector<std::size_t> out;
    for (auto pos : nearestPositions(target, k)) out.push_back(donors_[pos].index);
    return out;
  }

  /// The value of a donor drawn uniformly among the k nearest.
  double match(double target, std::size_t k, Rng& rng) const {
    const auto candidates = nearestPositions(target, k);
    std::size_t choice = 0;
    if (k > 1) choice = std::uniform_int_distribution<std::size_t>(0, k - 1)(rng);
    return donors_[candidates[choice]].value;
  }

 private:
  struct Donor {
    double predicted;
    double value;
    std::size_t index;
  };

  // Positions into donors_ ordered by (distance, original index).
  std::vector<std::size_t> nearestPositions(double target, std::size_t k) const {
    if (k < 1 || k > donors_.size()) throw Error(Errc::EmptyDonorPool, "k must be in [1, donor count]");
    const auto at = std::lower_bound(donors_.begin(), donors_.end(), target,
                                     [](const Donor& d, double t) { return d.predicted < t; });
    auto hi = static_cast<std::ptrdiff_t>(at - donors_.begin());
    auto lo = hi - 1;
    const auto last = static_cast<std::ptrdiff_t>(donors_.size());
    auto distance = [&](std::ptrdiff_t pos) { return std::fabs(donors_[static_cast<std::size_t>(pos)].predicted - target); };

    // Outward merge visits donors in nondecreasing distance. Keep the k
    // nearest plus every donor tied with the k-th distance.
    struct Candidate {
      double distance;
      std::size_t index;
      std::size_t pos;
    };
    std::vector<Candidate> picked;
    double cutoff = 0.0;
    while (lo >= 0 || hi < last) {
      std::ptrdiff_t pos;
      if (lo < 0) {
        pos = hi++;
      } else if (hi >= last) {
        pos = lo--;
      } else if (distance(lo) <= distance(hi)) {
        pos = lo--;
      } else {
        pos = hi++;
      }
      const double d = distance(pos);
      if (picked.size() >= k && d > cutoff) break;
      const auto upos = static_cast<std::size_t>(pos);
      picked.push_back({d, donors_[upos].index, upos});
      if (picked.size() == k) cutoff = d;
    }
    std::sort(picked.begin(), picked.end(), [](const Candidate& a, const Candidate& b) {
      return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
    });
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back(picked[i].pos);
    return out;
  }

  std::vector<Donor> donors_;
};

inline double pmmMatch(double predictedMissing, std::span<const double> predictedObserved,
                       std::span<const double> observedValues, int k, std::uint64_t seed) {
  if (predictedObserved.empty()) throw Error(Errc::EmptyDonorPool, "no observed donors");
  DonorPool pool(predictedObserved, observedValues);
  Rng rng(seed);
  return pool.match(predictedMissing, static_cast<std::size_t>(k), rng);
}

}  // namespace imputebench
