#pragma once

#include <algorithm>
#include <vector>

#include "realcl/errors.hpp"
#include "realcl/manifest.hpp"
#include "realcl/numeric.hpp"

namespace realcl {

/// Running center of the natural-face features seen this epoch: the
/// normalized mean of every real z accumulated since the last reset.
class RealCenter {
 public:
  explicit RealCenter(int dim) : running_sum_(dim, 0.0) {}

  void reset() {
    std::fill(running_sum_.begin(), running_sum_.end(), 0.0);
    n_real_ = 0;
    center_.clear();
  }

  /// Folds one batch of real unit features into the running mean and
  /// recomputes the center. A degenerate mean throws DegenerateNorm and
  /// invalidates the cached center rather than keeping a stale one.
  void update(const std::vector<FeatureVec>& batch_real_z) {
    for (const auto& z : batch_real_z) {
      if (z.size() != running_sum_.size()) {
        throw DimensionMismatch("RealCenter: feature dim mismatch");
      }
      for (std::size_t d = 0; d < z.size(); ++d) running_sum_[d] += z[d];
      ++n_real_;
    }
    if (n_real_ == 0) return;
    center_.clear();
    FeatureVec mean(running_sum_.size());
    for (std::size_t d = 0; d < mean.size(); ++d) {
      mean[d] = running_sum_[d] / n_real_;
    }
    center_ = l2_normalize(mean);
  }

  long n_real() const { return n_real_; }
  const FeatureVec& running_sum() const { return running_sum_; }
  bool has_center() const { return !center_.empty(); }

  const FeatureVec& center() const {
    if (center_.empty()) {
      throw DegenerateNorm("RealCenter: no real features seen this epoch");
    }
    return center_;
  }

 private:
  FeatureVec running_sum_;
  long n_real_ = 0;
  FeatureVec center_;
};

inline void update_center(RealCenter& center,
                          const std::vector<FeatureVec>& batch_real_z) {
  center.update(batch_real_z);
}

/// Which extreme a global hard set keeps: hard fakes rank by highest
/// similarity to the real center, hard reals by lowest.
enum class HardPolarity { HardFake, HardReal };

/// Capacity-bounded set of marginal features, ordered most-extreme first.
/// Similarities are frozen at insertion time; the epoch reset clears all
/// state.
class GlobalHardSet {
 public:
  struct Entry {
    FeatureVec feature;
    double similarity = 0.0;
  };

  GlobalHardSet(HardPolarity polarity, int capacity)
      : polarity_(polarity), capacity_(capacity) {}

  HardPolarity polarity() const { return polarity_; }
  int capacity() const { return capacity_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  void clear() { entries_.clear(); }

  /// Inserts in rank order (stable on ties: earlier insertions stay ahead)
  /// and evicts the least-extreme entry past capacity.
  void insert(FeatureVec feature, double similarity) {
    auto pos = entries_.begin();
    while (pos != entries_.end() && !more_extreme(similarity, pos->similarity)) {
      ++pos;
    }
    entries_.insert(pos, Entry{std::move(feature), similarity});
    if (static_cast<int>(entries_.size()) > capacity_) entries_.pop_back();
  }

  /// Re-scores every stored entry against a drifted center and restores
  /// rank order. Similarities are otherwise frozen at insertion time.
  void rescore(const FeatureVec& center) {
    for (auto& e : entries_) e.similarity = cosine_sim(center, e.feature);
    std::stable_sort(entries_.begin(), entries_.end(),
                     [&](const Entry& a, const Entry& b) {
                       return more_extreme(a.similarity, b.similarity);
                     });
  }

 private:
  bool more_extreme(double a, double b) const {
    return polarity_ == HardPolarity::HardFake ? a > b : a < b;
  }

  HardPolarity polarity_;
  int capacity_;
  std::vector<Entry> entries_;
};

/// One mined feature: its view index in the batch and its similarity to
/// the center at mining time.
struct MinedFeature {
  int view_index = 0;
  double similarity = 0.0;
};

struct MinedBatch {
  std::vector<MinedFeature> hard_fakes;  // most similar to the center first
  std::vector<MinedFeature> hard_reals;  // least similar to the center first
};

/// Top-k fakes and tail-k reals by similarity to the (post-update) center.
/// Fewer than k candidates returns all of them.
inline MinedBatch mine_batch(const FeatureVec& center,
                             const std::vector<FeatureVec>& z,
                             const std::vector<Label>& labels, int k) {
  MinedBatch mined;
  std::vector<int> fake_view, real_view;
  std::vector<double> fake_sim, real_sim;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double s = cosine_sim(center, z[i]);
    if (labels[i] == Label::Fake) {
      fake_view.push_back(static_cast<int>(i));
      fake_sim.push_back(s);
    } else {
      real_view.push_back(static_cast<int>(i));
      real_sim.push_back(s);
    }
  }
  for (int r : top_k_by_score(fake_sim, k, RankDirection::Highest)) {
    mined.hard_fakes.push_back({fake_view[r], fake_sim[r]});
  }
  for (int r : top_k_by_score(real_sim, k, RankDirection::Lowest)) {
    mined.hard_reals.push_back({real_view[r], real_sim[r]});
  }
  return mined;
}

/// Inserts this batch's mined features into the matching-polarity sets.
inline void update_global_sets(GlobalHardSet& hard_fakes,
                               GlobalHardSet& hard_reals,
                               const MinedBatch& mined,
                               const std::vector<FeatureVec>& z) {
  for (const auto& m : mined.hard_fakes) {
    hard_fakes.insert(z[m.view_index], m.similarity);
  }
  for (const auto& m : mined.hard_reals) {
    hard_reals.insert(z[m.view_index], m.similarity);
  }
}

/// Per-batch local description of hard fakes: the s batch fakes most
/// similar to the center.
struct LocalHardFakes {
  std::vector<FeatureVec> features;
  std::vector<int> view_indices;
};

inline LocalHardFakes select_local_hard_fakes(const FeatureVec& center,
                                              const std::vector<FeatureVec>& z,
                                              const std::vector<Label>& labels,
                                              int s) {
  LocalHardFakes local;
  const MinedBatch mined = mine_batch(center, z, labels, s);
  for (const auto& m : mined.hard_fakes) {
    local.features.push_back(z[m.view_index]);
    local.view_indices.push_back(m.view_index);
  }
  return local;
}

}  // namespace realcl
