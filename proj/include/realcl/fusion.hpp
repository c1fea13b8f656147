#pragma once

#include <vector>

#include "realcl/center.hpp"
#include "realcl/errors.hpp"
#include "realcl/fused.hpp"
#include "realcl/manifest.hpp"
#include "realcl/numeric.hpp"
#include "realcl/rng.hpp"

namespace realcl {

/// Mixing coefficient distribution: U-shaped Beta favors endpoints, keeping
/// mixtures close to one of the two sources.
inline constexpr double kMixAlpha = 0.8;
inline constexpr double kMixBeta = 0.8;

/// Indices of the `count` batch features of class `cls` most similar to
/// `reference`, most similar first. Ties break toward the lower batch index.
inline std::vector<int> nearest_same_class(const FeatureVec& reference,
                                           const std::vector<FeatureVec>& batch_z,
                                           const std::vector<Label>& labels,
                                           Label cls, int count) {
  std::vector<int> members;
  std::vector<double> sims;
  for (std::size_t i = 0; i < batch_z.size(); ++i) {
    if (labels[i] != cls) continue;
    members.push_back(static_cast<int>(i));
    sims.push_back(cosine_sim(reference, batch_z[i]));
  }
  std::vector<int> picked;
  for (int r : top_k_by_score(sims, count, RankDirection::Highest)) {
    picked.push_back(members[r]);
  }
  return picked;
}

/// Smoothing transform: the normalized mean of a hard feature and its
/// selected neighbors.
inline FeatureVec smooth_combine(const FeatureVec& hard,
                                 const std::vector<FeatureVec>& neighbors) {
  FeatureVec sum = hard;
  for (const auto& nb : neighbors) {
    for (std::size_t d = 0; d < sum.size(); ++d) sum[d] += nb[d];
  }
  const double denom = static_cast<double>(neighbors.size() + 1);
  for (auto& x : sum) x /= denom;
  return l2_normalize(sum);
}

struct TransformResult {
  std::vector<FusedPositive> positives;
  int skipped_no_candidates = 0;
};

namespace detail {

inline void transform_from_set(const GlobalHardSet& set, Label cls,
                               const std::vector<FeatureVec>& batch_z,
                               const std::vector<Label>& labels,
                               int neighbor_count, int budget,
                               TransformResult& out) {
  int taken = 0;
  for (const auto& entry : set.entries()) {
    if (budget >= 0 && taken >= budget) break;
    ++taken;
    const auto picked = nearest_same_class(entry.feature, batch_z, labels, cls,
                                           neighbor_count);
    if (picked.empty()) {
      ++out.skipped_no_candidates;
      continue;
    }
    std::vector<FeatureVec> neighbors;
    neighbors.reserve(picked.size());
    for (int j : picked) neighbors.push_back(batch_z[j]);
    out.positives.push_back({smooth_combine(entry.feature, neighbors), cls});
  }
}

}  // namespace detail

/// Transformed hard positives: for each global hard feature (most extreme
/// first, capped per class by half the positive budget), the normalized
/// mean of it and its neighbor_count most similar same-class batch
/// features. A negative budget disables the cap.
inline TransformResult transform_positives(const GlobalHardSet& hard_reals,
                                           const GlobalHardSet& hard_fakes,
                                           const std::vector<FeatureVec>& batch_z,
                                           const std::vector<Label>& labels,
                                           int neighbor_count,
                                           int positive_budget) {
  if (neighbor_count < 1) {
    throw ConfigError("transform_positives: neighbor count must be >= 1");
  }
  TransformResult out;
  int real_budget = -1, fake_budget = -1;
  if (positive_budget >= 0) {
    fake_budget = positive_budget / 2;
    real_budget = positive_budget - fake_budget;
  }
  detail::transform_from_set(hard_reals, Label::Real, batch_z, labels,
                             neighbor_count, real_budget, out);
  detail::transform_from_set(hard_fakes, Label::Fake, batch_z, labels,
                             neighbor_count, fake_budget, out);
  return out;
}

/// Convex mixture of a hard fake and a nearby real, back on the hypersphere.
inline FeatureVec mix_pair(const FeatureVec& hard_fake,
                           const FeatureVec& real_neighbor, double lambda) {
  FeatureVec mixed(hard_fake.size());
  for (std::size_t d = 0; d < mixed.size(); ++d) {
    mixed[d] = lambda * hard_fake[d] + (1.0 - lambda) * real_neighbor[d];
  }
  return l2_normalize(mixed);
}

struct MixResult {
  std::vector<FusedNegative> negatives;
  int dropped_degenerate = 0;
};

/// Mixed hard negatives: each local hard fake is mixed with each of its
/// neighbor_count most similar real batch features using an independent
/// Beta(0.8, 0.8) coefficient. Degenerate mixtures are dropped and counted.
inline MixResult mix_negatives(const LocalHardFakes& local,
                               const std::vector<FeatureVec>& batch_z,
                               const std::vector<Label>& labels,
                               int neighbor_count, SeededRng& rng) {
  MixResult out;
  if (neighbor_count <= 0 || local.features.empty()) return out;
  bool any_real = false;
  for (const Label l : labels) any_real |= l == Label::Real;
  if (!any_real) {
    throw InsufficientData("mix_negatives: batch has no real features");
  }
  for (const auto& hard : local.features) {
    const auto picked =
        nearest_same_class(hard, batch_z, labels, Label::Real, neighbor_count);
    for (int j : picked) {
      const double lambda = beta_sample(rng, kMixAlpha, kMixBeta);
      try {
        out.negatives.push_back({mix_pair(hard, batch_z[j], lambda), lambda});
      } catch (const DegenerateNorm&) {
        ++out.dropped_degenerate;
      }
    }
  }
  return out;
}

/// Re-smooths already fused positives against the batch ("linear + smooth"
/// fusion): each fused feature is combined with its neighbor_count most
/// similar same-class batch features.
inline TransformResult resmooth_positives(const std::vector<FusedPositive>& fused,
                                          const std::vector<FeatureVec>& batch_z,
                                          const std::vector<Label>& labels,
                                          int neighbor_count) {
  TransformResult out;
  for (const auto& fp : fused) {
    const auto picked = nearest_same_class(fp.z_tp, batch_z, labels,
                                           fp.class_label, neighbor_count);
    if (picked.empty()) {
      ++out.skipped_no_candidates;
      continue;
    }
    std::vector<FeatureVec> neighbors;
    neighbors.reserve(picked.size());
    for (int j : picked) neighbors.push_back(batch_z[j]);
    out.positives.push_back(
        {smooth_combine(fp.z_tp, neighbors), fp.class_label});
  }
  return out;
}

}  // namespace realcl
