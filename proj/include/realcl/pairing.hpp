#pragma once

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "realcl/errors.hpp"
#include "realcl/manifest.hpp"
#include "realcl/numeric.hpp"
#include "realcl/rng.hpp"

namespace realcl {

/// Positive-pairing strategies, nested: instance admits the fewest pairs,
/// class the most.
enum class PairingStrategy { Instance, Temporal, Semantical, Class };

inline const char* to_string(PairingStrategy s) {
  switch (s) {
    case PairingStrategy::Instance: return "instance";
    case PairingStrategy::Temporal: return "temporal";
    case PairingStrategy::Semantical: return "semantical";
    case PairingStrategy::Class: return "class";
  }
  return "?";
}

inline PairingStrategy strategy_from_string(const std::string& s) {
  if (s == "instance") return PairingStrategy::Instance;
  if (s == "temporal") return PairingStrategy::Temporal;
  if (s == "semantical") return PairingStrategy::Semantical;
  if (s == "class") return PairingStrategy::Class;
  throw ConfigError("unknown pairing strategy \"" + s + "\"");
}

/// True when (a, b) may form a positive pair under the strategy.
///   instance:   same sample.
///   temporal:   instance, or adjacent frames of the same video.
///   semantical: temporal, or fakes sharing a source video or a target
///               identity, or reals of one identity in distinct videos.
///   class:      same label.
inline bool pair_admissible(const SampleRecord& a, const SampleRecord& b,
                            PairingStrategy strategy) {
  switch (strategy) {
    case PairingStrategy::Instance:
      return a.sample_id == b.sample_id;
    case PairingStrategy::Temporal:
      if (pair_admissible(a, b, PairingStrategy::Instance)) return true;
      return a.video_id == b.video_id &&
             std::abs(a.frame_index - b.frame_index) == 1;
    case PairingStrategy::Semantical: {
      if (pair_admissible(a, b, PairingStrategy::Temporal)) return true;
      if (a.label != b.label) return false;
      if (a.label == Label::Fake) {
        return a.source_video_id == b.source_video_id ||
               a.target_identity_id == b.target_identity_id;
      }
      return a.identity_id == b.identity_id && a.video_id != b.video_id;
    }
    case PairingStrategy::Class:
      return a.label == b.label;
  }
  return false;
}

/// Feature-level view augmentation: Gaussian jitter, coordinate dropout,
/// then a global scale draw, in that order. sigma=0, dropout=0 and
/// scale (1,1) is the identity.
struct AugmentConfig {
  double gaussian_sigma = 0.05;
  double dropout_prob = 0.1;
  double scale_lo = 0.9;
  double scale_hi = 1.1;

  static AugmentConfig identity() { return {0.0, 0.0, 1.0, 1.0}; }

  void validate() const {
    if (gaussian_sigma < 0.0) throw ConfigError("augment: sigma must be >= 0");
    if (dropout_prob < 0.0 || dropout_prob >= 1.0) {
      throw ConfigError("augment: dropout_prob must be in [0, 1)");
    }
    if (!(scale_lo > 0.0) || scale_lo > scale_hi) {
      throw ConfigError("augment: need 0 < scale_lo <= scale_hi");
    }
  }
};

/// Output is intentionally not normalized; the projector does that.
inline FeatureVec augment(const FeatureVec& v, const AugmentConfig& cfg,
                          SeededRng& rng) {
  FeatureVec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = v[i] + cfg.gaussian_sigma * rng.normal();
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (rng.uniform() < cfg.dropout_prob) out[i] = 0.0;
  }
  const double scale = rng.uniform(cfg.scale_lo, cfg.scale_hi);
  for (auto& x : out) x *= scale;
  return out;
}

/// 2N augmented views arranged in N pairs: pair p occupies views 2p and
/// 2p+1. Exactly class-balanced (N real views, N fake views).
struct Batch {
  std::vector<FeatureVec> views;
  std::vector<Label> labels;
  std::vector<int> pair_index;    // partner view; involution, no fixed point
  std::vector<int> record_index;  // provenance into the source manifest
  int pair_count = 0;             // N
};

namespace detail {

// First `count` entries of a partial Fisher-Yates shuffle over `pool`.
inline std::vector<int> sample_without_replacement(std::vector<int> pool,
                                                   int count, SeededRng& rng) {
  for (int j = 0; j < count; ++j) {
    const std::size_t pick =
        j + static_cast<std::size_t>(rng.uniform_index(pool.size() - j));
    std::swap(pool[j], pool[pick]);
  }
  pool.resize(count);
  return pool;
}

}  // namespace detail

/// Assembles a balanced two-view batch: N/2 real pairs then N/2 fake pairs.
/// Each pair draws an anchor (without replacement within the batch and
/// class) and a uniform partner among strategy-admissible records, the
/// anchor itself included; both views are augmented independently.
inline Batch assemble_batch(const Manifest& manifest,
                            PairingStrategy strategy, int pair_count,
                            const AugmentConfig& cfg, SeededRng& rng) {
  cfg.validate();
  if (pair_count < 2 || pair_count % 2 != 0) {
    throw ConfigError("batch pair count must be even and >= 2");
  }
  std::vector<int> real_idx, fake_idx;
  for (int i = 0; i < static_cast<int>(manifest.records.size()); ++i) {
    (manifest.records[i].label == Label::Real ? real_idx : fake_idx)
        .push_back(i);
  }
  const int per_class = pair_count / 2;
  if (static_cast<int>(real_idx.size()) < per_class ||
      static_cast<int>(fake_idx.size()) < per_class) {
    throw InsufficientData(
        "need at least " + std::to_string(per_class) +
        " records per class, have " + std::to_string(real_idx.size()) +
        " real / " + std::to_string(fake_idx.size()) + " fake");
  }

  Batch batch;
  batch.pair_count = pair_count;
  const std::size_t view_count = 2 * static_cast<std::size_t>(pair_count);
  batch.views.reserve(view_count);
  batch.labels.reserve(view_count);
  batch.pair_index.reserve(view_count);
  batch.record_index.reserve(view_count);

  auto emit_class_pairs = [&](const std::vector<int>& pool) {
    const auto anchors = detail::sample_without_replacement(pool, per_class, rng);
    for (const int anchor : anchors) {
      const auto& a = manifest.records[anchor];
      std::vector<int> admissible;
      for (int j = 0; j < static_cast<int>(manifest.records.size()); ++j) {
        if (pair_admissible(a, manifest.records[j], strategy)) {
          admissible.push_back(j);
        }
      }
      const int partner =
          admissible[rng.uniform_index(admissible.size())];
      const auto& b = manifest.records[partner];
      const int base = static_cast<int>(batch.views.size());
      batch.views.push_back(augment(a.features, cfg, rng));
      batch.views.push_back(augment(b.features, cfg, rng));
      batch.labels.push_back(a.label);
      batch.labels.push_back(b.label);
      batch.pair_index.push_back(base + 1);
      batch.pair_index.push_back(base);
      batch.record_index.push_back(anchor);
      batch.record_index.push_back(partner);
    }
  };
  emit_class_pairs(real_idx);
  emit_class_pairs(fake_idx);
  return batch;
}

}  // namespace realcl
