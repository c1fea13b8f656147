#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "realcl/center.hpp"
#include "realcl/errors.hpp"
#include "realcl/fusion.hpp"
#include "realcl/loss.hpp"
#include "realcl/manifest.hpp"
#include "realcl/metrics.hpp"
#include "realcl/model.hpp"
#include "realcl/pairing.hpp"
#include "realcl/synth.hpp"

namespace realcl {

/// How transformed positives are synthesized each batch. Off disables
/// center mining and fusion entirely, leaving the plain baseline.
enum class FusionMode { Smooth, Linear, LinearSmooth, Off };

inline const char* to_string(FusionMode m) {
  switch (m) {
    case FusionMode::Smooth: return "smooth";
    case FusionMode::Linear: return "linear";
    case FusionMode::LinearSmooth: return "linear_smooth";
    case FusionMode::Off: return "off";
  }
  return "?";
}

inline FusionMode fusion_mode_from_string(const std::string& s) {
  if (s == "smooth") return FusionMode::Smooth;
  if (s == "linear") return FusionMode::Linear;
  if (s == "linear_smooth") return FusionMode::LinearSmooth;
  if (s == "off") return FusionMode::Off;
  throw ConfigError("unknown fusion mode \"" + s + "\"");
}

// "Linear" fusion cell parameters: 8 hard features combined with their top
// 4 most similar features; the "+ smooth" variant re-smooths each fused
// feature with its top 2 neighbors.
inline constexpr int kLinearHardCount = 8;
inline constexpr int kLinearNeighbors = 4;
inline constexpr int kResmoothNeighbors = 2;

// Stage-2 derives its stream from the same config seed.
inline constexpr std::uint64_t kStage2SeedOffset = 1000003;

struct TrainConfig {
  PairingStrategy strategy = PairingStrategy::Semantical;
  LossConfig loss;
  AugmentConfig augment;
  int stage1_epochs = 30;
  int stage2_epochs = 10;
  int batch_size = 32;  // pairs per batch; views are twice this
  double learning_rate = 0.01;
  double momentum = 0.9;
  int mined_per_batch = 2;     // top-k / tail-k mined into the global sets
  int hard_set_capacity = 32;  // u
  int local_hard_count = 4;    // s
  int transform_neighbors = 4;  // M
  int mix_neighbors = 4;        // per hard fake; negatives total s * this
  int positive_budget = 32;     // transformed positives cap per batch
  bool rescore_hard_sets = false;  // re-score stored entries as c drifts
  FusionMode fusion_mode = FusionMode::Smooth;
  std::vector<int> encoder_dims = {64, 32};   // hidden..., embed
  std::vector<int> projector_dims = {32, 16};  // hidden..., proj
  std::uint64_t seed = 1;

  void validate() const {
    loss.validate();
    augment.validate();
    if (stage1_epochs < 1 || stage2_epochs < 1) {
      throw ConfigError("train: epoch counts must be >= 1");
    }
    if (batch_size < 2 || batch_size % 2 != 0) {
      throw ConfigError("train: batch_size must be even and >= 2");
    }
    if (!(learning_rate > 0.0)) {
      throw ConfigError("train: learning_rate must be positive");
    }
    if (momentum < 0.0 || momentum >= 1.0) {
      throw ConfigError("train: momentum must be in [0, 1)");
    }
    if (mined_per_batch < 0 || hard_set_capacity < 1 || local_hard_count < 0 ||
        transform_neighbors < 1 || mix_neighbors < 0 || positive_budget < 0) {
      throw ConfigError("train: invalid mining/fusion counts");
    }
    if (encoder_dims.empty() || projector_dims.empty()) {
      throw ConfigError("train: encoder/projector dims must be non-empty");
    }
  }

  ModelConfig model_config(int input_dim) const {
    ModelConfig mc;
    mc.encoder_dims.push_back(input_dim);
    mc.encoder_dims.insert(mc.encoder_dims.end(), encoder_dims.begin(),
                           encoder_dims.end());
    mc.projector_dims.push_back(encoder_dims.back());
    mc.projector_dims.insert(mc.projector_dims.end(), projector_dims.begin(),
                             projector_dims.end());
    return mc;
  }

  int fused_negative_count() const {
    if (fusion_mode == FusionMode::Off ||
        loss.fused_negative_mode == FusedNegativeMode::Off) {
      return 0;
    }
    return local_hard_count * mix_neighbors;
  }
};

struct EpochStats {
  double mean_loss = 0.0;
  int hard_real_size = 0;
  int hard_fake_size = 0;
  int fused_pos_total = 0;
  int fused_neg_total = 0;
};

struct TrainLog {
  std::vector<double> step_losses;
  std::vector<EpochStats> epochs;

  double final_loss() const {
    return step_losses.empty() ? std::numeric_limits<double>::quiet_NaN()
                               : step_losses.back();
  }
};

struct TrainResult {
  ModelParams params;
  TrainLog log;
};

/// The contrastive loss sums over anchors; training optimizes its
/// per-anchor mean so the step size does not scale with the batch size.
inline void scale_to_anchor_mean(LossGradResult& step, std::size_t anchors) {
  const double inv = 1.0 / static_cast<double>(anchors);
  step.loss *= inv;
  for (double& g : step.grads) g *= inv;
}

/// One balanced pass over the under-sampled stream.
inline int batches_per_epoch(const Manifest& manifest, int batch_size) {
  int n_real = 0, n_fake = 0;
  for (const auto& r : manifest.records) {
    (r.label == Label::Real ? n_real : n_fake) += 1;
  }
  return std::max(1, std::min(n_real, n_fake) / batch_size);
}

/// Stage 1: encoder + projector under the supervised contrastive margin
/// loss. Per epoch the center and global hard sets reset; per batch the
/// pipeline is assemble, encode, update center, mine, refresh global sets,
/// synthesize fused features, then one SGD step.
inline TrainResult train_stage1(const TrainConfig& cfg,
                                const Manifest& manifest) {
  cfg.validate();
  SeededRng rng(cfg.seed);
  ModelParams params = init_params(cfg.model_config(manifest.feature_dim), rng);
  OptimState opt{cfg.learning_rate, cfg.momentum, {}};
  const int n_batches = batches_per_epoch(manifest, cfg.batch_size);
  const bool fusion_on = cfg.fusion_mode != FusionMode::Off;
  RealCenter center(params.config.proj_dim());
  GlobalHardSet hard_fakes(HardPolarity::HardFake, cfg.hard_set_capacity);
  GlobalHardSet hard_reals(HardPolarity::HardReal, cfg.hard_set_capacity);

  TrainLog log;
  for (int epoch = 0; epoch < cfg.stage1_epochs; ++epoch) {
    center.reset();
    hard_fakes.clear();
    hard_reals.clear();
    EpochStats stats;
    double loss_sum = 0.0;
    for (int b = 0; b < n_batches; ++b) {
      const Batch batch = assemble_batch(manifest, cfg.strategy,
                                         cfg.batch_size, cfg.augment, rng);
      std::vector<FusedPositive> fused_pos;
      std::vector<FusedNegative> fused_neg;
      if (fusion_on) {
        std::vector<FeatureVec> z;
        z.reserve(batch.views.size());
        for (const auto& x : batch.views) {
          z.push_back(encode_project(params, x).z);
        }
        std::vector<FeatureVec> real_z;
        for (std::size_t i = 0; i < z.size(); ++i) {
          if (batch.labels[i] == Label::Real) real_z.push_back(z[i]);
        }
        center.update(real_z);
        const FeatureVec& c = center.center();
        if (cfg.rescore_hard_sets) {
          hard_fakes.rescore(c);
          hard_reals.rescore(c);
        }
        const MinedBatch mined =
            mine_batch(c, z, batch.labels, cfg.mined_per_batch);
        update_global_sets(hard_fakes, hard_reals, mined, z);
        if (cfg.loss.use_transformed_positives) {
          switch (cfg.fusion_mode) {
            case FusionMode::Smooth:
              fused_pos = transform_positives(hard_reals, hard_fakes, z,
                                              batch.labels,
                                              cfg.transform_neighbors,
                                              cfg.positive_budget)
                              .positives;
              break;
            case FusionMode::Linear:
              fused_pos = transform_positives(hard_reals, hard_fakes, z,
                                              batch.labels, kLinearNeighbors,
                                              kLinearHardCount)
                              .positives;
              break;
            case FusionMode::LinearSmooth: {
              const auto linear = transform_positives(
                  hard_reals, hard_fakes, z, batch.labels, kLinearNeighbors,
                  kLinearHardCount);
              fused_pos = resmooth_positives(linear.positives, z, batch.labels,
                                             kResmoothNeighbors)
                              .positives;
              break;
            }
            case FusionMode::Off:
              break;
          }
        }
        if (cfg.loss.fused_negative_mode != FusedNegativeMode::Off &&
            cfg.local_hard_count > 0 && cfg.mix_neighbors > 0) {
          const LocalHardFakes local = select_local_hard_fakes(
              c, z, batch.labels, cfg.local_hard_count);
          fused_neg =
              mix_negatives(local, z, batch.labels, cfg.mix_neighbors, rng)
                  .negatives;
        }
      }
      auto step =
          loss_gradients(params, batch.views, batch.labels, fused_pos,
                         fused_neg, LossKind::SupconMargin, cfg.loss);
      scale_to_anchor_mean(step, batch.views.size());
      sgd_step(params, step.grads, opt);
      log.step_losses.push_back(step.loss);
      loss_sum += step.loss;
      stats.fused_pos_total += static_cast<int>(fused_pos.size());
      stats.fused_neg_total += static_cast<int>(fused_neg.size());
    }
    stats.mean_loss = loss_sum / n_batches;
    stats.hard_real_size = static_cast<int>(hard_reals.size());
    stats.hard_fake_size = static_cast<int>(hard_fakes.size());
    log.epochs.push_back(stats);
  }
  return {std::move(params), std::move(log)};
}

/// Reference baseline: the same schedule with no center, no mining and no
/// fused features, trained under the plain supervised contrastive loss.
inline TrainResult train_plain_supcon(const TrainConfig& cfg,
                                      const Manifest& manifest) {
  cfg.validate();
  SeededRng rng(cfg.seed);
  ModelParams params = init_params(cfg.model_config(manifest.feature_dim), rng);
  OptimState opt{cfg.learning_rate, cfg.momentum, {}};
  const int n_batches = batches_per_epoch(manifest, cfg.batch_size);
  TrainLog log;
  for (int epoch = 0; epoch < cfg.stage1_epochs; ++epoch) {
    double loss_sum = 0.0;
    for (int b = 0; b < n_batches; ++b) {
      const Batch batch = assemble_batch(manifest, cfg.strategy,
                                         cfg.batch_size, cfg.augment, rng);
      auto step = loss_gradients(params, batch.views, batch.labels, {}, {},
                                 LossKind::SupconPlain, cfg.loss);
      scale_to_anchor_mean(step, batch.views.size());
      sgd_step(params, step.grads, opt);
      log.step_losses.push_back(step.loss);
      loss_sum += step.loss;
    }
    log.epochs.push_back({loss_sum / n_batches, 0, 0, 0, 0});
  }
  return {std::move(params), std::move(log)};
}

/// Stage 2: the projector is dropped and the encoder frozen; only the
/// linear classifier trains, with cross entropy on the embeddings h.
inline TrainLog train_stage2(ModelParams& params, const TrainConfig& cfg,
                             const Manifest& manifest) {
  cfg.validate();
  SeededRng rng(cfg.seed + kStage2SeedOffset);
  OptimState opt{cfg.learning_rate, cfg.momentum, {}};
  const int n_batches = batches_per_epoch(manifest, cfg.batch_size);
  const std::size_t classifier_begin = params.classifier_begin();
  TrainLog log;
  for (int epoch = 0; epoch < cfg.stage2_epochs; ++epoch) {
    double loss_sum = 0.0;
    for (int b = 0; b < n_batches; ++b) {
      const Batch batch = assemble_batch(manifest, cfg.strategy,
                                         cfg.batch_size, cfg.augment, rng);
      const auto step =
          loss_gradients(params, batch.views, batch.labels, {}, {},
                         LossKind::CrossEntropy, cfg.loss);
      sgd_step(params, step.grads, opt, classifier_begin);
      log.step_losses.push_back(step.loss);
      loss_sum += step.loss;
    }
    log.epochs.push_back({loss_sum / n_batches, 0, 0, 0, 0});
  }
  return log;
}

/// Fake-probability score of one sample from the classifier logits.
inline double fake_score(const ModelParams& params, const FeatureVec& x) {
  const auto logits = classify(params, encode(params, x));
  const double m = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - m);
  const double e1 = std::exp(logits[1] - m);
  return e1 / (e0 + e1);
}

/// Evaluation under a compression level: payloads are perturbed, scored by
/// the encoder + classifier, and reduced to TPR/FPR/AUC/ACC at threshold
/// 0.5 (positive class: fake).
inline Metrics evaluate_model(const ModelParams& params,
                              const Manifest& manifest,
                              const CompressionLevel& level,
                              std::uint64_t seed) {
  if (manifest.records.empty()) throw EmptySplit("evaluate: empty manifest");
  const FeatureVec dir = artifact_direction(manifest.feature_dim);
  SeededRng rng(seed);
  std::vector<double> scores;
  std::vector<Label> labels;
  scores.reserve(manifest.records.size());
  for (const auto& r : manifest.records) {
    scores.push_back(fake_score(params, compress(r.features, level, dir, rng)));
    labels.push_back(r.label);
  }
  return metrics_from_scores(scores, labels, level.label);
}

// ---------------------------------------------------------------------------
// Results file: one CSV row per evaluation.

struct ResultRow {
  std::string cell_id;
  std::string strategy;
  std::string fusion_mode;
  std::string fused_negative_mode;
  int positive_budget = 0;
  int neg_count = 0;
  std::string compression;
  std::uint64_t seed = 0;
  Metrics metrics;
  double stage1_final_loss = 0.0;
};

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string results_csv_header() {
  return "cell_id,strategy,fusion_mode,fused_negative_mode,positive_budget,"
         "neg_count,compression,seed,tpr,fpr,auc,acc,stage1_final_loss\n";
}

inline std::string result_row_csv(const ResultRow& r) {
  std::string line;
  line += r.cell_id + "," + r.strategy + "," + r.fusion_mode + "," +
          r.fused_negative_mode + ",";
  line += std::to_string(r.positive_budget) + "," +
          std::to_string(r.neg_count) + ",";
  line += r.compression + "," + std::to_string(r.seed) + ",";
  line += format_real(r.metrics.tpr) + "," + format_real(r.metrics.fpr) + "," +
          format_real(r.metrics.auc) + "," + format_real(r.metrics.acc) + ",";
  line += format_real(r.stage1_final_loss) + "\n";
  return line;
}

inline std::string results_to_csv(const std::vector<ResultRow>& rows) {
  std::string out = results_csv_header();
  for (const auto& r : rows) out += result_row_csv(r);
  return out;
}

/// Training-config summary embedded in checkpoints so evaluation rows can
/// carry provenance.
inline nlohmann::json train_summary_json(const TrainConfig& cfg,
                                         double stage1_final_loss) {
  nlohmann::json j;
  j["strategy"] = to_string(cfg.strategy);
  j["fusion_mode"] = to_string(cfg.fusion_mode);
  j["fused_negative_mode"] = to_string(cfg.loss.fused_negative_mode);
  j["positive_budget"] = cfg.positive_budget;
  j["neg_count"] = cfg.fused_negative_count();
  j["seed"] = cfg.seed;
  j["stage1_final_loss"] = stage1_final_loss;
  return j;
}

// ---------------------------------------------------------------------------
// Ablation matrix.

struct AblationOutcome {
  std::vector<ResultRow> rows;
  std::vector<std::string> failures;  // "cell_id seed=N: what"
};

namespace detail {

struct AblationCell {
  std::string cell_id;
  TrainConfig cfg;
};

inline std::vector<AblationCell> ablation_cells(
    const TrainConfig& base, const std::vector<std::string>& axes) {
  std::vector<AblationCell> cells;
  {
    TrainConfig c = base;
    c.fusion_mode = FusionMode::Off;
    c.loss.fused_negative_mode = FusedNegativeMode::Off;
    c.loss.use_transformed_positives = false;
    cells.push_back({"baseline", c});
  }
  for (const auto& axis : axes) {
    if (axis == "strategy") {
      for (const auto s :
           {PairingStrategy::Instance, PairingStrategy::Temporal,
            PairingStrategy::Semantical, PairingStrategy::Class}) {
        TrainConfig c = base;
        c.strategy = s;
        cells.push_back({std::string("strategy=") + to_string(s), c});
      }
    } else if (axis == "fusion") {
      for (const auto m : {FusionMode::Linear, FusionMode::LinearSmooth,
                           FusionMode::Smooth}) {
        TrainConfig c = base;
        c.fusion_mode = m;
        cells.push_back({std::string("fusion=") + to_string(m), c});
      }
    } else if (axis == "counts") {
      for (const int neg : {0, 16, 32}) {
        TrainConfig c = base;
        c.positive_budget = 32;
        if (neg == 0) {
          c.mix_neighbors = 0;
          c.loss.fused_negative_mode = FusedNegativeMode::Off;
        } else {
          c.mix_neighbors = std::max(1, neg / std::max(1, c.local_hard_count));
        }
        cells.push_back({"counts=32pos_" + std::to_string(neg) + "neg", c});
      }
    } else if (axis == "negmode") {
      for (const auto m :
           {FusedNegativeMode::AsFakes, FusedNegativeMode::Margin}) {
        TrainConfig c = base;
        c.loss.fused_negative_mode = m;
        cells.push_back({std::string("negmode=") + to_string(m), c});
      }
    } else {
      throw ConfigError("unknown ablation axis \"" + axis +
                        "\" (expected strategy, fusion, counts, negmode)");
    }
  }
  return cells;
}

}  // namespace detail

/// Runs every cell x seed x compression level, recording per-cell failures
/// without aborting the sweep.
inline AblationOutcome run_ablation(const WorldConfig& world,
                                    const TrainConfig& base,
                                    std::uint64_t test_seed,
                                    const std::vector<std::string>& axes,
                                    int n_seeds) {
  if (n_seeds < 1) throw ConfigError("ablate: need at least one seed");
  const Manifest train_manifest = generate_world(world);
  WorldConfig test_world = world;
  test_world.seed = test_seed;
  const Manifest test_manifest = generate_world(test_world);

  AblationOutcome outcome;
  for (const auto& cell : detail::ablation_cells(base, axes)) {
    for (int j = 0; j < n_seeds; ++j) {
      TrainConfig cfg = cell.cfg;
      cfg.seed = base.seed + static_cast<std::uint64_t>(j);
      try {
        TrainResult stage1 = train_stage1(cfg, train_manifest);
        train_stage2(stage1.params, cfg, train_manifest);
        for (const auto label :
             {CompressionLabel::None, CompressionLabel::Light,
              CompressionLabel::Heavy}) {
          const auto level = CompressionLevel::from_label(label);
          const Metrics m =
              evaluate_model(stage1.params, test_manifest, level, cfg.seed);
          ResultRow row;
          row.cell_id = cell.cell_id;
          row.strategy = to_string(cfg.strategy);
          row.fusion_mode = to_string(cfg.fusion_mode);
          row.fused_negative_mode = to_string(cfg.loss.fused_negative_mode);
          row.positive_budget = cfg.positive_budget;
          row.neg_count = cfg.fused_negative_count();
          row.compression = to_string(label);
          row.seed = cfg.seed;
          row.metrics = m;
          row.stage1_final_loss = stage1.log.final_loss();
          outcome.rows.push_back(std::move(row));
        }
      } catch (const std::exception& e) {
        outcome.failures.push_back(cell.cell_id + " seed=" +
                                   std::to_string(cfg.seed) + ": " + e.what());
      }
    }
  }
  return outcome;
}

}  // namespace realcl
