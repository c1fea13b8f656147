#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "realcl/errors.hpp"
#include "realcl/fused.hpp"
#include "realcl/manifest.hpp"
#include "realcl/numeric.hpp"

namespace realcl {

/// Placement of the mixed hard negatives in the loss.
///   Margin:  they form an extra denominator mass per anchor.
///   AsFakes: they join the batch as fake-labeled constant features.
///   Off:     they are ignored.
enum class FusedNegativeMode { Margin, AsFakes, Off };

/// Which anchors treat a transformed positive as a positive.
///   ClassFiltered: only anchors of the matching class (default).
///   LiteralUnion:  every anchor, regardless of class.
enum class PositiveSetExtension { ClassFiltered, LiteralUnion };

inline const char* to_string(FusedNegativeMode m) {
  switch (m) {
    case FusedNegativeMode::Margin: return "margin";
    case FusedNegativeMode::AsFakes: return "as_fakes";
    case FusedNegativeMode::Off: return "off";
  }
  return "?";
}

inline FusedNegativeMode fused_negative_mode_from_string(const std::string& s) {
  if (s == "margin") return FusedNegativeMode::Margin;
  if (s == "as_fakes") return FusedNegativeMode::AsFakes;
  if (s == "off") return FusedNegativeMode::Off;
  throw ConfigError("unknown fused_negative_mode \"" + s + "\"");
}

inline const char* to_string(PositiveSetExtension e) {
  return e == PositiveSetExtension::ClassFiltered ? "class_filtered"
                                                  : "literal_union";
}

inline PositiveSetExtension positive_set_extension_from_string(
    const std::string& s) {
  if (s == "class_filtered") return PositiveSetExtension::ClassFiltered;
  if (s == "literal_union") return PositiveSetExtension::LiteralUnion;
  throw ConfigError("unknown positive_set_extension \"" + s + "\"");
}

struct LossConfig {
  double tau = 0.1;
  FusedNegativeMode fused_negative_mode = FusedNegativeMode::Margin;
  bool use_transformed_positives = true;
  PositiveSetExtension positive_set_extension =
      PositiveSetExtension::ClassFiltered;
  // Normalize each anchor by |P| as printed instead of the proper |P'|.
  bool literal_normalizer = false;

  void validate() const {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
      throw ConfigError("loss: tau must be positive and finite");
    }
  }
};

/// Loss value plus, when requested, the gradient with respect to each batch
/// feature. Fused features are constants: no gradient entries for them.
struct SupconEval {
  double loss = 0.0;
  std::vector<FeatureVec> grad_z;
  int skipped_anchors = 0;
};

/// Supervised contrastive margin loss over 2N unit features, optionally
/// extended by transformed positives and mixed negatives. Anchors with an
/// empty extended positive set are skipped. Log-sum-exp terms use
/// max-subtraction.
inline SupconEval supcon_margin_eval(const std::vector<FeatureVec>& z,
                                     const std::vector<Label>& labels,
                                     const std::vector<FusedPositive>& fused_pos,
                                     const std::vector<FusedNegative>& fused_neg,
                                     const LossConfig& cfg,
                                     bool want_grad = false) {
  cfg.validate();
  const int n = static_cast<int>(z.size());
  if (n == 0) throw EmptyBatch("supcon loss: no batch features");
  if (labels.size() != z.size()) {
    throw DimensionMismatch("supcon loss: labels/features size mismatch");
  }

  const bool negs_in_denominator =
      cfg.fused_negative_mode != FusedNegativeMode::Off;
  const bool negs_as_fakes =
      cfg.fused_negative_mode == FusedNegativeMode::AsFakes;
  const int n_pos = static_cast<int>(fused_pos.size());
  const int n_neg = negs_in_denominator ? static_cast<int>(fused_neg.size()) : 0;
  const double inv_tau = 1.0 / cfg.tau;

  SupconEval result;
  if (want_grad) {
    result.grad_z.assign(z.size(), FeatureVec(z.front().size(), 0.0));
  }

  // Per-anchor scratch, reused across anchors.
  std::vector<double> sim(n + n_pos + n_neg);
  std::vector<char> in_positive(n + n_pos + n_neg);
  std::vector<double> weight(n + n_pos + n_neg);

  for (int i = 0; i < n; ++i) {
    // Candidate layout: batch j != i, then fused positives, then fused
    // negatives (margin mass or as-fakes, same denominator either way).
    int count = 0;
    int in_batch_positives = 0;
    int positive_count = 0;
    std::vector<int> batch_source;  // candidate -> batch index
    batch_source.reserve(n);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      sim[count] = cosine_sim(z[i], z[j]);
      const bool pos = labels[j] == labels[i];
      in_positive[count] = pos ? 1 : 0;
      in_batch_positives += pos;
      positive_count += pos;
      batch_source.push_back(j);
      ++count;
    }
    for (int t = 0; t < n_pos; ++t) {
      sim[count] = cosine_sim(z[i], fused_pos[t].z_tp);
      const bool pos =
          cfg.positive_set_extension == PositiveSetExtension::LiteralUnion ||
          fused_pos[t].class_label == labels[i];
      in_positive[count] = pos ? 1 : 0;
      positive_count += pos;
      ++count;
    }
    for (int v = 0; v < n_neg; ++v) {
      sim[count] = cosine_sim(z[i], fused_neg[v].z_mn);
      const bool pos = negs_as_fakes && labels[i] == Label::Fake;
      in_positive[count] = pos ? 1 : 0;
      positive_count += pos;
      ++count;
    }

    const int normalizer =
        cfg.literal_normalizer ? in_batch_positives : positive_count;
    if (positive_count == 0 || normalizer == 0) {
      ++result.skipped_anchors;
      continue;
    }

    double max_arg = -1.0 * inv_tau;
    for (int c = 0; c < count; ++c) {
      max_arg = std::max(max_arg, sim[c] * inv_tau);
    }
    double denom = 0.0;
    for (int c = 0; c < count; ++c) {
      weight[c] = std::exp(sim[c] * inv_tau - max_arg);
      denom += weight[c];
    }
    const double log_denom = max_arg + std::log(denom);

    double anchor_loss = 0.0;
    for (int c = 0; c < count; ++c) {
      if (in_positive[c]) anchor_loss += sim[c] * inv_tau - log_denom;
    }
    result.loss -= anchor_loss / normalizer;

    if (want_grad) {
      const double scale = 1.0 / (normalizer * cfg.tau);
      for (int c = 0; c < count; ++c) {
        const double softmax = weight[c] / denom;
        double coeff = positive_count * softmax * scale;
        if (in_positive[c]) coeff -= scale;
        if (coeff == 0.0) continue;
        const FeatureVec* feat;
        if (c < static_cast<int>(batch_source.size())) {
          feat = &z[batch_source[c]];
        } else if (c < static_cast<int>(batch_source.size()) + n_pos) {
          feat = &fused_pos[c - batch_source.size()].z_tp;
        } else {
          feat = &fused_neg[c - batch_source.size() - n_pos].z_mn;
        }
        for (std::size_t d = 0; d < z[i].size(); ++d) {
          result.grad_z[i][d] += coeff * (*feat)[d];
        }
        if (c < static_cast<int>(batch_source.size())) {
          auto& g = result.grad_z[batch_source[c]];
          for (std::size_t d = 0; d < z[i].size(); ++d) {
            g[d] += coeff * z[i][d];
          }
        }
      }
    }
  }

  if (!std::isfinite(result.loss)) {
    throw NonFiniteLoss("supcon loss is not finite");
  }
  return result;
}

inline double supcon_margin_loss(const std::vector<FeatureVec>& z,
                                 const std::vector<Label>& labels,
                                 const std::vector<FusedPositive>& fused_pos,
                                 const std::vector<FusedNegative>& fused_neg,
                                 const LossConfig& cfg) {
  return supcon_margin_eval(z, labels, fused_pos, fused_neg, cfg).loss;
}

/// The plain supervised contrastive baseline: the margin loss with no fused
/// features and no margin mass.
inline SupconEval supcon_plain_eval(const std::vector<FeatureVec>& z,
                                    const std::vector<Label>& labels,
                                    double tau, bool want_grad = false) {
  LossConfig cfg;
  cfg.tau = tau;
  cfg.fused_negative_mode = FusedNegativeMode::Off;
  cfg.use_transformed_positives = false;
  return supcon_margin_eval(z, labels, {}, {}, cfg, want_grad);
}

inline double supcon_plain_loss(const std::vector<FeatureVec>& z,
                                const std::vector<Label>& labels, double tau) {
  return supcon_plain_eval(z, labels, tau).loss;
}

/// Mean negative log-softmax of the true class, with max-subtraction.
struct CrossEntropyEval {
  double loss = 0.0;
  std::vector<std::array<double, 2>> grad_logits;
};

inline CrossEntropyEval cross_entropy_eval(
    const std::vector<std::array<double, 2>>& logits,
    const std::vector<Label>& labels, bool want_grad = false) {
  if (logits.empty()) throw EmptyBatch("cross entropy: no samples");
  if (logits.size() != labels.size()) {
    throw DimensionMismatch("cross entropy: logits/labels size mismatch");
  }
  const int n = static_cast<int>(logits.size());
  CrossEntropyEval result;
  if (want_grad) result.grad_logits.assign(n, {0.0, 0.0});
  for (int i = 0; i < n; ++i) {
    const double m = std::max(logits[i][0], logits[i][1]);
    const double e0 = std::exp(logits[i][0] - m);
    const double e1 = std::exp(logits[i][1] - m);
    const double log_sum = m + std::log(e0 + e1);
    const int truth = class_index(labels[i]);
    result.loss += (log_sum - logits[i][truth]) / n;
    if (want_grad) {
      result.grad_logits[i][0] = (e0 / (e0 + e1)) / n;
      result.grad_logits[i][1] = (e1 / (e0 + e1)) / n;
      result.grad_logits[i][truth] -= 1.0 / n;
    }
  }
  if (!std::isfinite(result.loss)) {
    throw NonFiniteLoss("cross entropy loss is not finite");
  }
  return result;
}

inline double cross_entropy(const std::vector<std::array<double, 2>>& logits,
                            const std::vector<Label>& labels) {
  return cross_entropy_eval(logits, labels).loss;
}

}  // namespace realcl
