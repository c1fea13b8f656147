#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "realcl/errors.hpp"
#include "realcl/manifest.hpp"
#include "realcl/synth.hpp"

namespace realcl {

/// Detection metrics at one evaluation split and perturbation level.
/// Positive class is fake throughout.
struct Metrics {
  double tpr = 0.0;
  double fpr = 0.0;
  double auc = 0.0;
  double acc = 0.0;
  int n_eval = 0;
  CompressionLabel perturbation = CompressionLabel::None;
};

/// Rank-based AUC (Mann-Whitney with average ranks for ties). Equals
/// (concordant + 0.5 * tied) / (n_fake * n_real) exactly.
inline double auc_score(const std::vector<double>& scores,
                        const std::vector<Label>& labels) {
  if (scores.size() != labels.size()) {
    throw DimensionMismatch("auc: scores/labels size mismatch");
  }
  const int n = static_cast<int>(scores.size());
  long n_fake = 0;
  for (const Label l : labels) n_fake += l == Label::Fake;
  const long n_real = n - n_fake;
  if (n_fake == 0 || n_real == 0) {
    throw SingleClass("auc: both classes must be present");
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return scores[a] < scores[b]; });
  // Average ranks over tie runs; ranks are 1-based.
  double fake_rank_sum = 0.0;
  int i = 0;
  while (i < n) {
    int j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * ((i + 1) + j);  // mean of ranks i+1 .. j
    for (int t = i; t < j; ++t) {
      if (labels[order[t]] == Label::Fake) fake_rank_sum += avg_rank;
    }
    i = j;
  }
  const double u = fake_rank_sum - 0.5 * static_cast<double>(n_fake) *
                                       static_cast<double>(n_fake + 1);
  return u / (static_cast<double>(n_fake) * static_cast<double>(n_real));
}

/// Thresholded confusion metrics plus AUC. Scores are fake probabilities;
/// a sample is called fake when its score exceeds the threshold.
inline Metrics metrics_from_scores(const std::vector<double>& scores,
                                   const std::vector<Label>& labels,
                                   CompressionLabel perturbation,
                                   double threshold = 0.5) {
  if (scores.empty()) throw EmptySplit("metrics: no samples");
  long tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool called_fake = scores[i] > threshold;
    if (labels[i] == Label::Fake) {
      called_fake ? ++tp : ++fn;
    } else {
      called_fake ? ++fp : ++tn;
    }
  }
  Metrics m;
  m.perturbation = perturbation;
  m.n_eval = static_cast<int>(scores.size());
  if (tp + fn == 0 || fp + tn == 0) {
    throw SingleClass("metrics: both classes must be present");
  }
  m.tpr = static_cast<double>(tp) / static_cast<double>(tp + fn);
  m.fpr = static_cast<double>(fp) / static_cast<double>(fp + tn);
  m.acc = static_cast<double>(tp + tn) / static_cast<double>(m.n_eval);
  m.auc = auc_score(scores, labels);
  return m;
}

}  // namespace realcl
