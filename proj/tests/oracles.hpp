#pragma once

// Test-only reference implementations. Each oracle is a deliberately naive
// computation, independent of the library code paths it checks: direct
// summation, full sorts, O(n^2) pair counting.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "realcl/fused.hpp"
#include "realcl/manifest.hpp"
#include "realcl/numeric.hpp"

namespace oracle {

using realcl::FeatureVec;
using realcl::FusedNegative;
using realcl::FusedPositive;
using realcl::Label;

inline double naive_dot(const FeatureVec& a, const FeatureVec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Direct-summation supervised contrastive loss (the [23]-style baseline):
// no stabilization, no shared code with the library implementation.
inline double supcon_direct(const std::vector<FeatureVec>& z,
                            const std::vector<Label>& labels, double tau) {
  const int n = static_cast<int>(z.size());
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    std::vector<int> positives;
    for (int j = 0; j < n; ++j) {
      if (j != i && labels[j] == labels[i]) positives.push_back(j);
    }
    if (positives.empty()) continue;
    double denom = 0.0;
    for (int a = 0; a < n; ++a) {
      if (a == i) continue;
      denom += std::exp(naive_dot(z[i], z[a]) / tau);
    }
    for (const int j : positives) {
      loss += -1.0 / positives.size() *
              std::log(std::exp(naive_dot(z[i], z[j]) / tau) / denom);
    }
  }
  return loss;
}

// Direct-summation margin variant. literal_union admits every transformed
// positive into each anchor's positive set regardless of class;
// literal_normalizer divides by the in-batch positive count instead of
// the extended one.
inline double supcon_margin_direct(const std::vector<FeatureVec>& z,
                                   const std::vector<Label>& labels,
                                   const std::vector<FusedPositive>& fused_pos,
                                   const std::vector<FusedNegative>& fused_neg,
                                   double tau, bool literal_union = false,
                                   bool literal_normalizer = false) {
  const int n = static_cast<int>(z.size());
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    std::vector<FeatureVec> positives;
    int in_batch = 0;
    for (int j = 0; j < n; ++j) {
      if (j != i && labels[j] == labels[i]) {
        positives.push_back(z[j]);
        ++in_batch;
      }
    }
    for (const auto& fp : fused_pos) {
      if (literal_union || fp.class_label == labels[i]) {
        positives.push_back(fp.z_tp);
      }
    }
    const int normalizer = literal_normalizer
                               ? in_batch
                               : static_cast<int>(positives.size());
    if (positives.empty() || normalizer == 0) continue;
    double denom = 0.0;
    for (int a = 0; a < n; ++a) {
      if (a == i) continue;
      denom += std::exp(naive_dot(z[i], z[a]) / tau);
    }
    for (const auto& fp : fused_pos) {
      denom += std::exp(naive_dot(z[i], fp.z_tp) / tau);
    }
    double margin = 0.0;
    for (const auto& fn : fused_neg) {
      margin += std::exp(naive_dot(z[i], fn.z_mn) / tau);
    }
    for (const auto& p : positives) {
      loss += -1.0 / normalizer *
              std::log(std::exp(naive_dot(z[i], p) / tau) / (denom + margin));
    }
  }
  return loss;
}

// Full-sort top-k selection.
inline std::vector<int> top_k_full_sort(const std::vector<double>& scores,
                                        int k, bool highest) {
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return highest ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  if (static_cast<int>(idx.size()) > k) idx.resize(std::max(k, 0));
  return idx;
}

// O(n^2) AUC by pair counting with half credit for ties.
inline double auc_pair_count(const std::vector<double>& scores,
                             const std::vector<Label>& labels) {
  double concordant = 0.0;
  long pairs = 0;
  for (std::size_t f = 0; f < scores.size(); ++f) {
    if (labels[f] != Label::Fake) continue;
    for (std::size_t r = 0; r < scores.size(); ++r) {
      if (labels[r] != Label::Real) continue;
      ++pairs;
      if (scores[f] > scores[r]) {
        concordant += 1.0;
      } else if (scores[f] == scores[r]) {
        concordant += 0.5;
      }
    }
  }
  return concordant / static_cast<double>(pairs);
}

// Keep-everything-and-sort reference for the capacity-u hard sets: the u
// most extreme similarities among all insertions, stable on ties.
inline std::vector<double> hard_set_keep_all(const std::vector<double>& sims,
                                             int capacity, bool keep_highest) {
  std::vector<int> idx(sims.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return keep_highest ? sims[a] > sims[b] : sims[a] < sims[b];
  });
  std::vector<double> kept;
  for (int i = 0; i < std::min<int>(capacity, idx.size()); ++i) {
    kept.push_back(sims[idx[i]]);
  }
  return kept;
}

// Nearest-class-centroid classifier accuracy on raw features.
inline double centroid_accuracy(const std::vector<FeatureVec>& features,
                                const std::vector<Label>& labels) {
  FeatureVec real_centroid(features.front().size(), 0.0);
  FeatureVec fake_centroid(features.front().size(), 0.0);
  long n_real = 0, n_fake = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    auto& c = labels[i] == Label::Real ? real_centroid : fake_centroid;
    (labels[i] == Label::Real ? n_real : n_fake) += 1;
    for (std::size_t d = 0; d < c.size(); ++d) c[d] += features[i][d];
  }
  for (auto& x : real_centroid) x /= static_cast<double>(n_real);
  for (auto& x : fake_centroid) x /= static_cast<double>(n_fake);
  long correct = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    double d_real = 0.0, d_fake = 0.0;
    for (std::size_t d = 0; d < features[i].size(); ++d) {
      d_real += (features[i][d] - real_centroid[d]) *
                (features[i][d] - real_centroid[d]);
      d_fake += (features[i][d] - fake_centroid[d]) *
                (features[i][d] - fake_centroid[d]);
    }
    const Label guess = d_fake < d_real ? Label::Fake : Label::Real;
    correct += guess == labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(features.size());
}

// Perceptron separability certificate: returns true when a linear boundary
// with bias fits the labels within the iteration budget.
inline bool perceptron_separable(const std::vector<FeatureVec>& x,
                                 const std::vector<Label>& labels,
                                 int max_epochs = 2000) {
  FeatureVec w(x.front().size() + 1, 0.0);  // last entry is the bias
  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    bool mistakes = false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double act = w.back();
      for (std::size_t d = 0; d < x[i].size(); ++d) act += w[d] * x[i][d];
      const double y = labels[i] == Label::Fake ? 1.0 : -1.0;
      if (y * act <= 0.0) {
        mistakes = true;
        for (std::size_t d = 0; d < x[i].size(); ++d) w[d] += y * x[i][d];
        w.back() += y;
      }
    }
    if (!mistakes) return true;
  }
  return false;
}

}  // namespace oracle
