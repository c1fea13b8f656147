#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "realcl/errors.hpp"

namespace realcl {

/// Dense feature coordinates. Vectors compared on the hypersphere are unit
/// norm (||v|| within 1e-9 of 1) after l2_normalize.
using FeatureVec = std::vector<double>;

/// Norms below this are treated as degenerate (e.g. an antipodal average).
inline constexpr double kNormEpsilon = 1e-12;

inline double dot(const FeatureVec& a, const FeatureVec& b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("dot: dims " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const FeatureVec& v) { return std::sqrt(dot(v, v)); }

inline FeatureVec l2_normalize(const FeatureVec& v) {
  const double n = norm2(v);
  if (!(n > kNormEpsilon)) {
    throw DegenerateNorm("l2_normalize: norm " + std::to_string(n) +
                         " at or below cutoff");
  }
  FeatureVec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  return out;
}

inline bool is_unit(const FeatureVec& v, double tol = 1e-9) {
  return std::abs(norm2(v) - 1.0) <= tol;
}

/// Cosine similarity of two unit vectors: their dot product, clamped to
/// [-1, 1] against rounding.
inline double cosine_sim(const FeatureVec& a, const FeatureVec& b) {
  return std::clamp(dot(a, b), -1.0, 1.0);
}

enum class RankDirection { Highest, Lowest };

/// Indices of the k best scores in the requested direction, best first.
/// Ties break toward the lower index; k past n returns all n.
inline std::vector<int> top_k_by_score(const std::vector<double>& scores,
                                       int k, RankDirection direction) {
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) {
      return direction == RankDirection::Highest ? scores[a] > scores[b]
                                                 : scores[a] < scores[b];
    }
    return a < b;
  });
  const std::size_t keep =
      std::min<std::size_t>(idx.size(), static_cast<std::size_t>(std::max(k, 0)));
  idx.resize(keep);
  return idx;
}

}  // namespace realcl
