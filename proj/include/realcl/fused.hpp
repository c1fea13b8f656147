#pragma once

#include "realcl/manifest.hpp"
#include "realcl/numeric.hpp"

namespace realcl {

/// Transformed hard positive: a smoothed combination of a global hard
/// feature and its nearest same-class batch features, back on the
/// hypersphere. The class label controls which anchors treat it as a
/// positive.
struct FusedPositive {
  FeatureVec z_tp;
  Label class_label = Label::Real;
};

/// Mixed hard negative: convex combination of a local hard fake and a
/// nearby real feature, normalized.
struct FusedNegative {
  FeatureVec z_mn;
  double lambda = 0.0;
};

}  // namespace realcl
