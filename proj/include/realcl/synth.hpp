#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "realcl/errors.hpp"
#include "realcl/manifest.hpp"
#include "realcl/numeric.hpp"
#include "realcl/rng.hpp"

namespace realcl {

/// Synthetic world generator settings. Feature vectors are built from an
/// identity latent block and a per-video background block; fakes blend a
/// target identity into a source video's blocks and add a shared artifact
/// component.
struct WorldConfig {
  int num_identities = 8;
  int videos_per_identity = 2;
  int frames_per_video = 16;
  int feature_dim = 32;
  double identity_spread = 1.0;
  double frame_drift = 0.05;
  double artifact_strength = 3.5;
  double blend_weight = 0.7;  // share of the target identity in the blend
  double observation_noise = 0.1;
  int fake_pairs_per_identity = 4;  // (source video, target identity) combos
  std::uint64_t seed = 7;

  void validate() const {
    if (num_identities < 1 || videos_per_identity < 1 ||
        frames_per_video < 1) {
      throw ConfigError("world: all counts must be >= 1");
    }
    if (feature_dim < 2) throw ConfigError("world: feature_dim must be >= 2");
    if (identity_spread < 0.0 || frame_drift < 0.0 ||
        artifact_strength < 0.0 || observation_noise < 0.0) {
      throw ConfigError("world: spreads and strengths must be >= 0");
    }
    if (blend_weight < 0.0 || blend_weight > 1.0) {
      throw ConfigError("world: blend_weight must be in [0, 1]");
    }
    if (fake_pairs_per_identity < 0) {
      throw ConfigError("world: fake_pairs_per_identity must be >= 0");
    }
    if (fake_pairs_per_identity > 0 && num_identities < 2) {
      throw ConfigError("world: fakes need at least 2 identities");
    }
  }
};

enum class CompressionLabel { None, Light, Heavy };

inline const char* to_string(CompressionLabel l) {
  switch (l) {
    case CompressionLabel::None: return "none";
    case CompressionLabel::Light: return "light";
    case CompressionLabel::Heavy: return "heavy";
  }
  return "?";
}

inline CompressionLabel compression_from_string(const std::string& s) {
  if (s == "none") return CompressionLabel::None;
  if (s == "light") return CompressionLabel::Light;
  if (s == "heavy") return CompressionLabel::Heavy;
  throw ConfigError("unknown compression level \"" + s + "\"");
}

/// Parametric stand-in for codec degradation: attenuates the artifact
/// component and adds broadband noise.
struct CompressionLevel {
  CompressionLabel label = CompressionLabel::None;
  double artifact_attenuation = 0.0;
  double added_noise = 0.0;

  static CompressionLevel none() { return {CompressionLabel::None, 0.0, 0.0}; }
  static CompressionLevel light() {
    return {CompressionLabel::Light, 0.4, 0.02};
  }
  static CompressionLevel heavy() {
    return {CompressionLabel::Heavy, 0.8, 0.05};
  }
  static CompressionLevel from_label(CompressionLabel l) {
    switch (l) {
      case CompressionLabel::None: return none();
      case CompressionLabel::Light: return light();
      case CompressionLabel::Heavy: return heavy();
    }
    return none();
  }
};

/// Canonical artifact axis. Depends only on the dimension, never on the
/// world seed, so evaluation can rebuild it from a manifest alone.
inline FeatureVec artifact_direction(int dim) {
  SeededRng rng(0x9e3779b97f4a7c15ull);
  FeatureVec dir(dim);
  for (auto& x : dir) x = rng.normal();
  return l2_normalize(dir);
}

/// Scales the artifact component of v by (1 - attenuation) and adds
/// isotropic Gaussian noise. The "none" level is an exact identity.
inline FeatureVec compress(const FeatureVec& v, const CompressionLevel& level,
                           const FeatureVec& artifact_dir, SeededRng& rng) {
  if (level.artifact_attenuation == 0.0 && level.added_noise == 0.0) return v;
  const double proj = dot(v, artifact_dir);
  FeatureVec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = v[i] - level.artifact_attenuation * proj * artifact_dir[i];
  }
  if (level.added_noise > 0.0) {
    for (auto& x : out) x += level.added_noise * rng.normal();
  }
  return out;
}

/// Generates a manifest whose metadata mirrors forgery synthesis: fake
/// videos reference a real source video and a real target identity, so the
/// pairing predicates are meaningful on the result.
inline Manifest generate_world(const WorldConfig& cfg) {
  cfg.validate();
  SeededRng rng(cfg.seed);
  const int d = cfg.feature_dim;
  const int d_id = d / 2;  // identity block, then background block
  const FeatureVec artifact = artifact_direction(d);

  std::vector<FeatureVec> identity(cfg.num_identities);
  for (auto& a : identity) {
    a.resize(d_id);
    for (auto& x : a) x = cfg.identity_spread * rng.normal();
  }

  // Per-identity real videos with their background latents.
  struct RealVideo {
    int identity;
    std::string video_id;
    FeatureVec background;
  };
  std::vector<RealVideo> videos;
  for (int i = 0; i < cfg.num_identities; ++i) {
    for (int v = 0; v < cfg.videos_per_identity; ++v) {
      RealVideo rv;
      rv.identity = i;
      rv.video_id = "rv" + std::to_string(videos.size());
      rv.background.resize(d - d_id);
      for (auto& x : rv.background) x = rng.normal();
      videos.push_back(std::move(rv));
    }
  }

  Manifest m;
  m.feature_dim = d;

  auto emit_frames = [&](const FeatureVec& id_block_base,
                         const FeatureVec& background, bool fake,
                         const std::string& video_id,
                         const std::string& identity_id,
                         const std::string& source_video_id,
                         const std::string& target_identity_id) {
    FeatureVec walk(d_id, 0.0);
    for (int f = 0; f < cfg.frames_per_video; ++f) {
      for (auto& w : walk) w += cfg.frame_drift * rng.normal();
      SampleRecord r;
      r.label = fake ? Label::Fake : Label::Real;
      r.sample_id = (fake ? "f" : "r") + std::to_string(m.records.size());
      r.video_id = video_id;
      r.frame_index = f;
      r.identity_id = identity_id;
      r.source_video_id = source_video_id;
      r.target_identity_id = target_identity_id;
      r.features.resize(d);
      for (int c = 0; c < d_id; ++c) {
        r.features[c] = id_block_base[c] + walk[c];
      }
      for (int c = d_id; c < d; ++c) {
        r.features[c] = background[c - d_id];
      }
      if (fake) {
        for (int c = 0; c < d; ++c) {
          r.features[c] += cfg.artifact_strength * artifact[c];
        }
      }
      for (int c = 0; c < d; ++c) {
        r.features[c] += cfg.observation_noise * rng.normal();
      }
      m.records.push_back(std::move(r));
    }
  };

  for (const auto& rv : videos) {
    emit_frames(identity[rv.identity], rv.background, /*fake=*/false,
                rv.video_id, "id" + std::to_string(rv.identity), "", "");
  }

  int fake_video_count = 0;
  for (int s = 0; s < cfg.num_identities; ++s) {
    for (int p = 0; p < cfg.fake_pairs_per_identity; ++p) {
      const int sv_local =
          static_cast<int>(rng.uniform_index(cfg.videos_per_identity));
      const auto& source = videos[s * cfg.videos_per_identity + sv_local];
      int target =
          static_cast<int>(rng.uniform_index(cfg.num_identities - 1));
      if (target >= s) ++target;
      FeatureVec blended(d_id);
      for (int c = 0; c < d_id; ++c) {
        blended[c] = cfg.blend_weight * identity[target][c] +
                     (1.0 - cfg.blend_weight) * identity[s][c];
      }
      emit_frames(blended, source.background, /*fake=*/true,
                  "fv" + std::to_string(fake_video_count++), "",
                  source.video_id, "id" + std::to_string(target));
    }
  }

  validate_manifest(m);
  return m;
}

}  // namespace realcl
