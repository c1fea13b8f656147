#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "realcl/errors.hpp"
#include "realcl/loss.hpp"
#include "realcl/pairing.hpp"
#include "realcl/synth.hpp"
#include "realcl/trainer.hpp"

namespace realcl {

/// One experiment in one file: world generation, training, loss and fusion
/// settings plus default output paths. Every field has a default; unknown
/// keys are rejected with their path.
struct RunConfig {
  WorldConfig world;
  TrainConfig train;
  std::uint64_t test_seed = 10007;  // held-out test world seed
  std::string out_manifest = "manifest.jsonl";
  std::string out_checkpoint = "checkpoint.json";
  std::string out_results = "results.csv";
};

namespace detail {

/// Strict reader for one config section: typed lookups, then finish()
/// rejects any key that was never consumed.
class SectionReader {
 public:
  SectionReader(const nlohmann::json& j, std::string path)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw ConfigError(path_ + ": expected an object");
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(path_ + "." + key + ": wrong type");
    }
  }

  template <typename Enum, typename Converter>
  void get_enum(const char* key, Enum& out, Converter convert) {
    std::string s;
    get(key, s);
    if (!s.empty()) {
      try {
        out = convert(s);
      } catch (const ConfigError& e) {
        throw ConfigError(path_ + "." + key + ": " + e.what());
      }
    }
  }

  const nlohmann::json* subsection(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ConfigError(path_ + "." + it.key() + ": unknown key");
      }
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline RunConfig config_from_json(const nlohmann::json& root) {
  RunConfig cfg;
  detail::SectionReader top(root, "config");

  if (const auto* w = top.subsection("world")) {
    detail::SectionReader r(*w, "world");
    r.get("num_identities", cfg.world.num_identities);
    r.get("videos_per_identity", cfg.world.videos_per_identity);
    r.get("frames_per_video", cfg.world.frames_per_video);
    r.get("feature_dim", cfg.world.feature_dim);
    r.get("identity_spread", cfg.world.identity_spread);
    r.get("frame_drift", cfg.world.frame_drift);
    r.get("artifact_strength", cfg.world.artifact_strength);
    r.get("blend_weight", cfg.world.blend_weight);
    r.get("observation_noise", cfg.world.observation_noise);
    r.get("fake_pairs_per_identity", cfg.world.fake_pairs_per_identity);
    r.get("seed", cfg.world.seed);
    r.finish();
  }
  if (const auto* t = top.subsection("train")) {
    detail::SectionReader r(*t, "train");
    r.get_enum("strategy", cfg.train.strategy, strategy_from_string);
    r.get("stage1_epochs", cfg.train.stage1_epochs);
    r.get("stage2_epochs", cfg.train.stage2_epochs);
    r.get("batch_size", cfg.train.batch_size);
    r.get("learning_rate", cfg.train.learning_rate);
    r.get("momentum", cfg.train.momentum);
    r.get("encoder_dims", cfg.train.encoder_dims);
    r.get("projector_dims", cfg.train.projector_dims);
    r.get("seed", cfg.train.seed);
    if (const auto* a = r.subsection("augment")) {
      detail::SectionReader ar(*a, "train.augment");
      ar.get("gaussian_sigma", cfg.train.augment.gaussian_sigma);
      ar.get("dropout_prob", cfg.train.augment.dropout_prob);
      ar.get("scale_lo", cfg.train.augment.scale_lo);
      ar.get("scale_hi", cfg.train.augment.scale_hi);
      ar.finish();
    }
    r.finish();
  }
  if (const auto* l = top.subsection("loss")) {
    detail::SectionReader r(*l, "loss");
    r.get("tau", cfg.train.loss.tau);
    r.get_enum("fused_negative_mode", cfg.train.loss.fused_negative_mode,
               fused_negative_mode_from_string);
    r.get("use_transformed_positives",
          cfg.train.loss.use_transformed_positives);
    r.get_enum("positive_set_extension",
               cfg.train.loss.positive_set_extension,
               positive_set_extension_from_string);
    r.get("literal_normalizer", cfg.train.loss.literal_normalizer);
    r.finish();
  }
  if (const auto* f = top.subsection("fusion")) {
    detail::SectionReader r(*f, "fusion");
    r.get_enum("mode", cfg.train.fusion_mode, fusion_mode_from_string);
    r.get("mined_per_batch", cfg.train.mined_per_batch);
    r.get("hard_set_capacity", cfg.train.hard_set_capacity);
    r.get("local_hard_count", cfg.train.local_hard_count);
    r.get("transform_neighbors", cfg.train.transform_neighbors);
    r.get("mix_neighbors", cfg.train.mix_neighbors);
    r.get("positive_budget", cfg.train.positive_budget);
    r.get("rescore_hard_sets", cfg.train.rescore_hard_sets);
    r.finish();
  }
  if (const auto* e = top.subsection("eval")) {
    detail::SectionReader r(*e, "eval");
    r.get("test_seed", cfg.test_seed);
    r.finish();
  }
  if (const auto* o = top.subsection("outputs")) {
    detail::SectionReader r(*o, "outputs");
    r.get("manifest", cfg.out_manifest);
    r.get("checkpoint", cfg.out_checkpoint);
    r.get("results", cfg.out_results);
    r.finish();
  }
  top.finish();

  cfg.world.validate();
  cfg.train.validate();
  return cfg;
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["world"] = {
      {"num_identities", cfg.world.num_identities},
      {"videos_per_identity", cfg.world.videos_per_identity},
      {"frames_per_video", cfg.world.frames_per_video},
      {"feature_dim", cfg.world.feature_dim},
      {"identity_spread", cfg.world.identity_spread},
      {"frame_drift", cfg.world.frame_drift},
      {"artifact_strength", cfg.world.artifact_strength},
      {"blend_weight", cfg.world.blend_weight},
      {"observation_noise", cfg.world.observation_noise},
      {"fake_pairs_per_identity", cfg.world.fake_pairs_per_identity},
      {"seed", cfg.world.seed},
  };
  j["train"] = {
      {"strategy", to_string(cfg.train.strategy)},
      {"stage1_epochs", cfg.train.stage1_epochs},
      {"stage2_epochs", cfg.train.stage2_epochs},
      {"batch_size", cfg.train.batch_size},
      {"learning_rate", cfg.train.learning_rate},
      {"momentum", cfg.train.momentum},
      {"encoder_dims", cfg.train.encoder_dims},
      {"projector_dims", cfg.train.projector_dims},
      {"seed", cfg.train.seed},
      {"augment",
       {{"gaussian_sigma", cfg.train.augment.gaussian_sigma},
        {"dropout_prob", cfg.train.augment.dropout_prob},
        {"scale_lo", cfg.train.augment.scale_lo},
        {"scale_hi", cfg.train.augment.scale_hi}}},
  };
  j["loss"] = {
      {"tau", cfg.train.loss.tau},
      {"fused_negative_mode", to_string(cfg.train.loss.fused_negative_mode)},
      {"use_transformed_positives", cfg.train.loss.use_transformed_positives},
      {"positive_set_extension",
       to_string(cfg.train.loss.positive_set_extension)},
      {"literal_normalizer", cfg.train.loss.literal_normalizer},
  };
  j["fusion"] = {
      {"mode", to_string(cfg.train.fusion_mode)},
      {"mined_per_batch", cfg.train.mined_per_batch},
      {"hard_set_capacity", cfg.train.hard_set_capacity},
      {"local_hard_count", cfg.train.local_hard_count},
      {"transform_neighbors", cfg.train.transform_neighbors},
      {"mix_neighbors", cfg.train.mix_neighbors},
      {"positive_budget", cfg.train.positive_budget},
      {"rescore_hard_sets", cfg.train.rescore_hard_sets},
  };
  j["eval"] = {{"test_seed", cfg.test_seed}};
  j["outputs"] = {{"manifest", cfg.out_manifest},
                  {"checkpoint", cfg.out_checkpoint},
                  {"results", cfg.out_results}};
  return j;
}

inline std::string config_to_string(const RunConfig& cfg) {
  return config_to_json(cfg).dump(2) + "\n";
}

inline nlohmann::json parse_config_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError("config: invalid JSON");
  return j;
}

/// Applies one `--set key.path=value` override onto the raw document.
/// Values parse as JSON when possible, otherwise as bare strings.
inline void apply_override(nlohmann::json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("--set expects key.path=value, got \"" + assignment +
                      "\"");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
  if (parsed.is_discarded()) parsed = value;

  nlohmann::json* node = &root;
  std::size_t begin = 0;
  for (;;) {
    const auto dot = path.find('.', begin);
    const std::string key = path.substr(begin, dot - begin);
    if (key.empty()) throw ConfigError("--set: empty key in \"" + path + "\"");
    if (dot == std::string::npos) {
      (*node)[key] = std::move(parsed);
      return;
    }
    node = &(*node)[key];
    begin = dot + 1;
  }
}

inline RunConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  nlohmann::json j = parse_config_text(text);
  for (const auto& o : overrides) apply_override(j, o);
  return config_from_json(j);
}

}  // namespace realcl
