#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "realcl/errors.hpp"
#include "realcl/numeric.hpp"

namespace realcl {

enum class Label { Real, Fake };

inline const char* to_string(Label l) {
  return l == Label::Real ? "real" : "fake";
}

inline Label label_from_string(const std::string& s) {
  if (s == "real") return Label::Real;
  if (s == "fake") return Label::Fake;
  throw SchemaError("label must be \"real\" or \"fake\", got \"" + s + "\"");
}

/// Class index used by the classifier head: real = 0, fake = 1.
inline int class_index(Label l) { return l == Label::Real ? 0 : 1; }

/// One media sample with the synthesis metadata that drives pairing.
/// Real records carry identity_id; fake records carry source_video_id and
/// target_identity_id.
struct SampleRecord {
  std::string sample_id;
  Label label = Label::Real;
  std::string video_id;
  int frame_index = 0;
  std::string identity_id;
  std::string source_video_id;
  std::string target_identity_id;
  FeatureVec features;
};

struct Manifest {
  std::vector<SampleRecord> records;
  int feature_dim = 0;
};

inline void validate_record(const SampleRecord& r) {
  if (r.sample_id.empty()) throw SchemaError("record missing sample_id");
  if (r.video_id.empty()) {
    throw SchemaError("record " + r.sample_id + " missing video_id");
  }
  if (r.frame_index < 0) {
    throw SchemaError("record " + r.sample_id + " has negative frame_index");
  }
  if (r.label == Label::Real) {
    if (r.identity_id.empty()) {
      throw SchemaError("real record " + r.sample_id + " missing identity_id");
    }
    if (!r.source_video_id.empty() || !r.target_identity_id.empty()) {
      throw SchemaError("real record " + r.sample_id +
                        " carries source/target fields");
    }
  } else {
    if (r.source_video_id.empty()) {
      throw SchemaError("fake record " + r.sample_id +
                        " missing source_video_id");
    }
    if (r.target_identity_id.empty()) {
      throw SchemaError("fake record " + r.sample_id +
                        " missing target_identity_id");
    }
    if (!r.identity_id.empty()) {
      throw SchemaError("fake record " + r.sample_id + " carries identity_id");
    }
  }
}

inline void validate_manifest(const Manifest& m) {
  std::set<std::pair<std::string, int>> seen;
  for (const auto& r : m.records) {
    validate_record(r);
    if (static_cast<int>(r.features.size()) != m.feature_dim) {
      throw DimensionMismatch("record " + r.sample_id + " has dim " +
                              std::to_string(r.features.size()) +
                              ", manifest dim " +
                              std::to_string(m.feature_dim));
    }
    if (!seen.insert({r.video_id, r.frame_index}).second) {
      throw SchemaError("duplicate (video_id, frame_index): " + r.video_id +
                        ", " + std::to_string(r.frame_index));
    }
  }
}

namespace detail {

inline SampleRecord record_from_json(const nlohmann::json& j, int line_no) {
  static const std::set<std::string> known = {
      "sample_id",       "label",           "video_id",
      "frame_index",     "identity_id",     "source_video_id",
      "target_identity_id", "features"};
  const std::string where = "line " + std::to_string(line_no);
  if (!j.is_object()) throw SchemaError(where + ": record is not an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) {
      throw SchemaError(where + ": unknown key \"" + it.key() + "\"");
    }
  }
  SampleRecord r;
  try {
    r.sample_id = j.at("sample_id").get<std::string>();
    r.label = label_from_string(j.at("label").get<std::string>());
    r.video_id = j.at("video_id").get<std::string>();
    r.frame_index = j.at("frame_index").get<int>();
    if (j.contains("identity_id")) {
      r.identity_id = j.at("identity_id").get<std::string>();
    }
    if (j.contains("source_video_id")) {
      r.source_video_id = j.at("source_video_id").get<std::string>();
    }
    if (j.contains("target_identity_id")) {
      r.target_identity_id = j.at("target_identity_id").get<std::string>();
    }
    r.features = j.at("features").get<FeatureVec>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(where + ": " + e.what());
  }
  return r;
}

inline nlohmann::json record_to_json(const SampleRecord& r) {
  nlohmann::json j;
  j["sample_id"] = r.sample_id;
  j["label"] = to_string(r.label);
  j["video_id"] = r.video_id;
  j["frame_index"] = r.frame_index;
  if (r.label == Label::Real) {
    j["identity_id"] = r.identity_id;
  } else {
    j["source_video_id"] = r.source_video_id;
    j["target_identity_id"] = r.target_identity_id;
  }
  j["features"] = r.features;
  return j;
}

}  // namespace detail

/// Parses a line-delimited manifest (one record object per line, UTF-8).
inline Manifest parse_manifest(std::istream& in) {
  Manifest m;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw ParseError("line " + std::to_string(line_no) + ": invalid JSON");
    }
    m.records.push_back(detail::record_from_json(j, line_no));
  }
  if (!m.records.empty()) {
    m.feature_dim = static_cast<int>(m.records.front().features.size());
  }
  validate_manifest(m);
  return m;
}

inline Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open manifest file: " + path);
  return parse_manifest(in);
}

inline std::string manifest_to_jsonl(const Manifest& m) {
  std::ostringstream out;
  for (const auto& r : m.records) {
    out << detail::record_to_json(r).dump() << '\n';
  }
  return out.str();
}

inline void save_manifest(const Manifest& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open manifest file for writing: " + path);
  out << manifest_to_jsonl(m);
}

}  // namespace realcl
