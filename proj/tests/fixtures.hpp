#pragma once

// Shared test fixtures.

#include <string>

#include "realcl/manifest.hpp"

namespace fixtures {

using realcl::Label;
using realcl::Manifest;
using realcl::SampleRecord;

inline SampleRecord real_record(const std::string& id,
                                const std::string& identity,
                                const std::string& video, int frame,
                                int dim = 2) {
  SampleRecord r;
  r.sample_id = id;
  r.label = Label::Real;
  r.identity_id = identity;
  r.video_id = video;
  r.frame_index = frame;
  r.features.assign(dim, 1.0);
  return r;
}

inline SampleRecord fake_record(const std::string& id,
                                const std::string& video,
                                const std::string& source,
                                const std::string& target, int frame,
                                int dim = 2) {
  SampleRecord r;
  r.sample_id = id;
  r.label = Label::Fake;
  r.video_id = video;
  r.source_video_id = source;
  r.target_identity_id = target;
  r.frame_index = frame;
  r.features.assign(dim, -1.0);
  return r;
}

// Twelve records covering every metadata relation the pairing predicates
// look at: adjacent and gapped frames, shared identities across videos,
// shared source videos, shared target identities, and same fake videos.
inline Manifest relations_manifest() {
  Manifest m;
  m.feature_dim = 2;
  m.records = {
      real_record("r0", "idA", "v1", 0),         // 0
      real_record("r1", "idA", "v1", 1),         // 1: adjacent to 0
      real_record("r2", "idA", "v1", 3),         // 2: same video, gap
      real_record("r3", "idA", "v2", 0),         // 3: same identity, other video
      real_record("r4", "idB", "v3", 0),         // 4
      real_record("r5", "idB", "v3", 1),         // 5: adjacent to 4
      fake_record("f0", "fv1", "v1", "idB", 0),  // 6
      fake_record("f1", "fv1", "v1", "idB", 1),  // 7: adjacent to 6
      fake_record("f2", "fv2", "v1", "idA", 0),  // 8: shares source with 6,7
      fake_record("f3", "fv3", "v2", "idB", 0),  // 9: shares target with 6,7
      fake_record("f4", "fv3", "v2", "idB", 2),  // 10: same fake video, gap
      fake_record("f5", "fv4", "v3", "idA", 0),  // 11: shares target with 8
  };
  realcl::validate_manifest(m);
  return m;
}

}  // namespace fixtures
