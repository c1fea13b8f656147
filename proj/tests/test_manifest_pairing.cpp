#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <sstream>
#include <utility>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "realcl/pairing.hpp"
#include "realcl/synth.hpp"

using namespace realcl;
using fixtures::fake_record;
using fixtures::real_record;
using fixtures::relations_manifest;

namespace {

using PairSet = std::set<std::pair<int, int>>;

PairSet admissible_pairs(const Manifest& m, PairingStrategy s) {
  PairSet out;
  for (int i = 0; i < static_cast<int>(m.records.size()); ++i) {
    for (int j = i; j < static_cast<int>(m.records.size()); ++j) {
      if (pair_admissible(m.records[i], m.records[j], s)) out.insert({i, j});
    }
  }
  return out;
}

PairSet self_pairs(int n) {
  PairSet out;
  for (int i = 0; i < n; ++i) out.insert({i, i});
  return out;
}

}  // namespace

TEST_CASE("pair_admissible matches the enumerated relation sets",
          "[pairing]") {
  const Manifest m = relations_manifest();

  const PairSet instance = self_pairs(12);
  PairSet temporal = instance;
  for (const auto& p : PairSet{{0, 1}, {4, 5}, {6, 7}}) temporal.insert(p);
  PairSet semantical = temporal;
  for (const auto& p : PairSet{{0, 3},
                               {1, 3},
                               {2, 3},
                               {6, 8},
                               {7, 8},
                               {6, 9},
                               {6, 10},
                               {7, 9},
                               {7, 10},
                               {9, 10},
                               {8, 11}}) {
    semantical.insert(p);
  }
  PairSet cls;
  for (int i = 0; i < 12; ++i) {
    for (int j = i; j < 12; ++j) {
      if ((i < 6) == (j < 6)) cls.insert({i, j});
    }
  }

  REQUIRE(admissible_pairs(m, PairingStrategy::Instance) == instance);
  REQUIRE(admissible_pairs(m, PairingStrategy::Temporal) == temporal);
  REQUIRE(admissible_pairs(m, PairingStrategy::Semantical) == semantical);
  REQUIRE(admissible_pairs(m, PairingStrategy::Class) == cls);
}

TEST_CASE("pairing strategies nest", "[pairing]") {
  WorldConfig wc;
  wc.num_identities = 4;
  wc.frames_per_video = 4;
  wc.feature_dim = 8;
  wc.fake_pairs_per_identity = 2;
  const Manifest m = generate_world(wc);
  for (const auto& a : m.records) {
    for (const auto& b : m.records) {
      if (pair_admissible(a, b, PairingStrategy::Instance)) {
        REQUIRE(pair_admissible(a, b, PairingStrategy::Temporal));
      }
      if (pair_admissible(a, b, PairingStrategy::Temporal)) {
        REQUIRE(pair_admissible(a, b, PairingStrategy::Semantical));
      }
      if (pair_admissible(a, b, PairingStrategy::Semantical)) {
        REQUIRE(pair_admissible(a, b, PairingStrategy::Class));
      }
    }
  }
}

TEST_CASE("pairing predicate known cases", "[pairing]") {
  const Manifest m = relations_manifest();
  // Two fakes, same source, different videos.
  REQUIRE(pair_admissible(m.records[6], m.records[8],
                          PairingStrategy::Semantical));
  // Same record twice.
  REQUIRE(pair_admissible(m.records[0], m.records[0],
                          PairingStrategy::Instance));
  // Real vs fake never pairs, even class-level.
  REQUIRE_FALSE(
      pair_admissible(m.records[0], m.records[6], PairingStrategy::Class));
  // Same identity across videos is semantical but not temporal.
  REQUIRE_FALSE(
      pair_admissible(m.records[0], m.records[3], PairingStrategy::Temporal));
  REQUIRE(pair_admissible(m.records[0], m.records[3],
                          PairingStrategy::Semantical));
}

TEST_CASE("manifest load validates schema", "[manifest]") {
  {
    std::istringstream in(
        R"({"sample_id":"a","label":"real","video_id":"v1","frame_index":0,"identity_id":"idA","features":[1,2]}
{"sample_id":"b","label":"real","video_id":"v1","frame_index":1,"identity_id":"idA","features":[3,4]}
{"sample_id":"c","label":"fake","video_id":"f1","frame_index":0,"source_video_id":"v1","target_identity_id":"idA","features":[5,6]}
{"sample_id":"d","label":"fake","video_id":"f1","frame_index":1,"source_video_id":"v1","target_identity_id":"idA","features":[7,8]}
)");
    const Manifest m = parse_manifest(in);
    REQUIRE(m.records.size() == 4);
    REQUIRE(m.feature_dim == 2);
  }
  {
    std::istringstream in(
        R"({"sample_id":"a","label":"fake","video_id":"f1","frame_index":0,"source_video_id":"v1","features":[1,2]}
)");
    REQUIRE_THROWS_AS(parse_manifest(in), SchemaError);
  }
  {
    std::istringstream in(
        R"({"sample_id":"a","label":"real","video_id":"v1","frame_index":0,"identity_id":"idA","features":[1,2]}
{"sample_id":"b","label":"real","video_id":"v1","frame_index":1,"identity_id":"idA","features":[1,2,3]}
)");
    REQUIRE_THROWS_AS(parse_manifest(in), DimensionMismatch);
  }
  {
    std::istringstream in("not json\n");
    REQUIRE_THROWS_AS(parse_manifest(in), ParseError);
  }
  {
    std::istringstream in(
        R"({"sample_id":"a","label":"real","video_id":"v1","frame_index":0,"identity_id":"idA","features":[1,2]}
{"sample_id":"b","label":"real","video_id":"v1","frame_index":0,"identity_id":"idA","features":[1,2]}
)");
    REQUIRE_THROWS_AS(parse_manifest(in), SchemaError);
  }
}

TEST_CASE("manifest round trips", "[manifest]") {
  const Manifest m = relations_manifest();
  const std::string text = manifest_to_jsonl(m);
  std::istringstream in(text);
  const Manifest again = parse_manifest(in);
  REQUIRE(manifest_to_jsonl(again) == text);
}

TEST_CASE("augment identity config is exact", "[augment]") {
  SeededRng rng(5);
  FeatureVec v{0.25, -1.5, 3.0};
  const FeatureVec out = augment(v, AugmentConfig::identity(), rng);
  REQUIRE(out == v);
}

TEST_CASE("augment is reproducible under a fixed seed", "[augment]") {
  AugmentConfig cfg;
  cfg.gaussian_sigma = 0.1;
  FeatureVec v{1.0, 2.0, 3.0};
  SeededRng a(77), b(77);
  REQUIRE(augment(v, cfg, a) == augment(v, cfg, b));
}

TEST_CASE("augment expectation matches the closed form", "[augment]") {
  AugmentConfig cfg;  // sigma 0.05, dropout 0.1, scale (0.9, 1.1)
  const FeatureVec v{1.0, -2.0, 0.5, 4.0};
  const int n = 10000;
  SeededRng rng(123);
  std::vector<double> sum(v.size(), 0.0), sq(v.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    const FeatureVec out = augment(v, cfg, rng);
    for (std::size_t d = 0; d < v.size(); ++d) {
      sum[d] += out[d];
      sq[d] += out[d] * out[d];
    }
  }
  // E[out_d] = mean(scale) * (1 - dropout) * v_d with mean(scale) = 1.
  for (std::size_t d = 0; d < v.size(); ++d) {
    const double mean = sum[d] / n;
    const double var = sq[d] / n - mean * mean;
    const double se = std::sqrt(var / n);
    REQUIRE(std::abs(mean - 0.9 * v[d]) < 3.0 * se);
  }
}

TEST_CASE("assemble_batch on a minimal manifest", "[batch]") {
  Manifest m;
  m.feature_dim = 2;
  m.records = {
      real_record("r0", "idA", "v1", 0),
      real_record("r1", "idA", "v2", 0),
      fake_record("f0", "fv1", "v1", "idA", 0),
      fake_record("f1", "fv2", "v2", "idA", 0),
  };
  SeededRng rng(3);
  const Batch b = assemble_batch(m, PairingStrategy::Instance, 2,
                                 AugmentConfig::identity(), rng);
  REQUIRE(b.views.size() == 4);
  REQUIRE(b.pair_count == 2);
  int reals = 0;
  for (const Label l : b.labels) reals += l == Label::Real;
  REQUIRE(reals == 2);
  for (int i = 0; i < 4; ++i) {
    REQUIRE(b.pair_index[b.pair_index[i]] == i);
    REQUIRE(b.pair_index[i] != i);
    REQUIRE(b.labels[b.pair_index[i]] == b.labels[i]);
  }
}

TEST_CASE("assemble_batch yields 2N views at batch size 128",
          "[batch]") {
  const Manifest m = generate_world(WorldConfig{});
  SeededRng rng(9);
  const Batch b =
      assemble_batch(m, PairingStrategy::Semantical, 128, AugmentConfig{}, rng);
  REQUIRE(b.views.size() == 256);
}

TEST_CASE("assemble_batch rejects undersized manifests", "[batch]") {
  Manifest m;
  m.feature_dim = 2;
  m.records = {real_record("r0", "idA", "v1", 0),
               fake_record("f0", "fv1", "v1", "idA", 0)};
  SeededRng rng(3);
  REQUIRE_THROWS_AS(
      assemble_batch(m, PairingStrategy::Instance, 4, AugmentConfig{}, rng),
      InsufficientData);
}

TEST_CASE("every realized pair is admissible", "[batch]") {
  WorldConfig wc;
  wc.num_identities = 4;
  wc.frames_per_video = 6;
  wc.feature_dim = 8;
  wc.fake_pairs_per_identity = 2;
  const Manifest m = generate_world(wc);
  SeededRng rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    const Batch b =
        assemble_batch(m, PairingStrategy::Semantical, 8, AugmentConfig{}, rng);
    int reals = 0;
    for (int p = 0; p < b.pair_count; ++p) {
      const auto& a = m.records[b.record_index[2 * p]];
      const auto& partner = m.records[b.record_index[2 * p + 1]];
      REQUIRE(pair_admissible(a, partner, PairingStrategy::Semantical));
    }
    for (int v = 0; v < 2 * b.pair_count; ++v) {
      reals += b.labels[v] == Label::Real;
      REQUIRE(b.pair_index[b.pair_index[v]] == v);
      REQUIRE(b.pair_index[v] != v);
    }
    REQUIRE(reals == b.pair_count);
  }
}

TEST_CASE("assemble_batch is byte-identical across runs", "[batch]") {
  const Manifest m = generate_world(WorldConfig{});
  SeededRng a(55), b(55);
  const Batch x =
      assemble_batch(m, PairingStrategy::Temporal, 16, AugmentConfig{}, a);
  const Batch y =
      assemble_batch(m, PairingStrategy::Temporal, 16, AugmentConfig{}, b);
  REQUIRE(x.views == y.views);
  REQUIRE(x.labels == y.labels);
  REQUIRE(x.record_index == y.record_index);
}
