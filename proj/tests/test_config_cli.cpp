#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <filesystem>
#include <fstream>

#include "realcl/cli.hpp"
#include "realcl/config.hpp"

using namespace realcl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("realcl_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("config round-trips through serialization", "[config]") {
  const RunConfig defaults = config_from_json(nlohmann::json::object());
  const std::string once = config_to_string(defaults);
  const RunConfig reparsed = config_from_json(parse_config_text(once));
  REQUIRE(config_to_string(reparsed) == once);
}

TEST_CASE("unknown config keys are rejected with their path", "[config]") {
  const auto j = parse_config_text(R"({"train": {"learnig_rate": 0.1}})");
  try {
    config_from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE(std::string(e.what()).find("train.learnig_rate") !=
            std::string::npos);
  }
  REQUIRE_THROWS_AS(config_from_json(parse_config_text(R"({"wrld": {}})")),
                    ConfigError);
}

TEST_CASE("config type errors carry their path", "[config]") {
  const auto j = parse_config_text(R"({"train": {"batch_size": "many"}})");
  REQUIRE_THROWS_AS(config_from_json(j), ConfigError);
}

TEST_CASE("set overrides reach nested keys", "[config]") {
  auto j = parse_config_text("{}");
  apply_override(j, "train.batch_size=16");
  apply_override(j, "fusion.mode=off");
  apply_override(j, "loss.literal_normalizer=true");
  apply_override(j, "train.encoder_dims=[8,4]");
  const RunConfig cfg = config_from_json(j);
  REQUIRE(cfg.train.batch_size == 16);
  REQUIRE(cfg.train.fusion_mode == FusionMode::Off);
  REQUIRE(cfg.train.loss.literal_normalizer);
  REQUIRE(cfg.train.encoder_dims == std::vector<int>{8, 4});
  REQUIRE_THROWS_AS(apply_override(j, "no_equals_sign"), ConfigError);
}

TEST_CASE("cli synth-train-eval round trip", "[cli]") {
  TempDir dir;
  // A small world keeps this test quick.
  write_file(dir.file("run.json"), R"({
    "world": {"num_identities": 4, "frames_per_video": 6, "feature_dim": 16,
               "fake_pairs_per_identity": 2},
    "train": {"stage1_epochs": 2, "stage2_epochs": 2, "batch_size": 8,
               "encoder_dims": [24, 16], "projector_dims": [16, 8]}
  })");

  REQUIRE(cli::dispatch({"synth", "--config", dir.file("run.json"), "--out",
                         dir.file("m.jsonl")}) == 0);
  const Manifest m = load_manifest(dir.file("m.jsonl"));
  REQUIRE(m.feature_dim == 16);

  REQUIRE(cli::dispatch({"train", "--config", dir.file("run.json"),
                         "--manifest", dir.file("m.jsonl"), "--out",
                         dir.file("ckpt.json")}) == 0);
  const Checkpoint ck = load_checkpoint(dir.file("ckpt.json"));
  REQUIRE(ck.meta.at("strategy") == "semantical");

  REQUIRE(cli::dispatch({"eval", "--ckpt", dir.file("ckpt.json"), "--manifest",
                         dir.file("m.jsonl"), "--compression", "none", "--out",
                         dir.file("r1.csv")}) == 0);
  REQUIRE(cli::dispatch({"eval", "--ckpt", dir.file("ckpt.json"), "--manifest",
                         dir.file("m.jsonl"), "--compression", "none", "--out",
                         dir.file("r2.csv")}) == 0);
  REQUIRE(read_file(dir.file("r1.csv")) == read_file(dir.file("r2.csv")));
  REQUIRE(read_file(dir.file("r1.csv")).rfind("cell_id,", 0) == 0);
}

TEST_CASE("cli pairs prints self pairs under the instance strategy",
          "[cli]") {
  TempDir dir;
  write_file(dir.file("m.jsonl"),
             R"({"sample_id":"a","label":"real","video_id":"v1","frame_index":0,"identity_id":"i","features":[1,0]}
{"sample_id":"b","label":"real","video_id":"v1","frame_index":1,"identity_id":"i","features":[0,1]}
{"sample_id":"c","label":"fake","video_id":"f1","frame_index":0,"source_video_id":"v1","target_identity_id":"i","features":[1,1]}
)");
  std::ostringstream captured;
  auto* old = std::cout.rdbuf(captured.rdbuf());
  const int code = cli::dispatch({"pairs", "--manifest", dir.file("m.jsonl"),
                                  "--strategy", "instance", "--limit", "3"});
  std::cout.rdbuf(old);
  REQUIRE(code == 0);
  REQUIRE(captured.str() == "a\ta\nb\tb\nc\tc\n");
}

TEST_CASE("cli beta-test and gradcheck succeed", "[cli][slow]") {
  TempDir dir;
  write_file(dir.file("run.json"), "{}");
  REQUIRE(cli::dispatch({"beta-test", "--samples", "20000"}) == 0);
  REQUIRE(cli::dispatch({"gradcheck", "--config", dir.file("run.json")}) == 0);
}

TEST_CASE("cli maps failures to exit codes", "[cli]") {
  TempDir dir;
  REQUIRE(cli::dispatch({"nonsense"}) == 1);
  REQUIRE(cli::dispatch({"synth", "--config", dir.file("missing.json"),
                         "--out", dir.file("m.jsonl")}) == 1);
  write_file(dir.file("bad.json"), R"({"world": {"feature_dim": 1}})");
  REQUIRE(cli::dispatch({"synth", "--config", dir.file("bad.json"), "--out",
                         dir.file("m.jsonl")}) == 1);
  REQUIRE(cli::dispatch({"--help"}) == 0);
  REQUIRE(cli::dispatch({"synth", "--help"}) == 0);
}

TEST_CASE("REALCL_SEED overrides the train seed", "[cli]") {
  TempDir dir;
  write_file(dir.file("run.json"), R"({"train": {"seed": 5}})");
  ::setenv("REALCL_SEED", "99", 1);
  const RunConfig cfg = cli::detail::load_run_config(dir.file("run.json"), {});
  ::unsetenv("REALCL_SEED");
  REQUIRE(cfg.train.seed == 99);
  const RunConfig plain = cli::detail::load_run_config(dir.file("run.json"), {});
  REQUIRE(plain.train.seed == 5);
}

TEST_CASE("ablate writes the results file", "[cli][slow]") {
  TempDir dir;
  write_file(dir.file("run.json"), R"({
    "world": {"num_identities": 4, "frames_per_video": 6, "feature_dim": 16,
               "fake_pairs_per_identity": 2},
    "train": {"stage1_epochs": 1, "stage2_epochs": 1, "batch_size": 8,
               "encoder_dims": [24, 16], "projector_dims": [16, 8]}
  })");
  REQUIRE(cli::dispatch({"ablate", "--config", dir.file("run.json"), "--axes",
                         "negmode", "--seeds", "1", "--out",
                         dir.file("res.csv")}) == 0);
  const std::string csv = read_file(dir.file("res.csv"));
  // (baseline + as_fakes + margin) x 1 seed x 3 levels + header.
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 1 + 9);
}
