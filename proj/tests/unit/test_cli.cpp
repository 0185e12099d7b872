#include <cstdio>
#include <fstream>

#include "cli_app.hpp"
#include "doctest.h"
#include "hsicd/file_util.hpp"
#include "hsicd/hsi_io.hpp"
#include "hsicd/pipeline.hpp"
#include "test_support.hpp"

using namespace hsicd;
using namespace hsicd::testing;
namespace fs = std::filesystem;

namespace {

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "hsicd");
  return run_cli(args);
}

// Small scene so the full pipeline stays quick.
void synth(const fs::path& dir, const std::string& seed = "3") {
  REQUIRE(cli({"synth", "--height", "24", "--width", "24", "--bands", "6", "--seed", seed, "--out", dir.string()}) ==
          0);
}

struct RunArtifacts {
  std::string checkpoint;
  std::string map;
  std::string metrics;
};

RunArtifacts full_run(const fs::path& data, const fs::path& out, const std::string& op) {
  const auto i1 = (data / "t1.json").string();
  const auto i2 = (data / "t2.json").string();
  REQUIRE(cli({"train", "--image1", i1, "--image2", i2, "--epochs", "5", "--seed", "1", "--out", out.string()}) == 0);
  REQUIRE(cli({"detect", "--image1", i1, "--image2", i2, "--seed", "1", "--operator", op, "--out", out.string()}) == 0);
  const auto map = out / ("change_map_" + op + ".pgm");
  REQUIRE(cli({"evaluate", "--map", map.string(), "--gt", (data / "gt.pgm").string(), "--out", out.string()}) == 0);
  return {read_file(out / "model.ffcae"), read_file(map), read_file(out / "metrics.csv")};
}

}  // namespace

TEST_CASE("synth writes a loadable pair and ground truth") {
  const auto dir = scratch_dir("cli_synth");
  synth(dir);
  const auto a = load_cube(dir / "t1.json");
  CHECK(a.height() == 24);
  CHECK(a.bands() == 6);
  CHECK(load_ground_truth(dir / "gt.pgm", {24, 24}).changed_count() > 0);
}

TEST_CASE("train, detect and evaluate end to end") {
  const auto data = scratch_dir("cli_data");
  synth(data);
  const auto out = scratch_dir("cli_run");
  const auto run = full_run(data, out, "ad");
  CHECK(run.checkpoint.rfind("FFCAE1\n", 0) == 0);
  CHECK(run.map.rfind("P5", 0) == 0);
  CHECK(run.metrics.rfind("oa,kappa,f_score,precision,recall,pwc,fnr,tnr,dr\n", 0) == 0);
  CHECK(fs::exists(out / "loss.csv"));
  CHECK(fs::exists(out / "kept_channels.csv"));
  CHECK(fs::exists(out / "timing_ad.csv"));
  CHECK(fs::exists(out / "metrics.json"));
}

TEST_CASE("repeated runs are byte-identical") {
  const auto data = scratch_dir("cli_det_data");
  synth(data);
  const auto a = full_run(data, scratch_dir("cli_det_a"), "sam");
  const auto b = full_run(data, scratch_dir("cli_det_b"), "sam");
  CHECK(a.checkpoint == b.checkpoint);
  CHECK(a.map == b.map);
  CHECK(a.metrics == b.metrics);
}

TEST_CASE("identical images give an all-unchanged map") {
  const auto data = scratch_dir("cli_same");
  synth(data);
  const auto out = scratch_dir("cli_same_out");
  const auto i1 = (data / "t1.json").string();
  REQUIRE(cli({"train", "--image1", i1, "--image2", i1, "--epochs", "3", "--out", out.string()}) == 0);
  for (const std::string op : {"ad", "sam"}) {
    REQUIRE(cli({"detect", "--image1", i1, "--image2", i1, "--operator", op, "--out", out.string()}) == 0);
    const auto map = load_change_map(out / ("change_map_" + op + ".pgm"));
    CHECK(map.changed_count() == 0);
  }
  // Scored against itself-as-truth with no changes, the map is perfect.
  save_pgm(GroundTruth{24, 24, std::vector<std::uint8_t>(24 * 24, 0)}, out / "none.pgm");
  REQUIRE(cli({"evaluate", "--map", (out / "change_map_ad.pgm").string(), "--gt", (out / "none.pgm").string(), "--out",
               out.string()}) == 0);
  CHECK(read_file(out / "metrics.csv").find("\n1.0000,1.0000,") != std::string::npos);
}

TEST_CASE("config file drives a run") {
  const auto data = scratch_dir("cli_cfg");
  synth(data);
  {
    std::ofstream cfg(data / "run.json");
    cfg << R"({"image1": "t1.json", "image2": "t2.json", "seed": 4, "operator": "sam",
               "output_dir": "results", "ffcae": {"epochs": 2, "f3": 4}})";
  }
  const auto cfg = (data / "run.json").string();
  REQUIRE(cli({"train", "--config", cfg}) == 0);
  REQUIRE(cli({"detect", "--config", cfg}) == 0);
  CHECK(fs::exists(data / "results" / "model.ffcae"));
  CHECK(fs::exists(data / "results" / "change_map_sam.pgm"));
}

TEST_CASE("rank on the published scores") {
  const auto dir = scratch_dir("cli_rank");
  write_file_atomic(dir / "scores.csv", published_scores_csv());
  REQUIRE(cli({"rank", "--scores", (dir / "scores.csv").string(), "--mse", "0.1805", "--out", dir.string()}) == 0);
  const auto sig = read_file(dir / "significance.csv");
  CHECK(sig.rfind("method_a,method_b,q,q_critical,significant\n", 0) == 0);
  CHECK(sig.find("\nG,H,") != std::string::npos);
  CHECK(read_file(dir / "ranks.csv").rfind("metric,A,B,C,D,E,F,G,H\n", 0) == 0);
  CHECK(fs::exists(dir / "tukey_q.csv"));
  REQUIRE(cli({"rank", "--scores", (dir / "scores.csv").string(), "--out", dir.string()}) == 0);
  CHECK(cli({"rank", "--scores", (dir / "scores.csv").string(), "--mse", "lots", "--out", dir.string()}) == 2);
}

TEST_CASE("errors map to exit codes") {
  const auto dir = scratch_dir("cli_errors");
  CHECK(cli({}) == 2);
  CHECK(cli({"frobnicate"}) == 2);
  CHECK(cli({"synth", "--change-fraction", "1.5", "--out", dir.string()}) == 2);
  CHECK(cli({"detect", "--operator", "cva"}) == 2);
  const auto missing = (dir / "nope.json").string();
  CHECK(cli({"train", "--image1", missing, "--image2", missing, "--out", dir.string()}) == 1);
  CHECK(cli({"evaluate", "--map", missing, "--gt", missing, "--out", dir.string()}) == 1);
  CHECK(cli({"detect", "--image1", missing, "--image2", missing, "--checkpoint", missing}) == 1);
}

TEST_CASE("a missing input is named in the error") {
  RunConfig config;
  config.image1 = scratch_dir("cli_missing") / "absent.json";
  config.image2 = config.image1;
  try {
    cmd_train(config);
    FAIL("expected an exception");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("absent.json") != std::string::npos);
  }
}
