#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hsicd/change_analysis.hpp"
#include "hsicd/ffcae.hpp"
#include "hsicd/hsi_io.hpp"
#include "hsicd/metrics.hpp"
#include "hsicd/stats.hpp"

namespace hsicd {

// One end-to-end run. `seed` drives both network initialization and k-means.
struct RunConfig {
  std::filesystem::path image1;
  std::filesystem::path image2;
  std::filesystem::path ground_truth;  // optional
  FfcaeConfig ffcae;
  DifferenceOperator difference_operator = DifferenceOperator::ad;
  ClusterFeature ad_feature = ClusterFeature::vector;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
};

// JSON document; relative paths resolve against the file's directory.
//   {"image1": "...", "image2": "...", "ground_truth": "...", "operator": "ad",
//    "ad_feature": "vector", "seed": 0, "output_dir": "...",
//    "ffcae": {"n1": 3, "n2": 5, "n3": 3, "f1": 8, "f2": 8, "f3": 16,
//              "epochs": 50, "learning_rate": 0.001}}
RunConfig load_run_config(const std::filesystem::path& path);

struct TrainOutputs {
  std::filesystem::path checkpoint;
  std::filesystem::path loss_csv;
  std::vector<EpochLoss> history;
};
TrainOutputs cmd_train(const RunConfig& config);

struct DetectOutputs {
  std::filesystem::path change_map_path;
  std::filesystem::path selection_csv;
  std::filesystem::path timing_csv;
  ChangeMap change_map;
  std::vector<std::size_t> kept_channels;
};
DetectOutputs cmd_detect(const RunConfig& config, const std::filesystem::path& checkpoint);

struct EvaluateOutputs {
  std::filesystem::path csv;
  std::filesystem::path json;
  ConfusionMatrix confusion;
  MetricReport report;
};
EvaluateOutputs cmd_evaluate(const std::filesystem::path& map_path, const std::filesystem::path& truth_path,
                             const std::filesystem::path& output_dir);

struct RankOptions {
  std::filesystem::path scores;
  std::optional<double> n;    // defaults to the metric count
  std::optional<double> mse;  // nullopt = estimate from the rank table
  double nu = kDefaultErrorDof;
  double q_critical = kDefaultQCritical;
  std::filesystem::path output_dir = "out";
};

struct RankOutputs {
  std::filesystem::path ranks_csv;
  std::filesystem::path tukey_csv;
  std::filesystem::path significance_csv;
  RankTable ranks;
  TukeyResult tukey;
  std::optional<RankErrorEstimate> estimate;
};
RankOutputs cmd_rank(const RankOptions& options);

struct SynthOutputs {
  std::filesystem::path image1;
  std::filesystem::path image2;
  std::filesystem::path ground_truth;
};
SynthOutputs cmd_synth(const SceneSpec& spec, const std::filesystem::path& output_dir);

}  // namespace hsicd
