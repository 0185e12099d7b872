#include "hsicd/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <stdexcept>

#include "hsicd/file_util.hpp"
#include "json.hpp"

namespace hsicd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

HyperCube load_input(const fs::path& path, const char* role) {
  if (path.empty()) {
    throw std::runtime_error(std::string("no ") + role + " given");
  }
  if (!fs::exists(path)) {
    throw std::runtime_error(std::string(role) + " not found: " + path.string());
  }
  try {
    return load_cube(path);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(role) + " " + path.string() + ": " + e.what());
  }
}

void require_same_grid(const HyperCube& a, const HyperCube& b, const RunConfig& config) {
  if (a.height() != b.height() || a.width() != b.width() || a.bands() != b.bands()) {
    throw std::runtime_error("input images differ: " + config.image1.string() + " is " +
                             std::to_string(a.height()) + "x" + std::to_string(a.width()) + "x" +
                             std::to_string(a.bands()) + ", " + config.image2.string() + " is " +
                             std::to_string(b.height()) + "x" + std::to_string(b.width()) + "x" +
                             std::to_string(b.bands()));
  }
}

FfcaeConfig with_seed(FfcaeConfig c, std::uint64_t seed) {
  c.seed = seed;
  return c;
}

}  // namespace

RunConfig load_run_config(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed config " + path.string() + ": " + e.what());
  }
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  RunConfig c;
  try {
    if (doc.contains("image1")) c.image1 = resolve(doc["image1"].get<std::string>());
    if (doc.contains("image2")) c.image2 = resolve(doc["image2"].get<std::string>());
    if (doc.contains("ground_truth")) c.ground_truth = resolve(doc["ground_truth"].get<std::string>());
    if (doc.contains("output_dir")) c.output_dir = resolve(doc["output_dir"].get<std::string>());
    if (doc.contains("operator")) {
      c.difference_operator = difference_operator_from_string(doc["operator"].get<std::string>());
    }
    if (doc.contains("ad_feature")) {
      const auto f = doc["ad_feature"].get<std::string>();
      if (f == "vector") {
        c.ad_feature = ClusterFeature::vector;
      } else if (f == "magnitude") {
        c.ad_feature = ClusterFeature::magnitude;
      } else {
        throw std::invalid_argument("ad_feature must be vector or magnitude");
      }
    }
    if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("ffcae")) {
      const auto& f = doc["ffcae"];
      c.ffcae.n1 = f.value("n1", c.ffcae.n1);
      c.ffcae.n2 = f.value("n2", c.ffcae.n2);
      c.ffcae.n3 = f.value("n3", c.ffcae.n3);
      c.ffcae.f1 = f.value("f1", c.ffcae.f1);
      c.ffcae.f2 = f.value("f2", c.ffcae.f2);
      c.ffcae.f3 = f.value("f3", c.ffcae.f3);
      c.ffcae.epochs = f.value("epochs", c.ffcae.epochs);
      c.ffcae.learning_rate = f.value("learning_rate", c.ffcae.learning_rate);
    }
  } catch (const json::exception& e) {
    throw std::runtime_error("invalid config " + path.string() + ": " + e.what());
  }
  return c;
}

TrainOutputs cmd_train(const RunConfig& config) {
  const HyperCube image1 = load_input(config.image1, "image1");
  const HyperCube image2 = load_input(config.image2, "image2");
  require_same_grid(image1, image2, config);

  auto result = train(normalize_bands(image1), normalize_bands(image2), with_seed(config.ffcae, config.seed));

  TrainOutputs out;
  out.checkpoint = config.output_dir / "model.ffcae";
  out.loss_csv = config.output_dir / "loss.csv";
  save_checkpoint(result.model, out.checkpoint);
  write_file_atomic(out.loss_csv, loss_history_csv(result.history));
  out.history = std::move(result.history);
  return out;
}

DetectOutputs cmd_detect(const RunConfig& config, const fs::path& checkpoint) {
  using clock = std::chrono::steady_clock;
  std::vector<std::pair<std::string, double>> timings;
  auto stage = clock::now();
  auto lap = [&](const char* name) {
    const auto now = clock::now();
    timings.emplace_back(name, std::chrono::duration<double>(now - stage).count());
    stage = now;
  };

  if (!fs::exists(checkpoint)) {
    throw std::runtime_error("checkpoint not found: " + checkpoint.string());
  }
  const FfcaeModel model = load_checkpoint(checkpoint);
  const HyperCube image1 = load_input(config.image1, "image1");
  const HyperCube image2 = load_input(config.image2, "image2");
  require_same_grid(image1, image2, config);
  if (image1.bands() != model.bands()) {
    throw std::runtime_error("checkpoint " + checkpoint.string() + " was trained on " +
                             std::to_string(model.bands()) + " bands but the inputs have " +
                             std::to_string(image1.bands()));
  }
  lap("load");

  const auto features = extract_dfm(model, image1, image2);
  lap("extract_dfm");
  const auto selection = select_feature_maps(features.dfm1, features.dfm2);
  lap("select_feature_maps");
  const auto di = difference(selection, config.difference_operator);
  lap("difference");
  ChangeMap map = decide_change(di, config.seed, config.ad_feature);
  lap("decide_change");

  DetectOutputs out;
  out.change_map_path = config.output_dir / ("change_map_" + to_string(config.difference_operator) + ".pgm");
  out.selection_csv = config.output_dir / "kept_channels.csv";
  out.timing_csv = config.output_dir / ("timing_" + to_string(config.difference_operator) + ".csv");
  save_pgm(map, out.change_map_path);
  write_file_atomic(out.selection_csv, selection_csv(selection));

  std::string timing = "stage,seconds\n";
  double total = 0.0;
  char line[96];
  for (const auto& [name, seconds] : timings) {
    std::snprintf(line, sizeof line, "%s,%.6f\n", name.c_str(), seconds);
    timing += line;
    total += seconds;
  }
  std::snprintf(line, sizeof line, "total,%.6f\n", total);
  timing += line;
  write_file_atomic(out.timing_csv, timing);

  out.change_map = std::move(map);
  out.kept_channels = selection.kept;
  return out;
}

EvaluateOutputs cmd_evaluate(const fs::path& map_path, const fs::path& truth_path, const fs::path& output_dir) {
  const ChangeMap map = load_change_map(map_path);
  const GroundTruth truth = load_ground_truth(truth_path);
  if (map.height != truth.height || map.width != truth.width) {
    throw std::runtime_error("dimension mismatch: " + map_path.string() + " is " + std::to_string(map.height) +
                             "x" + std::to_string(map.width) + ", " + truth_path.string() + " is " +
                             std::to_string(truth.height) + "x" + std::to_string(truth.width));
  }
  EvaluateOutputs out;
  out.confusion = confusion(map, truth);
  out.report = compute_metrics(out.confusion);
  out.csv = output_dir / "metrics.csv";
  out.json = output_dir / "metrics.json";
  write_file_atomic(out.csv, metrics_csv(out.report));
  write_file_atomic(out.json, metrics_json(out.report, out.confusion));
  return out;
}

RankOutputs cmd_rank(const RankOptions& options) {
  const ScoreCube cube = ScoreCube::from_csv(read_file(options.scores));
  RankOutputs out;
  out.ranks = rank_methods(cube);
  double mse = 0.0;
  if (options.mse) {
    mse = *options.mse;
  } else {
    out.estimate = mse_from_ranks(out.ranks, options.nu);
    mse = out.estimate->mse;
  }
  const double n = options.n.value_or(static_cast<double>(out.ranks.metrics.size()));
  out.tukey = tukey_hsd(out.ranks, n, mse, options.q_critical);

  out.ranks_csv = options.output_dir / "ranks.csv";
  out.tukey_csv = options.output_dir / "tukey_q.csv";
  out.significance_csv = options.output_dir / "significance.csv";
  write_file_atomic(out.ranks_csv, rank_table_csv(out.ranks));
  write_file_atomic(out.tukey_csv, tukey_matrix_csv(out.tukey));
  write_file_atomic(out.significance_csv, significance_report_csv(out.tukey));
  return out;
}

SynthOutputs cmd_synth(const SceneSpec& spec, const fs::path& output_dir) {
  const auto pair = synthesize_pair(spec);
  SynthOutputs out{output_dir / "t1.json", output_dir / "t2.json", output_dir / "gt.pgm"};
  save_cube(pair.image1, out.image1);
  save_cube(pair.image2, out.image2);
  save_pgm(pair.truth, out.ground_truth);
  return out;
}

}  // namespace hsicd
