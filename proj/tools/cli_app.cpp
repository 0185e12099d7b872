#include "cli_app.hpp"

#include <cstdio>
#include <iostream>
#include <optional>
#include <stdexcept>

#include "CLI11.hpp"
#include "hsicd/pipeline.hpp"

namespace hsicd {

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string image1;
  std::string image2;
  std::optional<std::size_t> epochs;
  std::string op;
  std::string ad_feature;
};

RunConfig resolve_run_config(const CommonFlags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  if (!f.image1.empty()) c.image1 = f.image1;
  if (!f.image2.empty()) c.image2 = f.image2;
  if (!f.out.empty()) c.output_dir = f.out;
  if (f.seed) c.seed = *f.seed;
  if (f.epochs) c.ffcae.epochs = *f.epochs;
  if (!f.op.empty()) c.difference_operator = difference_operator_from_string(f.op);
  if (f.ad_feature == "magnitude") c.ad_feature = ClusterFeature::magnitude;
  if (f.ad_feature == "vector") c.ad_feature = ClusterFeature::vector;
  return c;
}

void add_run_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration");
  cmd->add_option("--image1", f.image1, "Header of the first acquisition (.json)");
  cmd->add_option("--image2", f.image2, "Header of the second acquisition (.json)");
  cmd->add_option("--seed", f.seed, "Seed for initialization and clustering");
  cmd->add_option("--out", f.out, "Output directory");
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Unsupervised hyperspectral change detection with a feature-fusion convolutional autoencoder"};
  app.require_subcommand(1);

  CommonFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "Train the autoencoder on an image pair");
  add_run_flags(train_cmd, train_flags);
  train_cmd->add_option("--epochs", train_flags.epochs, "Training epochs (default 50)");

  CommonFlags detect_flags;
  std::string checkpoint;
  auto* detect_cmd = app.add_subcommand("detect", "Produce a change map from a trained checkpoint");
  add_run_flags(detect_cmd, detect_flags);
  detect_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file (default <out>/model.ffcae)");
  detect_cmd->add_option("--operator", detect_flags.op, "Difference operator")->check(CLI::IsMember({"ad", "sam"}));
  detect_cmd->add_option("--ad-feature", detect_flags.ad_feature, "AD clustering input")
      ->check(CLI::IsMember({"vector", "magnitude"}));

  std::string map_path, gt_path, eval_out = "out";
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a change map against ground truth");
  eval_cmd->add_option("--map", map_path, "Change map (PGM)")->required();
  eval_cmd->add_option("--gt", gt_path, "Ground truth (PGM)")->required();
  eval_cmd->add_option("--out", eval_out, "Output directory");

  RankOptions rank_opts;
  std::string scores, mse_flag = "auto", rank_out = "out";
  std::optional<double> n_flag;
  auto* rank_cmd = app.add_subcommand("rank", "Average ranks and Tukey HSD Q matrix from a score table");
  rank_cmd->add_option("--scores", scores, "Long-format score CSV")->required();
  rank_cmd->add_option("--n", n_flag, "Samples per group (default: metric count)");
  rank_cmd->add_option("--mse", mse_flag, "Mean-square error, or 'auto' to estimate from ranks");
  rank_cmd->add_option("--nu", rank_opts.nu, "Error degrees of freedom used by --mse auto");
  rank_cmd->add_option("--q-critical", rank_opts.q_critical, "Studentized range critical value");
  rank_cmd->add_option("--out", rank_out, "Output directory");

  SceneSpec scene;
  std::string synth_out = "out";
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic image pair with a planted change");
  synth_cmd->add_option("--height", scene.height);
  synth_cmd->add_option("--width", scene.width);
  synth_cmd->add_option("--bands", scene.bands);
  synth_cmd->add_option("--change-fraction", scene.change_fraction);
  synth_cmd->add_option("--noise-sigma", scene.noise_sigma);
  synth_cmd->add_option("--seed", scene.seed);
  synth_cmd->add_option("--out", synth_out, "Output directory");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train_cmd) {
      const auto config = resolve_run_config(train_flags);
      const auto out = cmd_train(config);
      const auto& last = out.history.back();
      std::printf("trained %zu epochs; final loss %.6g / %.6g\n", out.history.size(), last.image1, last.image2);
      std::printf("checkpoint: %s\nloss history: %s\n", out.checkpoint.c_str(), out.loss_csv.c_str());
    } else if (*detect_cmd) {
      const auto config = resolve_run_config(detect_flags);
      const auto ckpt = checkpoint.empty() ? config.output_dir / "model.ffcae" : std::filesystem::path(checkpoint);
      const auto out = cmd_detect(config, ckpt);
      std::printf("kept %zu feature maps; %zu of %zu pixels changed\n", out.kept_channels.size(),
                  out.change_map.changed_count(), out.change_map.labels.size());
      std::printf("change map: %s\n", out.change_map_path.c_str());
    } else if (*eval_cmd) {
      const auto out = cmd_evaluate(map_path, gt_path, eval_out);
      std::fputs(metrics_csv(out.report).c_str(), stdout);
    } else if (*rank_cmd) {
      rank_opts.scores = scores;
      rank_opts.output_dir = rank_out;
      rank_opts.n = n_flag;
      if (mse_flag != "auto") {
        try {
          rank_opts.mse = std::stod(mse_flag);
        } catch (const std::exception&) {
          throw std::invalid_argument("--mse must be a number or 'auto'");
        }
      }
      const auto out = cmd_rank(rank_opts);
      if (out.estimate) {
        std::printf("SSE %.4f, nu %.0f, MSE %.4f\n", out.estimate->sse, out.estimate->nu, out.estimate->mse);
      }
      std::fputs(rank_table_csv(out.ranks).c_str(), stdout);
      std::fputs(tukey_matrix_csv(out.tukey).c_str(), stdout);
    } else if (*synth_cmd) {
      const auto out = cmd_synth(scene, synth_out);
      std::printf("%s\n%s\n%s\n", out.image1.c_str(), out.image2.c_str(), out.ground_truth.c_str());
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace hsicd
