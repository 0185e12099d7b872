// Acceptance gate. Prints one [PASS]/[FAIL] line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>

#include "hsicd/change_analysis.hpp"
#include "hsicd/ffcae.hpp"
#include "hsicd/file_util.hpp"
#include "hsicd/gradient_check.hpp"
#include "hsicd/metrics.hpp"
#include "hsicd/pipeline.hpp"
#include "hsicd/stats.hpp"
#include "test_support.hpp"

using namespace hsicd;
using namespace hsicd::testing;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

void tukey_reproduction() {
  const auto start = Clock::now();
  const auto r = tukey_hsd(published_rank_table(), kMetricCount, kPublishedMse, kPublishedQCritical);
  double worst = 0.0;
  int pairs = 0;
  bool partition = true;
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t j = i + 1; j < 8; ++j) {
      ++pairs;
      worst = std::max(worst, std::abs(r.q[i][j] - kPublishedTukeyQ[i][j]));
      if (r.significant[i][j] != (kPublishedTukeyQ[i][j] > kPublishedQCritical)) partition = false;
      // G (6) and H (7) differ significantly from every other method and not from each other.
      const bool involves_top = i >= 6 || j >= 6;
      const bool top_pair = i == 6 && j == 7;
      if (involves_top && r.significant[i][j] == top_pair) partition = false;
    }
  }
  const double elapsed = seconds_since(start);
  report(pairs == 28 && worst <= 0.02 && partition && elapsed < 1.0, "Tukey reproduction",
         fmt("%d pairs, max |dQ| %.4f (tol 0.02), significance partition %s, %.4f s", pairs, worst,
             partition ? "matches" : "differs", elapsed));
}

void mse_recovery() {
  const auto est = mse_from_ranks(published_rank_table(), kPublishedErrorDof);
  double brute = 0.0;
  for (std::size_t m = 0; m < 8; ++m) {
    double mean = 0.0;
    for (std::size_t k = 0; k < 5; ++k) mean += kPublishedAverageRanks[k][m] / 5.0;
    for (std::size_t k = 0; k < 5; ++k) brute += std::pow(kPublishedAverageRanks[k][m] - mean, 2);
  }
  const bool ok = std::abs(est.sse - kPublishedSse) <= 0.01 && std::abs(est.mse - kPublishedMse) <= 0.001 &&
                  std::abs(est.sse - brute) <= 1e-12;
  report(ok, "MSE recovery",
         fmt("SSE %.4f (brute force %.4f, target 5.775 +/- 0.01), MSE %.5f (target 0.1805 +/- 0.001)", est.sse, brute,
             est.mse));
}

void metric_suite() {
  auto r4 = [](double v) { return std::round(v * 1e4) / 1e4; };
  const auto r = compute_metrics({50, 10, 30, 10});
  const bool hand = r4(r.oa) == 0.8 && r4(r.kappa) == 0.5833 && r4(r.f_score) == 0.8333 && r4(r.pwc) == 20.0 &&
                    r4(r.fnr) == 0.25 && r4(r.tnr) == 0.75 && r4(r.dr) == 0.5625;
  const auto p = compute_metrics({40, 0, 60, 0});
  const bool perfect = p.oa == 1.0 && p.kappa == 1.0 && p.f_score == 1.0 && p.precision == 1.0 && p.recall == 1.0 &&
                       p.pwc == 0.0 && p.fnr == 0.0 && p.tnr == 1.0 && p.dr == 1.0;
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::uint64_t> count(0, 100000);
  int identity = 0;
  for (int i = 0; i < 1000; ++i) {
    ConfusionMatrix cm{count(rng), count(rng), count(rng), count(rng) + 1};
    const auto m = compute_metrics(cm);
    if (m.pwc == 100.0 * (1.0 - m.oa)) ++identity;
  }
  report(hand && perfect && identity == 1000, "Metric formula suite",
         fmt("OA %.4f kappa %.4f f %.4f PWC %.2f FNR %.4f TNR %.4f DR %.4f; perfect case %s; PWC identity %d/1000",
             r.oa, r.kappa, r.f_score, r.pwc, r.fnr, r.tnr, r.dr, perfect ? "ideal" : "not ideal", identity));
}

void gradient_correctness() {
  const auto start = Clock::now();
  const std::size_t bands = 4;
  auto model = FfcaeModel::initialize(FfcaeConfig{}, bands);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> bias(-0.1, 0.1);
  for (auto& layer : model.layers())
    for (auto& b : layer.biases()) b = bias(rng);
  Tensor x = random_tensor(8, 8, bands, 6, 0.0, 1.0);
  const auto target = random_tensor(8, 8, bands, 7, 0.0, 1.0);
  const auto grads = backprop(model, x, target, true);
  auto loss = [&] { return mse_loss(forward(model, x).output, target).loss; };

  // Every bias, and up to 400 weights per layer drawn without replacement.
  double worst = 0.0;
  std::string worst_where = "-";
  std::size_t checked = 0;
  auto run = [&](std::span<double> params, std::span<const double> analytic, std::size_t limit,
                 const std::string& where) {
    std::vector<std::size_t> idx(params.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    if (idx.size() > limit) idx.resize(limit);
    const auto res = check_gradient(params, analytic, idx, loss, 1e-5, 1e-4);
    checked += res.checked;
    if (res.max_relative_error > worst) {
      worst = res.max_relative_error;
      worst_where = where;
    }
  };
  for (std::size_t l = 0; l < kFfcaeLayerCount; ++l) {
    auto& layer = model.layers()[l];
    const std::string name = layer_name(static_cast<FfcaeLayer>(l));
    run(layer.weights(), grads.layers[l].weights, 400, name + " weights");
    run(layer.biases(), grads.layers[l].biases, layer.biases().size(), name + " biases");
  }
  run(x.values(), grads.input.values(), x.size(), "input");
  const double elapsed = seconds_since(start);
  report(worst < 1e-4 && elapsed < 30.0, "Gradient correctness",
         fmt("%zu parameters over 6 layers and the input, max relative error %.3g at %s (tol 1e-4), %.2f s", checked,
             worst, worst_where.c_str(), elapsed));
}

struct PipelineRun {
  std::string checkpoint;
  std::string map_ad, map_sam;
  std::string metrics_ad, metrics_sam;
  MetricReport report_ad, report_sam;
  double seconds_ad = 0.0;
  double seconds_sam = 0.0;
};

PipelineRun run_pipeline(const fs::path& data, const fs::path& out) {
  RunConfig config;
  config.image1 = data / "t1.json";
  config.image2 = data / "t2.json";
  config.ground_truth = data / "gt.pgm";
  config.output_dir = out;
  config.seed = 0;

  PipelineRun run;
  const auto t0 = Clock::now();
  const auto trained = cmd_train(config);
  const double train_seconds = seconds_since(t0);
  run.checkpoint = read_file(trained.checkpoint);
  for (auto op : {DifferenceOperator::ad, DifferenceOperator::sam}) {
    config.difference_operator = op;
    const auto t1 = Clock::now();
    const auto detected = cmd_detect(config, trained.checkpoint);
    const auto eval_dir = out / ("eval_" + to_string(op));
    const auto eval = cmd_evaluate(detected.change_map_path, config.ground_truth, eval_dir);
    const double seconds = train_seconds + seconds_since(t1);
    if (op == DifferenceOperator::ad) {
      run.map_ad = read_file(detected.change_map_path);
      run.metrics_ad = read_file(eval.csv);
      run.report_ad = eval.report;
      run.seconds_ad = seconds;
    } else {
      run.map_sam = read_file(detected.change_map_path);
      run.metrics_sam = read_file(eval.csv);
      run.report_sam = eval.report;
      run.seconds_sam = seconds;
    }
  }
  return run;
}

void end_to_end(const PipelineRun& run) {
  const auto& a = run.report_ad;
  const auto& s = run.report_sam;
  const bool ad_ok = a.kappa >= 0.8 && a.oa >= 0.95 && run.seconds_ad < 300.0;
  const bool sam_ok = s.kappa >= 0.8 && s.oa >= 0.95 && run.seconds_sam < 300.0;
  report(ad_ok && sam_ok, "End-to-end synthetic detection",
         fmt("AD kappa %.4f OA %.4f (%.1f s); SAM kappa %.4f OA %.4f (%.1f s); need kappa >= 0.8, OA >= 0.95, < 300 s",
             a.kappa, a.oa, run.seconds_ad, s.kappa, s.oa, run.seconds_sam));
}

void identity_pair(const fs::path& checkpoint, const HyperCube& image) {
  FfcaeConfig other;
  other.seed = 99;
  other.epochs = 1;
  const std::vector<std::pair<std::string, FfcaeModel>> models{
      {"trained", load_checkpoint(checkpoint)},
      {"untrained", FfcaeModel::initialize(other, image.bands())},
      {"one-epoch", train(normalize_bands(image), normalize_bands(image), other).model},
  };
  bool ok = true;
  std::string detail;
  for (const auto& [name, model] : models) {
    const auto f = extract_dfm(model, image, image);
    const auto sel = select_feature_maps(f.dfm1, f.dfm2);
    std::size_t changed = 0;
    for (auto op : {DifferenceOperator::ad, DifferenceOperator::sam}) {
      const auto di = difference(sel, op);
      if (!di.no_features()) ok = false;
      changed += decide_change(di, 0).changed_count();
    }
    if (!sel.empty() || changed != 0) ok = false;
    detail += fmt("%s model: %zu kept channels, %zu changed pixels; ", name.c_str(), sel.kept.size(), changed);
  }
  report(ok, "Identity-pair invariant", detail + "sentinel path required for AD and SAM");
}

void determinism(const PipelineRun& a, const PipelineRun& b) {
  const bool ckpt = a.checkpoint == b.checkpoint;
  const bool maps = a.map_ad == b.map_ad && a.map_sam == b.map_sam;
  const bool metrics = a.metrics_ad == b.metrics_ad && a.metrics_sam == b.metrics_sam;
  report(ckpt && maps && metrics, "Determinism",
         fmt("checkpoint %s (%zu bytes), change maps %s, metric CSVs %s", ckpt ? "identical" : "differ",
             a.checkpoint.size(), maps ? "identical" : "differ", metrics ? "identical" : "differ"));
}

void guarded(const char* name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(false, name, std::string("exception: ") + e.what());
  }
}

}  // namespace

int main() {
  guarded("Tukey reproduction", tukey_reproduction);
  guarded("MSE recovery", mse_recovery);
  guarded("Metric formula suite", metric_suite);
  guarded("Gradient correctness", gradient_correctness);

  const auto root = fs::temp_directory_path() / "hsicd_acceptance";
  fs::remove_all(root);
  SceneSpec spec;  // 64x64x32, change fraction 0.15, noise 0.02, seed 7
  std::optional<PipelineRun> first;
  guarded("End-to-end synthetic detection", [&] {
    cmd_synth(spec, root / "data");
    first = run_pipeline(root / "data", root / "run_a");
    end_to_end(*first);
  });
  guarded("Identity-pair invariant", [&] {
    const auto image = synthesize_pair(spec).image1;
    const auto ckpt = root / "run_a" / "model.ffcae";
    if (!fs::exists(ckpt)) throw std::runtime_error("no trained checkpoint available");
    identity_pair(ckpt, image);
  });
  guarded("Determinism", [&] {
    if (!first) throw std::runtime_error("first pipeline run did not complete");
    determinism(*first, run_pipeline(root / "data", root / "run_b"));
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
