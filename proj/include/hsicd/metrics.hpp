#pragma once

#include <cstdint>
#include <string>

#include "hsicd/hsi_io.hpp"

namespace hsicd {

// Changed is the positive class.
struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

struct MetricReport {
  double oa = 0.0;
  double kappa = 0.0;
  double f_score = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double pwc = 0.0;  // percent
  double fnr = 0.0;
  double tnr = 0.0;
  double dr = 0.0;
  // Chance agreement, and its two class terms.
  double ca = 0.0;
  double ca_unchanged = 0.0;
  double ca_changed = 0.0;
};

ConfusionMatrix confusion(const ChangeMap& map, const GroundTruth& truth);

// OA, kappa (via chance agreement), precision, recall, f-score, PWC, and the
// detection rate DR = (1 - FNR) * TNR with FNR = FN / (FN + TN) and
// TNR = TN / (FP + TN).
MetricReport compute_metrics(const ConfusionMatrix& cm);

// FN / (FN + TP), the conventional miss rate. Diagnostic only; the report's
// FNR uses FN / (FN + TN).
double miss_rate(const ConfusionMatrix& cm);

// Column names and one row, four decimals.
std::string metrics_csv(const MetricReport& report);
std::string metrics_json(const MetricReport& report, const ConfusionMatrix& cm);

}  // namespace hsicd
