#include "hsicd/metrics.hpp"

#include <cstdio>
#include <stdexcept>

#include "json.hpp"

namespace hsicd {

ConfusionMatrix confusion(const ChangeMap& map, const GroundTruth& truth) {
  if (map.height != truth.height || map.width != truth.width || map.labels.size() != truth.labels.size()) {
    throw std::invalid_argument("change map and ground truth differ in dimensions");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < map.labels.size(); ++i) {
    const bool predicted = map.labels[i] != 0;
    const bool actual = truth.labels[i] != 0;
    if (predicted && actual) {
      ++cm.tp;
    } else if (predicted) {
      ++cm.fp;
    } else if (actual) {
      ++cm.fn;
    } else {
      ++cm.tn;
    }
  }
  return cm;
}

MetricReport compute_metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) {
    throw std::invalid_argument("confusion matrix is empty");
  }
  const double tp = static_cast<double>(cm.tp);
  const double fp = static_cast<double>(cm.fp);
  const double tn = static_cast<double>(cm.tn);
  const double fn = static_cast<double>(cm.fn);
  const double n = static_cast<double>(cm.total());

  MetricReport r;
  r.oa = (tp + tn) / n;
  r.ca_unchanged = (tp + fp) * (tp + fn) / (n * n);
  r.ca_changed = (tn + fn) * (tn + fp) / (n * n);
  r.ca = r.ca_unchanged + r.ca_changed;
  if (r.ca < 1.0) {
    r.kappa = (r.oa - r.ca) / (1.0 - r.ca);
  } else {
    r.kappa = r.oa == 1.0 ? 1.0 : 0.0;
  }

  // Nothing predicted changed: precise only if nothing was there to find.
  r.precision = cm.tp + cm.fp > 0 ? tp / (tp + fp) : (cm.fn == 0 ? 1.0 : 0.0);
  r.recall = cm.tp + cm.fn > 0 ? tp / (tp + fn) : 1.0;
  r.f_score = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;

  // Same quantity as 100 * (FP + FN) / N, written so PWC == 100 * (1 - OA) holds exactly.
  r.pwc = 100.0 * (1.0 - r.oa);
  r.fnr = cm.fn + cm.tn > 0 ? fn / (fn + tn) : 0.0;
  r.tnr = cm.fp + cm.tn > 0 ? tn / (fp + tn) : 1.0;
  r.dr = (1.0 - r.fnr) * r.tnr;
  return r;
}

double miss_rate(const ConfusionMatrix& cm) {
  const auto denom = cm.fn + cm.tp;
  return denom > 0 ? static_cast<double>(cm.fn) / static_cast<double>(denom) : 0.0;
}

std::string metrics_csv(const MetricReport& r) {
  char row[256];
  std::snprintf(row, sizeof row, "%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f\n", r.oa, r.kappa,
                r.f_score, r.precision, r.recall, r.pwc, r.fnr, r.tnr, r.dr);
  return std::string("oa,kappa,f_score,precision,recall,pwc,fnr,tnr,dr\n") + row;
}

std::string metrics_json(const MetricReport& r, const ConfusionMatrix& cm) {
  const nlohmann::json j = {
      {"confusion", {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}}},
      {"oa", r.oa},
      {"kappa", r.kappa},
      {"f_score", r.f_score},
      {"precision", r.precision},
      {"recall", r.recall},
      {"pwc", r.pwc},
      {"fnr", r.fnr},
      {"tnr", r.tnr},
      {"dr", r.dr},
      {"chance_agreement", r.ca},
      {"miss_rate", miss_rate(cm)},
  };
  return j.dump(2) + "\n";
}

}  // namespace hsicd
