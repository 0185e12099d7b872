#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace hsicd {

enum class Orientation { higher_better, lower_better };

// PWC and error-rate style metrics (pwc, fnr, miss_rate, error) rank
// ascending; everything else descending.
Orientation default_orientation(const std::string& metric);

// Scores of competing methods, per dataset and metric.
class ScoreCube {
 public:
  ScoreCube(std::vector<std::string> methods, std::vector<std::string> datasets,
            std::vector<std::string> metrics, std::vector<Orientation> orientation);

  // Long-format CSV with header `method,dataset,metric,value[,orientation]`.
  // Names keep first-appearance order. Orientation is "higher" or "lower";
  // when absent the metric name decides.
  static ScoreCube from_csv(const std::string& text);

  void set(std::size_t method, std::size_t dataset, std::size_t metric, double value);
  std::optional<double> get(std::size_t method, std::size_t dataset, std::size_t metric) const;
  bool complete() const;

  const std::vector<std::string>& methods() const { return methods_; }
  const std::vector<std::string>& datasets() const { return datasets_; }
  const std::vector<std::string>& metrics() const { return metrics_; }
  Orientation orientation(std::size_t metric) const { return orientation_[metric]; }

 private:
  std::size_t index(std::size_t method, std::size_t dataset, std::size_t metric) const {
    return (method * datasets_.size() + dataset) * metrics_.size() + metric;
  }

  std::vector<std::string> methods_;
  std::vector<std::string> datasets_;
  std::vector<std::string> metrics_;
  std::vector<Orientation> orientation_;
  std::vector<std::optional<double>> scores_;
};

// Average rank of each method under each metric (rows metrics, columns methods).
struct RankTable {
  std::vector<std::string> methods;
  std::vector<std::string> metrics;
  std::vector<std::vector<double>> avg_rank;  // [metric][method]

  // Mean over metrics of a method's average ranks.
  std::vector<double> method_means() const;
};

// 1 = best; exact ties share the mean of the ranks they span.
std::vector<double> fractional_ranks(const std::vector<double>& scores, Orientation orientation);

RankTable rank_methods(const ScoreCube& cube);

struct RankErrorEstimate {
  double sse = 0.0;
  double nu = 0.0;
  double mse = 0.0;
};

inline constexpr double kDefaultErrorDof = 32.0;
inline constexpr double kDefaultQCritical = 4.5209;

// SSE is the sum, over methods, of squared deviations of each per-metric rank
// from that method's mean rank; MSE = SSE / nu.
RankErrorEstimate mse_from_ranks(const RankTable& ranks, double nu = kDefaultErrorDof);

struct TukeyResult {
  std::vector<std::string> methods;
  std::vector<double> mean_rank;
  std::vector<std::vector<double>> q;
  std::vector<std::vector<bool>> significant;
  double q_critical = 0.0;
  double n = 0.0;
  double mse = 0.0;
};

// Q[i][j] = |mean_i - mean_j| * sqrt(n / mse); significant iff Q > q_critical.
TukeyResult tukey_hsd(const RankTable& ranks, double n, double mse, double q_critical = kDefaultQCritical);

std::string rank_table_csv(const RankTable& ranks);
std::string tukey_matrix_csv(const TukeyResult& result);
std::string significance_report_csv(const TukeyResult& result);

}  // namespace hsicd
