#include "hsicd/stats.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace hsicd {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::size_t intern(std::vector<std::string>& names, const std::string& name) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it != names.end()) return static_cast<std::size_t>(it - names.begin());
  names.push_back(name);
  return names.size() - 1;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

}  // namespace

Orientation default_orientation(const std::string& metric) {
  const std::string m = lower(metric);
  if (m == "pwc" || m == "fnr" || m == "miss_rate" || m == "error") return Orientation::lower_better;
  return Orientation::higher_better;
}

ScoreCube::ScoreCube(std::vector<std::string> methods, std::vector<std::string> datasets,
                     std::vector<std::string> metrics, std::vector<Orientation> orientation)
    : methods_(std::move(methods)),
      datasets_(std::move(datasets)),
      metrics_(std::move(metrics)),
      orientation_(std::move(orientation)),
      scores_(methods_.size() * datasets_.size() * metrics_.size()) {
  if (orientation_.size() != metrics_.size()) {
    throw std::invalid_argument("one orientation per metric is required");
  }
}

ScoreCube ScoreCube::from_csv(const std::string& text) {
  struct Row {
    std::string method, dataset, metric;
    double value;
    std::optional<Orientation> orientation;
  };
  std::vector<Row> rows;
  std::stringstream ss(text);
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto fields = split_csv_line(line);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() < 4 || lower(fields[0]) != "method" || lower(fields[1]) != "dataset" ||
          lower(fields[2]) != "metric" || lower(fields[3]) != "value") {
        throw std::runtime_error("score CSV header must be method,dataset,metric,value[,orientation]");
      }
      continue;
    }
    if (fields.size() < 4) {
      throw std::runtime_error("score CSV line " + std::to_string(line_no) + ": expected at least 4 fields");
    }
    Row row{fields[0], fields[1], fields[2], 0.0, std::nullopt};
    try {
      std::size_t used = 0;
      row.value = std::stod(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw std::runtime_error("score CSV line " + std::to_string(line_no) + ": bad value '" + fields[3] + "'");
    }
    if (fields.size() >= 5 && !fields[4].empty()) {
      const auto o = lower(fields[4]);
      if (o == "higher") {
        row.orientation = Orientation::higher_better;
      } else if (o == "lower") {
        row.orientation = Orientation::lower_better;
      } else {
        throw std::runtime_error("score CSV line " + std::to_string(line_no) + ": orientation must be higher or lower");
      }
    }
    rows.push_back(std::move(row));
  }

  std::vector<std::string> methods, datasets, metrics;
  for (const auto& r : rows) {
    intern(methods, r.method);
    intern(datasets, r.dataset);
    intern(metrics, r.metric);
  }
  std::vector<std::optional<Orientation>> declared(metrics.size());
  for (const auto& r : rows) {
    if (!r.orientation) continue;
    auto& slot = declared[intern(metrics, r.metric)];
    if (slot && *slot != *r.orientation) {
      throw std::runtime_error("conflicting orientation for metric " + r.metric);
    }
    slot = r.orientation;
  }
  std::vector<Orientation> orientation(metrics.size());
  for (std::size_t k = 0; k < metrics.size(); ++k) {
    orientation[k] = declared[k].value_or(default_orientation(metrics[k]));
  }

  ScoreCube cube(methods, datasets, metrics, orientation);
  for (const auto& r : rows) {
    const auto m = intern(methods, r.method);
    const auto d = intern(datasets, r.dataset);
    const auto k = intern(metrics, r.metric);
    if (cube.get(m, d, k)) {
      throw std::runtime_error("duplicate score for " + r.method + "/" + r.dataset + "/" + r.metric);
    }
    cube.set(m, d, k, r.value);
  }
  return cube;
}

void ScoreCube::set(std::size_t method, std::size_t dataset, std::size_t metric, double value) {
  scores_.at(index(method, dataset, metric)) = value;
}

std::optional<double> ScoreCube::get(std::size_t method, std::size_t dataset, std::size_t metric) const {
  return scores_.at(index(method, dataset, metric));
}

bool ScoreCube::complete() const {
  return !scores_.empty() && std::all_of(scores_.begin(), scores_.end(), [](const auto& s) { return s.has_value(); });
}

std::vector<double> RankTable::method_means() const {
  std::vector<double> means(methods.size(), 0.0);
  for (const auto& row : avg_rank)
    for (std::size_t j = 0; j < methods.size(); ++j) means[j] += row[j];
  for (auto& m : means) m /= static_cast<double>(avg_rank.size());
  return means;
}

std::vector<double> fractional_ranks(const std::vector<double>& scores, Orientation orientation) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return orientation == Orientation::higher_better ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  std::vector<double> ranks(scores.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    // Positions i..j-1 hold ranks i+1..j.
    const double shared = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t p = i; p < j; ++p) ranks[order[p]] = shared;
    i = j;
  }
  return ranks;
}

RankTable rank_methods(const ScoreCube& cube) {
  if (!cube.complete()) {
    throw std::invalid_argument("score cube is incomplete");
  }
  const std::size_t k = cube.methods().size();
  if (k < 2) {
    throw std::invalid_argument("ranking needs at least two methods");
  }
  RankTable table{cube.methods(), cube.metrics(),
                  std::vector<std::vector<double>>(cube.metrics().size(), std::vector<double>(k, 0.0))};
  const double datasets = static_cast<double>(cube.datasets().size());
  for (std::size_t metric = 0; metric < cube.metrics().size(); ++metric) {
    for (std::size_t d = 0; d < cube.datasets().size(); ++d) {
      std::vector<double> scores(k);
      for (std::size_t m = 0; m < k; ++m) scores[m] = *cube.get(m, d, metric);
      const auto ranks = fractional_ranks(scores, cube.orientation(metric));
      for (std::size_t m = 0; m < k; ++m) table.avg_rank[metric][m] += ranks[m];
    }
    for (auto& r : table.avg_rank[metric]) r /= datasets;
  }
  return table;
}

RankErrorEstimate mse_from_ranks(const RankTable& ranks, double nu) {
  if (ranks.methods.size() < 2 || ranks.avg_rank.size() < 2) {
    throw std::invalid_argument("degenerate table: need at least two methods and two metrics");
  }
  if (!(nu > 0.0)) {
    throw std::invalid_argument("error degrees of freedom must be positive");
  }
  const auto means = ranks.method_means();
  double sse = 0.0;
  for (const auto& row : ranks.avg_rank) {
    for (std::size_t j = 0; j < ranks.methods.size(); ++j) {
      const double d = row[j] - means[j];
      sse += d * d;
    }
  }
  if (!(sse > 0.0)) {
    throw std::invalid_argument("degenerate table: rank error sum of squares is zero");
  }
  return {sse, nu, sse / nu};
}

TukeyResult tukey_hsd(const RankTable& ranks, double n, double mse, double q_critical) {
  if (!(mse > 0.0)) {
    throw std::invalid_argument("tukey_hsd: mse must be positive");
  }
  if (!(n >= 1.0)) {
    throw std::invalid_argument("tukey_hsd: sample count must be at least 1");
  }
  const std::size_t k = ranks.methods.size();
  TukeyResult result;
  result.methods = ranks.methods;
  result.mean_rank = ranks.method_means();
  result.q.assign(k, std::vector<double>(k, 0.0));
  result.significant.assign(k, std::vector<bool>(k, false));
  result.q_critical = q_critical;
  result.n = n;
  result.mse = mse;
  const double scale = std::sqrt(n / mse);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const double q = std::abs(result.mean_rank[i] - result.mean_rank[j]) * scale;
      result.q[i][j] = result.q[j][i] = q;
      result.significant[i][j] = result.significant[j][i] = q > q_critical;
    }
  }
  return result;
}

std::string rank_table_csv(const RankTable& ranks) {
  std::string out = "metric";
  for (const auto& m : ranks.methods) out += "," + m;
  out += "\n";
  for (std::size_t r = 0; r < ranks.metrics.size(); ++r) {
    out += ranks.metrics[r];
    for (double v : ranks.avg_rank[r]) out += "," + fmt("%.2f", v);
    out += "\n";
  }
  out += "mean";
  for (double v : ranks.method_means()) out += "," + fmt("%.2f", v);
  out += "\n";
  return out;
}

std::string tukey_matrix_csv(const TukeyResult& result) {
  std::string out = "method";
  for (const auto& m : result.methods) out += "," + m;
  out += "\n";
  for (std::size_t i = 0; i < result.methods.size(); ++i) {
    out += result.methods[i];
    for (double q : result.q[i]) out += "," + fmt("%.2f", q);
    out += "\n";
  }
  return out;
}

std::string significance_report_csv(const TukeyResult& result) {
  std::string out = "method_a,method_b,q,q_critical,significant\n";
  for (std::size_t i = 0; i < result.methods.size(); ++i) {
    for (std::size_t j = i + 1; j < result.methods.size(); ++j) {
      out += result.methods[i] + "," + result.methods[j] + "," + fmt("%.4f", result.q[i][j]) + "," +
             fmt("%.4f", result.q_critical) + "," + (result.significant[i][j] ? "1" : "0") + "\n";
    }
  }
  return out;
}

}  // namespace hsicd
