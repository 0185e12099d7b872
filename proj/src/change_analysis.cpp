#include "hsicd/change_analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>

namespace hsicd {

double image_entropy(const Tensor& map) {
  if (map.channels() != 1) {
    throw std::invalid_argument("image_entropy expects a single-channel map");
  }
  const auto values = map.values();
  if (values.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo;
  const double range = *hi - min;
  if (!(range > 0.0)) return 0.0;

  std::array<std::size_t, 256> histogram{};
  for (double v : values) {
    const auto bin = static_cast<std::size_t>((v - min) / range * 256.0);
    ++histogram[std::min<std::size_t>(bin, 255)];
  }
  const double total = static_cast<double>(values.size());
  double entropy = 0.0;
  for (auto count : histogram) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) / total;
    entropy -= p * std::log2(p);
  }
  return entropy;
}

FeatureSelection select_feature_maps(const Tensor& dfm1, const Tensor& dfm2, double threshold) {
  if (!dfm1.same_shape(dfm2)) {
    throw std::invalid_argument("select_feature_maps: feature maps differ in shape");
  }
  FeatureSelection out;
  const std::size_t channels = dfm1.channels();
  const std::size_t pixels = dfm1.height() * dfm1.width();
  out.entropies.resize(channels);
  Tensor diff(dfm1.height(), dfm1.width(), 1);
  for (std::size_t k = 0; k < channels; ++k) {
    for (std::size_t p = 0; p < pixels; ++p) {
      diff.values()[p] = dfm1.values()[p * channels + k] - dfm2.values()[p * channels + k];
    }
    out.entropies[k] = image_entropy(diff);
    if (out.entropies[k] > threshold) out.kept.push_back(k);
  }

  const std::size_t kept = out.kept.size();
  out.sel1 = Tensor(dfm1.height(), dfm1.width(), kept);
  out.sel2 = Tensor(dfm1.height(), dfm1.width(), kept);
  for (std::size_t p = 0; p < pixels; ++p) {
    for (std::size_t j = 0; j < kept; ++j) {
      out.sel1.values()[p * kept + j] = dfm1.values()[p * channels + out.kept[j]];
      out.sel2.values()[p * kept + j] = dfm2.values()[p * channels + out.kept[j]];
    }
  }
  return out;
}

std::string to_string(DifferenceOperator op) { return op == DifferenceOperator::ad ? "ad" : "sam"; }

DifferenceOperator difference_operator_from_string(const std::string& name) {
  if (name == "ad") return DifferenceOperator::ad;
  if (name == "sam") return DifferenceOperator::sam;
  throw std::invalid_argument("unknown difference operator: " + name + " (expected ad or sam)");
}

DifferenceImage diff_ad(const Tensor& sel1, const Tensor& sel2) {
  if (!sel1.same_shape(sel2)) {
    throw std::invalid_argument("diff_ad: shape mismatch");
  }
  if (sel1.channels() == 0) return DifferenceImage::sentinel(sel1.height(), sel1.width());
  DifferenceImage di{sel1.height(), sel1.width(), sel1.channels(), std::vector<double>(sel1.size())};
  for (std::size_t i = 0; i < di.values.size(); ++i) {
    di.values[i] = std::abs(sel1.values()[i] - sel2.values()[i]);
  }
  return di;
}

DifferenceImage diff_sam(const Tensor& sel1, const Tensor& sel2) {
  if (!sel1.same_shape(sel2)) {
    throw std::invalid_argument("diff_sam: shape mismatch");
  }
  if (sel1.channels() == 0) return DifferenceImage::sentinel(sel1.height(), sel1.width());
  DifferenceImage di{sel1.height(), sel1.width(), 1, std::vector<double>(sel1.height() * sel1.width())};
  for (std::size_t r = 0; r < sel1.height(); ++r) {
    for (std::size_t c = 0; c < sel1.width(); ++c) {
      const auto v1 = sel1.pixel(r, c);
      const auto v2 = sel2.pixel(r, c);
      double dot = 0.0;
      double n1 = 0.0;
      double n2 = 0.0;
      for (std::size_t k = 0; k < v1.size(); ++k) {
        dot += v1[k] * v2[k];
        n1 += v1[k] * v1[k];
        n2 += v2[k] * v2[k];
      }
      double angle = 0.0;
      if (n1 == 0.0 && n2 == 0.0) {
        angle = 0.0;
      } else if (n1 == 0.0 || n2 == 0.0) {
        angle = std::numbers::pi / 2.0;
      } else {
        angle = std::acos(std::clamp(dot / std::sqrt(n1 * n2), -1.0, 1.0));
      }
      di.values[r * sel1.width() + c] = angle;
    }
  }
  return di;
}

DifferenceImage difference(const FeatureSelection& selection, DifferenceOperator op) {
  return op == DifferenceOperator::ad ? diff_ad(selection.sel1, selection.sel2)
                                      : diff_sam(selection.sel1, selection.sel2);
}

namespace {

double squared_distance(const double* a, const double* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

bool all_identical(const std::vector<double>& samples, std::size_t dim, std::size_t count) {
  for (std::size_t i = 1; i < count; ++i) {
    if (!std::equal(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(dim),
                    samples.begin() + static_cast<std::ptrdiff_t>(i * dim))) {
      return false;
    }
  }
  return true;
}

}  // namespace

namespace {

std::vector<double> plus_plus_seeds(const std::vector<double>& samples, std::size_t dim, std::size_t count,
                                    std::uint64_t seed) {
  const double* data = samples.data();
  auto sample = [&](std::size_t i) { return data + i * dim; };
  std::mt19937_64 rng(seed);
  std::vector<double> centroids(2 * dim);
  const std::size_t first = std::uniform_int_distribution<std::size_t>(0, count - 1)(rng);
  std::copy_n(sample(first), dim, centroids.begin());
  {
    std::vector<double> weight(count);
    double total = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      weight[i] = squared_distance(sample(i), centroids.data(), dim);
      total += weight[i];
    }
    const double target = std::uniform_real_distribution<double>(0.0, total)(rng);
    std::size_t second = count;
    double cumulative = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      if (weight[i] == 0.0) continue;
      cumulative += weight[i];
      second = i;
      if (cumulative > target) break;
    }
    std::copy_n(sample(second), dim, centroids.begin() + static_cast<std::ptrdiff_t>(dim));
  }
  return centroids;
}

// Means of the best threshold split of scalar samples, found exhaustively
// over sorted prefix sums.
std::vector<double> optimal_scalar_split(const std::vector<double>& samples) {
  std::vector<double> s = samples;
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  std::vector<double> prefix(n + 1, 0.0), prefix_sq(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    prefix[i + 1] = prefix[i] + s[i];
    prefix_sq[i + 1] = prefix_sq[i] + s[i] * s[i];
  }
  auto sse = [&](std::size_t b, std::size_t e) {
    const double sum = prefix[e] - prefix[b];
    return (prefix_sq[e] - prefix_sq[b]) - sum * sum / static_cast<double>(e - b);
  };
  std::size_t best_cut = 0;
  double best = INFINITY;
  for (std::size_t cut = 1; cut < n; ++cut) {
    if (s[cut] == s[cut - 1]) continue;
    const double total = sse(0, cut) + sse(cut, n);
    if (total < best) {
      best = total;
      best_cut = cut;
    }
  }
  return {prefix[best_cut] / static_cast<double>(best_cut),
          (prefix[n] - prefix[best_cut]) / static_cast<double>(n - best_cut)};
}

// Lloyd iterations from the given pair of centroids.
KMeansResult lloyd(const std::vector<double>& samples, std::size_t dim, std::size_t count,
                   std::vector<double> centroids) {
  const double* data = samples.data();
  auto sample = [&](std::size_t i) { return data + i * dim; };

  KMeansResult result;
  result.dim = dim;
  result.assignments.assign(count, 0);
  auto assign = [&] {
    for (std::size_t i = 0; i < count; ++i) {
      const double d0 = squared_distance(sample(i), centroids.data(), dim);
      const double d1 = squared_distance(sample(i), centroids.data() + dim, dim);
      result.assignments[i] = d1 < d0 ? 1 : 0;
    }
  };

  std::vector<double> updated(2 * dim);
  for (std::size_t iter = 1; iter <= kKMeansMaxIterations; ++iter) {
    result.iterations = iter;
    assign();
    std::fill(updated.begin(), updated.end(), 0.0);
    std::array<std::size_t, 2> members{0, 0};
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t c = result.assignments[i];
      ++members[c];
      for (std::size_t k = 0; k < dim; ++k) updated[c * dim + k] += sample(i)[k];
    }
    for (std::size_t c = 0; c < 2; ++c) {
      if (members[c] == 0) continue;
      for (std::size_t k = 0; k < dim; ++k) updated[c * dim + k] /= static_cast<double>(members[c]);
    }
    for (std::size_t c = 0; c < 2; ++c) {
      if (members[c] != 0) continue;
      // Reseed an emptied cluster with the sample farthest from the survivor.
      const double* survivor = updated.data() + (1 - c) * dim;
      std::size_t farthest = 0;
      double best = -1.0;
      for (std::size_t i = 0; i < count; ++i) {
        const double d = squared_distance(sample(i), survivor, dim);
        if (d > best) {
          best = d;
          farthest = i;
        }
      }
      std::copy_n(sample(farthest), dim, updated.begin() + static_cast<std::ptrdiff_t>(c * dim));
    }
    double movement = 0.0;
    for (std::size_t c = 0; c < 2; ++c) {
      movement = std::max(movement, std::sqrt(squared_distance(centroids.data() + c * dim,
                                                                updated.data() + c * dim, dim)));
    }
    centroids.swap(updated);
    if (movement < kKMeansTolerance) break;
  }
  assign();
  result.centroids = std::move(centroids);
  return result;
}

double inertia(const std::vector<double>& samples, const KMeansResult& r) {
  double total = 0.0;
  for (std::size_t i = 0; i < r.assignments.size(); ++i) {
    total += squared_distance(samples.data() + i * r.dim, r.centroids.data() + r.assignments[i] * r.dim, r.dim);
  }
  return total;
}

}  // namespace

KMeansResult kmeans2(const std::vector<double>& samples, std::size_t dim, std::uint64_t seed) {
  if (dim == 0 || samples.size() % dim != 0) {
    throw std::invalid_argument("kmeans2: sample buffer is not a whole number of vectors");
  }
  const std::size_t count = samples.size() / dim;
  if (count < 2 || all_identical(samples, dim, count)) {
    throw std::invalid_argument("degenerate clustering input");
  }
  // Lloyd only finds a local optimum; keep the tightest of several seedings.
  std::mt19937_64 seeds(seed);
  std::vector<std::vector<double>> starts;
  for (std::size_t r = 0; r < kKMeansRestarts; ++r) starts.push_back(plus_plus_seeds(samples, dim, count, seeds()));
  // Scalar samples also start from the exact optimal split, a Lloyd fixed point.
  if (dim == 1) starts.push_back(optimal_scalar_split(samples));

  KMeansResult best;
  double best_inertia = INFINITY;
  for (auto& start : starts) {
    auto candidate = lloyd(samples, dim, count, std::move(start));
    const double e = inertia(samples, candidate);
    if (e < best_inertia) {
      best = std::move(candidate);
      best_inertia = e;
    }
  }
  return best;
}

ChangeMap decide_change(const DifferenceImage& di, std::uint64_t seed, ClusterFeature feature) {
  ChangeMap map(di.height, di.width);
  if (di.no_features()) return map;

  const std::size_t pixels = di.height * di.width;
  if (di.values.size() != pixels * di.channels) {
    throw std::invalid_argument("decide_change: difference image is malformed");
  }
  std::vector<double> samples;
  std::size_t dim = di.channels;
  if (feature == ClusterFeature::magnitude && di.channels > 1) {
    dim = 1;
    samples.resize(pixels);
    for (std::size_t p = 0; p < pixels; ++p) {
      double s = 0.0;
      for (std::size_t k = 0; k < di.channels; ++k) s += di.values[p * di.channels + k] * di.values[p * di.channels + k];
      samples[p] = std::sqrt(s);
    }
  } else {
    samples = di.values;
  }
  if (pixels < 2 || all_identical(samples, dim, pixels)) return map;

  const auto km = kmeans2(samples, dim, seed);
  const double norm0 = squared_distance(km.centroids.data(), std::vector<double>(dim, 0.0).data(), dim);
  const double norm1 = squared_distance(km.centroids.data() + dim, std::vector<double>(dim, 0.0).data(), dim);
  const std::uint8_t changed = norm1 >= norm0 ? 1 : 0;
  for (std::size_t p = 0; p < pixels; ++p) {
    map.labels[p] = km.assignments[p] == changed ? 1 : 0;
  }
  return map;
}

std::string selection_csv(const FeatureSelection& selection) {
  std::string out = "channel,entropy,kept\n";
  char line[80];
  std::size_t next_kept = 0;
  for (std::size_t k = 0; k < selection.entropies.size(); ++k) {
    const bool kept = next_kept < selection.kept.size() && selection.kept[next_kept] == k;
    if (kept) ++next_kept;
    std::snprintf(line, sizeof line, "%zu,%.6f,%d\n", k, selection.entropies[k], kept ? 1 : 0);
    out += line;
  }
  return out;
}

}  // namespace hsicd
