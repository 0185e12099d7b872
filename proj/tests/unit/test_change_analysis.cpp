#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "doctest.h"
#include "hsicd/change_analysis.hpp"
#include "test_support.hpp"

using namespace hsicd;
using hsicd::testing::random_tensor;

namespace {

DifferenceImage scalar_di(std::size_t h, std::size_t w, std::vector<double> values) {
  return {h, w, 1, std::move(values)};
}

double within_sse(const std::vector<double>& v, const std::vector<std::uint8_t>& labels) {
  double sum[2] = {0, 0};
  double n[2] = {0, 0};
  for (std::size_t i = 0; i < v.size(); ++i) {
    sum[labels[i]] += v[i];
    n[labels[i]] += 1;
  }
  double sse = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double mean = sum[labels[i]] / n[labels[i]];
    sse += (v[i] - mean) * (v[i] - mean);
  }
  return sse;
}

struct Split {
  double sse;
  double threshold;  // values above are the high group
};

// Optimal 2-means in one dimension: try every cut between consecutive
// distinct sorted values.
Split brute_force_split(const std::vector<double>& v) {
  std::vector<double> s = v;
  std::sort(s.begin(), s.end());
  Split best{INFINITY, 0.0};
  for (std::size_t cut = 1; cut < s.size(); ++cut) {
    if (s[cut] == s[cut - 1]) continue;
    const double threshold = s[cut - 1];
    std::vector<std::uint8_t> labels(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) labels[i] = v[i] > threshold ? 1 : 0;
    const double sse = within_sse(v, labels);
    if (sse < best.sse) best = {sse, threshold};
  }
  return best;
}

bool same_partition(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  bool same = true;
  bool flipped = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    same = same && a[i] == b[i];
    flipped = flipped && a[i] != b[i];
  }
  return same || flipped;
}

}  // namespace

TEST_CASE("image_entropy") {
  CHECK(image_entropy(Tensor(4, 4, 1, 3.5)) == 0.0);
  CHECK(image_entropy(Tensor(1, 4, 1, {0.0, 0.0, 1.0, 1.0})) == doctest::Approx(1.0));
  Tensor ramp(16, 16, 1);
  for (std::size_t i = 0; i < 256; ++i) ramp.values()[i] = static_cast<double>(i);
  CHECK(image_entropy(ramp) == doctest::Approx(8.0));
  // Min-max scaling makes the estimate invariant to affine rescaling.
  Tensor scaled = ramp;
  for (auto& v : scaled.values()) v = -0.01 * v + 4.0;
  CHECK(image_entropy(scaled) == doctest::Approx(8.0));
  CHECK_THROWS_AS(image_entropy(Tensor(2, 2, 2)), std::invalid_argument);
}

TEST_CASE("select_feature_maps") {
  SUBCASE("identical inputs give the sentinel") {
    const auto d = random_tensor(5, 5, 6, 1);
    const auto s = select_feature_maps(d, d);
    CHECK(s.empty());
    CHECK(s.sel1.channels() == 0);
    CHECK(s.entropies.size() == 6);
    const auto di = difference(s, DifferenceOperator::ad);
    CHECK(di.no_features());
    const auto map = decide_change(di, 0);
    CHECK(map.changed_count() == 0);
    CHECK(map.labels.size() == 25);
  }
  SUBCASE("a single differing pixel keeps that channel only") {
    const auto d1 = random_tensor(4, 4, 3, 2);
    auto d2 = d1;
    d2.at(2, 3, 1) += 0.5;
    const auto s = select_feature_maps(d1, d2);
    CHECK(s.kept == std::vector<std::size_t>{1});
    CHECK(s.sel1 == d1.slice_channels(1, 2));
    CHECK(s.sel2 == d2.slice_channels(1, 2));
  }
  SUBCASE("a constant offset is not discriminative") {
    Tensor shifted(4, 4, 2);
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 4; ++c) {
        shifted.at(r, c, 0) = 1.0;
        shifted.at(r, c, 1) = static_cast<double>(r);
      }
    const auto s = select_feature_maps(shifted, Tensor(4, 4, 2));
    CHECK(s.kept == std::vector<std::size_t>{1});
  }
  SUBCASE("kept indices are increasing original channels") {
    const auto s = select_feature_maps(random_tensor(6, 6, 9, 4), random_tensor(6, 6, 9, 5));
    CHECK(s.kept.size() == 9);
    CHECK(std::is_sorted(s.kept.begin(), s.kept.end()));
    CHECK(std::adjacent_find(s.kept.begin(), s.kept.end()) == s.kept.end());
    for (auto k : s.kept) CHECK(k < 9);
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(select_feature_maps(Tensor(2, 2, 1), Tensor(2, 2, 2)), std::invalid_argument);
  }
}

TEST_CASE("diff_ad") {
  const auto x = random_tensor(3, 4, 2, 6);
  const Tensor zero(3, 4, 2);
  const auto ad = diff_ad(x, zero);
  CHECK(ad.channels == 2);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(ad.values[i] == std::abs(x.values()[i]));
  for (double v : diff_ad(x, x).values) CHECK(v == 0.0);
  CHECK(diff_ad(Tensor(2, 2, 0), Tensor(2, 2, 0)).no_features());
  CHECK_THROWS_AS(diff_ad(x, Tensor(3, 4, 1)), std::invalid_argument);
}

TEST_CASE("diff_sam examples") {
  const auto pi = std::numbers::pi;
  auto angle = [](std::vector<double> a, std::vector<double> b) {
    const auto n = a.size();
    return diff_sam(Tensor(1, 1, n, std::move(a)), Tensor(1, 1, n, std::move(b))).values[0];
  };
  CHECK(angle({0.3, 0.7}, {0.3, 0.7}) == doctest::Approx(0.0));
  CHECK(angle({1, 0}, {0, 1}) == doctest::Approx(pi / 2));
  CHECK(angle({1, 1}, {1, 0}) == doctest::Approx(pi / 4));
  CHECK(angle({1, 0}, {-1, 0}) == doctest::Approx(pi));
  CHECK(angle({0, 0}, {0, 0}) == 0.0);
  CHECK(angle({0, 0}, {2, 1}) == doctest::Approx(pi / 2));
  CHECK(angle({2, 1}, {0, 0}) == doctest::Approx(pi / 2));
  CHECK_THROWS_AS(diff_sam(Tensor(1, 1, 2), Tensor(1, 1, 3)), std::invalid_argument);
}

TEST_CASE("difference operator properties") {
  const double pi = std::numbers::pi;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = random_tensor(4, 5, 3, 100 + seed);
    const auto b = random_tensor(4, 5, 3, 200 + seed);
    const auto ad_ab = diff_ad(a, b);
    CHECK(ad_ab.values == diff_ad(b, a).values);
    for (double v : ad_ab.values) CHECK(v >= 0.0);

    const auto sam_ab = diff_sam(a, b);
    const auto sam_ba = diff_sam(b, a);
    CHECK(sam_ab.channels == 1);
    for (std::size_t i = 0; i < sam_ab.values.size(); ++i) {
      CHECK(sam_ab.values[i] == doctest::Approx(sam_ba.values[i]).epsilon(1e-12));
      CHECK(sam_ab.values[i] >= 0.0);
      CHECK(sam_ab.values[i] <= pi);
    }

    // Positive per-pixel scaling of one side leaves every angle unchanged.
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> scale(0.01, 100.0);
    Tensor scaled = a;
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 5; ++c) {
        const double s = scale(rng);
        for (std::size_t k = 0; k < 3; ++k) scaled.at(r, c, k) *= s;
      }
    const auto sam_scaled = diff_sam(scaled, b);
    for (std::size_t i = 0; i < sam_ab.values.size(); ++i) {
      CHECK(sam_scaled.values[i] == doctest::Approx(sam_ab.values[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("DifferenceOperator names") {
  CHECK(to_string(DifferenceOperator::ad) == "ad");
  CHECK(to_string(DifferenceOperator::sam) == "sam");
  CHECK(difference_operator_from_string("sam") == DifferenceOperator::sam);
  CHECK_THROWS_AS(difference_operator_from_string("cva"), std::invalid_argument);
}

TEST_CASE("kmeans2") {
  SUBCASE("five scalars split at the gap") {
    const std::vector<double> v{0.0, 0.1, 0.2, 10.0, 10.1};
    const auto r = kmeans2(v, 1, 0);
    CHECK(r.assignments[0] == r.assignments[1]);
    CHECK(r.assignments[1] == r.assignments[2]);
    CHECK(r.assignments[3] == r.assignments[4]);
    CHECK(r.assignments[0] != r.assignments[3]);
    // Brute force over contiguous thresholds picks the same split.
    CHECK(brute_force_split(v).threshold == 0.2);
    CHECK(within_sse(v, r.assignments) == doctest::Approx(brute_force_split(v).sse));
    const auto low = r.assignments[0];
    CHECK(r.centroids[low] == doctest::Approx(0.1));
    CHECK(r.centroids[1 - low] == doctest::Approx(10.05));
  }
  SUBCASE("two distinct points") {
    const std::vector<double> v{1.0, 2.0, -3.0, 4.0};
    const auto r = kmeans2(v, 2, 5);
    CHECK(r.assignments[0] != r.assignments[1]);
    CHECK(r.centroids[2 * r.assignments[0]] == 1.0);
    CHECK(r.centroids[2 * r.assignments[0] + 1] == 2.0);
    CHECK(r.centroids[2 * r.assignments[1]] == -3.0);
    CHECK(r.centroids[2 * r.assignments[1] + 1] == 4.0);
  }
  SUBCASE("deterministic per seed") {
    const auto t = random_tensor(10, 10, 3, 9);
    const std::vector<double> samples(t.values().begin(), t.values().end());
    const auto a = kmeans2(samples, 3, 42);
    const auto b = kmeans2(samples, 3, 42);
    CHECK(a.assignments == b.assignments);
    CHECK(a.centroids == b.centroids);
  }
  SUBCASE("degenerate input") {
    CHECK_THROWS_WITH_AS(kmeans2({1.0, 1.0, 1.0}, 1, 0), "degenerate clustering input", std::invalid_argument);
    CHECK_THROWS_AS(kmeans2({1.0}, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(kmeans2({1.0, 2.0, 3.0}, 2, 0), std::invalid_argument);
  }
}

TEST_CASE("decide_change labels the high-magnitude group") {
  // Two groups around 0.2 and 3.0; the oracle thresholds at the midpoint of
  // the group means.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);
  std::bernoulli_distribution high(0.3);
  std::vector<double> v(12 * 12);
  std::vector<bool> is_high(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    is_high[i] = high(rng);
    v[i] = (is_high[i] ? 3.0 : 0.2) + jitter(rng);
  }
  double sum[2] = {0, 0};
  double n[2] = {0, 0};
  for (std::size_t i = 0; i < v.size(); ++i) {
    sum[is_high[i]] += v[i];
    n[is_high[i]] += 1;
  }
  const double midpoint = 0.5 * (sum[0] / n[0] + sum[1] / n[1]);

  for (std::uint64_t seed : {0, 1, 2, 99}) {
    const auto map = decide_change(scalar_di(12, 12, v), seed);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(map.labels[i] == (v[i] > midpoint ? 1 : 0));
  }
}

TEST_CASE("decide_change on vector AD input") {
  Tensor a(6, 6, 3);
  Tensor b(6, 6, 3);
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 0; c < 6; ++c)
      for (std::size_t k = 0; k < 3; ++k) {
        a.at(r, c, k) = 0.1 * static_cast<double>(k) + 0.01 * static_cast<double>(c);
        b.at(r, c, k) = a.at(r, c, k) + (r < 2 ? 1.0 : 0.02 * static_cast<double>(k));
      }
  const auto di = diff_ad(a, b);
  for (auto feature : {ClusterFeature::vector, ClusterFeature::magnitude}) {
    const auto map = decide_change(di, 3, feature);
    for (std::size_t r = 0; r < 6; ++r)
      for (std::size_t c = 0; c < 6; ++c) CHECK(map.at(r, c) == (r < 2 ? 1 : 0));
  }
}

TEST_CASE("decide_change follows a pixel permutation") {
  const auto base = random_tensor(8, 8, 1, 21, 0.0, 1.0);
  std::vector<double> v(base.values().begin(), base.values().end());
  for (std::size_t i = 0; i < 20; ++i) v[i] += 4.0;
  std::vector<std::size_t> perm(v.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(5));
  std::vector<double> permuted(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) permuted[i] = v[perm[i]];

  const auto map = decide_change(scalar_di(8, 8, v), 0);
  const auto pmap = decide_change(scalar_di(8, 8, permuted), 0);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(pmap.labels[i] == map.labels[perm[i]]);
  CHECK(map.changed_count() == 20);
}

TEST_CASE("decide_change matches brute-force optimal 2-means on scalar images") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> side(2, 8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> tail(2.0);
  int trials = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t h = side(rng);
    const std::size_t w = side(rng);
    std::vector<double> v(h * w);
    const int kind = trial % 3;
    for (auto& x : v) {
      if (kind == 0) {
        x = unit(rng);
      } else if (kind == 1) {
        x = tail(rng);
      } else {
        x = unit(rng) < 0.25 ? 1.0 + 0.3 * unit(rng) : 0.3 * unit(rng);
      }
    }
    const auto best = brute_force_split(v);
    if (!std::isfinite(best.sse)) continue;
    ++trials;
    CAPTURE(trial);
    const auto map = decide_change(scalar_di(h, w, v), static_cast<std::uint64_t>(trial));
    std::vector<std::uint8_t> oracle(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) oracle[i] = v[i] > best.threshold ? 1 : 0;
    CHECK(within_sse(v, map.labels) == doctest::Approx(best.sse).epsilon(1e-9));
    CHECK(same_partition(map.labels, oracle));
    // Changed pixels are the high side of the cut.
    double lowest_changed = INFINITY;
    double highest_unchanged = -INFINITY;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (map.labels[i]) {
        lowest_changed = std::min(lowest_changed, v[i]);
      } else {
        highest_unchanged = std::max(highest_unchanged, v[i]);
      }
    }
    CHECK(lowest_changed > highest_unchanged);
  }
  CHECK(trials > 250);
}

TEST_CASE("decide_change on identical samples is all unchanged") {
  CHECK(decide_change(scalar_di(3, 3, std::vector<double>(9, 0.7)), 0).changed_count() == 0);
}

TEST_CASE("selection_csv") {
  const auto d1 = Tensor(2, 2, 2, {0, 0, 0, 0, 0, 0, 0, 0});
  auto d2 = d1;
  d2.at(0, 0, 1) = 1.0;
  const auto csv = selection_csv(select_feature_maps(d1, d2));
  CHECK(csv.rfind("channel,entropy,kept\n", 0) == 0);
  CHECK(csv.find("\n0,") != std::string::npos);
  CHECK(csv.find("\n1,") != std::string::npos);
}
