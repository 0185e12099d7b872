#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hsicd/hsi_io.hpp"
#include "hsicd/tensor.hpp"

namespace hsicd {

inline constexpr double kDefaultEntropyThreshold = 1e-6;

// Shannon entropy (bits) of a single-channel map after min-max scaling into
// 256 equal-width bins. A constant map has entropy exactly 0.
double image_entropy(const Tensor& map);

struct FeatureSelection {
  Tensor sel1;
  Tensor sel2;
  std::vector<std::size_t> kept;
  // Entropy of each original channel's difference map, kept or not.
  std::vector<double> entropies;

  // No channel survived: the pair carries no discriminative feature.
  bool empty() const { return kept.empty(); }
};

// Keeps channel k iff image_entropy(dfm1[k] - dfm2[k]) > threshold.
FeatureSelection select_feature_maps(const Tensor& dfm1, const Tensor& dfm2,
                                     double threshold = kDefaultEntropyThreshold);

enum class DifferenceOperator { ad, sam };
std::string to_string(DifferenceOperator op);
DifferenceOperator difference_operator_from_string(const std::string& name);

// Per-pixel dissimilarity. A zero-channel image is the "no discriminative
// features" sentinel produced from an empty selection.
struct DifferenceImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<double> values;  // (row, col, channel), channel fastest

  bool no_features() const { return channels == 0; }
  static DifferenceImage sentinel(std::size_t height, std::size_t width) { return {height, width, 0, {}}; }
};

DifferenceImage diff_ad(const Tensor& sel1, const Tensor& sel2);
DifferenceImage diff_sam(const Tensor& sel1, const Tensor& sel2);
DifferenceImage difference(const FeatureSelection& selection, DifferenceOperator op);

struct KMeansResult {
  std::vector<std::uint8_t> assignments;  // 0 or 1 per sample
  std::vector<double> centroids;          // 2 × dim
  std::size_t dim = 0;
  std::size_t iterations = 0;
};

inline constexpr double kKMeansTolerance = 1e-6;
inline constexpr std::size_t kKMeansMaxIterations = 100;
inline constexpr std::size_t kKMeansRestarts = 10;

// Two-cluster k-means over `count` samples of `dim` values each (row-major).
// Seeding is k-means++; Lloyd iterations stop when no centroid moves by
// kKMeansTolerance or after kKMeansMaxIterations. The run is repeated from
// kKMeansRestarts seedings drawn from `seed` and the one with the smallest
// within-cluster sum of squares is returned. Scalar samples add one more
// start at the exact optimal threshold split, so in one dimension the result
// is the global 2-means optimum.
KMeansResult kmeans2(const std::vector<double>& samples, std::size_t dim, std::uint64_t seed);

// How an AD image's pixels are fed to k-means.
enum class ClusterFeature {
  vector,     // the full kept-channel vector
  magnitude,  // its Euclidean norm
};

// Clusters the pixels and labels the cluster with the larger centroid norm as
// changed. Sentinel and all-identical inputs yield an all-unchanged map.
ChangeMap decide_change(const DifferenceImage& di, std::uint64_t seed,
                        ClusterFeature feature = ClusterFeature::vector);

// CSV: channel,entropy,kept
std::string selection_csv(const FeatureSelection& selection);

}  // namespace hsicd
