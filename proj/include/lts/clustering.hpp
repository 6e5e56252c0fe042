#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lts/dataset.hpp"
#include "lts/features.hpp"

namespace lts {

struct KMeansOptions {
  std::size_t max_iterations = 100;
  /// Stop once the summed Euclidean movement of all centroids drops below this.
  double tolerance = 1e-6;
};

// Partition of a pool into K non-empty clusters. Indices refer to positions
// in the pool the assignment was computed for.
struct ClusterAssignment {
  std::size_t k = 0;
  std::vector<std::size_t> assignment;         // pool index -> cluster
  std::vector<std::vector<double>> centroids;  // k dense vectors of feature dim
  std::vector<std::vector<std::size_t>> members;
  std::size_t iterations = 0;
};

/// k-means with k-means++ seeding over sparse vectors. Deterministic given seed.
ClusterAssignment kmeans(std::span<const SparseVector> points, std::size_t k, std::uint64_t seed,
                         const KMeansOptions& opts = {});

/// Featurizes the pool and runs kmeans. Throws ValidationError for k < 1 or k > N.
ClusterAssignment cluster(const Corpus& pool, const FeaturizerConfig& cfg, std::size_t k, std::uint64_t seed);

/// Tab-separated `id<TAB>cluster` lines in pool order.
void write_assignment(std::ostream& out, const Corpus& pool, const ClusterAssignment& assignment);

}  // namespace lts
