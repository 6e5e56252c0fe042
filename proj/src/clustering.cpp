#include "lts/clustering.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "lts/errors.hpp"
#include "lts/rng.hpp"

namespace lts {

namespace {

double dense_squared_norm(const std::vector<double>& c) {
  double s = 0.0;
  for (double v : c) s += v * v;
  return s;
}

std::vector<double> densify(const SparseVector& x, std::size_t dim) {
  std::vector<double> out(dim, 0.0);
  for (const auto& [i, v] : x.entries) out[i] = v;
  return out;
}

std::vector<std::vector<double>> kmeanspp_init(std::span<const SparseVector> points, std::size_t k, std::size_t dim,
                                               Rng& rng) {
  const std::size_t n = points.size();
  std::vector<std::vector<double>> centroids;
  centroids.reserve(k);
  std::vector<bool> chosen(n, false);
  std::size_t first = rng.below(n);
  chosen[first] = true;
  centroids.push_back(densify(points[first], dim));

  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  while (centroids.size() < k) {
    const auto& c = centroids.back();
    const double cn = dense_squared_norm(c);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      best[i] = std::min(best[i], points[i].squared_distance(c, cn));
      if (!chosen[i]) total += best[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i] || best[i] <= 0.0) continue;
        pick = i;
        r -= best[i];
        if (r < 0.0) break;
      }
    }
    if (pick == n) {
      // Every unchosen point coincides with a centroid: pick one uniformly.
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) rest.push_back(i);
      }
      pick = rest[rng.below(rest.size())];
    }
    chosen[pick] = true;
    centroids.push_back(densify(points[pick], dim));
  }
  return centroids;
}

}  // namespace

ClusterAssignment kmeans(std::span<const SparseVector> points, std::size_t k, std::uint64_t seed,
                         const KMeansOptions& opts) {
  const std::size_t n = points.size();
  if (k < 1) throw ValidationError("cluster count K must be >= 1");
  if (n == 0) throw ValidationError("cannot cluster an empty pool");
  if (k > n) throw ValidationError("cluster count K=" + std::to_string(k) + " exceeds pool size " + std::to_string(n));
  const std::size_t dim = points[0].dim;
  for (const auto& p : points) {
    if (p.dim != dim) throw ValidationError("inconsistent feature dimensions in kmeans input");
  }

  Rng rng(seed);
  ClusterAssignment out;
  out.k = k;
  out.centroids = kmeanspp_init(points, k, dim, rng);
  out.assignment.assign(n, 0);
  std::vector<double> dist(n, 0.0);
  std::vector<double> norms(k);
  bool converged = false;

  for (std::size_t iter = 0;; ++iter) {
    // Assignment step against the current centroids; ties go to the lower index.
    for (std::size_t c = 0; c < k; ++c) norms[c] = dense_squared_norm(out.centroids[c]);
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = points[i].squared_distance(out.centroids[c], norms[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      out.assignment[i] = best;
      dist[i] = best_d;
      ++sizes[best];
    }
    // Reseed empty clusters with the point farthest from its centroid, taken
    // only from clusters that can spare a member.
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[out.assignment[i]] > 1 && dist[i] > far_d) {
          far_d = dist[i];
          far = i;
        }
      }
      --sizes[out.assignment[far]];
      out.assignment[far] = c;
      sizes[c] = 1;
      dist[far] = 0.0;
      out.centroids[c] = densify(points[far], dim);
      converged = false;
    }
    out.iterations = iter;
    if (converged || iter == opts.max_iterations) break;

    // Update step.
    std::vector<std::vector<double>> next(k, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      auto& acc = next[out.assignment[i]];
      for (const auto& [j, v] : points[i].entries) acc[j] += v;
    }
    double movement = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double inv = 1.0 / static_cast<double>(sizes[c]);
      double m = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        next[c][j] *= inv;
        const double d = next[c][j] - out.centroids[c][j];
        m += d * d;
      }
      movement += std::sqrt(m);
    }
    out.centroids = std::move(next);
    converged = movement < opts.tolerance;
  }

  out.members.assign(k, {});
  for (std::size_t i = 0; i < n; ++i) out.members[out.assignment[i]].push_back(i);
  return out;
}

ClusterAssignment cluster(const Corpus& pool, const FeaturizerConfig& cfg, std::size_t k, std::uint64_t seed) {
  cfg.validate();
  if (k < 1) throw ValidationError("cluster count K must be >= 1");
  if (k > pool.size()) {
    throw ValidationError("cluster count K=" + std::to_string(k) + " exceeds pool size " + std::to_string(pool.size()));
  }
  std::vector<SparseVector> points;
  points.reserve(pool.size());
  for (const auto& item : pool.items()) points.push_back(featurize_item(item, cfg));
  return kmeans(points, k, seed);
}

void write_assignment(std::ostream& out, const Corpus& pool, const ClusterAssignment& assignment) {
  for (std::size_t i = 0; i < pool.size(); ++i) out << pool[i].id << '\t' << assignment.assignment[i] << '\n';
}

}  // namespace lts
