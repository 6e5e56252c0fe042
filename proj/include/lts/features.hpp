#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lts/dataset.hpp"

namespace lts {

struct FeaturizerConfig {
  std::size_t dim = std::size_t{1} << 18;
  /// Featurize the title only, ignoring the description.
  bool title_only = false;

  /// The hash and token rule are fixed; these names are written to run configs.
  static constexpr std::string_view hash_name = "fnv1a64";
  static constexpr std::string_view token_rule = "lowercase-alnum-runs";

  /// Throws ValidationError unless dim is a power of two >= 2^10.
  void validate() const;
};

// Sparse vector with entries sorted by strictly increasing index.
struct SparseVector {
  std::vector<std::pair<std::uint32_t, double>> entries;
  std::size_t dim = 0;

  bool empty() const { return entries.empty(); }
  double squared_norm() const;
  double dot(std::span<const double> dense) const;
  /// Squared Euclidean distance to a dense vector whose squared norm is known.
  double squared_distance(std::span<const double> dense, double dense_squared_norm) const;

  friend bool operator==(const SparseVector&, const SparseVector&) = default;
};

std::uint64_t fnv1a64(std::string_view bytes);

/// Lowercased maximal runs of ASCII alphanumerics. Bytes >= 0x80 count as
/// token characters so UTF-8 words stay intact.
std::vector<std::string> tokenize(std::string_view text);

/// Term-frequency over hashed tokens, L2-normalized; empty text -> zero vector.
SparseVector featurize(std::string_view text, const FeaturizerConfig& cfg);

/// Title, plus " " + description unless cfg.title_only.
std::string item_text(const Item& item, const FeaturizerConfig& cfg);
SparseVector featurize_item(const Item& item, const FeaturizerConfig& cfg);

/// Elementwise mean; throws ValidationError on dimension mismatch.
std::vector<double> fuse_mean(std::span<const double> a, std::span<const double> b);

}  // namespace lts
