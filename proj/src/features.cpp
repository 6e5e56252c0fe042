#include "lts/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "lts/errors.hpp"

namespace lts {

void FeaturizerConfig::validate() const {
  if (dim < (std::size_t{1} << 10) || (dim & (dim - 1)) != 0) {
    throw ValidationError("featurizer dim must be a power of two >= 1024, got " + std::to_string(dim));
  }
  if (dim > (std::size_t{1} << 32)) throw ValidationError("featurizer dim must be <= 2^32");
}

double SparseVector::squared_norm() const {
  double s = 0.0;
  for (const auto& [i, v] : entries) s += v * v;
  return s;
}

double SparseVector::dot(std::span<const double> dense) const {
  double s = 0.0;
  for (const auto& [i, v] : entries) s += v * dense[i];
  return s;
}

double SparseVector::squared_distance(std::span<const double> dense, double dense_squared_norm) const {
  // ||x - c||^2 = ||x||^2 - 2 x.c + ||c||^2, clamped against cancellation.
  return std::max(0.0, squared_norm() - 2.0 * dot(dense) + dense_squared_norm);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {
bool is_token_byte(unsigned char c) { return c >= 0x80 || std::isalnum(c); }
}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (is_token_byte(c)) {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

SparseVector featurize(std::string_view text, const FeaturizerConfig& cfg) {
  SparseVector out;
  out.dim = cfg.dim;
  const std::uint64_t mask = cfg.dim - 1;
  std::map<std::uint32_t, double> counts;
  for (const auto& tok : tokenize(text)) {
    counts[static_cast<std::uint32_t>(fnv1a64(tok) & mask)] += 1.0;
  }
  if (counts.empty()) return out;
  double norm = 0.0;
  for (const auto& [i, c] : counts) norm += c * c;
  norm = std::sqrt(norm);
  out.entries.reserve(counts.size());
  for (const auto& [i, c] : counts) out.entries.emplace_back(i, c / norm);
  return out;
}

std::string item_text(const Item& item, const FeaturizerConfig& cfg) {
  if (cfg.title_only || !item.description) return item.title;
  return item.title + " " + *item.description;
}

SparseVector featurize_item(const Item& item, const FeaturizerConfig& cfg) {
  return featurize(item_text(item, cfg), cfg);
}

std::vector<double> fuse_mean(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ValidationError("fuse_mean dimension mismatch: " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  }
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = 0.5 * (a[i] + b[i]);
  return out;
}

}  // namespace lts
