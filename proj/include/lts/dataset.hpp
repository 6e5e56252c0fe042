#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace lts {

enum class Label : int { Irrelevant = 0, Relevant = 1 };

inline constexpr int to_int(Label l) { return static_cast<int>(l); }
inline constexpr bool is_positive(Label l) { return l == Label::Relevant; }
Label label_from_int(long long v);

struct Item {
  std::string id;
  std::string title;
  std::optional<std::string> description;
  std::optional<std::vector<double>> image_embedding;
  std::optional<Label> gold_label;

  friend bool operator==(const Item&, const Item&) = default;
};

struct CorpusStats {
  std::size_t n = 0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  /// n_pos / n_neg; absent unless every item is gold-labeled and n_neg > 0.
  std::optional<double> k;
};

// Ordered, validated collection of items. Immutable once built.
class Corpus {
 public:
  Corpus() = default;

  /// Validates ids, titles and embedding dimensions; throws DatasetError.
  explicit Corpus(std::vector<Item> items);

  const std::vector<Item>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const Item& operator[](std::size_t i) const { return items_[i]; }

  std::optional<std::size_t> index_of(std::string_view id) const;
  bool contains(std::string_view id) const { return index_of(id).has_value(); }

  /// Declared image embedding dimension, if any item carries one.
  std::optional<std::size_t> embedding_dim() const { return embedding_dim_; }

  const CorpusStats& stats() const { return stats_; }

 private:
  std::vector<Item> items_;
  std::unordered_map<std::string, std::size_t> index_;
  std::optional<std::size_t> embedding_dim_;
  CorpusStats stats_;
};

// Expert-labeled validation items; every item carries gold_label.
class GoldSet {
 public:
  GoldSet() = default;
  explicit GoldSet(std::vector<Item> items);

  const std::vector<Item>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

 private:
  std::vector<Item> items_;
};

Corpus parse_corpus(std::istream& in);
Corpus load_corpus(const std::filesystem::path& path);

void write_item(std::ostream& out, const Item& item);
void write_corpus(std::ostream& out, const Corpus& corpus);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);

/// One id per line; blank lines are skipped, surrounding whitespace trimmed.
std::vector<std::string> parse_id_list(std::istream& in);
std::vector<std::string> load_id_list(const std::filesystem::path& path);
void save_id_list(const std::filesystem::path& path, const std::vector<std::string>& ids);

struct PoolGoldSplit {
  Corpus pool;
  GoldSet gold;
};

/// Removes gold items from the corpus. Gold order follows corpus order.
PoolGoldSplit split_pool_gold(const Corpus& corpus, const std::unordered_set<std::string>& gold_ids);

std::string_view trim(std::string_view s);

}  // namespace lts
