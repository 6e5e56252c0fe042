#include "lts/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lts/errors.hpp"

namespace lts {

using nlohmann::json;

namespace {

void compute_stats(const std::vector<Item>& items, CorpusStats& stats) {
  stats = {};
  stats.n = items.size();
  bool all_labeled = true;
  for (const auto& item : items) {
    if (!item.gold_label) {
      all_labeled = false;
      continue;
    }
    if (is_positive(*item.gold_label)) {
      ++stats.n_pos;
    } else {
      ++stats.n_neg;
    }
  }
  if (all_labeled && stats.n_neg > 0) {
    stats.k = static_cast<double>(stats.n_pos) / static_cast<double>(stats.n_neg);
  }
  if (!all_labeled) {
    stats.n_pos = stats.n_neg = 0;
  }
}

Item item_from_json(const json& j, std::size_t line) {
  if (!j.is_object()) throw DatasetError("record is not an object", line);
  Item item;
  auto id = j.find("id");
  if (id == j.end() || !id->is_string()) throw DatasetError("missing string field 'id'", line);
  item.id = id->get<std::string>();
  auto title = j.find("title");
  if (title == j.end() || !title->is_string()) throw DatasetError("missing string field 'title'", line);
  item.title = title->get<std::string>();
  if (auto d = j.find("description"); d != j.end() && !d->is_null()) {
    if (!d->is_string()) throw DatasetError("'description' must be a string", line);
    item.description = d->get<std::string>();
  }
  if (auto e = j.find("image_embedding"); e != j.end() && !e->is_null()) {
    if (!e->is_array()) throw DatasetError("'image_embedding' must be an array", line);
    std::vector<double> emb;
    emb.reserve(e->size());
    for (const auto& v : *e) {
      if (!v.is_number()) throw DatasetError("'image_embedding' must hold numbers", line);
      emb.push_back(v.get<double>());
    }
    item.image_embedding = std::move(emb);
  }
  if (auto g = j.find("gold_label"); g != j.end() && !g->is_null()) {
    if (!g->is_number_integer()) throw DatasetError("'gold_label' must be 0 or 1", line);
    auto v = g->get<long long>();
    if (v != 0 && v != 1) throw DatasetError("'gold_label' must be 0 or 1", line);
    item.gold_label = label_from_int(v);
  }
  return item;
}

json item_to_json(const Item& item) {
  json j;
  j["id"] = item.id;
  j["title"] = item.title;
  if (item.description) j["description"] = *item.description;
  if (item.image_embedding) j["image_embedding"] = *item.image_embedding;
  if (item.gold_label) j["gold_label"] = to_int(*item.gold_label);
  return j;
}

// Shared validation, with optional source line numbers for diagnostics.
void validate_items(const std::vector<Item>& items, const std::vector<std::size_t>* lines,
                    std::unordered_map<std::string, std::size_t>& index,
                    std::optional<std::size_t>& embedding_dim) {
  index.clear();
  index.reserve(items.size());
  embedding_dim.reset();
  std::size_t dim_line = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const Item& item = items[i];
    const std::size_t line = lines ? (*lines)[i] : 0;
    if (item.id.empty()) throw DatasetError("empty id", line);
    if (trim(item.title).empty()) throw DatasetError("empty title for id '" + item.id + "'", line);
    auto [it, inserted] = index.emplace(item.id, i);
    if (!inserted) {
      std::string msg = "duplicate id '" + item.id + "'";
      if (lines) msg += " on lines " + std::to_string((*lines)[it->second]) + " and " + std::to_string(line);
      throw DatasetError(msg, line);
    }
    if (item.image_embedding) {
      const std::size_t dim = item.image_embedding->size();
      if (!embedding_dim) {
        embedding_dim = dim;
        dim_line = line;
      } else if (*embedding_dim != dim) {
        std::string msg = "inconsistent image_embedding dimension " + std::to_string(dim) + " for id '" + item.id +
                          "', expected " + std::to_string(*embedding_dim);
        if (lines) msg += " (from line " + std::to_string(dim_line) + ")";
        throw DatasetError(msg, line);
      }
    }
  }
}

}  // namespace

Label label_from_int(long long v) {
  if (v == 0) return Label::Irrelevant;
  if (v == 1) return Label::Relevant;
  throw ValidationError("label must be 0 or 1, got " + std::to_string(v));
}

std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

Corpus::Corpus(std::vector<Item> items) : items_(std::move(items)) {
  validate_items(items_, nullptr, index_, embedding_dim_);
  compute_stats(items_, stats_);
}

std::optional<std::size_t> Corpus::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

GoldSet::GoldSet(std::vector<Item> items) : items_(std::move(items)) {
  for (const auto& item : items_) {
    if (!item.gold_label) throw ValidationError("gold item '" + item.id + "' has no gold_label");
  }
}

Corpus parse_corpus(std::istream& in) {
  std::vector<Item> items;
  std::vector<std::size_t> lines;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DatasetError(std::string("malformed record: ") + e.what(), line_no);
    }
    items.push_back(item_from_json(j, line_no));
    lines.push_back(line_no);
  }
  // Validate with line numbers first so errors name their source lines.
  std::unordered_map<std::string, std::size_t> index;
  std::optional<std::size_t> dim;
  validate_items(items, &lines, index, dim);
  return Corpus(std::move(items));
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read corpus file " + path.string());
  return parse_corpus(in);
}

void write_item(std::ostream& out, const Item& item) { out << item_to_json(item).dump() << '\n'; }

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& item : corpus.items()) write_item(out, item);
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_corpus(out, corpus);
}

std::vector<std::string> parse_id_list(std::istream& in) {
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (!t.empty()) ids.emplace_back(t);
  }
  return ids;
}

std::vector<std::string> load_id_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read id list " + path.string());
  return parse_id_list(in);
}

void save_id_list(const std::filesystem::path& path, const std::vector<std::string>& ids) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& id : ids) out << id << '\n';
}

PoolGoldSplit split_pool_gold(const Corpus& corpus, const std::unordered_set<std::string>& gold_ids) {
  // Check in sorted order so the reported id is deterministic.
  std::vector<std::string> sorted(gold_ids.begin(), gold_ids.end());
  std::sort(sorted.begin(), sorted.end());
  for (const auto& id : sorted) {
    auto idx = corpus.index_of(id);
    if (!idx) throw ValidationError("gold id '" + id + "' not found in corpus");
    if (!corpus[*idx].gold_label) throw ValidationError("gold id '" + id + "' has no gold_label");
  }
  std::vector<Item> pool;
  std::vector<Item> gold;
  pool.reserve(corpus.size() - gold_ids.size());
  gold.reserve(gold_ids.size());
  for (const auto& item : corpus.items()) {
    (gold_ids.count(item.id) ? gold : pool).push_back(item);
  }
  return {Corpus(std::move(pool)), GoldSet(std::move(gold))};
}

}  // namespace lts
