#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lts/dataset.hpp"

namespace lts {

// Keyword lists for knowledge-based sampling. Entries are stored tokenized so
// multiword names match as consecutive token runs.
class KeywordRules {
 public:
  /// Lowercases and trims entries; throws ValidationError if a list is empty
  /// or an entry has no tokens.
  KeywordRules(std::vector<std::string> animal_names, std::vector<std::string> product_terms);

  const std::vector<std::string>& animal_names() const { return animal_names_; }
  const std::vector<std::string>& product_terms() const { return product_terms_; }
  const std::vector<std::vector<std::string>>& animal_tokens() const { return animal_tokens_; }
  const std::vector<std::vector<std::string>>& product_tokens() const { return product_tokens_; }

 private:
  std::vector<std::string> animal_names_;
  std::vector<std::string> product_terms_;
  std::vector<std::vector<std::string>> animal_tokens_;
  std::vector<std::vector<std::string>> product_tokens_;
};

/// JSON object with string arrays `animal_names` and `product_terms`.
KeywordRules load_keyword_rules(const std::filesystem::path& path);
KeywordRules parse_keyword_rules(std::string_view json_text);

/// True iff the title contains an animal entry and a product entry at token boundaries.
bool kbs_matches(const KeywordRules& rules, std::string_view title);

/// Pool indices whose titles match, in pool order.
std::vector<std::size_t> kbs_candidates(const Corpus& pool, const KeywordRules& rules);

/// m distinct pool indices drawn uniformly. Throws ValidationError if m > N.
std::vector<std::size_t> random_sample(const Corpus& pool, std::size_t m, std::uint64_t seed);

/// Takes min(|candidates|, ceil(m * candidate_fraction)) candidates uniformly,
/// then fills from non-candidates (and from leftover candidates only if the
/// non-candidates run out).
std::vector<std::size_t> kbs_sample(std::span<const std::size_t> candidates, const Corpus& pool, std::size_t m,
                                    std::uint64_t seed, double candidate_fraction = 0.5);

}  // namespace lts
