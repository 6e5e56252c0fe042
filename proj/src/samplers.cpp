#include "lts/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lts/errors.hpp"
#include "lts/features.hpp"
#include "lts/rng.hpp"

namespace lts {

namespace {

std::vector<std::string> normalize(std::vector<std::string> entries, std::vector<std::vector<std::string>>& tokens,
                                   const char* list_name) {
  if (entries.empty()) throw ValidationError(std::string("keyword list '") + list_name + "' is empty");
  tokens.clear();
  for (auto& e : entries) {
    std::string t(trim(e));
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    auto toks = tokenize(t);
    if (toks.empty()) throw ValidationError(std::string("keyword list '") + list_name + "' has an empty entry");
    tokens.push_back(std::move(toks));
    e = std::move(t);
  }
  return entries;
}

bool contains_run(const std::vector<std::string>& haystack, const std::vector<std::string>& needle) {
  if (needle.size() > haystack.size()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

bool any_run(const std::vector<std::string>& tokens, const std::vector<std::vector<std::string>>& entries) {
  return std::any_of(entries.begin(), entries.end(), [&](const auto& e) { return contains_run(tokens, e); });
}

}  // namespace

KeywordRules::KeywordRules(std::vector<std::string> animal_names, std::vector<std::string> product_terms) {
  animal_names_ = normalize(std::move(animal_names), animal_tokens_, "animal_names");
  product_terms_ = normalize(std::move(product_terms), product_tokens_, "product_terms");
}

KeywordRules parse_keyword_rules(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed keyword rules: ") + e.what());
  }
  auto list = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_array()) {
      throw ValidationError(std::string("keyword rules need a string array '") + key + "'");
    }
    std::vector<std::string> out;
    for (const auto& v : j[key]) {
      if (!v.is_string()) throw ValidationError(std::string("'") + key + "' must hold strings");
      out.push_back(v.get<std::string>());
    }
    return out;
  };
  return KeywordRules(list("animal_names"), list("product_terms"));
}

KeywordRules load_keyword_rules(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read keyword rules " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_keyword_rules(ss.str());
}

bool kbs_matches(const KeywordRules& rules, std::string_view title) {
  const auto tokens = tokenize(title);
  return any_run(tokens, rules.animal_tokens()) && any_run(tokens, rules.product_tokens());
}

std::vector<std::size_t> kbs_candidates(const Corpus& pool, const KeywordRules& rules) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (kbs_matches(rules, pool[i].title)) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> random_sample(const Corpus& pool, std::size_t m, std::uint64_t seed) {
  if (m > pool.size()) {
    throw ValidationError("sample size " + std::to_string(m) + " exceeds pool size " + std::to_string(pool.size()));
  }
  Rng rng(seed);
  return sample_without_replacement(pool.size(), m, rng);
}

std::vector<std::size_t> kbs_sample(std::span<const std::size_t> candidates, const Corpus& pool, std::size_t m,
                                    std::uint64_t seed, double candidate_fraction) {
  if (m > pool.size()) {
    throw ValidationError("sample size " + std::to_string(m) + " exceeds pool size " + std::to_string(pool.size()));
  }
  if (!(candidate_fraction >= 0.0 && candidate_fraction <= 1.0)) {
    throw ValidationError("kbs_candidate_fraction must lie in [0, 1]");
  }
  std::vector<bool> is_candidate(pool.size(), false);
  for (auto c : candidates) {
    if (c >= pool.size()) throw ValidationError("candidate index out of range");
    is_candidate[c] = true;
  }
  std::vector<std::size_t> cand;
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < pool.size(); ++i) (is_candidate[i] ? cand : rest).push_back(i);

  Rng rng(seed);
  const auto target = static_cast<std::size_t>(std::ceil(static_cast<double>(m) * candidate_fraction));
  const std::size_t take = std::min(cand.size(), target);
  auto pick_c = sample_without_replacement(cand.size(), cand.size(), rng);
  auto pick_r = sample_without_replacement(rest.size(), rest.size(), rng);

  std::vector<std::size_t> out;
  out.reserve(m);
  for (std::size_t i = 0; i < take; ++i) out.push_back(cand[pick_c[i]]);
  for (std::size_t i = 0; i < pick_r.size() && out.size() < m; ++i) out.push_back(rest[pick_r[i]]);
  for (std::size_t i = take; i < pick_c.size() && out.size() < m; ++i) out.push_back(cand[pick_c[i]]);
  return out;
}

}  // namespace lts
