#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lts/dataset.hpp"
#include "lts/orchestrator.hpp"
#include "lts/samplers.hpp"

namespace lts {

// Synthetic imbalanced corpus. Every topic has its own vocabulary. Positives
// live only in `positive_topics` and each carries one or two product marker
// tokens drawn from a small shared set; with marker_noise > 0 markers also
// leak into negatives outside the positive topics.
struct SynthSpec {
  std::size_t n_items = 20000;
  double positive_rate = 0.05;
  std::size_t n_topics = 20;
  std::vector<std::size_t> positive_topics{0, 1, 2};
  std::size_t topic_vocab = 15;
  std::size_t shared_vocab = 1000;
  /// Chance that a filler word comes from the item's topic rather than the shared pool.
  double topic_word_prob = 0.75;
  std::size_t marker_vocab = 8;
  /// Probability that a negative outside the positive topics carries a marker.
  double marker_noise = 0.0;
  std::size_t min_title_len = 5;
  std::size_t max_title_len = 10;
  std::uint64_t seed = 1;

  /// Positives spread across every topic; LTS should gain little here.
  static SynthSpec diffuse();
  void validate() const;
  std::size_t positive_count() const;
};

Corpus generate(const SynthSpec& spec);

/// Random gold ids, drawn without replacement.
std::vector<std::string> gold_split(const Corpus& corpus, std::size_t n_gold, std::uint64_t seed);

/// Keyword rules that only know a subset of each positive topic's entity words
/// and of the markers, mimicking biased expert keyword lists.
KeywordRules synth_keyword_rules(const SynthSpec& spec, std::size_t entity_words = 10, std::size_t markers = 4);

struct CompareRow {
  std::string strategy;
  std::uint64_t budget = 0;
  std::optional<std::uint64_t> seed;  // absent on median rows
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::size_t s_pos = 0;
  std::size_t s_neg = 0;
  double ratio = 0.0;  // S_pos / S_neg, 0 when undefined
  std::uint64_t calls = 0;
  double cost = 0.0;
  double wall_s = 0.0;
  bool no_data = false;
};

struct CompareOptions {
  std::vector<std::string> strategies{"lts", "random"};  // lts | random | kbs
  std::vector<std::uint64_t> budgets{1000};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  LtsConfig base;
  std::optional<KeywordRules> rules;  // required for kbs
};

/// Runs every strategy for each budget and seed with identical budgets; the
/// oracle labeler answers from the corpus gold labels. Per-seed rows come
/// first, then one median row per (strategy, budget).
std::vector<CompareRow> paired_compare(const Corpus& corpus, const std::vector<std::string>& gold_ids,
                                       const CompareOptions& opts);

void write_compare_table(std::ostream& out, const std::vector<CompareRow>& rows);

double median(std::vector<double> values);

}  // namespace lts
