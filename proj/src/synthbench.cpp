#include "lts/synthbench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <ostream>
#include <unordered_set>

#include "lts/errors.hpp"
#include "lts/labelers.hpp"
#include "lts/rng.hpp"

namespace lts {

namespace {

std::string topic_word(std::size_t topic, std::size_t j) { return "t" + std::to_string(topic) + "w" + std::to_string(j); }
std::string marker_word(std::size_t j) { return "p" + std::to_string(j); }
std::string shared_word(std::size_t j) { return "c" + std::to_string(j); }

}  // namespace

SynthSpec SynthSpec::diffuse() {
  SynthSpec s;
  s.positive_topics.clear();
  for (std::size_t t = 0; t < s.n_topics; ++t) s.positive_topics.push_back(t);
  return s;
}

std::size_t SynthSpec::positive_count() const {
  return static_cast<std::size_t>(std::llround(positive_rate * static_cast<double>(n_items)));
}

void SynthSpec::validate() const {
  if (n_items == 0) throw ValidationError("n_items must be >= 1");
  if (!(positive_rate > 0.0 && positive_rate < 1.0)) throw ValidationError("positive_rate must lie in (0, 1)");
  if (positive_rate * static_cast<double>(n_items) < 1.0) {
    throw ValidationError("infeasible SynthSpec: positive_rate * n_items < 1");
  }
  if (n_topics == 0) throw ValidationError("n_topics must be >= 1");
  if (positive_topics.empty()) throw ValidationError("positive_topics must be nonempty");
  std::unordered_set<std::size_t> seen;
  for (auto t : positive_topics) {
    if (t >= n_topics) throw ValidationError("positive topic " + std::to_string(t) + " out of range");
    if (!seen.insert(t).second) throw ValidationError("duplicate positive topic");
  }
  if (topic_vocab == 0 || marker_vocab == 0) throw ValidationError("topic and marker vocabularies must be nonempty");
  if (!(topic_word_prob >= 0.0 && topic_word_prob <= 1.0)) throw ValidationError("topic_word_prob must lie in [0, 1]");
  if (!(marker_noise >= 0.0 && marker_noise <= 1.0)) throw ValidationError("marker_noise must lie in [0, 1]");
  if (min_title_len < 2 || max_title_len < min_title_len) throw ValidationError("bad title length range");
}

Corpus generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::vector<std::size_t> topic(spec.n_items);
  for (auto& t : topic) t = rng.below(spec.n_topics);

  std::vector<bool> in_pos_topic(spec.n_topics, false);
  for (auto t : spec.positive_topics) in_pos_topic[t] = true;
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < spec.n_items; ++i) {
    if (in_pos_topic[topic[i]]) eligible.push_back(i);
  }
  const std::size_t n_pos = spec.positive_count();
  if (n_pos > eligible.size()) {
    throw ValidationError("infeasible SynthSpec: positive topics hold only " + std::to_string(eligible.size()) + " items");
  }
  std::vector<bool> positive(spec.n_items, false);
  for (auto k : sample_without_replacement(eligible.size(), n_pos, rng)) positive[eligible[k]] = true;

  std::vector<Item> items;
  items.reserve(spec.n_items);
  const int width = static_cast<int>(std::to_string(spec.n_items).size());
  for (std::size_t i = 0; i < spec.n_items; ++i) {
    const std::size_t len = spec.min_title_len + rng.below(spec.max_title_len - spec.min_title_len + 1);
    std::vector<std::string> words;
    if (positive[i]) {
      words.push_back(marker_word(rng.below(spec.marker_vocab)));
      if (rng.uniform() < 0.3) words.push_back(marker_word(rng.below(spec.marker_vocab)));
    } else if (!in_pos_topic[topic[i]] && rng.uniform() < spec.marker_noise) {
      words.push_back(marker_word(rng.below(spec.marker_vocab)));
    }
    // At least one topic word, so every title is tied to its topic.
    words.push_back(topic_word(topic[i], rng.below(spec.topic_vocab)));
    while (words.size() < len) {
      if (spec.shared_vocab == 0 || rng.uniform() < spec.topic_word_prob) {
        words.push_back(topic_word(topic[i], rng.below(spec.topic_vocab)));
      } else {
        words.push_back(shared_word(rng.below(spec.shared_vocab)));
      }
    }
    rng.shuffle(words);
    std::string title;
    for (const auto& w : words) {
      if (!title.empty()) title += ' ';
      title += w;
    }
    std::ostringstream id;
    id << "s" << std::setw(width) << std::setfill('0') << i;
    Item item;
    item.id = id.str();
    item.title = std::move(title);
    item.gold_label = positive[i] ? Label::Relevant : Label::Irrelevant;
    items.push_back(std::move(item));
  }
  return Corpus(std::move(items));
}

std::vector<std::string> gold_split(const Corpus& corpus, std::size_t n_gold, std::uint64_t seed) {
  if (n_gold > corpus.size()) throw ValidationError("gold size exceeds corpus size");
  Rng rng(seed);
  auto picks = sample_without_replacement(corpus.size(), n_gold, rng);
  std::sort(picks.begin(), picks.end());
  std::vector<std::string> ids;
  ids.reserve(n_gold);
  for (auto p : picks) ids.push_back(corpus[p].id);
  return ids;
}

KeywordRules synth_keyword_rules(const SynthSpec& spec, std::size_t entity_words, std::size_t markers) {
  std::vector<std::string> animals, products;
  for (auto t : spec.positive_topics) {
    for (std::size_t j = 0; j < std::min(entity_words, spec.topic_vocab); ++j) animals.push_back(topic_word(t, j));
  }
  for (std::size_t j = 0; j < std::min(markers, spec.marker_vocab); ++j) products.push_back(marker_word(j));
  return KeywordRules(std::move(animals), std::move(products));
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<CompareRow> paired_compare(const Corpus& corpus, const std::vector<std::string>& gold_ids,
                                       const CompareOptions& opts) {
  if (opts.strategies.empty()) throw ValidationError("paired_compare needs at least one strategy");
  for (const auto& s : opts.strategies) {
    if (s != "lts" && s != "random" && s != "kbs") throw ValidationError("unknown strategy '" + s + "'");
    if (s == "kbs" && !opts.rules) throw ValidationError("kbs strategy needs keyword rules");
  }
  const auto split = split_pool_gold(corpus, {gold_ids.begin(), gold_ids.end()});
  const OracleLabeler oracle(gold_lookup_from(split.pool));

  std::vector<CompareRow> rows;
  for (const auto& strategy : opts.strategies) {
    for (auto budget : opts.budgets) {
      for (auto seed : opts.seeds) {
        LtsConfig cfg = opts.base;
        cfg.max_calls = budget;
        cfg.seed = seed;
        const auto start = std::chrono::steady_clock::now();
        RunResult r;
        if (strategy == "lts") {
          r = run_lts(split.pool, split.gold, oracle, cfg);
        } else {
          BaselineOptions b;
          b.strategy = strategy == "kbs" ? BaselineStrategy::Kbs : BaselineStrategy::Random;
          b.m = std::min<std::size_t>(budget, split.pool.size());
          b.rules = opts.rules ? &*opts.rules : nullptr;
          r = run_baseline(split.pool, split.gold, oracle, b, cfg);
        }
        CompareRow row;
        row.strategy = strategy;
        row.budget = budget;
        row.seed = seed;
        if (r.metrics && !r.no_data) {
          row.f1 = r.metrics->positive.f1;
          row.precision = r.metrics->positive.precision;
          row.recall = r.metrics->positive.recall;
        }
        row.s_pos = r.labeled.s_pos();
        row.s_neg = r.labeled.s_neg();
        row.ratio = r.labeled.ratio().value_or(0.0);
        row.calls = r.calls;
        row.cost = r.cost;
        row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        row.no_data = r.no_data;
        rows.push_back(row);
      }
    }
  }
  const std::size_t per_seed = rows.size();
  for (const auto& strategy : opts.strategies) {
    for (auto budget : opts.budgets) {
      std::vector<double> f1, p, rc, ratio, wall, spos, sneg, calls, cost;
      bool no_data = true;
      for (std::size_t i = 0; i < per_seed; ++i) {
        const auto& r = rows[i];
        if (r.strategy != strategy || r.budget != budget) continue;
        f1.push_back(r.f1);
        p.push_back(r.precision);
        rc.push_back(r.recall);
        ratio.push_back(r.ratio);
        wall.push_back(r.wall_s);
        spos.push_back(static_cast<double>(r.s_pos));
        sneg.push_back(static_cast<double>(r.s_neg));
        calls.push_back(static_cast<double>(r.calls));
        cost.push_back(r.cost);
        no_data = no_data && r.no_data;
      }
      CompareRow m;
      m.strategy = strategy;
      m.budget = budget;
      m.f1 = median(f1);
      m.precision = median(p);
      m.recall = median(rc);
      m.ratio = median(ratio);
      m.s_pos = static_cast<std::size_t>(median(spos));
      m.s_neg = static_cast<std::size_t>(median(sneg));
      m.calls = static_cast<std::uint64_t>(median(calls));
      m.cost = median(cost);
      m.wall_s = median(wall);
      m.no_data = no_data;
      rows.push_back(m);
    }
  }
  return rows;
}

void write_compare_table(std::ostream& out, const std::vector<CompareRow>& rows) {
  out << "strategy,budget,seed,f1,precision,recall,s_pos,s_neg,ratio,calls,cost,wall_s,no_data\n";
  out << std::setprecision(6);
  for (const auto& r : rows) {
    out << r.strategy << ',' << r.budget << ',' << (r.seed ? std::to_string(*r.seed) : std::string("median")) << ','
        << r.f1 << ',' << r.precision << ',' << r.recall << ',' << r.s_pos << ',' << r.s_neg << ',' << r.ratio << ','
        << r.calls << ',' << r.cost << ',' << r.wall_s << ',' << (r.no_data ? 1 : 0) << '\n';
  }
}

}  // namespace lts
