#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "lts/errors.hpp"
#include "lts/labelers.hpp"
#include "lts/synthbench.hpp"

using namespace lts;

namespace {

std::size_t topic_of(const std::string& title) {
  // Topic words look like t<topic>w<j>; every item carries at least one.
  std::istringstream in(title);
  std::string w;
  while (in >> w) {
    if (w.size() > 1 && w[0] == 't') {
      const auto at = w.find('w');
      if (at != std::string::npos) return std::stoul(w.substr(1, at - 1));
    }
  }
  return static_cast<std::size_t>(-1);
}

LtsConfig tiny_lts() {
  LtsConfig cfg;
  cfg.k = 4;
  cfg.n_per_iter = 20;
  cfg.replay_all = true;
  cfg.featurizer.dim = 1 << 12;
  cfg.train.max_epochs = 10;
  cfg.grid_learning_rates = {32.0};
  cfg.grid_weight_decays = {0.0};
  return cfg;
}

}  // namespace

TEST_CASE("realized positive count tracks the rate") {
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    SynthSpec spec;
    spec.seed = seed;
    const auto corpus = generate(spec);
    CHECK(corpus.size() == 20000);
    const auto& st = corpus.stats();
    CHECK(st.n_pos + st.n_neg == 20000);
    CHECK(std::llabs(static_cast<long long>(st.n_pos) - 1000) <= 200);
    CHECK(std::abs(static_cast<double>(st.n_pos) / 20000.0 - 0.05) <= 0.01);
    REQUIRE(st.k);
    CHECK(*st.k == doctest::Approx(1000.0 / 19000.0).epsilon(0.2));
  }
}

TEST_CASE("positives only appear in positive topics") {
  SynthSpec spec;
  spec.n_items = 5000;
  const auto corpus = generate(spec);
  const std::set<std::size_t> pos_topics(spec.positive_topics.begin(), spec.positive_topics.end());
  for (const auto& it : corpus.items()) {
    REQUIRE(it.gold_label);
    const auto topic = topic_of(it.title);
    REQUIRE(topic < spec.n_topics);
    if (is_positive(*it.gold_label)) CHECK(pos_topics.count(topic) == 1);
    // Only positives carry markers when marker noise is off.
    const bool has_marker = (" " + it.title + " ").find(" p") != std::string::npos;
    CHECK(has_marker == is_positive(*it.gold_label));
  }
}

TEST_CASE("generation is deterministic given the seed") {
  SynthSpec spec;
  spec.n_items = 2000;
  CHECK(generate(spec).items() == generate(spec).items());
  auto other = spec;
  other.seed = 2;
  CHECK(generate(spec).items() != generate(other).items());
}

TEST_CASE("single topic corpus") {
  SynthSpec spec;
  spec.n_items = 1000;
  spec.n_topics = 1;
  spec.positive_topics = {0};
  const auto corpus = generate(spec);
  CHECK(corpus.stats().n_pos == 50);
  for (const auto& it : corpus.items()) CHECK(topic_of(it.title) == 0);
}

TEST_CASE("infeasible and invalid specs") {
  SynthSpec spec;
  spec.n_items = 10;
  spec.positive_rate = 0.05;
  CHECK_THROWS_AS(generate(spec), ValidationError);
  spec = {};
  spec.positive_topics = {};
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = {};
  spec.positive_topics = {20};
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = {};
  spec.positive_topics = {1, 1};
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = {};
  spec.positive_rate = 1.0;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = {};
  spec.min_title_len = 8;
  spec.max_title_len = 6;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  // Positive topics too small to hold the requested positives.
  spec = {};
  spec.n_items = 1000;
  spec.positive_rate = 0.5;
  spec.positive_topics = {0};
  CHECK_THROWS_AS(generate(spec), ValidationError);
}

TEST_CASE("diffuse setting spreads positives over every topic") {
  auto spec = SynthSpec::diffuse();
  spec.n_items = 4000;
  CHECK(spec.positive_topics.size() == spec.n_topics);
  const auto corpus = generate(spec);
  std::set<std::size_t> seen;
  for (const auto& it : corpus.items()) {
    if (is_positive(*it.gold_label)) seen.insert(topic_of(it.title));
  }
  CHECK(seen.size() == spec.n_topics);
}

TEST_CASE("oracle labeler is total on generated corpora") {
  SynthSpec spec;
  spec.n_items = 3000;
  const auto corpus = generate(spec);
  const auto lookup = gold_lookup_from(corpus);
  CHECK(lookup.size() == corpus.size());
  for (const auto& it : corpus.items()) CHECK(label_oracle(lookup, it).label == *it.gold_label);
}

TEST_CASE("gold_split") {
  SynthSpec spec;
  spec.n_items = 500;
  const auto corpus = generate(spec);
  const auto ids = gold_split(corpus, 100, 9);
  CHECK(ids.size() == 100);
  CHECK(std::set<std::string>(ids.begin(), ids.end()).size() == 100);
  CHECK(ids == gold_split(corpus, 100, 9));
  CHECK(std::is_sorted(ids.begin(), ids.end()));
  CHECK_THROWS_AS(gold_split(corpus, 501, 9), ValidationError);
}

TEST_CASE("median") {
  CHECK(median({}) == 0.0);
  CHECK(median({3.0}) == 3.0);
  CHECK(median({5.0, 1.0, 3.0}) == 3.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
}

TEST_CASE("paired_compare with one strategy and seed equals the run") {
  SynthSpec spec;
  spec.n_items = 1500;
  spec.n_topics = 6;
  spec.positive_topics = {0};
  const auto corpus = generate(spec);
  const auto gold_ids = gold_split(corpus, 300, 1);

  CompareOptions opts;
  opts.strategies = {"lts"};
  opts.budgets = {120};
  opts.seeds = {7};
  opts.base = tiny_lts();
  const auto rows = paired_compare(corpus, gold_ids, opts);
  REQUIRE(rows.size() == 2);  // per-seed row then median row

  const auto split = split_pool_gold(corpus, {gold_ids.begin(), gold_ids.end()});
  auto cfg = opts.base;
  cfg.max_calls = 120;
  cfg.seed = 7;
  const auto r = run_lts(split.pool, split.gold, OracleLabeler(gold_lookup_from(split.pool)), cfg);
  const auto& row = rows[0];
  CHECK(row.strategy == "lts");
  CHECK(row.seed == 7u);
  CHECK(row.f1 == r.metrics->positive.f1);
  CHECK(row.recall == r.metrics->positive.recall);
  CHECK(row.s_pos == r.labeled.s_pos());
  CHECK(row.s_neg == r.labeled.s_neg());
  CHECK(row.calls == 120);
  CHECK(row.cost == r.cost);
  CHECK_FALSE(rows[1].seed);
  CHECK(rows[1].f1 == row.f1);
  CHECK(rows[1].ratio == row.ratio);
}

TEST_CASE("paired_compare with no budget yields no-data rows") {
  SynthSpec spec;
  spec.n_items = 1000;
  const auto corpus = generate(spec);
  const auto gold_ids = gold_split(corpus, 200, 1);
  CompareOptions opts;
  opts.strategies = {"lts", "random"};
  opts.budgets = {0};
  opts.seeds = {1, 2};
  opts.base = tiny_lts();
  const auto rows = paired_compare(corpus, gold_ids, opts);
  CHECK(rows.size() == 6);
  for (const auto& r : rows) {
    CHECK(r.no_data);
    CHECK(r.f1 == 0.0);
    CHECK(r.precision == 0.0);
    CHECK(r.recall == 0.0);
    CHECK(r.ratio == 0.0);
    CHECK(r.s_pos == 0);
    CHECK(r.s_neg == 0);
    CHECK(r.calls == 0);
    CHECK(r.cost == 0.0);
  }
  std::ostringstream out;
  write_compare_table(out, rows);
  std::string line;
  std::istringstream in(out.str());
  std::getline(in, line);
  CHECK(line == "strategy,budget,seed,f1,precision,recall,s_pos,s_neg,ratio,calls,cost,wall_s,no_data");
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    CHECK(line.back() == '1');
  }
  CHECK(n == 6);
}

TEST_CASE("paired_compare argument errors") {
  SynthSpec spec;
  spec.n_items = 1000;
  const auto corpus = generate(spec);
  const auto gold_ids = gold_split(corpus, 200, 1);
  CompareOptions opts;
  opts.base = tiny_lts();
  opts.strategies = {};
  CHECK_THROWS_AS(paired_compare(corpus, gold_ids, opts), ValidationError);
  opts.strategies = {"greedy"};
  CHECK_THROWS_AS(paired_compare(corpus, gold_ids, opts), ValidationError);
  opts.strategies = {"kbs"};
  CHECK_THROWS_AS(paired_compare(corpus, gold_ids, opts), ValidationError);
}

TEST_CASE("synthetic keyword rules") {
  SynthSpec spec;
  const auto rules = synth_keyword_rules(spec, 4, 2);
  CHECK(rules.animal_names().size() == 12);
  CHECK(rules.animal_names().front() == "t0w0");
  CHECK(rules.product_terms() == std::vector<std::string>{"p0", "p1"});
}
