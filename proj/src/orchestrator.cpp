#include "lts/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <ostream>
#include <thread>

#include <nlohmann/json.hpp>

#include "lts/clustering.hpp"
#include "lts/errors.hpp"
#include "lts/rng.hpp"

namespace lts {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Stream ids for seeded sub-generators.
enum : std::uint64_t { kStreamCluster = 1, kStreamBandit, kStreamSelect, kStreamBaseline, kStreamTrain = 1000 };

struct BatchOutcome {
  std::vector<LabelResult> labeled;  // in batch order
  std::vector<std::size_t> labeled_index;
  std::vector<std::size_t> consumed;  // items that must not be queried again
  bool hard_failure = false;
  std::string failure;
};

// Labels a batch with up to `parallel` concurrent calls. Results are merged in
// batch order so the outcome does not depend on thread scheduling.
BatchOutcome label_batch(const Corpus& pool, std::span<const std::size_t> batch, const Labeler& labeler,
                         Budget& budget, std::size_t parallel) {
  const std::size_t n = batch.size();
  std::vector<std::optional<LabelResult>> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i] = labeler.label(pool[batch[i]], budget);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(std::max<std::size_t>(parallel, 1), n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool_threads;
    pool_threads.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool_threads.emplace_back(worker);
    for (auto& th : pool_threads) th.join();
  }

  BatchOutcome out;
  for (std::size_t i = 0; i < n; ++i) {
    if (results[i]) {
      out.labeled.push_back(std::move(*results[i]));
      out.labeled_index.push_back(batch[i]);
      out.consumed.push_back(batch[i]);
      continue;
    }
    try {
      std::rethrow_exception(errors[i]);
    } catch (const LabelParseError&) {
      // Unusable answer after retries; the calls were paid, do not ask again.
      out.consumed.push_back(batch[i]);
    } catch (const BudgetExhausted&) {
      // Ran dry mid-retry; the loop stops on the empty budget.
      out.consumed.push_back(batch[i]);
    } catch (const TransportError& e) {
      out.consumed.push_back(batch[i]);
      if (!out.hard_failure) out.failure = e.what();
      out.hard_failure = true;
    } catch (const std::exception& e) {
      if (!out.hard_failure) out.failure = e.what();
      out.hard_failure = true;
    }
  }
  return out;
}

std::vector<Example> examples_for(const LabeledSet& labeled, std::span<const SparseVector> features,
                                  std::size_t from = 0) {
  std::vector<Example> out;
  out.reserve(labeled.size() - from);
  for (std::size_t i = from; i < labeled.size(); ++i) {
    const auto& e = labeled.entries()[i];
    out.push_back({features[e.pool_index], e.label});
  }
  return out;
}

void train_target(RunResult& result, std::span<const SparseVector> features, std::span<const Example> gold_examples,
                  const LtsConfig& cfg) {
  const auto start = Clock::now();
  result.target = ModelWeights::zeros(cfg.featurizer.dim);
  if (result.labeled.empty()) {
    result.no_data = true;
    if (result.stop_reason.empty()) result.stop_reason = "no data";
  } else {
    const auto samples = examples_for(result.labeled, features);
    try {
      auto grid = grid_search(ModelWeights::zeros(cfg.featurizer.dim), samples, cfg.train, cfg.grid_learning_rates,
                              cfg.grid_weight_decays, gold_examples);
      result.target = std::move(grid.weights);
      result.target_config = grid.best_config;
    } catch (const TrainingDiverged& e) {
      result.truncated = true;
      result.stop_reason = std::string("target training failed: ") + e.what();
    }
  }
  if (!gold_examples.empty()) result.metrics = evaluate(result.target, gold_examples);
  result.timings.training_s += seconds_since(start);
}

std::vector<SparseVector> featurize_pool(const Corpus& pool, const FeaturizerConfig& cfg) {
  std::vector<SparseVector> out;
  out.reserve(pool.size());
  for (const auto& item : pool.items()) out.push_back(featurize_item(item, cfg));
  return out;
}

}  // namespace

void LtsConfig::validate() const {
  featurizer.validate();
  bandit.validate();
  train.validate();
  if (k < 1) throw ValidationError("K must be >= 1");
  if (n_per_iter < 1) throw ValidationError("n_per_iter must be >= 1");
  const std::size_t mp = resolved_max_pos();
  if (mp == 0 || mp > n_per_iter) throw ValidationError("max_pos must satisfy 0 < max_pos <= n_per_iter");
  if (!(baseline_init >= 0.0 && baseline_init <= 1.0)) throw ValidationError("baseline_init must lie in [0, 1]");
  if (target_f1 && !(*target_f1 >= 0.0 && *target_f1 <= 1.0)) throw ValidationError("target_f1 must lie in [0, 1]");
  if (!(per_call_cost >= 0.0) || !std::isfinite(per_call_cost)) throw ValidationError("per_call_cost must be >= 0");
  if (grid_learning_rates.empty() || grid_weight_decays.empty()) throw ValidationError("grid must be nonempty");
  for (double lr : grid_learning_rates) {
    if (!(lr > 0.0)) throw ValidationError("grid learning rates must be > 0");
  }
  for (double wd : grid_weight_decays) {
    if (!(wd >= 0.0)) throw ValidationError("grid weight decays must be >= 0");
  }
}

void LabeledSet::add(LabeledEntry entry) {
  if (!ids_.insert(entry.item_id).second) throw ValidationError("item '" + entry.item_id + "' labeled twice");
  (is_positive(entry.label) ? s_pos_ : s_neg_) += 1;
  entries_.push_back(std::move(entry));
}

std::optional<double> LabeledSet::ratio() const {
  if (s_neg_ == 0) return std::nullopt;
  return static_cast<double>(s_pos_) / static_cast<double>(s_neg_);
}

std::vector<std::size_t> select_samples(std::span<const std::size_t> members, std::span<const SparseVector> features,
                                        const ModelWeights* model, std::size_t n, std::size_t max_pos, Rng& rng) {
  if (members.empty()) throw ValidationError("cluster has no unlabeled items left");
  const std::size_t take = std::min(n, members.size());
  if (model == nullptr) {
    auto picks = sample_without_replacement(members.size(), take, rng);
    std::vector<std::size_t> out;
    out.reserve(take);
    for (auto p : picks) out.push_back(members[p]);
    return out;
  }
  if (take == members.size()) return {members.begin(), members.end()};

  struct Scored {
    double p;
    std::size_t index;
  };
  std::vector<Scored> pos, neg;
  for (auto idx : members) {
    const double p = predict(*model, features[idx]);
    (predicted_positive(p) ? pos : neg).push_back({p, idx});
  }
  auto by_prob = [](const Scored& a, const Scored& b) { return a.p > b.p || (a.p == b.p && a.index < b.index); };
  std::sort(pos.begin(), pos.end(), by_prob);
  std::sort(neg.begin(), neg.end(), by_prob);

  std::vector<std::size_t> out;
  out.reserve(take);
  const std::size_t n_pos = std::min(pos.size(), std::min(max_pos, take));
  for (std::size_t i = 0; i < n_pos; ++i) out.push_back(pos[i].index);
  for (std::size_t i = 0; i < neg.size() && out.size() < take; ++i) out.push_back(neg[i].index);
  for (std::size_t i = n_pos; i < pos.size() && out.size() < take; ++i) out.push_back(pos[i].index);
  return out;
}

RunResult run_lts(const Corpus& pool, const GoldSet& gold, const Labeler& labeler, const LtsConfig& cfg,
                  const LtsHooks& hooks) {
  cfg.validate();
  if (gold.empty()) throw ValidationError("gold set is empty");
  if (pool.empty()) throw ValidationError("pool is empty");
  for (const auto& g : gold.items()) {
    if (pool.contains(g.id)) throw ValidationError("gold item '" + g.id + "' is also in the pool");
  }
  if (cfg.k > pool.size()) {
    throw ValidationError("K=" + std::to_string(cfg.k) + " exceeds pool size " + std::to_string(pool.size()));
  }

  RunResult result;
  Budget budget(cfg.max_calls, cfg.per_call_cost);
  const auto features = featurize_pool(pool, cfg.featurizer);
  const auto gold_examples = make_gold_examples(gold, cfg.featurizer);

  auto start = Clock::now();
  const auto clusters = kmeans(features, cfg.k, Rng::derive(cfg.seed, kStreamCluster));
  result.timings.cluster_s = seconds_since(start);

  std::vector<std::vector<std::size_t>> remaining = clusters.members;
  std::vector<bool> consumed(pool.size(), false);
  BanditState bandit(cfg.k);
  Rng bandit_rng(Rng::derive(cfg.seed, kStreamBandit));
  Rng select_rng(Rng::derive(cfg.seed, kStreamSelect));
  const BetaDraw draw = beta_draw_from(bandit_rng);

  ModelWeights current = ModelWeights::zeros(cfg.featurizer.dim);
  bool has_model = false;
  std::uint64_t next_version = 1;
  double baseline = cfg.baseline_init;

  for (std::size_t t = 1; t <= cfg.max_iterations; ++t) {
    if (budget.exhausted()) {
      result.stop_reason = "budget exhausted";
      break;
    }
    std::vector<bool> eligible(cfg.k);
    bool any = false;
    for (std::size_t c = 0; c < cfg.k; ++c) any |= (eligible[c] = !remaining[c].empty());
    if (!any) {
      result.stop_reason = "all clusters exhausted";
      break;
    }
    const std::size_t arm = select_arm(bandit, cfg.bandit, draw, eligible);

    start = Clock::now();
    const bool use_model = has_model && !hooks.model_free_selection;
    auto batch = select_samples(remaining[arm], features, use_model ? &current : nullptr, cfg.n_per_iter,
                                cfg.resolved_max_pos(), select_rng);
    result.timings.inference_s += seconds_since(start);
    // Never dispatch more single-call requests than the budget allows, so a
    // deterministic labeler yields a deterministic cut-off.
    if (batch.size() > budget.remaining()) batch.resize(budget.remaining());

    start = Clock::now();
    auto outcome = label_batch(pool, batch, labeler, budget, cfg.parallel_labels);
    result.timings.labeling_s += seconds_since(start);

    for (auto idx : outcome.consumed) consumed[idx] = true;
    auto& rem = remaining[arm];
    rem.erase(std::remove_if(rem.begin(), rem.end(), [&](std::size_t i) { return consumed[i]; }), rem.end());

    const std::size_t first_new = result.labeled.size();
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < outcome.labeled.size(); ++i) {
      const auto& r = outcome.labeled[i];
      n_pos += is_positive(r.label) ? 1 : 0;
      result.labeled.add({outcome.labeled_index[i], r.item_id, r.label, labeler.name(), t});
    }

    if (outcome.labeled.empty() && outcome.hard_failure) {
      result.truncated = true;
      result.stop_reason = "labeler failure: " + outcome.failure;
      break;
    }

    IterationRecord rec;
    rec.t = t;
    rec.cluster = arm;
    rec.n_labeled = outcome.labeled.size();
    rec.n_pseudo_pos = n_pos;
    rec.f1_before = baseline;

    start = Clock::now();
    bool won = false;
    bool adopted = false;
    if (!outcome.labeled.empty()) {
      const auto samples = examples_for(result.labeled, features, cfg.replay_all ? 0 : first_new);
      if (hooks.on_train_start) hooks.on_train_start(t, current);
      TrainConfig tc = cfg.train;
      tc.seed = Rng::derive(cfg.train.seed, kStreamTrain + t);
      try {
        ModelWeights trained = train(current, samples, tc, gold_examples);
        trained.version = next_version++;
        double f1 = evaluate(trained, gold_examples).positive.f1;
        if (hooks.score) f1 = hooks.score(t, trained, f1);
        rec.f1_after = f1;
        won = f1 > baseline;
        // The first trained model always becomes the base model and sets the
        // baseline; later models must beat it or are reverted.
        if (won || !has_model) {
          adopted = true;
          current = std::move(trained);
          baseline = f1;
          has_model = true;
        }
      } catch (const TrainingDiverged&) {
        rec.f1_after = 0.0;
      }
    }
    result.timings.training_s += seconds_since(start);

    update(bandit, arm, won, cfg.bandit);
    rec.reward = won ? 1 : 0;
    rec.baseline_after = baseline;
    rec.reverted = !adopted;
    rec.cumulative_calls = budget.spent_calls();
    rec.cumulative_cost = budget.total_cost();
    result.iterations.push_back(rec);
    result.arm_trace.push_back({t, bandit.arms});

    if (outcome.hard_failure) {
      result.truncated = true;
      result.stop_reason = "labeler failure: " + outcome.failure;
      break;
    }
    if (cfg.target_f1 && has_model && baseline >= *cfg.target_f1) {
      result.stop_reason = "target F1 reached";
      break;
    }
    if (t == cfg.max_iterations) result.stop_reason = "max iterations reached";
  }
  if (result.stop_reason.empty()) result.stop_reason = "max iterations reached";
  if (result.iterations.empty() && result.stop_reason == "all clusters exhausted") {
    throw Error("all clusters exhausted before any iteration completed");
  }

  train_target(result, features, gold_examples, cfg);
  result.calls = budget.spent_calls();
  result.cost = budget.total_cost();
  return result;
}

RunResult run_baseline(const Corpus& pool, const GoldSet& gold, const Labeler& labeler, const BaselineOptions& opts,
                       const LtsConfig& cfg) {
  cfg.validate();
  if (opts.m > pool.size()) {
    throw ValidationError("sample size " + std::to_string(opts.m) + " exceeds pool size " + std::to_string(pool.size()));
  }
  RunResult result;
  Budget budget(cfg.max_calls, cfg.per_call_cost);
  const auto features = featurize_pool(pool, cfg.featurizer);
  const auto gold_examples = make_gold_examples(gold, cfg.featurizer);

  auto start = Clock::now();
  const std::uint64_t seed = Rng::derive(cfg.seed, kStreamBaseline);
  std::vector<std::size_t> picks;
  if (opts.strategy == BaselineStrategy::Random) {
    picks = random_sample(pool, opts.m, seed);
  } else {
    if (opts.rules == nullptr) throw ValidationError("kbs strategy needs keyword rules");
    const auto candidates = kbs_candidates(pool, *opts.rules);
    picks = kbs_sample(candidates, pool, opts.m, seed, opts.kbs_candidate_fraction);
  }
  result.timings.inference_s = seconds_since(start);
  if (picks.size() > budget.remaining()) picks.resize(budget.remaining());

  start = Clock::now();
  auto outcome = label_batch(pool, picks, labeler, budget, cfg.parallel_labels);
  result.timings.labeling_s = seconds_since(start);
  for (std::size_t i = 0; i < outcome.labeled.size(); ++i) {
    const auto& r = outcome.labeled[i];
    result.labeled.add({outcome.labeled_index[i], r.item_id, r.label, labeler.name(), 0});
  }
  if (outcome.hard_failure) {
    result.truncated = true;
    result.stop_reason = "labeler failure: " + outcome.failure;
  } else {
    result.stop_reason = "sample labeled";
  }
  train_target(result, features, gold_examples, cfg);
  result.calls = budget.spent_calls();
  result.cost = budget.total_cost();
  return result;
}

namespace {
void put_real(std::ostream& out, double v) { out << std::setprecision(17) << v; }
}  // namespace

void write_iteration_log(std::ostream& out, std::span<const IterationRecord> records) {
  out << "t,cluster,n_labeled,n_pseudo_pos,f1_before,f1_after,reward,baseline_after,reverted,cumulative_calls,"
         "cumulative_cost\n";
  for (const auto& r : records) {
    out << r.t << ',' << r.cluster << ',' << r.n_labeled << ',' << r.n_pseudo_pos << ',';
    put_real(out, r.f1_before);
    out << ',';
    put_real(out, r.f1_after);
    out << ',' << r.reward << ',';
    put_real(out, r.baseline_after);
    out << ',' << (r.reverted ? 1 : 0) << ',' << r.cumulative_calls << ',';
    put_real(out, r.cumulative_cost);
    out << '\n';
  }
}

void write_arm_trace(std::ostream& out, std::span<const ArmSnapshot> trace) {
  out << "t,arm,wins,losses\n";
  for (const auto& snap : trace) {
    for (std::size_t a = 0; a < snap.arms.size(); ++a) {
      out << snap.t << ',' << a << ',';
      put_real(out, snap.arms[a].wins);
      out << ',';
      put_real(out, snap.arms[a].losses);
      out << '\n';
    }
  }
}

void write_labeled_set(std::ostream& out, const LabeledSet& labeled) {
  for (const auto& e : labeled.entries()) {
    nlohmann::json j;
    j["id"] = e.item_id;
    j["label"] = to_int(e.label);
    j["provenance"] = e.provenance;
    j["iteration"] = e.iteration;
    out << j.dump() << '\n';
  }
}

}  // namespace lts
