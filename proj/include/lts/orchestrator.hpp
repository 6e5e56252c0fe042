#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "lts/bandit.hpp"
#include "lts/classifier.hpp"
#include "lts/dataset.hpp"
#include "lts/features.hpp"
#include "lts/labelers.hpp"
#include "lts/samplers.hpp"

namespace lts {

struct LtsConfig {
  std::size_t k = 20;
  std::size_t n_per_iter = 200;
  /// Defaults to n_per_iter / 2.
  std::optional<std::size_t> max_pos;
  double baseline_init = 0.5;
  std::optional<double> target_f1;
  std::size_t max_iterations = 100;
  std::uint64_t max_calls = 1000;
  double per_call_cost = 0.02;
  BanditConfig bandit;
  TrainConfig train;
  std::vector<double> grid_learning_rates{8.0, 32.0, 128.0};
  std::vector<double> grid_weight_decays{0.0, 1e-4, 1e-3};
  /// Train each iteration on every label gathered so far instead of the new batch.
  bool replay_all = false;
  std::size_t parallel_labels = 4;
  std::uint64_t seed = 0;
  FeaturizerConfig featurizer;

  std::size_t resolved_max_pos() const { return max_pos.value_or(n_per_iter / 2); }
  void validate() const;
};

struct LabeledEntry {
  std::size_t pool_index = 0;
  std::string item_id;
  Label label = Label::Irrelevant;
  std::string provenance;
  std::size_t iteration = 0;
};

class LabeledSet {
 public:
  /// Throws ValidationError if the id is already present.
  void add(LabeledEntry entry);

  const std::vector<LabeledEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool contains(const std::string& id) const { return ids_.count(id) > 0; }
  std::size_t s_pos() const { return s_pos_; }
  std::size_t s_neg() const { return s_neg_; }
  /// S_pos / S_neg, absent when S_neg = 0.
  std::optional<double> ratio() const;

 private:
  std::vector<LabeledEntry> entries_;
  std::unordered_set<std::string> ids_;
  std::size_t s_pos_ = 0;
  std::size_t s_neg_ = 0;
};

struct IterationRecord {
  std::size_t t = 0;
  std::size_t cluster = 0;
  std::size_t n_labeled = 0;
  std::size_t n_pseudo_pos = 0;
  double f1_before = 0.0;  // baseline the new model had to beat
  double f1_after = 0.0;
  int reward = 0;
  double baseline_after = 0.0;
  bool reverted = false;
  std::uint64_t cumulative_calls = 0;
  double cumulative_cost = 0.0;
};

struct ArmSnapshot {
  std::size_t t = 0;
  std::vector<ArmState> arms;
};

struct PhaseTimings {
  double cluster_s = 0.0;
  double inference_s = 0.0;
  double labeling_s = 0.0;
  double training_s = 0.0;
};

struct RunResult {
  LabeledSet labeled;
  ModelWeights target;
  std::optional<TrainConfig> target_config;
  std::optional<Metrics> metrics;  // target classifier on gold
  bool no_data = false;
  bool truncated = false;
  std::string stop_reason;
  std::vector<IterationRecord> iterations;
  std::vector<ArmSnapshot> arm_trace;
  PhaseTimings timings;
  std::uint64_t calls = 0;
  double cost = 0.0;
};

/// Test seams into the loop. All are optional.
struct LtsHooks {
  /// Replaces the measured validation F1 of the model trained at iteration t.
  std::function<double(std::size_t t, const ModelWeights& trained, double measured_f1)> score;
  /// Observes the base weights each iteration trains from.
  std::function<void(std::size_t t, const ModelWeights& base)> on_train_start;
  /// Always pick samples uniformly, ignoring the model.
  bool model_free_selection = false;
};

/// Picks up to n of `members` (pool indices). Without a model: uniform. With a
/// model: up to max_pos predicted positives by descending probability, then
/// predicted negatives by descending probability; leftover slots, if
/// negatives run out, take the next positives. Throws ValidationError if
/// `members` is empty.
std::vector<std::size_t> select_samples(std::span<const std::size_t> members, std::span<const SparseVector> features,
                                        const ModelWeights* model, std::size_t n, std::size_t max_pos, Rng& rng);

RunResult run_lts(const Corpus& pool, const GoldSet& gold, const Labeler& labeler, const LtsConfig& cfg,
                  const LtsHooks& hooks = {});

enum class BaselineStrategy { Random, Kbs };

struct BaselineOptions {
  BaselineStrategy strategy = BaselineStrategy::Random;
  std::size_t m = 0;
  const KeywordRules* rules = nullptr;  // required for Kbs
  double kbs_candidate_fraction = 0.5;
};

/// Draws m items with the strategy, labels them within the budget and trains
/// the target classifier by grid search.
RunResult run_baseline(const Corpus& pool, const GoldSet& gold, const Labeler& labeler, const BaselineOptions& opts,
                       const LtsConfig& cfg);

void write_iteration_log(std::ostream& out, std::span<const IterationRecord> records);
void write_arm_trace(std::ostream& out, std::span<const ArmSnapshot> trace);
/// One JSON object per line: id, label, provenance, iteration.
void write_labeled_set(std::ostream& out, const LabeledSet& labeled);

}  // namespace lts
