#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "lts/dataset.hpp"
#include "lts/features.hpp"

namespace lts {

struct ModelWeights {
  std::vector<double> w;
  double b = 0.0;
  std::uint64_t version = 0;

  static ModelWeights zeros(std::size_t dim) { return {std::vector<double>(dim, 0.0), 0.0, 0}; }
  std::size_t dim() const { return w.size(); }

  friend bool operator==(const ModelWeights&, const ModelWeights&) = default;
};

struct TrainConfig {
  double learning_rate = 32.0;
  double weight_decay = 0.0;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;
  std::size_t batch = 32;
  std::uint64_t seed = 0;
  /// Weight each class by n / (2 * n_class) when both classes are present.
  bool balanced_class_weights = false;

  void validate() const;
};

struct Example {
  SparseVector x;
  Label y = Label::Irrelevant;
};

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct Metrics {
  ConfusionMatrix confusion;
  ClassMetrics negative;  // class 0
  ClassMetrics positive;  // class 1
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

/// Precision, recall and F1 are 0 whenever their denominators are 0.
Metrics metrics_from_confusion(const ConfusionMatrix& cm);

/// sigmoid(w.x + b). Throws ValidationError on dimension mismatch.
double predict(const ModelWeights& weights, const SparseVector& x);
inline bool predicted_positive(double probability) { return probability >= 0.5; }

Metrics evaluate(const ModelWeights& weights, std::span<const Example> gold);

std::vector<Example> make_examples(std::span<const Item> items, std::span<const Label> labels,
                                   const FeaturizerConfig& cfg);
/// Uses each item's gold label.
std::vector<Example> make_gold_examples(const GoldSet& gold, const FeaturizerConfig& cfg);

/// Mean logistic loss over the samples plus (weight_decay / 2) * ||w||^2.
/// The bias is not regularized.
double regularized_loss(const ModelWeights& weights, std::span<const Example> samples, double weight_decay);

struct Gradient {
  std::vector<double> w;
  double b = 0.0;
};
Gradient regularized_gradient(const ModelWeights& weights, std::span<const Example> samples, double weight_decay);

struct EpochTrace {
  double train_loss = 0.0;
  double validation_f1 = 0.0;
};

/// Mini-batch gradient descent on the regularized loss, warm-started from
/// `init`. Stops when validation F1 fails to improve for `patience` epochs and
/// returns the best epoch's weights (the latest one among ties) with version
/// init.version + 1. With
/// max_epochs = 0 the weights are returned unchanged (version still bumped).
/// Throws TrainingDiverged on a non-finite loss or weight.
ModelWeights train(const ModelWeights& init, std::span<const Example> samples, const TrainConfig& cfg,
                   std::span<const Example> validation, std::vector<EpochTrace>* trace = nullptr);

struct GridCell {
  double learning_rate = 0.0;
  double weight_decay = 0.0;
  bool failed = false;
  double validation_f1 = 0.0;
};

struct GridSearchResult {
  TrainConfig best_config;
  ModelWeights weights;
  double validation_f1 = 0.0;
  std::vector<GridCell> cells;
};

/// Trains every (learning rate, weight decay) cell from the same init and seed.
/// Picks the highest validation F1, then smaller learning rate, then smaller
/// weight decay. Failed cells are skipped; throws TrainingDiverged only if
/// every cell failed.
GridSearchResult grid_search(const ModelWeights& init, std::span<const Example> samples, const TrainConfig& base,
                             std::span<const double> learning_rates, std::span<const double> weight_decays,
                             std::span<const Example> validation);

void write_weights(std::ostream& out, const ModelWeights& weights);
ModelWeights read_weights(std::istream& in);
void save_weights(const std::filesystem::path& path, const ModelWeights& weights);
ModelWeights load_weights(const std::filesystem::path& path);

}  // namespace lts
