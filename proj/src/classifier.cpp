#include "lts/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "lts/errors.hpp"
#include "lts/rng.hpp"

namespace lts {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double logistic_loss(double z, Label y) { return softplus(z) - (is_positive(y) ? z : 0.0); }

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double f1_of(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

void check_dim(std::size_t expected, const SparseVector& x) {
  if (x.dim != expected) {
    throw ValidationError("feature dimension " + std::to_string(x.dim) + " does not match model dimension " +
                          std::to_string(expected));
  }
}

// Weights held as scale * v so that weight decay is O(1) per step.
struct ScaledWeights {
  std::vector<double> v;
  double scale = 1.0;
  double b = 0.0;

  double score(const SparseVector& x) const { return scale * x.dot(v) + b; }

  void normalize() {
    for (double& x : v) x *= scale;
    scale = 1.0;
  }

  std::vector<double> materialize() const {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = scale * v[i];
    return out;
  }
};

double positive_f1(const ScaledWeights& w, std::span<const Example> validation) {
  ConfusionMatrix cm;
  for (const auto& ex : validation) {
    const bool pred = predicted_positive(sigmoid(w.score(ex.x)));
    const bool gold = is_positive(ex.y);
    if (pred && gold) ++cm.tp;
    else if (pred) ++cm.fp;
    else if (gold) ++cm.fn;
    else ++cm.tn;
  }
  return metrics_from_confusion(cm).positive.f1;
}

std::vector<double> class_weights(std::span<const Example> samples, bool balanced) {
  std::vector<double> out(samples.size(), 1.0);
  if (!balanced) return out;
  std::size_t pos = 0;
  for (const auto& ex : samples) pos += is_positive(ex.y) ? 1 : 0;
  const std::size_t neg = samples.size() - pos;
  if (pos == 0 || neg == 0) return out;
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out[i] = n / (2.0 * static_cast<double>(is_positive(samples[i].y) ? pos : neg));
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning_rate must be > 0");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw ValidationError("weight_decay must be >= 0");
  if (batch == 0) throw ValidationError("batch size must be >= 1");
}

Metrics metrics_from_confusion(const ConfusionMatrix& cm) {
  Metrics m;
  m.confusion = cm;
  m.positive.precision = ratio(cm.tp, cm.tp + cm.fp);
  m.positive.recall = ratio(cm.tp, cm.tp + cm.fn);
  m.positive.f1 = f1_of(m.positive.precision, m.positive.recall);
  m.negative.precision = ratio(cm.tn, cm.tn + cm.fn);
  m.negative.recall = ratio(cm.tn, cm.tn + cm.fp);
  m.negative.f1 = f1_of(m.negative.precision, m.negative.recall);
  m.accuracy = ratio(cm.tp + cm.tn, cm.total());
  m.macro_f1 = 0.5 * (m.positive.f1 + m.negative.f1);
  return m;
}

double predict(const ModelWeights& weights, const SparseVector& x) {
  check_dim(weights.dim(), x);
  return sigmoid(x.dot(weights.w) + weights.b);
}

Metrics evaluate(const ModelWeights& weights, std::span<const Example> gold) {
  if (gold.empty()) throw ValidationError("cannot evaluate on an empty gold set");
  ConfusionMatrix cm;
  for (const auto& ex : gold) {
    const bool pred = predicted_positive(predict(weights, ex.x));
    const bool truth = is_positive(ex.y);
    if (pred && truth) ++cm.tp;
    else if (pred) ++cm.fp;
    else if (truth) ++cm.fn;
    else ++cm.tn;
  }
  return metrics_from_confusion(cm);
}

std::vector<Example> make_examples(std::span<const Item> items, std::span<const Label> labels,
                                   const FeaturizerConfig& cfg) {
  if (items.size() != labels.size()) throw ValidationError("items and labels differ in length");
  std::vector<Example> out;
  out.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) out.push_back({featurize_item(items[i], cfg), labels[i]});
  return out;
}

std::vector<Example> make_gold_examples(const GoldSet& gold, const FeaturizerConfig& cfg) {
  std::vector<Example> out;
  out.reserve(gold.size());
  for (const auto& item : gold.items()) out.push_back({featurize_item(item, cfg), *item.gold_label});
  return out;
}

double regularized_loss(const ModelWeights& weights, std::span<const Example> samples, double weight_decay) {
  double loss = 0.0;
  for (const auto& ex : samples) {
    check_dim(weights.dim(), ex.x);
    loss += logistic_loss(ex.x.dot(weights.w) + weights.b, ex.y);
  }
  if (!samples.empty()) loss /= static_cast<double>(samples.size());
  double sq = 0.0;
  for (double v : weights.w) sq += v * v;
  return loss + 0.5 * weight_decay * sq;
}

Gradient regularized_gradient(const ModelWeights& weights, std::span<const Example> samples, double weight_decay) {
  Gradient g{std::vector<double>(weights.dim(), 0.0), 0.0};
  const double inv_n = samples.empty() ? 0.0 : 1.0 / static_cast<double>(samples.size());
  for (const auto& ex : samples) {
    check_dim(weights.dim(), ex.x);
    const double r = (sigmoid(ex.x.dot(weights.w) + weights.b) - (is_positive(ex.y) ? 1.0 : 0.0)) * inv_n;
    for (const auto& [j, v] : ex.x.entries) g.w[j] += r * v;
    g.b += r;
  }
  for (std::size_t j = 0; j < g.w.size(); ++j) g.w[j] += weight_decay * weights.w[j];
  return g;
}

ModelWeights train(const ModelWeights& init, std::span<const Example> samples, const TrainConfig& cfg,
                   std::span<const Example> validation, std::vector<EpochTrace>* trace) {
  cfg.validate();
  for (const auto& ex : samples) check_dim(init.dim(), ex.x);
  for (const auto& ex : validation) check_dim(init.dim(), ex.x);
  if (samples.empty()) throw ValidationError("cannot train on an empty sample");

  ModelWeights best = init;
  best.version = init.version + 1;
  if (cfg.max_epochs == 0) return best;

  const auto weights = class_weights(samples, cfg.balanced_class_weights);
  ScaledWeights cur{init.w, 1.0, init.b};
  const double lr = cfg.learning_rate;
  const double shrink = 1.0 - lr * cfg.weight_decay;

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> residual;
  double best_f1 = -1.0;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch);
      const double inv_b = 1.0 / static_cast<double>(end - start);
      // Gradients are taken at the pre-step weights for the whole batch.
      residual.assign(end - start, 0.0);
      double grad_b = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const Example& ex = samples[order[k]];
        const double z = cur.score(ex.x);
        const double s = weights[order[k]];
        epoch_loss += s * logistic_loss(z, ex.y);
        residual[k - start] = s * (sigmoid(z) - (is_positive(ex.y) ? 1.0 : 0.0)) * inv_b;
        grad_b += residual[k - start];
      }
      // w <- (1 - lr * wd) w - lr * mean(r_i x_i)
      if (shrink <= 1e-12) {
        std::fill(cur.v.begin(), cur.v.end(), 0.0);
        cur.scale = 1.0;
      } else {
        cur.scale *= shrink;
        if (cur.scale < 1e-100) cur.normalize();
      }
      const double step = lr / cur.scale;
      for (std::size_t k = start; k < end; ++k) {
        for (const auto& [j, v] : samples[order[k]].x.entries) cur.v[j] -= step * residual[k - start] * v;
      }
      cur.b -= lr * grad_b;
    }
    epoch_loss /= static_cast<double>(samples.size());
    if (!std::isfinite(epoch_loss) || !std::isfinite(cur.b) || !std::isfinite(cur.scale)) {
      throw TrainingDiverged("non-finite training loss at epoch " + std::to_string(epoch) +
                             " (learning_rate=" + std::to_string(lr) + ")");
    }
    const double f1 = positive_f1(cur, validation);
    if (trace) trace->push_back({epoch_loss, f1});
    // Ties keep the later epoch, so a flat F1 does not freeze the weights at
    // epoch 1; only a strict gain resets patience.
    if (f1 >= best_f1) {
      best.w = cur.materialize();
      best.b = cur.b;
    }
    if (f1 > best_f1) {
      best_f1 = f1;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  for (double v : best.w) {
    if (!std::isfinite(v)) throw TrainingDiverged("non-finite weight after training");
  }
  return best;
}

GridSearchResult grid_search(const ModelWeights& init, std::span<const Example> samples, const TrainConfig& base,
                             std::span<const double> learning_rates, std::span<const double> weight_decays,
                             std::span<const Example> validation) {
  if (learning_rates.empty() || weight_decays.empty()) throw ValidationError("grid search needs a nonempty grid");
  GridSearchResult result;
  bool have_best = false;
  std::string last_error;
  for (double lr : learning_rates) {
    for (double wd : weight_decays) {
      GridCell cell{lr, wd, false, 0.0};
      TrainConfig cfg = base;
      cfg.learning_rate = lr;
      cfg.weight_decay = wd;
      try {
        ModelWeights w = train(init, samples, cfg, validation);
        cell.validation_f1 = validation.empty() ? 0.0 : evaluate(w, validation).positive.f1;
        const bool better =
            !have_best || cell.validation_f1 > result.validation_f1 ||
            (cell.validation_f1 == result.validation_f1 &&
             (lr < result.best_config.learning_rate ||
              (lr == result.best_config.learning_rate && wd < result.best_config.weight_decay)));
        if (better) {
          result.best_config = cfg;
          result.weights = std::move(w);
          result.validation_f1 = cell.validation_f1;
          have_best = true;
        }
      } catch (const TrainingDiverged& e) {
        cell.failed = true;
        last_error = e.what();
      }
      result.cells.push_back(cell);
    }
  }
  if (!have_best) throw TrainingDiverged("every grid cell failed; last error: " + last_error);
  return result;
}

void write_weights(std::ostream& out, const ModelWeights& weights) {
  std::size_t nnz = 0;
  for (double v : weights.w) nnz += v != 0.0 ? 1 : 0;
  out << "lts-weights 1\n";
  out << "dim " << weights.dim() << '\n';
  out << "version " << weights.version << '\n';
  out << std::setprecision(17) << "bias " << weights.b << '\n';
  out << "nonzero " << nnz << '\n';
  for (std::size_t i = 0; i < weights.w.size(); ++i) {
    if (weights.w[i] != 0.0) out << i << ' ' << weights.w[i] << '\n';
  }
}

ModelWeights read_weights(std::istream& in) {
  auto expect = [&](const char* key) {
    std::string k;
    if (!(in >> k) || k != key) throw ValidationError(std::string("weights file: expected '") + key + "'");
  };
  std::string magic;
  int fmt = 0;
  if (!(in >> magic >> fmt) || magic != "lts-weights" || fmt != 1) {
    throw ValidationError("weights file: bad header");
  }
  std::size_t dim = 0, nnz = 0;
  ModelWeights w;
  expect("dim");
  if (!(in >> dim)) throw ValidationError("weights file: bad dim");
  expect("version");
  if (!(in >> w.version)) throw ValidationError("weights file: bad version");
  expect("bias");
  if (!(in >> w.b)) throw ValidationError("weights file: bad bias");
  expect("nonzero");
  if (!(in >> nnz)) throw ValidationError("weights file: bad nonzero count");
  w.w.assign(dim, 0.0);
  for (std::size_t k = 0; k < nnz; ++k) {
    std::size_t i = 0;
    double v = 0.0;
    if (!(in >> i >> v) || i >= dim) throw ValidationError("weights file: bad entry " + std::to_string(k));
    w.w[i] = v;
  }
  return w;
}

void save_weights(const std::filesystem::path& path, const ModelWeights& weights) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_weights(out, weights);
}

ModelWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read weights file " + path.string());
  return read_weights(in);
}

}  // namespace lts
