#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lts/classifier.hpp"
#include "lts/errors.hpp"
#include "lts/rng.hpp"

using namespace lts;

namespace {

constexpr std::size_t kDim = 1024;

SparseVector sv(std::vector<std::pair<std::uint32_t, double>> e) {
  std::sort(e.begin(), e.end());
  return SparseVector{std::move(e), kDim};
}

// Twenty titles where token "alpha" marks positives and "beta" negatives,
// surrounded by shared filler words.
std::vector<Example> separable_fixture() {
  FeaturizerConfig cfg{.dim = kDim};
  const char* filler[] = {"red", "blue", "green", "small", "large", "old"};
  std::vector<Example> out;
  for (int i = 0; i < 20; ++i) {
    std::string text = (i % 2 ? "alpha " : "beta ") + std::string(filler[i % 6]) + " " + filler[(i * 5 + 1) % 6];
    out.push_back({featurize(text, cfg), i % 2 ? Label::Relevant : Label::Irrelevant});
  }
  return out;
}

// Brute force: some single coordinate thresholds the labels perfectly.
bool separable_by_one_coordinate(const std::vector<Example>& xs) {
  std::vector<std::uint32_t> coords;
  for (const auto& e : xs) {
    for (auto [j, v] : e.x.entries) coords.push_back(j);
  }
  for (auto j : coords) {
    std::vector<std::pair<double, bool>> vals;
    for (const auto& e : xs) {
      double v = 0.0;
      for (auto [k, w] : e.x.entries) {
        if (k == j) v = w;
      }
      vals.emplace_back(v, is_positive(e.y));
    }
    for (const auto& [t, unused] : vals) {
      bool above_pos = true, above_neg = true;
      for (const auto& [v, pos] : vals) {
        above_pos &= (v >= t) == pos;
        above_neg &= (v >= t) == !pos;
      }
      if (above_pos || above_neg) return true;
    }
  }
  return false;
}

double mean_probability(const ModelWeights& w, const std::vector<Example>& xs) {
  double s = 0.0;
  for (const auto& e : xs) s += predict(w, e.x);
  return s / xs.size();
}

}  // namespace

TEST_CASE("predict basics") {
  auto w = ModelWeights::zeros(kDim);
  CHECK(predict(w, sv({{3, 0.7}})) == 0.5);
  w.b = 10;
  CHECK(predict(w, sv({{3, 0.7}})) > 0.9999);
  w.b = -1.5;
  CHECK(predict(w, sv({})) == doctest::Approx(1 / (1 + std::exp(1.5))));
  CHECK_THROWS_AS(predict(w, SparseVector{{}, 2048}), ValidationError);
}

TEST_CASE("metrics from a hand-built confusion matrix") {
  auto m = metrics_from_confusion({.tp = 3, .fp = 1, .fn = 1, .tn = 5});
  CHECK(m.positive.precision == 0.75);
  CHECK(m.positive.recall == 0.75);
  CHECK(m.positive.f1 == 0.75);
  CHECK(m.accuracy == 0.8);
  CHECK(m.negative.precision == 5.0 / 6.0);
  CHECK(m.negative.recall == 5.0 / 6.0);

  auto none = metrics_from_confusion({.tp = 0, .fp = 0, .fn = 4, .tn = 6});
  CHECK(none.positive.precision == 0.0);
  CHECK(none.positive.f1 == 0.0);

  auto perfect = metrics_from_confusion({.tp = 2, .fp = 0, .fn = 0, .tn = 3});
  CHECK(perfect.positive.f1 == 1.0);
  CHECK(perfect.negative.f1 == 1.0);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.macro_f1 == 1.0);
}

TEST_CASE("evaluate counts thresholded predictions") {
  // Weight on coordinate 1 decides: score 2 -> positive, -2 -> negative.
  auto w = ModelWeights::zeros(kDim);
  w.w[1] = 2.0;
  auto pos = sv({{1, 1.0}});
  auto neg = sv({{1, -1.0}});
  std::vector<Example> gold;
  for (int i = 0; i < 3; ++i) gold.push_back({pos, Label::Relevant});
  gold.push_back({pos, Label::Irrelevant});
  gold.push_back({neg, Label::Relevant});
  for (int i = 0; i < 5; ++i) gold.push_back({neg, Label::Irrelevant});
  auto m = evaluate(w, gold);
  CHECK(m.confusion == ConfusionMatrix{3, 1, 1, 5});
  CHECK(m.positive.f1 == 0.75);
  CHECK(m.accuracy == 0.8);
  CHECK_THROWS_AS(evaluate(w, std::vector<Example>{}), ValidationError);
}

TEST_CASE("analytic gradient matches central differences") {
  Rng rng(2718);
  const double h = 1e-5;
  for (int fixture = 0; fixture < 50; ++fixture) {
    auto w = ModelWeights::zeros(kDim);
    for (std::uint32_t j = 0; j < 16; ++j) w.w[j] = rng.normal();
    w.b = rng.normal();
    const double wd = fixture % 2 ? 0.05 * rng.uniform() : 0.0;
    std::vector<Example> xs;
    const std::size_t n = 1 + rng.below(12);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::pair<std::uint32_t, double>> e;
      for (std::uint32_t j = 0; j < 16; ++j) {
        if (rng.uniform() < 0.4) e.emplace_back(j, rng.normal());
      }
      xs.push_back({sv(e), rng.below(2) ? Label::Relevant : Label::Irrelevant});
    }
    auto g = regularized_gradient(w, xs, wd);
    double diff2 = 0.0, norm2 = 0.0;
    for (std::uint32_t j = 0; j < 17; ++j) {
      auto up = w, down = w;
      double* pu = j < 16 ? &up.w[j] : &up.b;
      double* pd = j < 16 ? &down.w[j] : &down.b;
      *pu += h;
      *pd -= h;
      const double numeric = (regularized_loss(up, xs, wd) - regularized_loss(down, xs, wd)) / (2 * h);
      const double analytic = j < 16 ? g.w[j] : g.b;
      diff2 += (numeric - analytic) * (numeric - analytic);
      norm2 += std::max(numeric * numeric, analytic * analytic);
    }
    REQUIRE(std::sqrt(diff2) / std::max(std::sqrt(norm2), 1e-12) < 1e-4);
    for (std::uint32_t j = 16; j < kDim; j += 97) REQUIRE(g.w[j] == 0.0);
  }
}

TEST_CASE("separable toy set reaches F1 = 1") {
  auto xs = separable_fixture();
  REQUIRE(separable_by_one_coordinate(xs));
  auto w = train(ModelWeights::zeros(kDim), xs, TrainConfig{}, xs);
  CHECK(evaluate(w, xs).positive.f1 == 1.0);
  CHECK(w.version == 1);
}

TEST_CASE("max_epochs = 0 returns init with a bumped version") {
  auto xs = separable_fixture();
  auto init = ModelWeights::zeros(kDim);
  init.w[5] = 0.25;
  init.b = -0.5;
  init.version = 7;
  auto w = train(init, xs, TrainConfig{.max_epochs = 0}, xs);
  CHECK(w.w == init.w);
  CHECK(w.b == init.b);
  CHECK(w.version == 8);
}

TEST_CASE("training is bit-for-bit deterministic") {
  auto xs = separable_fixture();
  TrainConfig cfg{.learning_rate = 3.0, .weight_decay = 1e-3, .seed = 4};
  auto a = train(ModelWeights::zeros(kDim), xs, cfg, xs);
  auto b = train(ModelWeights::zeros(kDim), xs, cfg, xs);
  CHECK(a == b);
}

TEST_CASE("single-class input drifts toward that class") {
  auto xs = separable_fixture();
  std::vector<Example> positives;
  for (auto e : xs) {
    e.y = Label::Relevant;
    positives.push_back(e);
  }
  auto w = ModelWeights::zeros(kDim);
  double prev = mean_probability(w, positives);
  for (int epoch = 0; epoch < 10; ++epoch) {
    w = train(w, positives, TrainConfig{.learning_rate = 0.5, .max_epochs = 1}, positives);
    const double now = mean_probability(w, positives);
    CHECK(now > prev);
    prev = now;
  }
}

TEST_CASE("weight decay shrinks weights") {
  auto xs = separable_fixture();
  auto plain = train(ModelWeights::zeros(kDim), xs, TrainConfig{.learning_rate = 2.0, .max_epochs = 30, .patience = 30}, xs);
  auto decayed = train(ModelWeights::zeros(kDim), xs,
                       TrainConfig{.learning_rate = 2.0, .weight_decay = 0.05, .max_epochs = 30, .patience = 30}, xs);
  double n1 = 0, n2 = 0;
  for (double v : plain.w) n1 += v * v;
  for (double v : decayed.w) n2 += v * v;
  CHECK(n2 < n1);
}

TEST_CASE("train validates inputs") {
  auto xs = separable_fixture();
  CHECK_THROWS_AS(train(ModelWeights::zeros(kDim), std::vector<Example>{}, {}, xs), ValidationError);
  CHECK_THROWS_AS(train(ModelWeights::zeros(2048), xs, {}, xs), ValidationError);
  CHECK_THROWS_AS(train(ModelWeights::zeros(kDim), xs, TrainConfig{.learning_rate = 0}, xs), ValidationError);
  CHECK_THROWS_AS(train(ModelWeights::zeros(kDim), xs, TrainConfig{.batch = 0}, xs), ValidationError);
}

TEST_CASE("grid search: one cell equals a single train call") {
  auto xs = separable_fixture();
  TrainConfig base{.seed = 3};
  std::vector<double> lr{4.0}, wd{1e-4};
  auto g = grid_search(ModelWeights::zeros(kDim), xs, base, lr, wd, xs);
  TrainConfig cfg = base;
  cfg.learning_rate = 4.0;
  cfg.weight_decay = 1e-4;
  CHECK(g.weights == train(ModelWeights::zeros(kDim), xs, cfg, xs));
  CHECK(g.cells.size() == 1);
}

TEST_CASE("grid search ties go to the smaller learning rate then weight decay") {
  auto xs = separable_fixture();
  std::vector<double> lr{16.0, 4.0}, wd{1e-4, 0.0};
  auto g = grid_search(ModelWeights::zeros(kDim), xs, {}, lr, wd, xs);
  for (const auto& c : g.cells) REQUIRE(c.validation_f1 == 1.0);
  CHECK(g.best_config.learning_rate == 4.0);
  CHECK(g.best_config.weight_decay == 0.0);
  CHECK(g.validation_f1 == 1.0);
}

TEST_CASE("grid search skips a diverging cell") {
  // Huge feature values make w.x overflow to inf - inf at the larger step.
  const double c = 3e155;
  std::vector<Example> xs{{sv({{0, c}}), Label::Relevant},
                          {sv({{1, c}}), Label::Irrelevant},
                          {sv({{0, c}, {1, c}}), Label::Relevant}};
  std::vector<double> lr{1e-2, 1e-3}, wd{0.0};
  TrainConfig base{.max_epochs = 10};
  auto g = grid_search(ModelWeights::zeros(kDim), xs, base, lr, wd, xs);
  CHECK(g.best_config.learning_rate == 1e-3);
  REQUIRE(g.cells.size() == 2);
  CHECK(g.cells[0].failed);
  CHECK_FALSE(g.cells[1].failed);

  std::vector<double> only_bad{1e-2};
  CHECK_THROWS_AS(grid_search(ModelWeights::zeros(kDim), xs, base, only_bad, wd, xs), TrainingDiverged);
  CHECK_THROWS_AS(grid_search(ModelWeights::zeros(kDim), xs, base, std::vector<double>{}, wd, xs), ValidationError);
}

TEST_CASE("weights text round trip") {
  auto w = ModelWeights::zeros(kDim);
  w.w[0] = 1.0 / 3.0;
  w.w[1023] = -2.5e-17;
  w.b = 0.1;
  w.version = 12;
  std::stringstream ss;
  write_weights(ss, w);
  CHECK(read_weights(ss) == w);
  std::istringstream bad("lts-weights 2\n");
  CHECK_THROWS_AS(read_weights(bad), ValidationError);
}
