// Command-line driver: cluster, run, eval, synth and compare.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "lts/commands.hpp"
#include "lts/errors.hpp"
#include "lts/synthbench.hpp"

namespace {

lts::RunConfig load_with_overrides(const std::string& config, const std::optional<std::uint64_t>& seed,
                                   const std::string& out) {
  auto cfg = lts::load_run_config(config);
  if (seed) cfg.lts.seed = *seed;
  if (!out.empty()) cfg.output_dir = out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Budgeted pseudo-label sampling for imbalanced text corpora"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;

  auto* cluster = app.add_subcommand("cluster", "Cluster the pool once and write id/cluster assignments");
  cluster->add_option("--config", config_path, "Run config (JSON)")->required();
  cluster->add_option("--seed", seed, "Override the config seed");
  cluster->add_option("--out", out_dir, "Output directory");

  std::string strategy = "lts";
  auto* run = app.add_subcommand("run", "Run LTS or a baseline sampling strategy");
  run->add_option("--config", config_path, "Run config (JSON)")->required();
  run->add_option("--strategy", strategy, "lts | random | kbs")->check(CLI::IsMember({"lts", "random", "kbs"}));
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--out", out_dir, "Output directory");

  std::string weights_path;
  auto* eval = app.add_subcommand("eval", "Evaluate a weights file on the gold set");
  eval->add_option("--config", config_path, "Run config (JSON) naming corpus and gold ids")->required();
  eval->add_option("--weights", weights_path, "Weights file written by `run`")->required();

  lts::SynthSpec spec;
  std::size_t n_gold = 1000;
  bool diffuse = false;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic imbalanced benchmark corpus");
  synth->add_option("--out", out_dir, "Output directory")->required();
  synth->add_option("--items", spec.n_items, "Number of items");
  synth->add_option("--positive-rate", spec.positive_rate, "Fraction of positive items");
  synth->add_option("--topics", spec.n_topics, "Number of topics");
  synth->add_option("--gold", n_gold, "Gold set size");
  synth->add_option("--seed", spec.seed, "Generator seed");
  synth->add_flag("--diffuse", diffuse, "Spread positives over every topic");

  std::vector<std::string> strategies{"lts", "random", "kbs"};
  std::vector<std::uint64_t> budgets{1000};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  auto* compare = app.add_subcommand("compare", "Paired-seed comparison of strategies on one corpus");
  compare->add_option("--config", config_path, "Run config (JSON)")->required();
  compare->add_option("--strategies", strategies, "Strategies to compare");
  compare->add_option("--budgets", budgets, "Label budgets (calls)");
  compare->add_option("--seeds", seeds, "Seeds");
  compare->add_option("--out", out_dir, "Write the table to this file instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cluster) {
      auto cfg = load_with_overrides(config_path, seed, out_dir);
      std::cout << lts::cmd_cluster(cfg).string() << '\n';
      return lts::kExitOk;
    }
    if (*run) {
      auto cfg = load_with_overrides(config_path, seed, out_dir);
      auto art = lts::cmd_run(cfg, lts::parse_strategy(strategy));
      std::cout << lts::human_summary(art.report);
      return art.result.truncated ? lts::kExitRuntime : lts::kExitOk;
    }
    if (*eval) {
      auto cfg = lts::load_run_config(config_path);
      std::cout << lts::metrics_to_json(lts::cmd_eval(cfg, weights_path)).dump(2) << '\n';
      return lts::kExitOk;
    }
    if (*synth) {
      if (diffuse) {
        auto d = lts::SynthSpec::diffuse();
        d.n_items = spec.n_items;
        d.positive_rate = spec.positive_rate;
        d.seed = spec.seed;
        spec = d;
      }
      auto outs = lts::cmd_synth(spec, n_gold, out_dir);
      std::cout << "wrote " << outs.corpus.string() << ", " << outs.gold_ids.string() << ", "
                << outs.rules.string() << ", " << outs.config.string() << '\n';
      return lts::kExitOk;
    }
    if (*compare) {
      auto cfg = lts::load_run_config(config_path);
      cfg.validate();
      lts::CompareOptions opts;
      opts.strategies = strategies;
      opts.budgets = budgets;
      opts.seeds = seeds;
      opts.base = cfg.lts;
      if (!cfg.labeler.rules_path.empty()) opts.rules = lts::load_keyword_rules(cfg.labeler.rules_path);
      const auto corpus = lts::load_corpus(cfg.corpus_path);
      const auto gold = cfg.gold_ids_path.empty() ? std::vector<std::string>{} : lts::load_id_list(cfg.gold_ids_path);
      const auto rows = lts::paired_compare(corpus, gold, opts);
      if (out_dir.empty()) {
        lts::write_compare_table(std::cout, rows);
      } else {
        std::ofstream f(out_dir);
        lts::write_compare_table(f, rows);
      }
      return lts::kExitOk;
    }
  } catch (const lts::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return lts::kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return lts::kExitRuntime;
  }
  return lts::kExitOk;
}
