#include "lts/commands.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "lts/clustering.hpp"
#include "lts/errors.hpp"
#include "lts/http_endpoint.hpp"

namespace lts {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void write_json(const std::filesystem::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace

Strategy parse_strategy(const std::string& s) {
  if (s == "lts") return Strategy::Lts;
  if (s == "random") return Strategy::Random;
  if (s == "kbs") return Strategy::Kbs;
  throw ValidationError("strategy must be lts, random or kbs, got '" + s + "'");
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Lts:
      return "lts";
    case Strategy::Random:
      return "random";
    case Strategy::Kbs:
      return "kbs";
  }
  return "?";
}

std::unique_ptr<Labeler> make_labeler(const RunConfig& cfg, const Corpus& pool, const EnvLookup& env) {
  switch (cfg.labeler.kind) {
    case LabelerKind::Oracle: {
      auto lookup = gold_lookup_from(pool);
      if (lookup.size() != pool.size()) {
        throw ValidationError("oracle labeler needs a gold_label on every pool item");
      }
      return std::make_unique<OracleLabeler>(std::move(lookup));
    }
    case LabelerKind::Keyword:
      return std::make_unique<KeywordLabeler>(load_keyword_rules(cfg.labeler.rules_path));
    case LabelerKind::Llm: {
      const char* key = env(kApiKeyEnv);
      if (key == nullptr || *key == '\0') {
        throw ValidationError(std::string("llm labeler requires the ") + kApiKeyEnv + " environment variable");
      }
      if (!cfg.labeler.prompt_template) throw ValidationError("llm labeler needs labeler.prompt_template");
      HttpEndpointConfig http{cfg.labeler.endpoint, cfg.labeler.model_name, key,
                              std::chrono::seconds(cfg.labeler.timeout_s)};
      return std::make_unique<LlmLabeler>(std::make_shared<HttpCompletionEndpoint>(std::move(http)),
                                          *cfg.labeler.prompt_template, cfg.labeler.retry);
    }
  }
  throw ValidationError("unknown labeler kind");
}

LoadedData load_run_data(const RunConfig& cfg) {
  Corpus corpus = load_corpus(cfg.corpus_path);
  std::unordered_set<std::string> gold_ids;
  if (!cfg.gold_ids_path.empty()) {
    for (auto& id : load_id_list(cfg.gold_ids_path)) gold_ids.insert(std::move(id));
  }
  auto split = split_pool_gold(corpus, gold_ids);
  return {std::move(split.pool), std::move(split.gold)};
}

std::filesystem::path cmd_cluster(const RunConfig& cfg) {
  cfg.validate();
  auto data = load_run_data(cfg);
  if (cfg.lts.k > data.pool.size()) {
    throw ValidationError("K=" + std::to_string(cfg.lts.k) + " exceeds pool size " + std::to_string(data.pool.size()));
  }
  std::filesystem::create_directories(cfg.output_dir);
  write_json(cfg.output_dir / "config.resolved", to_json(cfg));
  // Same seed stream as run_lts, so the file matches the clusters a run uses.
  const auto assignment = cluster(data.pool, cfg.lts.featurizer, cfg.lts.k, Rng::derive(cfg.lts.seed, 1));
  const auto path = cfg.output_dir / "assignment.tsv";
  auto out = open_out(path);
  write_assignment(out, data.pool, assignment);
  return path;
}

json metrics_to_json(const Metrics& m) {
  auto cls = [](const ClassMetrics& c) { return json{{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}}; };
  return {{"confusion", {{"tp", m.confusion.tp}, {"fp", m.confusion.fp}, {"fn", m.confusion.fn}, {"tn", m.confusion.tn}}},
          {"class_0", cls(m.negative)},
          {"class_1", cls(m.positive)},
          {"accuracy", m.accuracy},
          {"macro_f1", m.macro_f1}};
}

json make_run_report(Strategy strategy, const RunResult& r, const Corpus& pool, double per_call_cost) {
  json j;
  j["strategy"] = to_string(strategy);
  j["metrics"] = r.metrics ? metrics_to_json(*r.metrics) : json(nullptr);
  const auto& st = pool.stats();
  j["sample_stats"] = {{"s_pos", r.labeled.s_pos()},
                       {"s_neg", r.labeled.s_neg()},
                       {"ratio", r.labeled.ratio() ? json(*r.labeled.ratio()) : json(nullptr)},
                       {"pool_k", st.k ? json(*st.k) : json(nullptr)}};
  j["cost"] = {{"calls", r.calls}, {"per_call_cost", per_call_cost}, {"total", r.cost}};
  j["timing"] = {{"cluster_s", r.timings.cluster_s},
                 {"inference_s", r.timings.inference_s},
                 {"labeling_s", r.timings.labeling_s},
                 {"training_s", r.timings.training_s}};
  j["iterations"] = r.iterations.size();
  j["no_data"] = r.no_data;
  j["truncated"] = r.truncated;
  j["stop_reason"] = r.stop_reason;
  if (r.target_config) {
    j["target_config"] = {{"learning_rate", r.target_config->learning_rate},
                          {"weight_decay", r.target_config->weight_decay}};
  } else {
    j["target_config"] = nullptr;
  }
  return j;
}

std::string human_summary(const json& report) {
  std::ostringstream out;
  out << std::setprecision(4);
  out << "strategy:     " << report.value("strategy", "?") << '\n';
  if (report.value("no_data", false)) out << "NO DATA: nothing was labeled\n";
  if (report.value("truncated", false)) out << "TRUNCATED: " << report.value("stop_reason", "") << '\n';
  out << "stop reason:  " << report.value("stop_reason", "") << '\n';
  if (const auto& m = report["metrics"]; !m.is_null()) {
    out << "class 1:      P=" << m["class_1"]["precision"].get<double>() << " R=" << m["class_1"]["recall"].get<double>()
        << " F1=" << m["class_1"]["f1"].get<double>() << '\n';
    out << "class 0:      P=" << m["class_0"]["precision"].get<double>() << " R=" << m["class_0"]["recall"].get<double>()
        << " F1=" << m["class_0"]["f1"].get<double>() << '\n';
    out << "accuracy:     " << m["accuracy"].get<double>() << "  macro-F1: " << m["macro_f1"].get<double>() << '\n';
  }
  const auto& s = report["sample_stats"];
  out << "sample:       S_pos=" << s["s_pos"] << " S_neg=" << s["s_neg"] << " ratio=" << s["ratio"]
      << " pool k=" << s["pool_k"] << '\n';
  const auto& c = report["cost"];
  out << "cost:         " << c["calls"] << " calls, total " << c["total"] << '\n';
  const auto& t = report["timing"];
  out << "timing (s):   cluster=" << t["cluster_s"] << " inference=" << t["inference_s"]
      << " labeling=" << t["labeling_s"] << " training=" << t["training_s"] << '\n';
  return out.str();
}

RunArtifacts cmd_run(const RunConfig& cfg, Strategy strategy, const EnvLookup& env, const Labeler* labeler) {
  cfg.validate();
  // Fail on a missing API key before touching any data.
  if (labeler == nullptr && cfg.labeler.kind == LabelerKind::Llm) {
    const char* key = env(kApiKeyEnv);
    if (key == nullptr || *key == '\0') {
      throw ValidationError(std::string("llm labeler requires the ") + kApiKeyEnv + " environment variable");
    }
  }
  if (strategy == Strategy::Kbs && cfg.labeler.rules_path.empty()) {
    throw ValidationError("kbs strategy needs labeler.rules_path");
  }
  auto data = load_run_data(cfg);
  std::unique_ptr<Labeler> owned;
  if (labeler == nullptr) {
    owned = make_labeler(cfg, data.pool, env);
    labeler = owned.get();
  }
  std::optional<KeywordRules> rules;
  if (strategy == Strategy::Kbs) rules = load_keyword_rules(cfg.labeler.rules_path);

  RunArtifacts art;
  art.out_dir = cfg.output_dir;
  std::filesystem::create_directories(art.out_dir);
  write_json(art.out_dir / "config.resolved", to_json(cfg));

  try {
    if (strategy == Strategy::Lts) {
      art.result = run_lts(data.pool, data.gold, *labeler, cfg.lts);
    } else {
      BaselineOptions b;
      b.strategy = strategy == Strategy::Kbs ? BaselineStrategy::Kbs : BaselineStrategy::Random;
      b.m = cfg.baseline.m.value_or(std::min<std::size_t>(cfg.lts.max_calls, data.pool.size()));
      b.rules = rules ? &*rules : nullptr;
      b.kbs_candidate_fraction = cfg.baseline.kbs_candidate_fraction;
      art.result = run_baseline(data.pool, data.gold, *labeler, b, cfg.lts);
    }
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    json report = {{"strategy", to_string(strategy)}, {"truncated", true}, {"error", e.what()}};
    write_json(art.out_dir / "report.json", report);
    throw;
  }

  {
    auto out = open_out(art.out_dir / "labeled.jsonl");
    write_labeled_set(out, art.result.labeled);
  }
  save_weights(art.out_dir / "weights.txt", art.result.target);
  {
    auto out = open_out(art.out_dir / "iterations.csv");
    write_iteration_log(out, art.result.iterations);
  }
  {
    auto out = open_out(art.out_dir / "arms.csv");
    write_arm_trace(out, art.result.arm_trace);
  }
  art.report = make_run_report(strategy, art.result, data.pool, cfg.lts.per_call_cost);
  write_json(art.out_dir / "report.json", art.report);
  {
    auto out = open_out(art.out_dir / "report.txt");
    out << human_summary(art.report);
  }
  return art;
}

Metrics cmd_eval(const RunConfig& cfg, const std::filesystem::path& weights_path) {
  cfg.validate();
  const auto weights = load_weights(weights_path);
  if (weights.dim() != cfg.lts.featurizer.dim) {
    throw ValidationError("weights dimension " + std::to_string(weights.dim()) + " does not match featurizer dim " +
                          std::to_string(cfg.lts.featurizer.dim));
  }
  auto data = load_run_data(cfg);
  if (data.gold.empty()) throw ValidationError("evaluation needs a nonempty gold set (gold_ids_path)");
  return evaluate(weights, make_gold_examples(data.gold, cfg.lts.featurizer));
}

LtsConfig synth_lts_defaults() {
  LtsConfig cfg;
  cfg.k = 10;
  cfg.n_per_iter = 30;
  cfg.max_pos = 20;
  // A cold-start batch often holds one positive or none; without reweighting
  // the model never predicts positive and the loop cannot earn a reward.
  cfg.train.balanced_class_weights = true;
  cfg.replay_all = true;
  cfg.max_iterations = 1000;
  cfg.max_calls = 1000;
  return cfg;
}

SynthOutputs cmd_synth(const SynthSpec& spec, std::size_t n_gold, const std::filesystem::path& dir) {
  const Corpus corpus = generate(spec);
  std::filesystem::create_directories(dir);
  SynthOutputs out{dir / "corpus.jsonl", dir / "gold_ids.txt", dir / "rules.json", dir / "config.json"};
  save_corpus(out.corpus, corpus);
  save_id_list(out.gold_ids, gold_split(corpus, n_gold, spec.seed));
  const auto rules = synth_keyword_rules(spec);
  write_json(out.rules, {{"animal_names", rules.animal_names()}, {"product_terms", rules.product_terms()}});

  RunConfig cfg;
  cfg.corpus_path = "corpus.jsonl";
  cfg.gold_ids_path = "gold_ids.txt";
  cfg.output_dir = "out";
  cfg.lts = synth_lts_defaults();
  cfg.labeler.rules_path = "rules.json";
  write_json(out.config, to_json(cfg));
  return out;
}

}  // namespace lts
