#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "lts/commands.hpp"
#include "lts/errors.hpp"

using namespace lts;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("lts_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const char* no_env(const char*) { return nullptr; }

PromptTemplate tiny_template() {
  return PromptTemplate("Is this an animal product?",
                        {{"shark jaw", Label::Relevant, "body part"}, {"toy shark", Label::Irrelevant, "toy"}},
                        "Answer 1 or 0.");
}

// Small synthetic benchmark plus a loaded config with fast settings.
RunConfig small_run(const TempDir& dir) {
  SynthSpec spec;
  spec.n_items = 1500;
  spec.n_topics = 6;
  spec.positive_topics = {0};
  const auto outs = cmd_synth(spec, 300, dir.path);
  auto cfg = load_run_config(outs.config);
  cfg.lts.featurizer.dim = 1 << 12;
  cfg.lts.k = 4;
  cfg.lts.n_per_iter = 20;
  cfg.lts.max_pos = 10;
  cfg.lts.max_calls = 120;
  cfg.lts.train.max_epochs = 10;
  cfg.lts.grid_learning_rates = {32.0};
  cfg.lts.grid_weight_decays = {0.0};
  cfg.lts.seed = 3;
  cfg.output_dir = dir.path / "out";
  return cfg;
}

}  // namespace

TEST_CASE("run config parsing") {
  const nlohmann::json j = {{"corpus_path", "data/c.jsonl"},
                            {"gold_ids_path", "g.txt"},
                            {"lts", {{"K", 7}, {"budget", {{"max_calls", 55}}}, {"bandit", {{"delta", 0.9}}}}},
                            {"labeler", {{"kind", "keyword"}, {"rules_path", "r.json"}}}};
  const auto cfg = run_config_from_json(j, "/base");
  CHECK(cfg.corpus_path == fs::path("/base/data/c.jsonl"));
  CHECK(cfg.gold_ids_path == fs::path("/base/g.txt"));
  CHECK(cfg.labeler.rules_path == fs::path("/base/r.json"));
  CHECK(cfg.labeler.kind == LabelerKind::Keyword);
  CHECK(cfg.lts.k == 7);
  CHECK(cfg.lts.max_calls == 55);
  CHECK(cfg.lts.bandit.delta == 0.9);
  CHECK(cfg.lts.n_per_iter == 200);
  CHECK(cfg.lts.resolved_max_pos() == 100);

  auto abs = run_config_from_json({{"corpus_path", "/abs/c.jsonl"}}, "/base");
  CHECK(abs.corpus_path == fs::path("/abs/c.jsonl"));

  CHECK_THROWS_AS(run_config_from_json({{"corpus_path", "c"}, {"extra", 1}}), ValidationError);
  CHECK_THROWS_AS(run_config_from_json({{"lts", {{"k", 3}}}}), ValidationError);
  CHECK_THROWS_AS(run_config_from_json({{"lts", {{"K", "three"}}}}), ValidationError);
  CHECK_THROWS_AS(run_config_from_json({{"labeler", {{"kind", "human"}}}}), ValidationError);
  CHECK_THROWS_AS(run_config_from_json({{"lts", {{"metric", "accuracy"}}}}), ValidationError);
  CHECK_THROWS_AS(run_config_from_json({{"featurizer", {{"hash", "md5"}}}}), ValidationError);
}

TEST_CASE("resolved config round-trips") {
  TempDir dir("roundtrip");
  auto cfg = small_run(dir);
  const auto j = to_json(cfg);
  const auto back = run_config_from_json(j);
  CHECK(to_json(back) == j);
}

TEST_CASE("config validation") {
  TempDir dir("validate");
  auto cfg = small_run(dir);
  CHECK_NOTHROW(cfg.validate());
  auto bad = cfg;
  bad.corpus_path = dir.path / "missing.jsonl";
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  CHECK_NOTHROW(bad.validate(false));
  bad = cfg;
  bad.labeler.kind = LabelerKind::Llm;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = cfg;
  bad.lts.bandit.delta = 1.5;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  CHECK_THROWS_AS(load_run_config(dir.path / "nope.json"), ValidationError);
  {
    std::ofstream(dir.path / "broken.json") << "{ not json";
  }
  CHECK_THROWS_AS(load_run_config(dir.path / "broken.json"), ValidationError);
}

TEST_CASE("cmd_synth writes a runnable benchmark") {
  TempDir dir("synth");
  SynthSpec spec;
  spec.n_items = 1000;
  const auto outs = cmd_synth(spec, 200, dir.path);
  for (const auto& p : {outs.corpus, outs.gold_ids, outs.rules, outs.config}) CHECK(fs::exists(p));
  const auto corpus = load_corpus(outs.corpus);
  CHECK(corpus.items() == generate(spec).items());
  CHECK(load_id_list(outs.gold_ids).size() == 200);
  CHECK(load_keyword_rules(outs.rules).product_terms().size() == 4);
  const auto cfg = load_run_config(outs.config);
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.labeler.kind == LabelerKind::Oracle);
  CHECK(cfg.output_dir == dir.path / "out");
}

TEST_CASE("cmd_run is byte-for-byte reproducible") {
  TempDir dir("determinism");
  auto cfg = small_run(dir);
  cfg.output_dir = dir.path / "a";
  const auto a = cmd_run(cfg, Strategy::Lts, no_env);
  cfg.output_dir = dir.path / "b";
  const auto b = cmd_run(cfg, Strategy::Lts, no_env);
  for (const char* f : {"iterations.csv", "labeled.jsonl", "arms.csv", "weights.txt"}) {
    CHECK_MESSAGE(slurp(dir.path / "a" / f) == slurp(dir.path / "b" / f), f);
    CHECK_FALSE(slurp(dir.path / "a" / f).empty());
  }
  auto ra = a.report, rb = b.report;
  ra.erase("timing");
  rb.erase("timing");
  CHECK(ra == rb);
  CHECK(fs::exists(dir.path / "a" / "config.resolved"));
  CHECK(fs::exists(dir.path / "a" / "report.txt"));

  // The resolved config reproduces the run from its own output directory.
  auto again = load_run_config(dir.path / "a" / "config.resolved");
  again.output_dir = dir.path / "c";
  cmd_run(again, Strategy::Lts, no_env);
  CHECK(slurp(dir.path / "c" / "labeled.jsonl") == slurp(dir.path / "a" / "labeled.jsonl"));
}

TEST_CASE("cmd_run report accounting") {
  TempDir dir("report");
  auto cfg = small_run(dir);
  const auto art = cmd_run(cfg, Strategy::Lts, no_env);
  const auto& r = art.report;
  CHECK(r["strategy"] == "lts");
  CHECK(r["cost"]["calls"] == 120);
  CHECK(r["cost"]["total"].get<double>() == 120 * cfg.lts.per_call_cost);
  CHECK(r["sample_stats"]["s_pos"].get<std::size_t>() + r["sample_stats"]["s_neg"].get<std::size_t>() == 120);
  CHECK(r["no_data"] == false);
  CHECK(r["metrics"]["class_1"].contains("f1"));
  for (const char* phase : {"cluster_s", "inference_s", "labeling_s", "training_s"}) {
    CHECK(r["timing"][phase].get<double>() >= 0.0);
  }
  CHECK(human_summary(r).find("strategy:     lts") != std::string::npos);
}

TEST_CASE("random strategy with m = 0 reports no data") {
  TempDir dir("nodata");
  auto cfg = small_run(dir);
  cfg.baseline.m = 0;
  const auto art = cmd_run(cfg, Strategy::Random, no_env);
  CHECK(art.report["no_data"] == true);
  CHECK(art.report["cost"]["calls"] == 0);
  CHECK(human_summary(art.report).find("NO DATA") != std::string::npos);
}

TEST_CASE("baseline strategies through cmd_run") {
  TempDir dir("baselines");
  auto cfg = small_run(dir);
  const auto rnd = cmd_run(cfg, Strategy::Random, no_env);
  CHECK(rnd.result.labeled.size() == 120);
  const auto kbs = cmd_run(cfg, Strategy::Kbs, no_env);
  CHECK(kbs.result.labeled.size() == 120);
  cfg.labeler.rules_path.clear();
  CHECK_THROWS_AS(cmd_run(cfg, Strategy::Kbs, no_env), ValidationError);
}

TEST_CASE("llm labeler needs an API key before any work") {
  TempDir dir("llm");
  auto cfg = small_run(dir);
  cfg.labeler.kind = LabelerKind::Llm;
  cfg.labeler.endpoint = "http://127.0.0.1:9/v1/chat/completions";
  cfg.labeler.prompt_template = tiny_template();
  cfg.output_dir = dir.path / "llm_out";
  CHECK_THROWS_WITH_AS(cmd_run(cfg, Strategy::Lts, no_env), doctest::Contains("LTS_LLM_API_KEY"), ValidationError);
  CHECK_FALSE(fs::exists(cfg.output_dir));
}

TEST_CASE("a transport failure is a truncated runtime error") {
  TempDir dir("transport");
  auto cfg = small_run(dir);
  cfg.labeler.kind = LabelerKind::Llm;
  cfg.labeler.endpoint = "http://127.0.0.1:9/v1/chat/completions";
  cfg.labeler.timeout_s = 1;
  cfg.labeler.retry.max_attempts = 1;
  cfg.labeler.prompt_template = tiny_template();
  auto env = [](const char*) -> const char* { return "dummy"; };
  const auto art = cmd_run(cfg, Strategy::Lts, env);
  CHECK(art.result.truncated);
  CHECK(art.report["truncated"] == true);
  CHECK(art.result.labeled.empty());
  CHECK(art.report["stop_reason"].get<std::string>().rfind("labeler failure", 0) == 0);
}

TEST_CASE("cmd_cluster and cmd_eval") {
  TempDir dir("cluster_eval");
  auto cfg = small_run(dir);
  const auto path = cmd_cluster(cfg);
  const auto first = slurp(path);
  CHECK(slurp(cmd_cluster(cfg)) == first);
  CHECK(std::count(first.begin(), first.end(), '\n') == 1200);

  cfg.lts.k = 1;
  const auto one = slurp(cmd_cluster(cfg));
  std::istringstream in(one);
  std::string line;
  std::set<std::string> values;
  while (std::getline(in, line)) {
    values.insert(line.substr(line.find('\t') + 1));
  }
  CHECK(values == std::set<std::string>{"0"});

  cfg.lts.k = 100000;
  CHECK_THROWS_AS(cmd_cluster(cfg), ValidationError);
  cfg.lts.k = 4;

  const auto art = cmd_run(cfg, Strategy::Lts, no_env);
  const auto m = cmd_eval(cfg, cfg.output_dir / "weights.txt");
  CHECK(m.positive.f1 == art.result.metrics->positive.f1);
  CHECK(m.confusion == art.result.metrics->confusion);

  CHECK_THROWS(cmd_eval(cfg, dir.path / "missing_weights.txt"));
  auto wrong_dim = cfg;
  wrong_dim.lts.featurizer.dim = 1 << 13;
  CHECK_THROWS_AS(cmd_eval(wrong_dim, cfg.output_dir / "weights.txt"), ValidationError);
}

TEST_CASE("strategy names") {
  CHECK(parse_strategy("lts") == Strategy::Lts);
  CHECK(to_string(parse_strategy("kbs")) == "kbs");
  CHECK_THROWS_AS(parse_strategy("LTS"), ValidationError);
}
