#include "lts/run_config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

#include "lts/errors.hpp"

namespace lts {

using nlohmann::json;

namespace {

void check_keys(const json& j, const char* section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ValidationError(std::string("config section '") + section + "' must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) throw ValidationError(std::string("unknown config key '") + section + "." + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config key '") + key + "': " + e.what());
  }
}

template <typename T>
void read_opt(const json& j, const char* key, std::optional<T>& out) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  T v{};
  read(j, key, v);
  out = v;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

PromptTemplate template_from_json(const json& j) {
  check_keys(j, "labeler.prompt_template", {"task_description", "shots", "answer_instruction"});
  std::string task, answer;
  read(j, "task_description", task);
  read(j, "answer_instruction", answer);
  std::vector<PromptShot> shots;
  if (j.contains("shots")) {
    if (!j["shots"].is_array()) throw ValidationError("prompt_template.shots must be an array");
    for (const auto& s : j["shots"]) {
      check_keys(s, "labeler.prompt_template.shots[]", {"title", "label", "rationale"});
      PromptShot shot;
      read(s, "title", shot.title);
      long long label = -1;
      read(s, "label", label);
      shot.label = label_from_int(label);
      read(s, "rationale", shot.rationale);
      shots.push_back(std::move(shot));
    }
  }
  return PromptTemplate(std::move(task), std::move(shots), std::move(answer));
}

LabelerKind kind_from_string(const std::string& s) {
  if (s == "llm") return LabelerKind::Llm;
  if (s == "oracle") return LabelerKind::Oracle;
  if (s == "keyword") return LabelerKind::Keyword;
  throw ValidationError("labeler.kind must be one of llm|oracle|keyword, got '" + s + "'");
}

}  // namespace

std::string to_string(LabelerKind kind) {
  switch (kind) {
    case LabelerKind::Llm:
      return "llm";
    case LabelerKind::Oracle:
      return "oracle";
    case LabelerKind::Keyword:
      return "keyword";
  }
  return "?";
}

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j, "<root>", {"corpus_path", "gold_ids_path", "output_dir", "featurizer", "lts", "labeler", "baseline"});
  RunConfig cfg;
  std::string s;
  read(j, "corpus_path", s);
  cfg.corpus_path = resolve(base_dir, s);
  s.clear();
  read(j, "gold_ids_path", s);
  cfg.gold_ids_path = resolve(base_dir, s);
  s.clear();
  read(j, "output_dir", s);
  if (!s.empty()) cfg.output_dir = resolve(base_dir, s);

  auto& lts = cfg.lts;
  if (auto f = j.find("featurizer"); f != j.end()) {
    check_keys(*f, "featurizer", {"dim", "title_only", "hash", "token_rule"});
    read(*f, "dim", lts.featurizer.dim);
    read(*f, "title_only", lts.featurizer.title_only);
    std::string name;
    read(*f, "hash", name);
    if (!name.empty() && name != FeaturizerConfig::hash_name) throw ValidationError("featurizer.hash must be fnv1a64");
    name.clear();
    read(*f, "token_rule", name);
    if (!name.empty() && name != FeaturizerConfig::token_rule) {
      throw ValidationError(std::string("featurizer.token_rule must be ") + std::string(FeaturizerConfig::token_rule));
    }
  }
  if (auto l = j.find("lts"); l != j.end()) {
    check_keys(*l, "lts", {"K", "n_per_iter", "max_pos", "metric", "baseline_init", "target_f1", "max_iterations", "seed",
                           "replay_all", "parallel_labels", "budget", "bandit", "train", "grid"});
    read(*l, "K", lts.k);
    read(*l, "n_per_iter", lts.n_per_iter);
    read_opt(*l, "max_pos", lts.max_pos);
    std::string metric;
    read(*l, "metric", metric);
    if (!metric.empty() && metric != "f1_positive") throw ValidationError("lts.metric is fixed to f1_positive");
    read(*l, "baseline_init", lts.baseline_init);
    read_opt(*l, "target_f1", lts.target_f1);
    read(*l, "max_iterations", lts.max_iterations);
    read(*l, "seed", lts.seed);
    read(*l, "replay_all", lts.replay_all);
    read(*l, "parallel_labels", lts.parallel_labels);
    if (auto b = l->find("budget"); b != l->end()) {
      check_keys(*b, "lts.budget", {"max_calls", "per_call_cost"});
      read(*b, "max_calls", lts.max_calls);
      read(*b, "per_call_cost", lts.per_call_cost);
    }
    if (auto b = l->find("bandit"); b != l->end()) {
      check_keys(*b, "lts.bandit", {"alpha", "beta", "delta"});
      read(*b, "alpha", lts.bandit.alpha);
      read(*b, "beta", lts.bandit.beta);
      read(*b, "delta", lts.bandit.delta);
    }
    if (auto t = l->find("train"); t != l->end()) {
      check_keys(*t, "lts.train",
                 {"learning_rate", "weight_decay", "max_epochs", "patience", "batch", "seed", "balanced_class_weights"});
      read(*t, "learning_rate", lts.train.learning_rate);
      read(*t, "weight_decay", lts.train.weight_decay);
      read(*t, "max_epochs", lts.train.max_epochs);
      read(*t, "patience", lts.train.patience);
      read(*t, "batch", lts.train.batch);
      read(*t, "seed", lts.train.seed);
      read(*t, "balanced_class_weights", lts.train.balanced_class_weights);
    }
    if (auto g = l->find("grid"); g != l->end()) {
      check_keys(*g, "lts.grid", {"learning_rates", "weight_decays"});
      read(*g, "learning_rates", lts.grid_learning_rates);
      read(*g, "weight_decays", lts.grid_weight_decays);
    }
  }
  if (auto lb = j.find("labeler"); lb != j.end()) {
    check_keys(*lb, "labeler",
               {"kind", "endpoint", "model_name", "prompt_template", "rules_path", "timeout_s", "retry"});
    std::string kind = "oracle";
    read(*lb, "kind", kind);
    cfg.labeler.kind = kind_from_string(kind);
    read(*lb, "endpoint", cfg.labeler.endpoint);
    read(*lb, "model_name", cfg.labeler.model_name);
    std::string rules;
    read(*lb, "rules_path", rules);
    cfg.labeler.rules_path = resolve(base_dir, rules);
    read(*lb, "timeout_s", cfg.labeler.timeout_s);
    if (auto pt = lb->find("prompt_template"); pt != lb->end() && !pt->is_null()) {
      cfg.labeler.prompt_template = template_from_json(*pt);
    }
    if (auto r = lb->find("retry"); r != lb->end()) {
      check_keys(*r, "labeler.retry", {"max_attempts", "initial_backoff_ms", "max_backoff_ms", "multiplier"});
      read(*r, "max_attempts", cfg.labeler.retry.max_attempts);
      long long ms = cfg.labeler.retry.initial_backoff.count();
      read(*r, "initial_backoff_ms", ms);
      cfg.labeler.retry.initial_backoff = std::chrono::milliseconds(ms);
      ms = cfg.labeler.retry.max_backoff.count();
      read(*r, "max_backoff_ms", ms);
      cfg.labeler.retry.max_backoff = std::chrono::milliseconds(ms);
      read(*r, "multiplier", cfg.labeler.retry.multiplier);
    }
  }
  if (auto b = j.find("baseline"); b != j.end()) {
    check_keys(*b, "baseline", {"m", "kbs_candidate_fraction"});
    read_opt(*b, "m", cfg.baseline.m);
    read(*b, "kbs_candidate_fraction", cfg.baseline.kbs_candidate_fraction);
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("malformed config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

void RunConfig::validate(bool check_paths) const {
  lts.validate();
  if (corpus_path.empty()) throw ValidationError("corpus_path is required");
  if (labeler.retry.max_attempts < 1) throw ValidationError("labeler.retry.max_attempts must be >= 1");
  if (labeler.timeout_s < 1) throw ValidationError("labeler.timeout_s must be >= 1");
  if (!(baseline.kbs_candidate_fraction >= 0.0 && baseline.kbs_candidate_fraction <= 1.0)) {
    throw ValidationError("baseline.kbs_candidate_fraction must lie in [0, 1]");
  }
  if (labeler.kind == LabelerKind::Llm) {
    if (labeler.endpoint.empty()) throw ValidationError("llm labeler needs labeler.endpoint");
    if (!labeler.prompt_template) throw ValidationError("llm labeler needs labeler.prompt_template");
  }
  if (labeler.kind == LabelerKind::Keyword && labeler.rules_path.empty()) {
    throw ValidationError("keyword labeler needs labeler.rules_path");
  }
  if (check_paths) {
    if (!std::filesystem::exists(corpus_path)) throw ValidationError("corpus file not found: " + corpus_path.string());
    if (!gold_ids_path.empty() && !std::filesystem::exists(gold_ids_path)) {
      throw ValidationError("gold id file not found: " + gold_ids_path.string());
    }
    if (!labeler.rules_path.empty() && !std::filesystem::exists(labeler.rules_path)) {
      throw ValidationError("rules file not found: " + labeler.rules_path.string());
    }
  }
}

json to_json(const RunConfig& cfg) {
  const auto& l = cfg.lts;
  json j;
  j["corpus_path"] = cfg.corpus_path.string();
  j["gold_ids_path"] = cfg.gold_ids_path.string();
  j["output_dir"] = cfg.output_dir.string();
  j["featurizer"] = {{"dim", l.featurizer.dim},
                     {"title_only", l.featurizer.title_only},
                     {"hash", std::string(FeaturizerConfig::hash_name)},
                     {"token_rule", std::string(FeaturizerConfig::token_rule)}};
  j["lts"] = {{"K", l.k},
              {"n_per_iter", l.n_per_iter},
              {"max_pos", l.resolved_max_pos()},
              {"metric", "f1_positive"},
              {"baseline_init", l.baseline_init},
              {"target_f1", l.target_f1 ? json(*l.target_f1) : json(nullptr)},
              {"max_iterations", l.max_iterations},
              {"seed", l.seed},
              {"replay_all", l.replay_all},
              {"parallel_labels", l.parallel_labels},
              {"budget", {{"max_calls", l.max_calls}, {"per_call_cost", l.per_call_cost}}},
              {"bandit", {{"alpha", l.bandit.alpha}, {"beta", l.bandit.beta}, {"delta", l.bandit.delta}}},
              {"train",
               {{"learning_rate", l.train.learning_rate},
                {"weight_decay", l.train.weight_decay},
                {"max_epochs", l.train.max_epochs},
                {"patience", l.train.patience},
                {"batch", l.train.batch},
                {"seed", l.train.seed},
                {"balanced_class_weights", l.train.balanced_class_weights}}},
              {"grid", {{"learning_rates", l.grid_learning_rates}, {"weight_decays", l.grid_weight_decays}}}};
  json lab = {{"kind", to_string(cfg.labeler.kind)},
              {"endpoint", cfg.labeler.endpoint},
              {"model_name", cfg.labeler.model_name},
              {"rules_path", cfg.labeler.rules_path.string()},
              {"timeout_s", cfg.labeler.timeout_s},
              {"retry",
               {{"max_attempts", cfg.labeler.retry.max_attempts},
                {"initial_backoff_ms", cfg.labeler.retry.initial_backoff.count()},
                {"max_backoff_ms", cfg.labeler.retry.max_backoff.count()},
                {"multiplier", cfg.labeler.retry.multiplier}}}};
  if (cfg.labeler.prompt_template) {
    const auto& t = *cfg.labeler.prompt_template;
    json shots = json::array();
    for (const auto& s : t.shots()) {
      shots.push_back({{"title", s.title}, {"label", to_int(s.label)}, {"rationale", s.rationale}});
    }
    lab["prompt_template"] = {
        {"task_description", t.task_description()}, {"shots", shots}, {"answer_instruction", t.answer_instruction()}};
  } else {
    lab["prompt_template"] = nullptr;
  }
  j["labeler"] = lab;
  j["baseline"] = {{"m", cfg.baseline.m ? json(*cfg.baseline.m) : json(nullptr)},
                   {"kbs_candidate_fraction", cfg.baseline.kbs_candidate_fraction}};
  return j;
}

}  // namespace lts
