#pragma once

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "lts/classifier.hpp"
#include "lts/orchestrator.hpp"
#include "lts/run_config.hpp"
#include "lts/synthbench.hpp"

namespace lts {

enum class Strategy { Lts, Random, Kbs };
Strategy parse_strategy(const std::string& s);
std::string to_string(Strategy s);

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

using EnvLookup = std::function<const char*(const char*)>;
inline const char* process_env(const char* name) { return std::getenv(name); }

/// Builds the configured labeler. The oracle answers from the pool's gold
/// labels; the LLM labeler requires LTS_LLM_API_KEY in `env`.
std::unique_ptr<Labeler> make_labeler(const RunConfig& cfg, const Corpus& pool, const EnvLookup& env = process_env);

struct LoadedData {
  Corpus pool;
  GoldSet gold;
};
/// Loads the corpus and removes gold ids from it.
LoadedData load_run_data(const RunConfig& cfg);

/// Clusters the pool and writes `assignment.tsv` to the output dir.
std::filesystem::path cmd_cluster(const RunConfig& cfg);

struct RunArtifacts {
  RunResult result;
  nlohmann::json report;
  std::filesystem::path out_dir;
};

/// Runs LTS or a baseline and writes config.resolved, labeled.jsonl,
/// weights.txt, iterations.csv, arms.csv, report.json and report.txt.
/// `labeler` overrides the configured labeler when non-null.
RunArtifacts cmd_run(const RunConfig& cfg, Strategy strategy, const EnvLookup& env = process_env,
                     const Labeler* labeler = nullptr);

/// Evaluates saved weights on the configured gold set.
Metrics cmd_eval(const RunConfig& cfg, const std::filesystem::path& weights_path);

nlohmann::json metrics_to_json(const Metrics& m);
nlohmann::json make_run_report(Strategy strategy, const RunResult& r, const Corpus& pool, double per_call_cost);
std::string human_summary(const nlohmann::json& report);

struct SynthOutputs {
  std::filesystem::path corpus;
  std::filesystem::path gold_ids;
  std::filesystem::path rules;
  std::filesystem::path config;
};
/// Writes a synthetic corpus, gold id list, keyword rules and a runnable
/// oracle config into `dir`.
SynthOutputs cmd_synth(const SynthSpec& spec, std::size_t n_gold, const std::filesystem::path& dir);

/// Benchmark defaults used for synthetic runs.
LtsConfig synth_lts_defaults();

}  // namespace lts
