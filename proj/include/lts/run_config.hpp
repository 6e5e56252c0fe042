#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "lts/labelers.hpp"
#include "lts/orchestrator.hpp"

namespace lts {

enum class LabelerKind { Llm, Oracle, Keyword };

struct LabelerConfig {
  LabelerKind kind = LabelerKind::Oracle;
  std::string endpoint;
  std::string model_name;
  std::optional<PromptTemplate> prompt_template;
  /// Keyword rules for the keyword labeler and the kbs strategy.
  std::filesystem::path rules_path;
  int timeout_s = 30;
  RetryPolicy retry;
};

struct BaselineConfig {
  /// Sample size for random/kbs runs; defaults to min(max_calls, pool size).
  std::optional<std::size_t> m;
  double kbs_candidate_fraction = 0.5;
};

struct RunConfig {
  std::filesystem::path corpus_path;
  std::filesystem::path gold_ids_path;
  LtsConfig lts;
  LabelerConfig labeler;
  BaselineConfig baseline;
  std::filesystem::path output_dir = "out";

  /// Checks value ranges and, if `check_paths`, that referenced files exist.
  void validate(bool check_paths = true) const;
};

/// Relative paths are resolved against `base_dir`. Unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Every field, defaults included.
nlohmann::json to_json(const RunConfig& cfg);

std::string to_string(LabelerKind kind);

}  // namespace lts
