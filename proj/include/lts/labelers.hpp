#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lts/dataset.hpp"
#include "lts/samplers.hpp"

namespace lts {

struct PromptShot {
  std::string title;
  Label label = Label::Irrelevant;
  std::string rationale;
};

// Few-shot labeling prompt. Construction enforces at least one positive and
// one negative shot.
class PromptTemplate {
 public:
  PromptTemplate(std::string task_description, std::vector<PromptShot> shots, std::string answer_instruction);

  const std::string& task_description() const { return task_description_; }
  const std::vector<PromptShot>& shots() const { return shots_; }
  const std::string& answer_instruction() const { return answer_instruction_; }

 private:
  std::string task_description_;
  std::vector<PromptShot> shots_;
  std::string answer_instruction_;
};

/// Task description, each shot as a Title/Label/Reason block, the answer
/// instruction, then "Title: <title>\nLabel:".
std::string render_prompt(const PromptTemplate& tpl, const Item& item);

/// Trimmed first whitespace-delimited token must be "1", "0", "relevant" or
/// "irrelevant" (case-insensitive). Throws LabelParseError otherwise.
Label parse_label(std::string_view raw);

// Shared call ceiling. All accounting goes through try_acquire, which is
// atomic and never lets spent_calls pass max_calls.
class Budget {
 public:
  Budget(std::uint64_t max_calls, double per_call_cost) : max_calls_(max_calls), per_call_cost_(per_call_cost) {}

  bool try_acquire();
  /// Throws BudgetExhausted when no call is left.
  void acquire();

  std::uint64_t max_calls() const { return max_calls_; }
  std::uint64_t spent_calls() const { return spent_.load(); }
  std::uint64_t remaining() const { return max_calls_ - spent_.load(); }
  bool exhausted() const { return remaining() == 0; }
  double per_call_cost() const { return per_call_cost_; }
  double total_cost() const { return static_cast<double>(spent_calls()) * per_call_cost_; }

 private:
  std::uint64_t max_calls_;
  double per_call_cost_;
  std::atomic<std::uint64_t> spent_{0};
};

struct LabelResult {
  std::string item_id;
  Label label = Label::Irrelevant;
  std::string raw_response;
  double cost = 0.0;
  int attempts = 1;
};

// A pseudo-label provider. Every call is metered against the budget passed
// in; implementations must be safe to call from several threads at once.
class Labeler {
 public:
  virtual ~Labeler() = default;
  virtual std::string name() const = 0;
  virtual LabelResult label(const Item& item, Budget& budget) const = 0;
};

// Remote chat-completion service. Throws TransportError on failure.
class CompletionEndpoint {
 public:
  virtual ~CompletionEndpoint() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

struct RetryPolicy {
  /// Total attempts, including the first.
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{8000};

  std::chrono::milliseconds backoff_for(int attempt) const;  // attempt >= 1
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;
Sleeper real_sleeper();

/// Sends the rendered prompt, retrying parse and transport failures with
/// exponential backoff. Every attempt spends one budget call.
LabelResult label_llm(CompletionEndpoint& endpoint, const PromptTemplate& tpl, const Item& item, Budget& budget,
                      const RetryPolicy& retry, const Sleeper& sleep = real_sleeper());

class LlmLabeler final : public Labeler {
 public:
  LlmLabeler(std::shared_ptr<CompletionEndpoint> endpoint, PromptTemplate tpl, RetryPolicy retry,
             Sleeper sleep = real_sleeper())
      : endpoint_(std::move(endpoint)), tpl_(std::move(tpl)), retry_(retry), sleep_(std::move(sleep)) {}

  std::string name() const override { return "llm"; }
  LabelResult label(const Item& item, Budget& budget) const override;

 private:
  std::shared_ptr<CompletionEndpoint> endpoint_;
  PromptTemplate tpl_;
  RetryPolicy retry_;
  Sleeper sleep_;
};

using GoldLookup = std::unordered_map<std::string, Label>;
GoldLookup gold_lookup_from(const Corpus& corpus);

/// Gold label for the item; cost 0. Throws ValidationError for unknown ids.
LabelResult label_oracle(const GoldLookup& gold, const Item& item);

class OracleLabeler final : public Labeler {
 public:
  explicit OracleLabeler(GoldLookup gold) : gold_(std::move(gold)) {}
  std::string name() const override { return "oracle"; }
  LabelResult label(const Item& item, Budget& budget) const override;

 private:
  GoldLookup gold_;
};

LabelResult label_keyword(const KeywordRules& rules, const Item& item);

class KeywordLabeler final : public Labeler {
 public:
  explicit KeywordLabeler(KeywordRules rules) : rules_(std::move(rules)) {}
  std::string name() const override { return "keyword"; }
  LabelResult label(const Item& item, Budget& budget) const override;

 private:
  KeywordRules rules_;
};

}  // namespace lts
