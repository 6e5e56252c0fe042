#include "lts/labelers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <thread>

#include "lts/errors.hpp"

namespace lts {

PromptTemplate::PromptTemplate(std::string task_description, std::vector<PromptShot> shots,
                               std::string answer_instruction)
    : task_description_(std::move(task_description)),
      shots_(std::move(shots)),
      answer_instruction_(std::move(answer_instruction)) {
  const bool has_pos = std::any_of(shots_.begin(), shots_.end(), [](const auto& s) { return is_positive(s.label); });
  const bool has_neg = std::any_of(shots_.begin(), shots_.end(), [](const auto& s) { return !is_positive(s.label); });
  if (!has_pos || !has_neg) {
    throw ValidationError("prompt template needs at least one positive and one negative shot");
  }
}

std::string render_prompt(const PromptTemplate& tpl, const Item& item) {
  std::string out;
  if (!tpl.task_description().empty()) {
    out += tpl.task_description();
    out += "\n\n";
  }
  for (const auto& shot : tpl.shots()) {
    out += "Title: ";
    out += shot.title;
    out += "\nLabel: ";
    out += std::to_string(to_int(shot.label));
    out += "\nReason: ";
    out += shot.rationale;
    out += "\n\n";
  }
  if (!tpl.answer_instruction().empty()) {
    out += tpl.answer_instruction();
    out += "\n\n";
  }
  out += "Title: ";
  out += item.title;
  out += "\nLabel:";
  return out;
}

Label parse_label(std::string_view raw) {
  auto t = trim(raw);
  auto end = std::find_if(t.begin(), t.end(), [](unsigned char c) { return std::isspace(c); });
  std::string token(t.begin(), end);
  std::transform(token.begin(), token.end(), token.begin(), [](unsigned char c) { return std::tolower(c); });
  if (token == "1" || token == "relevant") return Label::Relevant;
  if (token == "0" || token == "irrelevant") return Label::Irrelevant;
  throw LabelParseError("unparseable label response: '" + std::string(t.substr(0, 80)) + "'");
}

bool Budget::try_acquire() {
  std::uint64_t cur = spent_.load();
  while (cur < max_calls_) {
    if (spent_.compare_exchange_weak(cur, cur + 1)) return true;
  }
  return false;
}

void Budget::acquire() {
  if (!try_acquire()) throw BudgetExhausted("label budget exhausted (" + std::to_string(max_calls_) + " calls)");
}

std::chrono::milliseconds RetryPolicy::backoff_for(int attempt) const {
  const double ms = static_cast<double>(initial_backoff.count()) * std::pow(multiplier, attempt - 1);
  return std::chrono::milliseconds(static_cast<long long>(std::min(ms, static_cast<double>(max_backoff.count()))));
}

Sleeper real_sleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

LabelResult label_llm(CompletionEndpoint& endpoint, const PromptTemplate& tpl, const Item& item, Budget& budget,
                      const RetryPolicy& retry, const Sleeper& sleep) {
  const std::string prompt = render_prompt(tpl, item);
  const int max_attempts = std::max(1, retry.max_attempts);
  std::string last_error;
  bool last_was_transport = false;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    if (!budget.try_acquire()) {
      throw BudgetExhausted("label budget exhausted after " + std::to_string(attempt - 1) + " attempt(s) for '" +
                            item.id + "'");
    }
    if (attempt > 1) sleep(retry.backoff_for(attempt - 1));
    std::string raw;
    try {
      raw = endpoint.complete(prompt);
    } catch (const TransportError& e) {
      last_error = e.what();
      last_was_transport = true;
      continue;
    }
    try {
      Label l = parse_label(raw);
      return {item.id, l, std::move(raw), attempt * budget.per_call_cost(), attempt};
    } catch (const LabelParseError& e) {
      last_error = e.what();
      last_was_transport = false;
    }
  }
  const std::string msg = "labeling '" + item.id + "' failed after " + std::to_string(max_attempts) +
                          " attempt(s): " + last_error;
  if (last_was_transport) throw TransportError(msg);
  throw LabelParseError(msg);
}

LabelResult LlmLabeler::label(const Item& item, Budget& budget) const {
  return label_llm(*endpoint_, tpl_, item, budget, retry_, sleep_);
}

GoldLookup gold_lookup_from(const Corpus& corpus) {
  GoldLookup out;
  for (const auto& item : corpus.items()) {
    if (item.gold_label) out.emplace(item.id, *item.gold_label);
  }
  return out;
}

LabelResult label_oracle(const GoldLookup& gold, const Item& item) {
  auto it = gold.find(item.id);
  if (it == gold.end()) throw ValidationError("oracle has no gold label for '" + item.id + "'");
  return {item.id, it->second, std::to_string(to_int(it->second)), 0.0, 1};
}

LabelResult OracleLabeler::label(const Item& item, Budget& budget) const {
  // Resolve before spending so an unknown id costs nothing.
  auto result = label_oracle(gold_, item);
  budget.acquire();
  return result;
}

LabelResult label_keyword(const KeywordRules& rules, const Item& item) {
  const Label l = kbs_matches(rules, item.title) ? Label::Relevant : Label::Irrelevant;
  return {item.id, l, std::to_string(to_int(l)), 0.0, 1};
}

LabelResult KeywordLabeler::label(const Item& item, Budget& budget) const {
  budget.acquire();
  return label_keyword(rules_, item);
}

}  // namespace lts
