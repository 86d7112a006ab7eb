#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "metajudge/detail/strings.hpp"
#include "metajudge/errors.hpp"
#include "metajudge/meta_judgment.hpp"
#include "metajudge/prompt.hpp"
#include "metajudge/roles.hpp"
#include "metajudge/rubric.hpp"
#include "metajudge/transport.hpp"

namespace metajudge {

// Chat-completion endpoint reached over HTTP. The API key is read from the
// named environment variable, never stored in config files.
struct RemoteChatBackend {
  std::string endpoint;
  std::string model;
  double temperature = 0.0;
  int max_output_tokens = 1024;
  std::string api_key_env;

  friend bool operator==(const RemoteChatBackend&, const RemoteChatBackend&) = default;
};

struct ScriptedBackend {
  std::string fixture_id;  // "synthetic:<salt>" | "file:<dir>"

  friend bool operator==(const ScriptedBackend&, const ScriptedBackend&) = default;
};

using Backend = std::variant<RemoteChatBackend, ScriptedBackend>;

struct AgentConfig {
  std::string agent_id;
  Backend backend = ScriptedBackend{};
  std::optional<RolePersona> role;
  double agent_weight = 0.0;  // within a panel these sum to 1
  std::chrono::milliseconds timeout{30000};
  int retries = 3;
  std::chrono::milliseconds retry_initial_delay{1000};
  double unit_cost = 0.0;
};

inline bool is_scripted(const AgentConfig& agent) {
  return std::holds_alternative<ScriptedBackend>(agent.backend);
}

// Resolves an agent's backend to a live transport. The pipeline owns the
// default factory; tests inject counting or failing ones.
using TransportFactory =
    std::function<std::shared_ptr<ChatTransport>(const AgentConfig&)>;

inline std::shared_ptr<ChatTransport> scripted_only_transport_factory(
    const AgentConfig& agent) {
  if (const auto* scripted = std::get_if<ScriptedBackend>(&agent.backend)) {
    return make_scripted_transport(scripted->fixture_id);
  }
  throw TransportError("agent '" + agent.agent_id +
                       "' requires a remote transport, none available here");
}

namespace detail {

// Integer after a "Score:" token; tolerates brackets and whitespace. A digit
// run that continues into a range ("1-5") is an echoed format instruction,
// not a score.
inline std::optional<int> parse_score_token(std::string_view text) {
  std::size_t pos = 0;
  while (pos < text.size() &&
         (std::isspace(static_cast<unsigned char>(text[pos])) || text[pos] == '[')) {
    ++pos;
  }
  std::size_t start = pos;
  while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
  if (pos == start) return std::nullopt;
  if (pos < text.size() && text[pos] == '-' && pos + 1 < text.size() &&
      std::isdigit(static_cast<unsigned char>(text[pos + 1]))) {
    return std::nullopt;
  }
  int value = 0;
  for (std::size_t i = start; i < pos; ++i) value = value * 10 + (text[i] - '0');
  return value;
}

// First "score:" token in `text` that carries a usable integer.
inline std::optional<std::pair<std::size_t, int>> find_score(std::string_view text) {
  constexpr std::string_view token = "score:";
  std::size_t from = 0;
  while (true) {
    std::size_t pos = ifind(text, token, from);
    if (pos == std::string_view::npos) return std::nullopt;
    if (auto score = parse_score_token(text.substr(pos + token.size()))) {
      return std::make_pair(pos, *score);
    }
    from = pos + token.size();
  }
}

inline std::string extract_explanation(std::string_view block) {
  std::size_t pos = ifind(block, "explanation:");
  if (pos == std::string_view::npos) return {};
  return std::string(trim(block.substr(pos + std::string_view("explanation:").size())));
}

}  // namespace detail

// Extracts one integer score per expected criterion (or the single overall
// score for the baseline format). Tolerant to block ordering, surrounding
// chatter, and unknown criterion names; strict about range and coverage.
inline std::map<std::string, ScoreEntry> parse_scored_response(const std::string& text,
                                                               const Rubric& rubric) {
  if (rubric.scoring_mode == ScoringMode::BinaryVerdict) {
    throw PreconditionError("parse_scored_response does not handle binary rubrics");
  }

  std::map<std::string, ScoreEntry> out;

  if (rubric.scoring_mode == ScoringMode::SingleOverallScore) {
    auto found = detail::find_score(text);
    if (!found) {
      throw ParseError("no usable 'Score:' token in overall-score response", text);
    }
    const auto [pos, score] = *found;
    if (score < 1 || score > 5) {
      throw ParseError("overall score " + std::to_string(score) + " outside 1..5", text);
    }
    out[std::string(kOverallCriterion)] = {score,
                                           detail::extract_explanation(
                                               std::string_view(text).substr(pos))};
    return out;
  }

  // Per-criterion format: blocks introduced by a line starting "Criterion:".
  struct Block {
    std::string name;
    std::string body;
  };
  std::vector<Block> blocks;
  {
    const auto lines = detail::split_lines(text);
    std::optional<Block> current;
    for (const auto& line : lines) {
      std::string_view view = detail::trim(line);
      constexpr std::string_view prefix = "criterion:";
      if (view.size() > prefix.size() &&
          detail::iequals(view.substr(0, prefix.size()), prefix)) {
        if (current) blocks.push_back(std::move(*current));
        std::string_view rest = detail::trim(view.substr(prefix.size()));
        // Tolerate "Criterion: Name, Score: 4" on one line.
        std::size_t comma = rest.find(',');
        std::string name(detail::trim(rest.substr(0, comma)));
        std::string body;
        if (comma != std::string_view::npos) {
          body = std::string(rest.substr(comma + 1)) + "\n";
        }
        current = Block{std::move(name), std::move(body)};
      } else if (current) {
        current->body += line;
        current->body += "\n";
      }
    }
    if (current) blocks.push_back(std::move(*current));
  }

  std::vector<std::string> range_errors;
  for (const auto& block : blocks) {
    // Match against the rubric's criteria; ignore names we did not ask for.
    const Criterion* matched = nullptr;
    for (const auto& criterion : rubric.criteria) {
      if (detail::iequals(criterion.name, block.name)) {
        matched = &criterion;
        break;
      }
    }
    if (!matched || out.count(matched->name)) continue;

    auto found = detail::find_score(block.body);
    if (!found) continue;
    const int score = found->second;
    if (score < 1 || score > 5) {
      range_errors.push_back(matched->name + "=" + std::to_string(score));
      continue;
    }
    out[matched->name] = {score, detail::extract_explanation(block.body)};
  }

  if (!range_errors.empty()) {
    std::string message = "scores outside 1..5:";
    for (const auto& entry : range_errors) message += " " + entry;
    throw ParseError(message, text);
  }

  std::string missing;
  for (const auto& criterion : rubric.criteria) {
    if (!out.count(criterion.name)) {
      if (!missing.empty()) missing += ", ";
      missing += criterion.name;
    }
  }
  if (!missing.empty()) {
    throw ParseError("missing criteria: " + missing, text);
  }
  return out;
}

enum class BinaryVerdictValue { Correct, Wrong };

// Case-insensitive scan for a "result:" token followed by correct/wrong.
inline BinaryVerdictValue parse_binary_response(const std::string& text) {
  std::size_t from = 0;
  while (true) {
    std::size_t pos = detail::ifind(text, "result", from);
    if (pos == std::string_view::npos) break;
    std::size_t cursor = pos + 6;
    while (cursor < text.size() &&
           std::isspace(static_cast<unsigned char>(text[cursor]))) {
      ++cursor;
    }
    if (cursor < text.size() && text[cursor] == ':') {
      ++cursor;
      while (cursor < text.size() &&
             (std::isspace(static_cast<unsigned char>(text[cursor])) ||
              text[cursor] == '[' || text[cursor] == '*')) {
        ++cursor;
      }
      std::string_view rest = std::string_view(text).substr(cursor);
      auto starts_with_word = [&rest](std::string_view word) {
        return rest.size() >= word.size() &&
               detail::iequals(rest.substr(0, word.size()), word);
      };
      if (starts_with_word("incorrect")) return BinaryVerdictValue::Wrong;
      if (starts_with_word("correct")) return BinaryVerdictValue::Correct;
      if (starts_with_word("wrong")) return BinaryVerdictValue::Wrong;
    }
    from = pos + 1;
  }
  throw ParseError("no 'result: correct/wrong' verdict found", text);
}

// Binary verdicts feed the same selection machinery as scored rubrics.
inline int binary_verdict_score(BinaryVerdictValue verdict) {
  return verdict == BinaryVerdictValue::Correct ? 5 : 1;
}

namespace detail {

inline ChatRequest build_chat_request(const AgentConfig& agent, const PromptBundle& prompt) {
  ChatRequest request;
  if (const auto* remote = std::get_if<RemoteChatBackend>(&agent.backend)) {
    request.model = remote->model;
    request.temperature = remote->temperature;
    request.max_output_tokens = remote->max_output_tokens;
  } else {
    request.model = agent.agent_id;
  }
  for (auto& message : prompt.to_messages()) {
    request.messages.push_back({message.role, message.content});
  }
  return request;
}

}  // namespace detail

// Transport failures retry with exponential backoff up to the agent's
// configured count; anything else propagates immediately.
inline ChatResult complete_with_retries(ChatTransport& transport, const ChatRequest& request,
                                        const AgentConfig& agent) {
  int attempt = 0;
  std::chrono::milliseconds delay = agent.retry_initial_delay;
  while (true) {
    try {
      return transport.complete(request);
    } catch (const TransportError&) {
      if (attempt >= agent.retries) throw;
      ++attempt;
      if (delay.count() > 0) std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }
}

// One full scoring round-trip: render -> transport -> parse. Parse failures
// are not retried and carry the raw text for audit.
inline AgentMetaJudgment score_with_rubric(const AgentConfig& agent,
                                           const PromptBundle& prompt,
                                           const Rubric& rubric,
                                           ChatTransport& transport) {
  if (auto violations = validate_rubric(rubric); !violations.empty()) {
    throw PreconditionError("score_with_rubric called with invalid rubric: " +
                            violations.front().message);
  }
  const ChatRequest request = detail::build_chat_request(agent, prompt);
  const ChatResult result = complete_with_retries(transport, request, agent);

  AgentMetaJudgment judgment;
  judgment.agent_id = agent.agent_id;
  judgment.raw_text = result.text;
  judgment.cost = {1, result.input_tokens, result.output_tokens, agent.unit_cost};

  if (rubric.scoring_mode == ScoringMode::BinaryVerdict) {
    const auto verdict = parse_binary_response(result.text);
    ScoreEntry entry{binary_verdict_score(verdict),
                     detail::extract_explanation(result.text)};
    judgment.per_criterion[std::string(kOverallCriterion)] = std::move(entry);
  } else {
    judgment.per_criterion = parse_scored_response(result.text, rubric);
  }
  return judgment;
}

}  // namespace metajudge
