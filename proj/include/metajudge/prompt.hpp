#pragma once

#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "metajudge/core.hpp"
#include "metajudge/errors.hpp"
#include "metajudge/meta_judgment.hpp"
#include "metajudge/roles.hpp"
#include "metajudge/rubric.hpp"

namespace metajudge {

// Instruction appended when a prompt carries discussion history.
inline constexpr std::string_view kDiscussionSystemInstruction =
    "While scoring, refer to the meta-judging results from other agents. "
    "Identify the agreed-upon opinions and analyze any differing viewpoints.";

// A fully assembled meta-judging prompt. Blocks render in a fixed order:
// role description, question, answers, judgment, decision, rubric, then
// history and system blocks when a discussion transcript is present.
// Agents without an assigned role carry no preamble at all (the no-role
// ablation), in which case the role block is omitted.
struct PromptBundle {
  std::string role_preamble;  // empty when the agent has no role
  std::string question;
  std::string answer_a;
  std::string answer_b;
  std::string judgment;
  std::string decision;
  std::string rubric_block;
  std::optional<std::string> history_block;
  std::optional<std::string> system_block;

  std::string text() const {
    std::ostringstream out;
    if (!role_preamble.empty()) out << "[Role description]\n" << role_preamble << "\n\n";
    out << "[Question]\n" << question << "\n\n";
    out << "[Answer A]\n" << answer_a << "\n\n";
    out << "[Answer B]\n" << answer_b << "\n\n";
    out << "[Judgment]\n" << judgment << "\n\n";
    out << "[Decision]\n" << decision << "\n\n";
    out << "[Rubric]\n" << rubric_block << "\n";
    if (history_block) out << "\n[meta-judgment history]\n" << *history_block << "\n";
    if (system_block) out << "\n[System]\n" << *system_block << "\n";
    return out.str();
  }

  // Chat-completion framing: the role preamble is the system message, the
  // remaining blocks form the user message.
  struct Message {
    std::string role;
    std::string content;
  };
  std::vector<Message> to_messages() const {
    std::ostringstream user;
    user << "[Question]\n" << question << "\n\n";
    user << "[Answer A]\n" << answer_a << "\n\n";
    user << "[Answer B]\n" << answer_b << "\n\n";
    user << "[Judgment]\n" << judgment << "\n\n";
    user << "[Decision]\n" << decision << "\n\n";
    user << "[Rubric]\n" << rubric_block << "\n";
    if (history_block) user << "\n[meta-judgment history]\n" << *history_block << "\n";
    if (system_block) user << "\n[System]\n" << *system_block << "\n";
    std::vector<Message> messages;
    if (!role_preamble.empty()) messages.push_back({"system", role_preamble});
    messages.push_back({"user", user.str()});
    return messages;
  }
};

namespace detail {

inline std::string render_rubric_block(const Rubric& rubric) {
  std::ostringstream out;
  for (const auto& criterion : rubric.criteria) {
    out << "Criterion: " << criterion.name << "\n";
    out << "Description: " << criterion.description << "\n";
    for (const auto& [score, text] : criterion.score_descriptions) {
      out << "Score " << score << ": " << text << "\n";
    }
    out << "\n";
  }
  out << rubric.answer_format_instruction();
  return out.str();
}

}  // namespace detail

// Renders one agent's meta-judgment the way it appears in a discussion
// history. The rendering re-parses to the same scores with the matching
// response parser, so transcripts can be replayed losslessly.
inline std::string render_history_entry(const AgentMetaJudgment& judgment,
                                        const Rubric& rubric) {
  std::ostringstream out;
  out << "Agent: " << judgment.agent_id << "\n";
  switch (rubric.scoring_mode) {
    case ScoringMode::PerCriterionScore:
      for (const auto& criterion : rubric.criteria) {
        auto it = judgment.per_criterion.find(criterion.name);
        if (it == judgment.per_criterion.end()) continue;
        out << "Criterion: " << criterion.name << "\n";
        out << "Score: " << it->second.score << "\n";
        out << "Explanation: " << it->second.explanation << "\n";
      }
      break;
    case ScoringMode::SingleOverallScore: {
      auto it = judgment.per_criterion.find(std::string(kOverallCriterion));
      if (it != judgment.per_criterion.end()) {
        out << "Score: " << it->second.score << "\n";
        out << "Explanation: " << it->second.explanation << "\n";
      }
      break;
    }
    case ScoringMode::BinaryVerdict: {
      auto it = judgment.per_criterion.find(std::string(kOverallCriterion));
      if (it != judgment.per_criterion.end()) {
        out << "result: " << (it->second.score >= 5 ? "correct" : "wrong") << "\n";
        out << "Explanation: " << it->second.explanation << "\n";
      }
      break;
    }
  }
  return out.str();
}

inline std::string render_history_block(std::span<const AgentMetaJudgment> history,
                                        const Rubric& rubric) {
  std::ostringstream out;
  bool first = true;
  for (const auto& entry : history) {
    if (!first) out << "\n";
    first = false;
    out << render_history_entry(entry, rubric);
  }
  return out.str();
}

// Deterministic prompt assembly: equal inputs produce byte-identical output.
// History and system blocks are present exactly when a history is given.
inline PromptBundle render_meta_prompt(const Rubric& rubric,
                                       const JudgmentRecord& judgment,
                                       const ResponsePair& pair,
                                       const std::optional<RolePersona>& role = {},
                                       std::span<const AgentMetaJudgment> history = {}) {
  if (judgment.pair_id != pair.id) {
    throw PreconditionError("judgment " + judgment.pair_id +
                            " does not reference pair " + pair.id);
  }
  PromptBundle bundle;
  if (role) bundle.role_preamble = role->preamble;
  bundle.question = pair.question;
  bundle.answer_a = pair.answer_a;
  bundle.answer_b = pair.answer_b;
  bundle.judgment = judgment.explanation;
  bundle.decision = render_decision(judgment.decision);
  bundle.rubric_block = detail::render_rubric_block(rubric);
  if (!history.empty()) {
    bundle.history_block = render_history_block(history, rubric);
    bundle.system_block = std::string(kDiscussionSystemInstruction);
  }
  return bundle;
}

// Placeholder substitution for the judge prompt template. Recognized
// placeholders: {question}, {answer_a}, {answer_b}.
inline std::string render_judge_prompt(std::string_view prompt_template,
                                       const ResponsePair& pair) {
  std::string out(prompt_template);
  auto replace_all = [&out](std::string_view key, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = out.find(key, pos)) != std::string::npos) {
      out.replace(pos, key.size(), value);
      pos += value.size();
    }
  };
  replace_all("{question}", pair.question);
  replace_all("{answer_a}", pair.answer_a);
  replace_all("{answer_b}", pair.answer_b);
  return out;
}

}  // namespace metajudge
