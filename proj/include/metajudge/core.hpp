#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "metajudge/detail/strings.hpp"
#include "metajudge/errors.hpp"

namespace metajudge {

// Strict preference between the two candidate answers. There is no tie value:
// tie-like judge outputs are surfaced as UnparseableDecision, never dropped.
enum class Decision { AWins, BWins };

enum class TaskCategory { Knowledge, Reasoning, Math, Coding };

inline constexpr std::array<TaskCategory, 4> kAllCategories = {
    TaskCategory::Knowledge, TaskCategory::Reasoning, TaskCategory::Math,
    TaskCategory::Coding};

inline Decision flip(Decision d) {
  return d == Decision::AWins ? Decision::BWins : Decision::AWins;
}

inline std::string_view to_string(Decision d) {
  return d == Decision::AWins ? "A>B" : "B>A";
}

inline std::string_view to_string(TaskCategory c) {
  switch (c) {
    case TaskCategory::Knowledge: return "Knowledge";
    case TaskCategory::Reasoning: return "Reasoning";
    case TaskCategory::Math: return "Math";
    case TaskCategory::Coding: return "Coding";
  }
  return "Knowledge";
}

inline std::optional<TaskCategory> parse_category(std::string_view text) {
  const std::string lowered = detail::to_lower(detail::trim(text));
  if (lowered == "knowledge") return TaskCategory::Knowledge;
  if (lowered == "reasoning") return TaskCategory::Reasoning;
  if (lowered == "math") return TaskCategory::Math;
  if (lowered == "coding") return TaskCategory::Coding;
  return std::nullopt;
}

// One benchmark unit: a question, two candidate answers, and a ground-truth
// preference label.
struct ResponsePair {
  std::string id;
  TaskCategory category = TaskCategory::Knowledge;
  std::string question;
  std::string answer_a;
  std::string answer_b;
  Decision label = Decision::AWins;
  std::string source;

  friend bool operator==(const ResponsePair&, const ResponsePair&) = default;
};

// A judge model's decision for one pair. is_correct is derived from the
// pair's label and must never be stored inconsistently with it.
struct JudgmentRecord {
  std::string pair_id;
  std::string judge_model;
  Decision decision = Decision::AWins;
  std::string explanation;
  bool is_correct = false;

  friend bool operator==(const JudgmentRecord&, const JudgmentRecord&) = default;
};

inline bool match_ground_truth(Decision decision, Decision pair_label) {
  return decision == pair_label;
}

// Accepted decision spellings, fixed and documented: "A>B" with optional
// single or double brackets and arbitrary interior whitespace, either
// orientation, case-insensitive. Anything else (ties, refusals, both
// orientations at once) raises UnparseableDecision.
inline Decision parse_decision(std::string_view text) {
  if (detail::trim(text).empty()) {
    throw PreconditionError("parse_decision: empty decision text");
  }

  bool saw_a_wins = false;
  bool saw_b_wins = false;

  const auto upper_of = [](char c) {
    return static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  };

  // Scan for "X > Y" with X,Y in {A,B}; brackets around the expression are
  // tolerated by simply ignoring them here.
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '>') continue;
    // Walk left to the nearest non-space character.
    std::size_t l = i;
    while (l > 0 && std::isspace(static_cast<unsigned char>(text[l - 1]))) --l;
    if (l == 0) continue;
    char left = upper_of(text[l - 1]);
    // Walk right likewise.
    std::size_t r = i + 1;
    while (r < text.size() && std::isspace(static_cast<unsigned char>(text[r]))) ++r;
    if (r == text.size()) continue;
    char right = upper_of(text[r]);

    if (left == 'A' && right == 'B') saw_a_wins = true;
    if (left == 'B' && right == 'A') saw_b_wins = true;
  }

  if (saw_a_wins == saw_b_wins) {
    throw UnparseableDecision("no clear preference in decision text",
                              std::string(text));
  }
  return saw_a_wins ? Decision::AWins : Decision::BWins;
}

// Canonical rendering of a decision in the bracketed judge format.
inline std::string render_decision(Decision d) {
  return d == Decision::AWins ? "[A > B]" : "[B > A]";
}

inline JudgmentRecord make_judgment(const ResponsePair& pair, std::string judge_model,
                                    Decision decision, std::string explanation) {
  JudgmentRecord record;
  record.pair_id = pair.id;
  record.judge_model = std::move(judge_model);
  record.decision = decision;
  record.explanation = std::move(explanation);
  record.is_correct = match_ground_truth(decision, pair.label);
  return record;
}

}  // namespace metajudge
