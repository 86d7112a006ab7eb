#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "metajudge/detail/strings.hpp"
#include "metajudge/errors.hpp"

namespace metajudge {

enum class RubricVariant { Baseline, Short, Long, Binary };
enum class ScoringMode { PerCriterionScore, SingleOverallScore, BinaryVerdict };

inline std::string_view to_string(RubricVariant v) {
  switch (v) {
    case RubricVariant::Baseline: return "baseline";
    case RubricVariant::Short: return "short";
    case RubricVariant::Long: return "long";
    case RubricVariant::Binary: return "binary";
  }
  return "baseline";
}

inline std::optional<RubricVariant> parse_rubric_variant(std::string_view text) {
  const std::string lowered = detail::to_lower(detail::trim(text));
  if (lowered == "baseline") return RubricVariant::Baseline;
  if (lowered == "short") return RubricVariant::Short;
  if (lowered == "long") return RubricVariant::Long;
  if (lowered == "binary") return RubricVariant::Binary;
  return std::nullopt;
}

// One rubric criterion: name, guidance text, optional per-score anchors, and
// its share of the final score.
struct Criterion {
  std::string name;
  std::string description;
  std::map<int, std::string> score_descriptions;  // 1..5 for scoring variants
  double weight = 0.0;

  friend bool operator==(const Criterion&, const Criterion&) = default;
};

// Name used for the single pseudo-criterion that carries the overall score of
// the baseline variant and the mapped binary verdict.
inline constexpr std::string_view kOverallCriterion = "Overall Judgment";

struct Rubric {
  RubricVariant variant = RubricVariant::Short;
  std::vector<Criterion> criteria;
  ScoringMode scoring_mode = ScoringMode::PerCriterionScore;

  friend bool operator==(const Rubric&, const Rubric&) = default;

  // The criteria an agent actually emits scores for. Per-criterion variants
  // score every listed criterion; the baseline and binary variants collapse
  // to one overall pseudo-criterion of weight 1.0 so downstream aggregation
  // is uniform across variants.
  std::vector<Criterion> scoring_criteria() const {
    if (scoring_mode == ScoringMode::PerCriterionScore) return criteria;
    Criterion overall;
    overall.name = std::string(kOverallCriterion);
    overall.weight = 1.0;
    return {overall};
  }

  // The exact answer-format instruction the rendered prompt must end with.
  std::string answer_format_instruction() const {
    switch (scoring_mode) {
      case ScoringMode::BinaryVerdict:
        return "Finally, determine the correctness of the judgment and decision "
               "based on the above rubrics. Please respond strictly in the "
               "following format: result: [correct/wrong], Explanation:";
      case ScoringMode::SingleOverallScore:
        return "Please respond strictly in the following format: "
               "Score: [1-5], Explanation:";
      case ScoringMode::PerCriterionScore:
        return "For each criterion, respond strictly in the following format: "
               "Criterion: <criterion name>\nScore: [1-5]\nExplanation:";
    }
    return {};
  }
};

// Default criterion weights. Hand-entered decimals; they sum to 1 exactly.
inline std::map<std::string, double> default_weight_table() {
  return {{"Accuracy of Judgment", 0.2},        {"Logical Soundness", 0.2},
          {"Completeness of Evaluation", 0.15}, {"Fairness", 0.1},
          {"Relevance to Context", 0.15},       {"Clarity of Explanation", 0.1},
          {"Impactfulness", 0.1}};
}

struct RubricViolation {
  std::string code;     // stable identifier, e.g. "weight-sum"
  std::string message;  // human-readable detail
};

inline constexpr double kWeightSumTolerance = 1e-9;

// Structural validation. Returns the full violation list; never throws.
inline std::vector<RubricViolation> validate_rubric(const Rubric& rubric) {
  std::vector<RubricViolation> violations;
  if (rubric.criteria.empty()) {
    violations.push_back({"empty", "rubric has no criteria"});
    return violations;
  }

  double weight_sum = 0.0;
  std::map<std::string, int> name_counts;
  for (const auto& criterion : rubric.criteria) {
    weight_sum += criterion.weight;
    name_counts[criterion.name]++;
    if (!(criterion.weight > 0.0 && criterion.weight <= 1.0)) {
      violations.push_back({"weight-range",
                            "criterion '" + criterion.name +
                                "' weight must be in (0,1], got " +
                                std::to_string(criterion.weight)});
    }
    if (rubric.scoring_mode == ScoringMode::PerCriterionScore) {
      for (int score = 1; score <= 5; ++score) {
        auto it = criterion.score_descriptions.find(score);
        if (it == criterion.score_descriptions.end() || it->second.empty()) {
          violations.push_back({"score-range",
                                "criterion '" + criterion.name +
                                    "' missing description for score " +
                                    std::to_string(score)});
        }
      }
      if (criterion.score_descriptions.size() > 5) {
        violations.push_back({"score-range",
                              "criterion '" + criterion.name +
                                  "' has descriptions outside 1..5"});
      }
    }
  }
  for (const auto& [name, count] : name_counts) {
    if (count > 1) {
      violations.push_back({"duplicate-name", "criterion '" + name + "' appears " +
                                                  std::to_string(count) + " times"});
    }
  }
  if (std::abs(weight_sum - 1.0) > kWeightSumTolerance) {
    violations.push_back({"weight-sum", "criterion weights sum to " +
                                            std::to_string(weight_sum) +
                                            ", expected 1"});
  }

  const ScoringMode expected_mode =
      rubric.variant == RubricVariant::Baseline ? ScoringMode::SingleOverallScore
      : rubric.variant == RubricVariant::Binary ? ScoringMode::BinaryVerdict
                                                : ScoringMode::PerCriterionScore;
  if (rubric.scoring_mode != expected_mode) {
    violations.push_back({"mode-mismatch",
                          std::string("variant '") +
                              std::string(to_string(rubric.variant)) +
                              "' carries the wrong scoring mode"});
  }
  return violations;
}

namespace detail {

struct CriterionText {
  std::string_view name;
  std::string_view short_description;
  std::array<std::string_view, 5> short_scores;
  std::string_view long_description;
  std::array<std::string_view, 5> long_scores;
};

// Per-criterion guidance for the short variant (one-line anchors) and the
// long variant (three-sentence description, two-sentence anchors).
inline const std::array<CriterionText, 7>& criterion_texts() {
  static const std::array<CriterionText, 7> texts = {{
      {"Accuracy of Judgment",
       "Measures if the judgment reaches the factually correct conclusion about "
       "which response is better.",
       {"Entirely inaccurate, contradicting the evident facts of the responses.",
        "Mostly inaccurate, with major factual errors in the assessment.",
        "Partially accurate, mixing correct observations with clear mistakes.",
        "Mostly accurate, with only minor factual slips.",
        "Fully accurate, with every claim about the responses verifiably correct."},
       "Assesses whether the judgment reaches the factually correct conclusion "
       "about which response better answers the question. A sound judgment must "
       "rest on claims about the responses that can be verified against their "
       "actual content. This anchors the evaluation in what the responses really "
       "say rather than in assumptions.",
       {"The judgment rests on claims that are factually wrong about both "
        "responses. Its conclusion contradicts what the responses actually "
        "contain.",
        "The judgment contains major factual errors about the responses. The "
        "errors are serious enough to undermine the stated conclusion.",
        "The judgment mixes correct observations with noticeable factual "
        "mistakes. The conclusion may still hold, but parts of its support do "
        "not.",
        "The judgment is factually correct in nearly all of its claims. "
        "Remaining slips are minor and do not affect the conclusion.",
        "Every claim the judgment makes about the responses is verifiably "
        "correct. The conclusion follows from an accurate reading of both "
        "responses."}},
      {"Logical Soundness",
       "Measures if the decision-making process follows a clear and logical "
       "reasoning path.",
       {"Illogical, with no clear reasoning or consistency.",
        "Mostly illogical, with several gaps or flawed reasoning.",
        "Partially logical, with some inconsistencies in the reasoning process.",
        "Mostly logical, with minor flaws in reasoning.",
        "Highly logical, with a clear and consistent reasoning process "
        "throughout."},
       "Assesses whether the judgment or decision follows a coherent and logical "
       "progression from the evidence or reasoning process. A well-reasoned "
       "decision should clearly demonstrate how conclusions were drawn and avoid "
       "logical fallacies or contradictions. This ensures the reasoning process "
       "is transparent and defensible.",
       {"Decision-making process is illogical, lacking clear reasoning or "
        "consistency. The conclusion appears arbitrary or disconnected from the "
        "supporting evidence.",
        "Decision-making process shows significant gaps or logical flaws, making "
        "it difficult to follow. Reasoning is inconsistent, and critical errors "
        "undermine the validity of the conclusion.",
        "Decision-making process is moderately logical, but some inconsistencies "
        "or gaps weaken its coherence. While the reasoning is partially sound, "
        "certain steps may appear unclear or unsupported.",
        "Decision-making process is mostly logical, with minor issues that do "
        "not undermine its overall integrity. The reasoning is generally clear "
        "and follows a structured progression with only slight missteps.",
        "Decision-making process is entirely logical, with clear and consistent "
        "reasoning throughout. Every step in the reasoning process is "
        "well-supported and leads naturally to the conclusion."}},
      {"Completeness of Evaluation",
       "Measures if the judgment considers all relevant aspects of both "
       "responses.",
       {"Ignores nearly all relevant aspects of the responses.",
        "Covers only a small fraction of the relevant aspects.",
        "Covers several relevant aspects but leaves notable gaps.",
        "Covers most relevant aspects, with small omissions.",
        "Covers every relevant aspect of both responses thoroughly."},
       "Assesses whether the evaluation considers all aspects of the responses "
       "that are relevant to the question. A complete judgment weighs strengths "
       "and weaknesses of both candidates rather than stopping at the first "
       "difference found. This prevents decisions based on a partial view of the "
       "evidence.",
       {"The evaluation ignores nearly all relevant aspects of the responses. "
        "The decision is based on an isolated fragment of the evidence.",
        "The evaluation covers only a small fraction of what matters. Large and "
        "clearly relevant portions of both responses go unexamined.",
        "The evaluation covers several relevant aspects but leaves notable gaps. "
        "At least one aspect that could change the outcome is missing.",
        "The evaluation covers most relevant aspects of both responses. "
        "Omissions are small and unlikely to change the outcome.",
        "The evaluation thoroughly examines every relevant aspect of both "
        "responses. Nothing that could influence the decision is left out."}},
      {"Fairness",
       "Measures if both responses are assessed impartially under the same "
       "standard.",
       {"Heavily biased toward one response without justification.",
        "Clearly uneven treatment of the two responses.",
        "Mostly even-handed, with occasional unjustified leaning.",
        "Impartial in nearly all respects, with minor imbalance.",
        "Fully impartial, applying identical standards to both responses."},
       "Assesses whether both responses are measured against the same standard "
       "without favoritism. An impartial judgment applies identical scrutiny to "
       "each candidate regardless of order, length, or style. This guards the "
       "decision against systematic bias.",
       {"One response is plainly favored without justification. The standards "
        "applied to the two candidates are openly different.",
        "Treatment of the two responses is clearly uneven. Scrutiny applied to "
        "one candidate is mostly absent for the other.",
        "The judgment is mostly even-handed but leans without justification in "
        "places. The imbalance is visible though not decisive.",
        "The judgment applies nearly identical standards to both responses. Any "
        "residual imbalance is minor and inconsequential.",
        "Both responses are examined under exactly the same standard. No trace "
        "of positional, stylistic, or length-based favoritism appears."}},
      {"Relevance to Context",
       "Measures if the judgment stays grounded in the question and the given "
       "responses.",
       {"Largely detached from the question and responses.",
        "Frequently drifts away from the given context.",
        "Generally on topic, with some digressions.",
        "Stays on topic, with only slight digressions.",
        "Entirely grounded in the question and the responses throughout."},
       "Assesses whether the judgment stays grounded in the given question and "
       "the two responses. A relevant evaluation draws its arguments from the "
       "provided material instead of outside speculation. This keeps the "
       "decision tied to the task actually posed.",
       {"The judgment is largely detached from the question and responses. Its "
        "arguments concern material that was never provided.",
        "The judgment frequently drifts from the given context. Much of its "
        "reasoning does not bear on the actual task.",
        "The judgment is generally on topic but includes digressions. Some "
        "arguments have little connection to the provided material.",
        "The judgment stays on topic with only slight digressions. Its arguments "
        "are drawn almost entirely from the provided material.",
        "The judgment is entirely grounded in the question and responses. Every "
        "argument traces directly to the provided material."}},
      {"Clarity of Explanation",
       "Measures if the explanation is easy to follow and clearly justifies the "
       "decision.",
       {"Confusing or incoherent, giving no usable justification.",
        "Hard to follow, with a vague or muddled justification.",
        "Understandable overall, though parts are unclear.",
        "Clear and well organized, with minor rough spots.",
        "Exceptionally clear, leaving no doubt about the rationale."},
       "Assesses whether the explanation communicates the reasoning in a way a "
       "reader can follow. A clear explanation states what was compared, what "
       "was found, and why the finding settles the decision. This makes the "
       "judgment reviewable by others.",
       {"The explanation is confusing or incoherent. A reader cannot reconstruct "
        "why the decision was made.",
        "The explanation is hard to follow and vaguely worded. The link between "
        "observations and decision remains murky.",
        "The explanation is understandable overall though parts are unclear. A "
        "reader can reconstruct the reasoning with some effort.",
        "The explanation is clear and well organized with minor rough spots. A "
        "reader can follow the reasoning without difficulty.",
        "The explanation is exceptionally clear and precisely worded. The path "
        "from evidence to decision is immediately evident."}},
      {"Impactfulness",
       "Measures if the judgment identifies the decisive differences that "
       "actually separate the responses.",
       {"Focuses on trivia, missing every decisive difference.",
        "Mentions mostly minor points, overlooking the key differences.",
        "Identifies some decisive differences among less important ones.",
        "Centers on the decisive differences, with minor padding.",
        "Pinpoints exactly the differences that decide the comparison."},
       "Assesses whether the judgment identifies the differences that genuinely "
       "decide the comparison. A high-impact judgment separates decisive factors "
       "from cosmetic ones and rests its conclusion on the former. This keeps "
       "the decision focused on what matters.",
       {"The judgment dwells on trivia and misses every decisive difference. Its "
        "conclusion rests on factors that could not settle the comparison.",
        "The judgment mentions mostly minor points. The key differences between "
        "the responses are overlooked or underweighted.",
        "The judgment identifies some decisive differences among less important "
        "ones. The decisive and the cosmetic are not clearly separated.",
        "The judgment centers on the decisive differences with minor padding. "
        "The conclusion rests mainly on factors that matter.",
        "The judgment pinpoints exactly the differences that decide the "
        "comparison. Every cited factor is material to the outcome."}},
  }};
  return texts;
}

}  // namespace detail

inline Rubric builtin_rubric(RubricVariant variant) {
  Rubric rubric;
  rubric.variant = variant;
  const auto weights = default_weight_table();

  switch (variant) {
    case RubricVariant::Baseline: {
      rubric.scoring_mode = ScoringMode::SingleOverallScore;
      Criterion overall;
      overall.name = std::string(kOverallCriterion);
      overall.description =
          "Explain which judgment is more accurate according to the original "
          "rubric and why. Combine judgment and decision to finally assign a "
          "score and consider factors such as adherence, accuracy, and "
          "consistency to the judgment instruction.";
      overall.weight = 1.0;
      rubric.criteria.push_back(std::move(overall));
      break;
    }
    case RubricVariant::Binary: {
      rubric.scoring_mode = ScoringMode::BinaryVerdict;
      for (const auto& text : detail::criterion_texts()) {
        Criterion criterion;
        criterion.name = std::string(text.name);
        criterion.description = std::string(text.short_description);
        criterion.weight = weights.at(criterion.name);
        rubric.criteria.push_back(std::move(criterion));
      }
      break;
    }
    case RubricVariant::Short:
    case RubricVariant::Long: {
      rubric.scoring_mode = ScoringMode::PerCriterionScore;
      const bool long_form = variant == RubricVariant::Long;
      for (const auto& text : detail::criterion_texts()) {
        Criterion criterion;
        criterion.name = std::string(text.name);
        criterion.description =
            std::string(long_form ? text.long_description : text.short_description);
        const auto& scores = long_form ? text.long_scores : text.short_scores;
        for (int score = 1; score <= 5; ++score) {
          criterion.score_descriptions[score] = std::string(scores[score - 1]);
        }
        criterion.weight = weights.at(criterion.name);
        rubric.criteria.push_back(std::move(criterion));
      }
      break;
    }
  }
  return rubric;
}

// ── Serialization ───────────────────────────────────────────────
// Rubrics serialize to a versioned JSON document; the file is the unit of
// rubric versioning.

inline constexpr int kRubricSchemaVersion = 1;

inline std::string_view to_string(ScoringMode mode) {
  switch (mode) {
    case ScoringMode::PerCriterionScore: return "per_criterion";
    case ScoringMode::SingleOverallScore: return "single_overall";
    case ScoringMode::BinaryVerdict: return "binary_verdict";
  }
  return "per_criterion";
}

inline nlohmann::json to_json(const Rubric& rubric) {
  nlohmann::json doc;
  doc["schema_version"] = kRubricSchemaVersion;
  doc["variant"] = std::string(to_string(rubric.variant));
  doc["scoring_mode"] = std::string(to_string(rubric.scoring_mode));
  doc["criteria"] = nlohmann::json::array();
  for (const auto& criterion : rubric.criteria) {
    nlohmann::json entry;
    entry["name"] = criterion.name;
    entry["weight"] = criterion.weight;
    entry["description"] = criterion.description;
    if (!criterion.score_descriptions.empty()) {
      nlohmann::json scores;
      for (const auto& [score, text] : criterion.score_descriptions) {
        scores[std::to_string(score)] = text;
      }
      entry["scores"] = std::move(scores);
    }
    doc["criteria"].push_back(std::move(entry));
  }
  return doc;
}

inline Rubric rubric_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ValidationError("rubric document must be a JSON object");
  const int version = doc.value("schema_version", -1);
  if (version != kRubricSchemaVersion) {
    throw VersionMismatchError("rubric schema_version " + std::to_string(version) +
                               " not supported (expected " +
                               std::to_string(kRubricSchemaVersion) + ")");
  }
  Rubric rubric;
  auto variant = parse_rubric_variant(doc.value("variant", ""));
  if (!variant) throw ValidationError("rubric has unknown variant");
  rubric.variant = *variant;

  const std::string mode = doc.value("scoring_mode", "");
  if (mode == "per_criterion") rubric.scoring_mode = ScoringMode::PerCriterionScore;
  else if (mode == "single_overall") rubric.scoring_mode = ScoringMode::SingleOverallScore;
  else if (mode == "binary_verdict") rubric.scoring_mode = ScoringMode::BinaryVerdict;
  else throw ValidationError("rubric has unknown scoring_mode '" + mode + "'");

  if (!doc.contains("criteria") || !doc["criteria"].is_array()) {
    throw ValidationError("rubric document missing criteria array");
  }
  for (const auto& entry : doc["criteria"]) {
    Criterion criterion;
    criterion.name = entry.value("name", "");
    criterion.weight = entry.value("weight", 0.0);
    criterion.description = entry.value("description", "");
    if (entry.contains("scores")) {
      for (const auto& [key, value] : entry["scores"].items()) {
        criterion.score_descriptions[std::stoi(key)] = value.get<std::string>();
      }
    }
    rubric.criteria.push_back(std::move(criterion));
  }
  return rubric;
}

// ── Plain-text block format ─────────────────────────────────────
// The format rubric-refinement agents are asked to emit; also a readable
// export. One block per criterion:
//
//   Criterion: <name>
//   Weight: <w>
//   Description: <text>
//   Score 1: <text>
//   ...
//   Score 5: <text>

namespace detail {

// Shortest decimal that round-trips the exact double.
inline std::string format_weight(double weight) {
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), weight);
  (void)ec;
  return std::string(buffer, end);
}

}  // namespace detail

inline std::string render_rubric_text(const Rubric& rubric) {
  std::ostringstream out;
  bool first = true;
  for (const auto& criterion : rubric.criteria) {
    if (!first) out << "\n";
    first = false;
    out << "Criterion: " << criterion.name << "\n";
    out << "Weight: " << detail::format_weight(criterion.weight) << "\n";
    out << "Description: " << criterion.description << "\n";
    for (const auto& [score, text] : criterion.score_descriptions) {
      out << "Score " << score << ": " << text << "\n";
    }
  }
  return out.str();
}

inline Rubric parse_rubric_text(std::string_view text,
                                RubricVariant variant = RubricVariant::Long) {
  Rubric rubric;
  rubric.variant = variant;
  rubric.scoring_mode = variant == RubricVariant::Baseline ? ScoringMode::SingleOverallScore
                        : variant == RubricVariant::Binary ? ScoringMode::BinaryVerdict
                                                           : ScoringMode::PerCriterionScore;

  Criterion current;
  bool in_block = false;
  auto flush = [&] {
    if (in_block) rubric.criteria.push_back(std::move(current));
    current = Criterion{};
    in_block = false;
  };

  for (const auto& raw_line : detail::split_lines(text)) {
    std::string_view line = detail::trim(raw_line);
    if (line.empty()) continue;

    auto take_after = [&](std::string_view prefix) -> std::optional<std::string_view> {
      if (line.size() >= prefix.size() &&
          detail::iequals(line.substr(0, prefix.size()), prefix)) {
        return detail::trim(line.substr(prefix.size()));
      }
      return std::nullopt;
    };

    if (auto name = take_after("Criterion:")) {
      flush();
      in_block = true;
      current.name = std::string(*name);
    } else if (auto weight = take_after("Weight:")) {
      if (!in_block) throw RefinementParseError("Weight line outside criterion block",
                                                std::string(text));
      try {
        current.weight = std::stod(std::string(*weight));
      } catch (const std::exception&) {
        throw RefinementParseError("unparseable weight '" + std::string(*weight) + "'",
                                   std::string(text));
      }
    } else if (auto description = take_after("Description:")) {
      if (in_block) current.description = std::string(*description);
    } else if (line.size() >= 7 && detail::iequals(line.substr(0, 5), "Score")) {
      // "Score N: text"
      std::size_t colon = line.find(':');
      if (colon == std::string_view::npos || !in_block) continue;
      std::string_view num = detail::trim(line.substr(5, colon - 5));
      int score = 0;
      if (num.size() == 1 && num[0] >= '1' && num[0] <= '5') score = num[0] - '0';
      if (score == 0) {
        throw RefinementParseError("score label outside 1..5: '" + std::string(line) + "'",
                                   std::string(text));
      }
      current.score_descriptions[score] = std::string(detail::trim(line.substr(colon + 1)));
    }
  }
  flush();

  if (rubric.criteria.empty()) {
    throw RefinementParseError("no criterion blocks found", std::string(text));
  }
  return rubric;
}

}  // namespace metajudge
