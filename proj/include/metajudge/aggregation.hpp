#pragma once

// Score aggregation for meta-judge panels. Three strategies:
//   weighted average   final = sum_i w_i * sum_j w_j * S_ij
//   majority vote      final = 5 if |{i : S_i > T}| > M/2 else 1
//   summarized         final = sum_j w_j * S_j
// All comparisons against the vote threshold are exact floating-point
// comparisons (no epsilon) so stored fixtures reproduce bit-for-bit.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "metajudge/errors.hpp"

namespace metajudge {

enum class Strategy { WeightedAverage, MajorityVote, Summarized };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::WeightedAverage: return "weighted_average";
    case Strategy::MajorityVote: return "majority_vote";
    case Strategy::Summarized: return "summarized";
  }
  return "weighted_average";
}

inline std::optional<Strategy> parse_strategy(std::string_view text) {
  if (text == "weighted_average") return Strategy::WeightedAverage;
  if (text == "majority_vote") return Strategy::MajorityVote;
  if (text == "summarized") return Strategy::Summarized;
  return std::nullopt;
}

struct FinalScore {
  double value = 0.0;
  Strategy strategy = Strategy::WeightedAverage;
  std::optional<double> vote_threshold;  // set for majority vote

  friend bool operator==(const FinalScore&, const FinalScore&) = default;
};

// One agent's weight and raw per-criterion scores.
struct AgentScores {
  double agent_weight = 0.0;
  std::map<std::string, double> scores;  // criterion name -> S_ij in [1,5]
};

struct PanelScores {
  std::vector<AgentScores> per_agent;
  std::map<std::string, double> criterion_weights;

  std::size_t agent_count() const { return per_agent.size(); }
  std::size_t criterion_count() const { return criterion_weights.size(); }
};

inline constexpr double kPanelWeightTolerance = 1e-9;

namespace detail {

// Guards against accumulated float roundoff only; the exact value is always
// inside [1,5] for valid inputs.
inline double clamp_score(double value) { return std::clamp(value, 1.0, 5.0); }

inline void require_same_criteria(const std::map<std::string, double>& scores,
                                  const std::map<std::string, double>& weights) {
  if (scores.size() != weights.size()) {
    throw ValidationError("criterion set mismatch: " + std::to_string(scores.size()) +
                          " scores vs " + std::to_string(weights.size()) + " weights");
  }
  for (const auto& [name, weight] : weights) {
    (void)weight;
    if (scores.find(name) == scores.end()) {
      throw ValidationError("criterion '" + name + "' has no score");
    }
  }
}

}  // namespace detail

inline void validate_panel(const PanelScores& panel) {
  if (panel.per_agent.empty()) throw ValidationError("panel has no agents");
  if (panel.criterion_weights.empty()) throw ValidationError("panel has no criteria");

  double agent_weight_sum = 0.0;
  for (const auto& agent : panel.per_agent) {
    if (agent.agent_weight < 0.0) throw ValidationError("negative agent weight");
    agent_weight_sum += agent.agent_weight;
    detail::require_same_criteria(agent.scores, panel.criterion_weights);
    for (const auto& [name, score] : agent.scores) {
      if (!(score >= 1.0 && score <= 5.0)) {
        throw ValidationError("score for '" + name + "' outside [1,5]: " +
                              std::to_string(score));
      }
    }
  }
  if (std::abs(agent_weight_sum - 1.0) > kPanelWeightTolerance) {
    throw ValidationError("agent weights sum to " + std::to_string(agent_weight_sum) +
                          ", expected 1");
  }
  double criterion_weight_sum = 0.0;
  for (const auto& [name, weight] : panel.criterion_weights) {
    (void)name;
    criterion_weight_sum += weight;
  }
  if (std::abs(criterion_weight_sum - 1.0) > kPanelWeightTolerance) {
    throw ValidationError("criterion weights sum to " +
                          std::to_string(criterion_weight_sum) + ", expected 1");
  }
}

// S_i: one agent's criterion-weighted composite.
inline double agent_composite(const std::map<std::string, double>& scores,
                              const std::map<std::string, double>& criterion_weights) {
  detail::require_same_criteria(scores, criterion_weights);
  double composite = 0.0;
  for (const auto& [name, weight] : criterion_weights) {
    composite += weight * scores.at(name);
  }
  return detail::clamp_score(composite);
}

inline std::vector<double> panel_composites(const PanelScores& panel) {
  std::vector<double> composites;
  composites.reserve(panel.per_agent.size());
  for (const auto& agent : panel.per_agent) {
    composites.push_back(agent_composite(agent.scores, panel.criterion_weights));
  }
  return composites;
}

inline FinalScore weighted_average(const PanelScores& panel) {
  validate_panel(panel);
  double final_score = 0.0;
  for (const auto& agent : panel.per_agent) {
    final_score +=
        agent.agent_weight * agent_composite(agent.scores, panel.criterion_weights);
  }
  return {detail::clamp_score(final_score), Strategy::WeightedAverage, std::nullopt};
}

// Strict on both inequalities: an agent's composite must exceed T to count,
// and strictly more than half the agents must do so. Even-M exact ties
// therefore resolve to 1.
inline FinalScore majority_vote(const PanelScores& panel, double vote_threshold) {
  if (!(vote_threshold >= 1.0 && vote_threshold <= 5.0)) {
    throw PreconditionError("vote threshold must lie in [1,5]");
  }
  validate_panel(panel);
  std::size_t above = 0;
  for (const auto& agent : panel.per_agent) {
    if (agent_composite(agent.scores, panel.criterion_weights) > vote_threshold) {
      ++above;
    }
  }
  const double value =
      (2.0 * static_cast<double>(above) > static_cast<double>(panel.agent_count()))
          ? 5.0
          : 1.0;
  return {value, Strategy::MajorityVote, vote_threshold};
}

// Summarizer path: the coordinator's per-criterion scores collapse the panel
// to a single criterion-weighted sum.
inline FinalScore summarized_score(const std::map<std::string, double>& summary_scores,
                                   const std::map<std::string, double>& criterion_weights) {
  detail::require_same_criteria(summary_scores, criterion_weights);
  for (const auto& [name, score] : summary_scores) {
    if (!(score >= 1.0 && score <= 5.0)) {
      throw ValidationError("summary score for '" + name + "' outside [1,5]");
    }
  }
  double final_score = 0.0;
  for (const auto& [name, weight] : criterion_weights) {
    final_score += weight * summary_scores.at(name);
  }
  return {detail::clamp_score(final_score), Strategy::Summarized, std::nullopt};
}

}  // namespace metajudge
