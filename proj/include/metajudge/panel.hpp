#pragma once

#include <future>
#include <optional>
#include <string>
#include <vector>

#include "metajudge/agents.hpp"
#include "metajudge/aggregation.hpp"
#include "metajudge/core.hpp"
#include "metajudge/errors.hpp"
#include "metajudge/prompt.hpp"
#include "metajudge/rubric.hpp"

namespace metajudge {

enum class PanelMode { Independent, Discussion };

inline std::string_view to_string(PanelMode mode) {
  return mode == PanelMode::Independent ? "independent" : "discussion";
}

struct PanelPlan {
  std::vector<AgentConfig> agents;  // panel order matters in discussion mode
  PanelMode mode = PanelMode::Independent;
  int passes = 2;  // discussion rounds; every agent speaks once per pass
  std::optional<AgentConfig> summarizer;
  Rubric rubric;
  Strategy aggregation = Strategy::WeightedAverage;
  double vote_threshold = 4.5;
};

// Agents are treated equally unless weights were configured explicitly.
inline void assign_default_agent_weights(PanelPlan& plan) {
  double sum = 0.0;
  for (const auto& agent : plan.agents) sum += agent.agent_weight;
  if (sum == 0.0 && !plan.agents.empty()) {
    const double uniform = 1.0 / static_cast<double>(plan.agents.size());
    for (auto& agent : plan.agents) agent.agent_weight = uniform;
  }
}

inline void validate_plan(const PanelPlan& plan) {
  if (plan.agents.empty()) throw ValidationError("panel has no agents");
  if (plan.mode == PanelMode::Discussion && plan.agents.size() < 2) {
    throw PreconditionError("discussion mode requires at least 2 agents");
  }
  if (plan.mode == PanelMode::Discussion && plan.passes < 1) {
    throw ValidationError("discussion passes must be >= 1");
  }
  if (plan.summarizer) {
    if (plan.mode != PanelMode::Discussion) {
      throw ValidationError("summarizer requires discussion mode");
    }
    if (!plan.summarizer->role || plan.summarizer->role->role != Role::Summarizer) {
      throw ValidationError("summarizer agent must carry the summarizer role");
    }
  }
  if (plan.aggregation == Strategy::Summarized && !plan.summarizer) {
    throw ValidationError("summarized aggregation requires a summarizer agent");
  }
  double weight_sum = 0.0;
  for (const auto& agent : plan.agents) weight_sum += agent.agent_weight;
  if (std::abs(weight_sum - 1.0) > kPanelWeightTolerance) {
    throw ValidationError("agent weights sum to " + std::to_string(weight_sum) +
                          ", expected 1");
  }
  if (auto violations = validate_rubric(plan.rubric); !violations.empty()) {
    throw ValidationError("plan rubric invalid: " + violations.front().message);
  }
  if (!(plan.vote_threshold >= 1.0 && plan.vote_threshold <= 5.0)) {
    throw ValidationError("vote threshold outside [1,5]");
  }
}

// Expected agent invocations for a plan: one pass per agent when
// independent, one per agent per round when discussing, plus one for the
// summarizer when present.
struct CallPlan {
  int agent_passes = 0;
  int summarizer_passes = 0;
  int total() const { return agent_passes + summarizer_passes; }
};

inline CallPlan total_cost(const PanelPlan& plan) {
  CallPlan cost;
  const int agents = static_cast<int>(plan.agents.size());
  cost.agent_passes =
      plan.mode == PanelMode::Independent ? agents : plan.passes * agents;
  cost.summarizer_passes = plan.summarizer ? 1 : 0;
  return cost;
}

struct TranscriptEntry {
  int pass = 0;
  int panel_position = 0;
  std::string agent_id;
  std::optional<AgentMetaJudgment> judgment;  // absent when the agent failed
  std::string error;
  // How many earlier (successful) entries this agent saw in its prompt.
  int saw_entries = 0;

  bool ok() const { return judgment.has_value(); }
};

struct DiscussionTranscript {
  std::vector<TranscriptEntry> entries;

  std::vector<AgentMetaJudgment> successful_judgments() const {
    std::vector<AgentMetaJudgment> out;
    for (const auto& entry : entries) {
      if (entry.ok()) out.push_back(*entry.judgment);
    }
    return out;
  }
};

// Verifies the causality invariant: entries are strictly ordered by
// (pass, panel position) and each entry saw exactly the successful entries
// recorded before it.
inline void audit_transcript(const DiscussionTranscript& transcript) {
  int ok_so_far = 0;
  const TranscriptEntry* previous = nullptr;
  for (const auto& entry : transcript.entries) {
    if (previous) {
      const bool ordered = previous->pass < entry.pass ||
                           (previous->pass == entry.pass &&
                            previous->panel_position < entry.panel_position);
      if (!ordered) throw ValidationError("transcript entries out of order");
    }
    if (entry.saw_entries != ok_so_far) {
      throw ValidationError("transcript causality violated: agent '" + entry.agent_id +
                            "' saw " + std::to_string(entry.saw_entries) +
                            " entries, expected " + std::to_string(ok_so_far));
    }
    if (entry.ok()) ++ok_so_far;
    previous = &entry;
  }
}

// Per-item orchestration result. `judgments` holds each agent's final
// meta-judgment in panel order (failed agents omitted).
struct ItemPanelResult {
  std::vector<AgentMetaJudgment> judgments;
  DiscussionTranscript transcript;  // empty in independent mode
  std::optional<AgentMetaJudgment> summary;
  bool partial = false;
  std::vector<std::string> errors;
  int executed_calls = 0;
};

// Independent fan-out: no shared history, agent failures recorded without
// aborting the item. Throws ItemFailed only when no agent produced a usable
// meta-judgment.
inline ItemPanelResult run_independent(const PanelPlan& plan, const ResponsePair& pair,
                                       const JudgmentRecord& judgment,
                                       const TransportFactory& transports) {
  if (plan.mode != PanelMode::Independent) {
    throw PreconditionError("run_independent called on a discussion plan");
  }
  validate_plan(plan);

  const PromptBundle prompt = render_meta_prompt(plan.rubric, judgment, pair, {});

  struct Slot {
    std::optional<AgentMetaJudgment> judgment;
    std::string error;
  };
  std::vector<Slot> slots(plan.agents.size());

  std::vector<std::future<void>> tasks;
  tasks.reserve(plan.agents.size());
  for (std::size_t i = 0; i < plan.agents.size(); ++i) {
    tasks.push_back(std::async(std::launch::async, [&, i] {
      const AgentConfig& agent = plan.agents[i];
      try {
        auto transport = transports(agent);
        PromptBundle agent_prompt = prompt;
        if (agent.role) agent_prompt.role_preamble = agent.role->preamble;
        slots[i].judgment = score_with_rubric(agent, agent_prompt, plan.rubric, *transport);
      } catch (const std::exception& error) {
        slots[i].error = error.what();
      }
    }));
  }
  for (auto& task : tasks) task.get();

  ItemPanelResult result;
  result.executed_calls = static_cast<int>(plan.agents.size());
  for (auto& slot : slots) {
    if (slot.judgment) {
      result.judgments.push_back(std::move(*slot.judgment));
    } else {
      result.partial = true;
      result.errors.push_back(slot.error);
    }
  }
  if (result.judgments.empty()) {
    throw ItemFailed("all " + std::to_string(plan.agents.size()) +
                     " agents failed for pair " + pair.id);
  }
  return result;
}

// Sequential discussion: pass k proceeds in panel order and every agent sees
// all successful entries recorded before its turn. An agent's final
// meta-judgment is its last successful pass.
inline ItemPanelResult run_discussion(const PanelPlan& plan, const ResponsePair& pair,
                                      const JudgmentRecord& judgment,
                                      const TransportFactory& transports) {
  if (plan.mode != PanelMode::Discussion) {
    throw PreconditionError("run_discussion called on an independent plan");
  }
  validate_plan(plan);

  ItemPanelResult result;
  std::vector<AgentMetaJudgment> history;
  std::vector<std::optional<AgentMetaJudgment>> finals(plan.agents.size());

  for (int pass = 1; pass <= plan.passes; ++pass) {
    for (std::size_t i = 0; i < plan.agents.size(); ++i) {
      const AgentConfig& agent = plan.agents[i];
      TranscriptEntry entry;
      entry.pass = pass;
      entry.panel_position = static_cast<int>(i);
      entry.agent_id = agent.agent_id;
      entry.saw_entries = static_cast<int>(history.size());
      ++result.executed_calls;
      try {
        const PromptBundle prompt =
            render_meta_prompt(plan.rubric, judgment, pair, agent.role, history);
        auto transport = transports(agent);
        AgentMetaJudgment meta = score_with_rubric(agent, prompt, plan.rubric, *transport);
        history.push_back(meta);
        finals[i] = meta;
        entry.judgment = std::move(meta);
      } catch (const std::exception& error) {
        entry.error = error.what();
        result.partial = true;
        result.errors.push_back(agent.agent_id + ": " + entry.error);
      }
      result.transcript.entries.push_back(std::move(entry));
    }
  }

  for (auto& final_judgment : finals) {
    if (final_judgment) result.judgments.push_back(std::move(*final_judgment));
  }
  if (result.judgments.empty()) {
    throw ItemFailed("all agents failed in discussion for pair " + pair.id);
  }
  audit_transcript(result.transcript);
  return result;
}

// One extra call whose prompt embeds the entire (successful) transcript; the
// summarizer's per-criterion scores feed the summarized aggregation.
inline AgentMetaJudgment run_summarizer(const PanelPlan& plan,
                                        const DiscussionTranscript& transcript,
                                        const ResponsePair& pair,
                                        const JudgmentRecord& judgment,
                                        const TransportFactory& transports) {
  if (!plan.summarizer) throw PreconditionError("plan has no summarizer");
  const auto history = transcript.successful_judgments();
  if (history.empty()) {
    throw PreconditionError("cannot summarize an empty transcript");
  }
  const PromptBundle prompt =
      render_meta_prompt(plan.rubric, judgment, pair, plan.summarizer->role, history);
  auto transport = transports(*plan.summarizer);
  return score_with_rubric(*plan.summarizer, prompt, plan.rubric, *transport);
}

}  // namespace metajudge
