#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace metajudge {

// Token/call accounting for one or more agent invocations. Counts are
// additive: a run total is the sum of its item-level records.
struct CostRecord {
  std::int64_t calls = 0;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  double unit_cost = 0.0;  // configured per model; 0 when unpriced

  CostRecord& operator+=(const CostRecord& other) {
    calls += other.calls;
    input_tokens += other.input_tokens;
    output_tokens += other.output_tokens;
    unit_cost += other.unit_cost;
    return *this;
  }

  friend bool operator==(const CostRecord&, const CostRecord&) = default;
};

struct ScoreEntry {
  int score = 0;  // integer in 1..5
  std::string explanation;

  friend bool operator==(const ScoreEntry&, const ScoreEntry&) = default;
};

// One agent's scored assessment of one judgment. Keys are criterion names
// from the rubric's scoring view; binary verdicts arrive here already mapped
// to an overall score of 5 (correct) or 1 (wrong).
struct AgentMetaJudgment {
  std::string agent_id;
  std::map<std::string, ScoreEntry> per_criterion;
  std::string raw_text;
  CostRecord cost;

  friend bool operator==(const AgentMetaJudgment&, const AgentMetaJudgment&) = default;
};

}  // namespace metajudge
