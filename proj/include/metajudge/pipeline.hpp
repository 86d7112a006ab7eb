#pragma once

// Library-level implementations of the CLI commands, here so tests can
// drive the full pipeline with injected transports.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "metajudge/data_io.hpp"
#include "metajudge/errors.hpp"
#include "metajudge/evaluation.hpp"
#include "metajudge/panel.hpp"
#include "metajudge/run_config.hpp"
#include "metajudge/simulate.hpp"

namespace metajudge {

inline constexpr std::string_view kDefaultJudgeTemplate =
    "You are a judge assistant comparing two candidate answers to a question.\n"
    "\n"
    "[Question]\n"
    "{question}\n"
    "\n"
    "[Answer A]\n"
    "{answer_a}\n"
    "\n"
    "[Answer B]\n"
    "{answer_b}\n"
    "\n"
    "Decide which answer is better. Respond with your decision as \"[A > B]\" or "
    "\"[B > A]\" on the first line, then \"Explanation:\" followed by your "
    "reasoning.\n";

// ── ingest ──────────────────────────────────────────────────────

struct IngestOutcome {
  DatasetManifest manifest;
  std::vector<SkippedLine> skipped;
};

inline IngestOutcome cmd_ingest(const std::filesystem::path& dataset, bool lenient) {
  LoadedDataset loaded = load_pairs(dataset, lenient);
  return {std::move(loaded.manifest), std::move(loaded.skipped)};
}

// ── judge ───────────────────────────────────────────────────────

struct JudgeOutcome {
  std::filesystem::path judgment_file;
  long generated = 0;
  std::vector<JudgmentSkip> skips;
  std::optional<double> raw_precision;
};

namespace detail {

inline std::string load_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline std::filesystem::path judgments_path(const RunConfig& config) {
  if (!config.judgments.empty()) return config.judgments;
  return std::filesystem::path(config.out) / "judgments.jsonl";
}

}  // namespace detail

inline JudgeOutcome cmd_judge(RunConfig config, const TransportFactory& transports) {
  finalize_run_config(config);
  if (!config.judge) throw ValidationError("config has no judge spec");
  if (config.dataset.empty()) throw ValidationError("config has no dataset path");

  const std::string prompt_template =
      config.judge_template.empty() ? std::string(kDefaultJudgeTemplate)
                                    : detail::load_text_file(config.judge_template);

  const LoadedDataset loaded = load_pairs(config.dataset, config.lenient);
  GeneratedJudgments generated =
      generate_raw_judgments(*config.judge, loaded.pairs, prompt_template, transports);

  std::filesystem::create_directories(config.out);
  const auto path = detail::judgments_path(config);
  save_judgments(path, generated.judgments);

  JudgeOutcome outcome;
  outcome.judgment_file = path;
  outcome.generated = static_cast<long>(generated.judgments.size());
  outcome.skips = std::move(generated.skips);
  if (!generated.judgments.empty()) {
    long correct = 0;
    for (const auto& judgment : generated.judgments) correct += judgment.is_correct;
    outcome.raw_precision =
        static_cast<double>(correct) / static_cast<double>(generated.judgments.size());
  }
  return outcome;
}

// ── metajudge ───────────────────────────────────────────────────

struct MetajudgeOutcome {
  std::string run_id;
  std::filesystem::path run_dir;
  long items = 0;
  long partial_items = 0;
  std::vector<JudgmentSkip> failed_items;
  bool partial = false;
};

namespace detail {

inline std::map<std::string, double> criterion_weight_map(const Rubric& rubric) {
  std::map<std::string, double> weights;
  for (const auto& criterion : rubric.scoring_criteria()) {
    weights[criterion.name] = criterion.weight;
  }
  return weights;
}

inline std::map<std::string, double> score_map(const AgentMetaJudgment& judgment) {
  std::map<std::string, double> scores;
  for (const auto& [name, entry] : judgment.per_criterion) {
    scores[name] = static_cast<double>(entry.score);
  }
  return scores;
}

// Survivor weights: configured weights of the agents that answered,
// renormalized to sum 1 when some failed.
inline PanelScores build_panel_scores(const PanelPlan& plan,
                                      const std::vector<AgentMetaJudgment>& judgments) {
  std::map<std::string, double> configured;
  for (const auto& agent : plan.agents) configured[agent.agent_id] = agent.agent_weight;

  PanelScores panel;
  panel.criterion_weights = criterion_weight_map(plan.rubric);
  double weight_sum = 0.0;
  for (const auto& judgment : judgments) {
    weight_sum += configured.at(judgment.agent_id);
  }
  if (weight_sum <= 0.0) throw ItemFailed("surviving agents carry zero weight");
  for (const auto& judgment : judgments) {
    panel.per_agent.push_back(
        {configured.at(judgment.agent_id) / weight_sum, score_map(judgment)});
  }
  return panel;
}

}  // namespace detail

inline MetajudgeOutcome cmd_metajudge(RunConfig config, const TransportFactory& transports) {
  finalize_run_config(config);
  if (config.dataset.empty()) throw ValidationError("config has no dataset path");
  if (config.plan.agents.empty()) throw ValidationError("config has no agents");

  const std::string digest = config_digest(config);
  const std::string run_id = run_id_for(config);
  const std::string started_at = now_iso8601();

  const LoadedDataset loaded = load_pairs(config.dataset, config.lenient);
  const std::vector<JudgmentRecord> judgments = load_judgments(detail::judgments_path(config));
  if (judgments.empty()) throw ValidationError("no judgments to meta-judge");
  audit_judgments(loaded.pairs, judgments);

  std::map<std::string, const ResponsePair*> pairs_by_id;
  for (const auto& pair : loaded.pairs) pairs_by_id[pair.id] = &pair;

  const CallPlan planned = total_cost(config.plan);

  struct ItemSlot {
    std::optional<ScoredJudgment> scored;
    DiscussionTranscript transcript;
    std::string error;
    int executed_calls = 0;
  };
  std::vector<ItemSlot> slots(judgments.size());

  std::atomic<std::size_t> next_item{0};
  auto worker = [&] {
    while (true) {
      const std::size_t index = next_item.fetch_add(1);
      if (index >= judgments.size()) break;
      ItemSlot& slot = slots[index];
      const JudgmentRecord& judgment = judgments[index];
      const ResponsePair& pair = *pairs_by_id.at(judgment.pair_id);
      try {
        ItemPanelResult result =
            config.plan.mode == PanelMode::Independent
                ? run_independent(config.plan, pair, judgment, transports)
                : run_discussion(config.plan, pair, judgment, transports);
        slot.executed_calls = result.executed_calls;

        FinalScore final;
        std::optional<AgentMetaJudgment> summary;
        switch (config.plan.aggregation) {
          case Strategy::WeightedAverage:
            final = weighted_average(detail::build_panel_scores(config.plan, result.judgments));
            break;
          case Strategy::MajorityVote:
            final = majority_vote(detail::build_panel_scores(config.plan, result.judgments),
                                  config.plan.vote_threshold);
            break;
          case Strategy::Summarized: {
            summary = run_summarizer(config.plan, result.transcript, pair, judgment,
                                     transports);
            slot.executed_calls += 1;
            final = summarized_score(detail::score_map(*summary),
                                     detail::criterion_weight_map(config.plan.rubric));
            break;
          }
        }

        ScoredJudgment scored;
        scored.judgment = judgment;
        scored.category = pair.category;
        scored.final = final;
        scored.per_agent = std::move(result.judgments);
        scored.summary = std::move(summary);
        scored.selected = final.value > config.plan.vote_threshold;
        scored.partial = result.partial;
        slot.scored = std::move(scored);
        slot.transcript = std::move(result.transcript);
      } catch (const std::exception& error) {
        slot.error = error.what();
      }
    }
  };

  const unsigned worker_count = static_cast<unsigned>(
      std::min<std::size_t>(static_cast<std::size_t>(config.parallelism), judgments.size()));
  std::vector<std::thread> pool;
  pool.reserve(worker_count);
  for (unsigned i = 0; i < worker_count; ++i) pool.emplace_back(worker);
  for (auto& thread : pool) thread.join();

  Run run;
  run.run_id = run_id;
  run.config_digest = digest;
  run.config_echo = to_json(config);
  run.started_at = started_at;
  run.planned_calls_per_item = planned.total();

  MetajudgeOutcome outcome;
  outcome.run_id = run_id;
  for (std::size_t index = 0; index < slots.size(); ++index) {
    ItemSlot& slot = slots[index];
    if (!slot.scored) {
      outcome.failed_items.push_back({judgments[index].pair_id, "item", slot.error});
      continue;
    }
    // Call-count accounting must match the plan exactly for completed items.
    if (slot.executed_calls != planned.total()) {
      throw Error("call accounting mismatch for pair " + judgments[index].pair_id + ": " +
                  std::to_string(slot.executed_calls) + " executed vs " +
                  std::to_string(planned.total()) + " planned");
    }
    run.executed_calls += slot.executed_calls;
    if (slot.scored->partial) ++outcome.partial_items;
    // Item spend: every pass (transcript entries in discussion mode, final
    // judgments otherwise) plus the summarizer call.
    if (!slot.transcript.entries.empty()) {
      for (const auto& entry : slot.transcript.entries) {
        if (entry.judgment) run.total_spend += entry.judgment->cost;
      }
    } else {
      for (const auto& meta : slot.scored->per_agent) run.total_spend += meta.cost;
    }
    if (slot.scored->summary) run.total_spend += slot.scored->summary->cost;
    run.scored.push_back(std::move(*slot.scored));
    run.transcripts.push_back(std::move(slot.transcript));
  }
  if (run.scored.empty()) {
    throw Error("every item failed; nothing to persist (first error: " +
                (outcome.failed_items.empty() ? std::string("none")
                                              : outcome.failed_items.front().reason) +
                ")");
  }
  run.partial = outcome.partial_items > 0 || !outcome.failed_items.empty();
  run.finished_at = now_iso8601();

  RunStore store{config.out};
  store.save_run(run);
  if (!outcome.failed_items.empty()) {
    std::ofstream failures(store.run_dir(run_id) / "failures.jsonl", std::ios::binary);
    for (const auto& failure : outcome.failed_items) {
      nlohmann::json doc;
      doc["v"] = kRunSchemaVersion;
      doc["pair_id"] = failure.pair_id;
      doc["reason"] = failure.reason;
      failures << doc.dump() << "\n";
    }
  }

  outcome.run_dir = store.run_dir(run_id);
  outcome.items = static_cast<long>(run.scored.size());
  outcome.partial = run.partial;
  return outcome;
}

// ── select-report ───────────────────────────────────────────────

struct SelectReportOutcome {
  PrecisionReport report;
  std::filesystem::path text_path;
  std::filesystem::path csv_path;
};

inline SelectReportOutcome cmd_select_report(const std::filesystem::path& out_dir,
                                             const std::string& run_id, double threshold) {
  RunStore store{out_dir};
  const Run run = store.load_run(run_id);

  SelectionRun selection =
      select_by_threshold(run.scored, threshold, run.config_digest);
  selection.started_at = run.started_at;
  selection.finished_at = run.finished_at;

  SelectReportOutcome outcome;
  outcome.report = precision(selection);

  char suffix[32];
  std::snprintf(suffix, sizeof(suffix), "%.2f", threshold);
  const auto dir = store.run_dir(run_id);
  outcome.text_path = dir / ("report-" + std::string(suffix) + ".txt");
  outcome.csv_path = dir / ("report-" + std::string(suffix) + ".csv");

  std::ofstream text(outcome.text_path, std::ios::binary);
  if (!text) throw Error("cannot write " + outcome.text_path.string());
  text << render_report_text(outcome.report);

  std::ofstream csv(outcome.csv_path, std::ios::binary);
  if (!csv) throw Error("cannot write " + outcome.csv_path.string());
  csv << render_report_csv(outcome.report);
  return outcome;
}

// ── simulate ────────────────────────────────────────────────────

inline SimulationResult cmd_simulate(const SimulationProfile& profile, Strategy strategy,
                                     double threshold, std::int64_t trials,
                                     std::uint64_t seed, unsigned threads = 0) {
  return simulate_synthetic_panel(profile, strategy, threshold, trials, seed, threads);
}

}  // namespace metajudge
