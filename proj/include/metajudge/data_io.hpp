#pragma once

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "metajudge/agents.hpp"
#include "metajudge/core.hpp"
#include "metajudge/errors.hpp"
#include "metajudge/evaluation.hpp"
#include "metajudge/panel.hpp"
#include "metajudge/prompt.hpp"

namespace metajudge {

inline constexpr int kRunSchemaVersion = 1;
inline constexpr int kDatasetSchemaVersion = 1;

// UTC timestamp for artifacts. Honors SOURCE_DATE_EPOCH so archived runs can
// be byte-reproducible.
inline std::string now_iso8601() {
  std::time_t now;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    now = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  } else {
    now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buffer;
}

// ── Dataset ingestion ───────────────────────────────────────────

struct DatasetManifest {
  std::string path;
  long pair_count = 0;
  std::map<TaskCategory, long> category_counts;
  std::string source;  // uniform source tag, or "mixed"
};

struct SkippedLine {
  long line_number = 0;
  std::string reason;
};

struct LoadedDataset {
  std::vector<ResponsePair> pairs;
  DatasetManifest manifest;
  std::vector<SkippedLine> skipped;
};

namespace detail {

inline ResponsePair pair_from_json(const nlohmann::json& doc) {
  ResponsePair pair;
  for (const char* field : {"id", "category", "question", "answer_a", "answer_b", "label"}) {
    if (!doc.contains(field)) {
      throw ValidationError(std::string("missing field '") + field + "'");
    }
  }
  pair.id = doc.at("id").get<std::string>();
  if (pair.id.empty()) throw ValidationError("empty id");
  auto category = parse_category(doc.at("category").get<std::string>());
  if (!category) {
    throw ValidationError("unknown category '" + doc.at("category").get<std::string>() +
                          "'");
  }
  pair.category = *category;
  pair.question = doc.at("question").get<std::string>();
  pair.answer_a = doc.at("answer_a").get<std::string>();
  pair.answer_b = doc.at("answer_b").get<std::string>();
  pair.label = parse_decision(doc.at("label").get<std::string>());
  pair.source = doc.value("source", "");
  return pair;
}

inline nlohmann::json pair_to_json(const ResponsePair& pair) {
  nlohmann::json doc;
  doc["id"] = pair.id;
  doc["category"] = std::string(to_string(pair.category));
  doc["question"] = pair.question;
  doc["answer_a"] = pair.answer_a;
  doc["answer_b"] = pair.answer_b;
  doc["label"] = std::string(to_string(pair.label));
  doc["source"] = pair.source;
  return doc;
}

}  // namespace detail

// Line-delimited JSON records, one response pair per line. Malformed lines
// are collected with their line numbers; without `lenient` any malformed
// line fails the whole load.
inline LoadedDataset load_pairs(const std::filesystem::path& path, bool lenient = false) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("dataset file not found: " + path.string());

  LoadedDataset result;
  result.manifest.path = path.string();

  std::map<std::string, long> seen_ids;
  std::string line;
  long line_number = 0;
  std::optional<std::string> uniform_source;
  bool mixed_source = false;

  while (std::getline(in, line)) {
    ++line_number;
    if (detail::trim(line).empty()) continue;
    try {
      const auto doc = nlohmann::json::parse(line);
      ResponsePair pair = detail::pair_from_json(doc);
      if (auto it = seen_ids.find(pair.id); it != seen_ids.end()) {
        throw ValidationError("duplicate id '" + pair.id + "' (first seen at line " +
                              std::to_string(it->second) + ")");
      }
      seen_ids[pair.id] = line_number;
      if (!uniform_source) {
        uniform_source = pair.source;
      } else if (*uniform_source != pair.source) {
        mixed_source = true;
      }
      result.manifest.category_counts[pair.category]++;
      result.pairs.push_back(std::move(pair));
    } catch (const std::exception& error) {
      result.skipped.push_back({line_number, error.what()});
    }
  }

  if (!result.skipped.empty() && !lenient) {
    std::ostringstream message;
    message << result.skipped.size() << " malformed line(s) in " << path.string() << ":";
    for (const auto& skip : result.skipped) {
      message << "\n  line " << skip.line_number << ": " << skip.reason;
    }
    throw ValidationError(message.str());
  }
  if (result.pairs.empty()) {
    throw ValidationError("dataset " + path.string() + " contains no valid pairs");
  }

  result.manifest.pair_count = static_cast<long>(result.pairs.size());
  result.manifest.source = mixed_source ? "mixed" : uniform_source.value_or("");
  return result;
}

inline void save_pairs(const std::filesystem::path& path,
                       const std::vector<ResponsePair>& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write dataset file: " + path.string());
  for (const auto& pair : pairs) out << detail::pair_to_json(pair).dump() << "\n";
}

// Recomputes every derived correctness flag against its pair's label.
// Throws on the first inconsistency or dangling pair reference.
inline void audit_judgments(const std::vector<ResponsePair>& pairs,
                            const std::vector<JudgmentRecord>& judgments) {
  std::map<std::string, const ResponsePair*> by_id;
  for (const auto& pair : pairs) by_id[pair.id] = &pair;
  for (const auto& judgment : judgments) {
    auto it = by_id.find(judgment.pair_id);
    if (it == by_id.end()) {
      throw ValidationError("judgment references unknown pair '" + judgment.pair_id + "'");
    }
    const bool expected = match_ground_truth(judgment.decision, it->second->label);
    if (judgment.is_correct != expected) {
      throw ValidationError("stored is_correct inconsistent for pair '" +
                            judgment.pair_id + "'");
    }
  }
}

// ── Raw judgment generation ─────────────────────────────────────

struct JudgmentSkip {
  std::string pair_id;
  std::string kind;  // "parse" | "transport"
  std::string reason;
};

struct GeneratedJudgments {
  std::vector<JudgmentRecord> judgments;
  std::vector<JudgmentSkip> skips;
};

// One judge call per pair; unparseable or failing items become recorded
// skips and the run continues.
inline GeneratedJudgments generate_raw_judgments(const AgentConfig& judge,
                                                 const std::vector<ResponsePair>& pairs,
                                                 const std::string& prompt_template,
                                                 const TransportFactory& transports) {
  GeneratedJudgments result;
  auto transport = transports(judge);
  const std::string judge_model =
      std::holds_alternative<RemoteChatBackend>(judge.backend)
          ? std::get<RemoteChatBackend>(judge.backend).model
          : judge.agent_id;

  for (const auto& pair : pairs) {
    ChatRequest request;
    request.model = judge_model;
    request.messages.push_back({"user", render_judge_prompt(prompt_template, pair)});
    if (const auto* remote = std::get_if<RemoteChatBackend>(&judge.backend)) {
      request.temperature = remote->temperature;
      request.max_output_tokens = remote->max_output_tokens;
    }
    try {
      const ChatResult response = transport->complete(request);
      const Decision decision = parse_decision(response.text);
      result.judgments.push_back(
          make_judgment(pair, judge_model, decision, response.text));
    } catch (const ParseError& error) {
      result.skips.push_back({pair.id, "parse", error.what()});
    } catch (const TransportError& error) {
      result.skips.push_back({pair.id, "transport", error.what()});
    }
  }
  return result;
}

// ── Judgment file round-trip ────────────────────────────────────

namespace detail {

inline nlohmann::json judgment_to_json(const JudgmentRecord& judgment) {
  nlohmann::json doc;
  doc["v"] = kRunSchemaVersion;
  doc["pair_id"] = judgment.pair_id;
  doc["judge_model"] = judgment.judge_model;
  doc["decision"] = std::string(to_string(judgment.decision));
  doc["explanation"] = judgment.explanation;
  doc["is_correct"] = judgment.is_correct;
  return doc;
}

inline JudgmentRecord judgment_from_json(const nlohmann::json& doc) {
  JudgmentRecord judgment;
  judgment.pair_id = doc.at("pair_id").get<std::string>();
  judgment.judge_model = doc.value("judge_model", "");
  judgment.decision = parse_decision(doc.at("decision").get<std::string>());
  judgment.explanation = doc.value("explanation", "");
  judgment.is_correct = doc.at("is_correct").get<bool>();
  return judgment;
}

}  // namespace detail

inline void save_judgments(const std::filesystem::path& path,
                           const std::vector<JudgmentRecord>& judgments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write judgment file: " + path.string());
  for (const auto& judgment : judgments) {
    out << detail::judgment_to_json(judgment).dump() << "\n";
  }
}

inline std::vector<JudgmentRecord> load_judgments(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("judgment file not found: " + path.string());
  std::vector<JudgmentRecord> judgments;
  std::string line;
  long line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (detail::trim(line).empty()) continue;
    try {
      const auto doc = nlohmann::json::parse(line);
      const int version = doc.value("v", -1);
      if (version != kRunSchemaVersion) {
        throw VersionMismatchError("judgment record schema v" + std::to_string(version) +
                                   " unsupported");
      }
      judgments.push_back(detail::judgment_from_json(doc));
    } catch (const VersionMismatchError&) {
      throw;
    } catch (const std::exception& error) {
      throw ValidationError("judgment file " + path.string() + " line " +
                            std::to_string(line_number) + ": " + error.what());
    }
  }
  return judgments;
}

// ── Run store ───────────────────────────────────────────────────
// A directory tree of line-delimited records plus a manifest, content-
// addressed by the config digest. Saving the same run twice is idempotent.

namespace detail {

inline nlohmann::json cost_to_json(const CostRecord& cost) {
  return {{"calls", cost.calls},
          {"input_tokens", cost.input_tokens},
          {"output_tokens", cost.output_tokens},
          {"unit_cost", cost.unit_cost}};
}

inline CostRecord cost_from_json(const nlohmann::json& doc) {
  CostRecord cost;
  cost.calls = doc.value("calls", std::int64_t{0});
  cost.input_tokens = doc.value("input_tokens", std::int64_t{0});
  cost.output_tokens = doc.value("output_tokens", std::int64_t{0});
  cost.unit_cost = doc.value("unit_cost", 0.0);
  return cost;
}

inline nlohmann::json meta_judgment_to_json(const AgentMetaJudgment& judgment) {
  nlohmann::json scores = nlohmann::json::object();
  for (const auto& [name, entry] : judgment.per_criterion) {
    scores[name] = {{"score", entry.score}, {"explanation", entry.explanation}};
  }
  return {{"agent_id", judgment.agent_id},
          {"scores", std::move(scores)},
          {"raw_text", judgment.raw_text},
          {"cost", cost_to_json(judgment.cost)}};
}

inline AgentMetaJudgment meta_judgment_from_json(const nlohmann::json& doc) {
  AgentMetaJudgment judgment;
  judgment.agent_id = doc.at("agent_id").get<std::string>();
  for (const auto& [name, entry] : doc.at("scores").items()) {
    judgment.per_criterion[name] = {entry.at("score").get<int>(),
                                    entry.value("explanation", "")};
  }
  judgment.raw_text = doc.value("raw_text", "");
  judgment.cost = cost_from_json(doc.at("cost"));
  return judgment;
}

inline nlohmann::json final_score_to_json(const FinalScore& final) {
  nlohmann::json doc;
  doc["value"] = final.value;
  doc["strategy"] = std::string(to_string(final.strategy));
  if (final.vote_threshold) doc["vote_threshold"] = *final.vote_threshold;
  return doc;
}

inline FinalScore final_score_from_json(const nlohmann::json& doc) {
  FinalScore final;
  final.value = doc.at("value").get<double>();
  auto strategy = parse_strategy(doc.at("strategy").get<std::string>());
  if (!strategy) throw ValidationError("unknown strategy in stored run");
  final.strategy = *strategy;
  if (doc.contains("vote_threshold")) {
    final.vote_threshold = doc.at("vote_threshold").get<double>();
  }
  return final;
}

inline nlohmann::json scored_to_json(const ScoredJudgment& scored) {
  nlohmann::json doc;
  doc["v"] = kRunSchemaVersion;
  doc["judgment"] = judgment_to_json(scored.judgment);
  doc["category"] = std::string(to_string(scored.category));
  doc["final"] = final_score_to_json(scored.final);
  doc["per_agent"] = nlohmann::json::array();
  for (const auto& judgment : scored.per_agent) {
    doc["per_agent"].push_back(meta_judgment_to_json(judgment));
  }
  if (scored.summary) doc["summary"] = meta_judgment_to_json(*scored.summary);
  doc["selected"] = scored.selected;
  doc["partial"] = scored.partial;
  return doc;
}

inline ScoredJudgment scored_from_json(const nlohmann::json& doc) {
  ScoredJudgment scored;
  scored.judgment = judgment_from_json(doc.at("judgment"));
  auto category = parse_category(doc.at("category").get<std::string>());
  if (!category) throw ValidationError("unknown category in stored run");
  scored.category = *category;
  scored.final = final_score_from_json(doc.at("final"));
  for (const auto& entry : doc.at("per_agent")) {
    scored.per_agent.push_back(meta_judgment_from_json(entry));
  }
  if (doc.contains("summary")) {
    scored.summary = meta_judgment_from_json(doc.at("summary"));
  }
  scored.selected = doc.at("selected").get<bool>();
  scored.partial = doc.value("partial", false);
  return scored;
}

inline nlohmann::json transcript_entry_to_json(const TranscriptEntry& entry,
                                               std::size_t item_index) {
  nlohmann::json doc;
  doc["v"] = kRunSchemaVersion;
  doc["item"] = item_index;
  doc["pass"] = entry.pass;
  doc["position"] = entry.panel_position;
  doc["agent_id"] = entry.agent_id;
  doc["saw_entries"] = entry.saw_entries;
  if (entry.judgment) doc["judgment"] = meta_judgment_to_json(*entry.judgment);
  if (!entry.error.empty()) doc["error"] = entry.error;
  return doc;
}

}  // namespace detail

struct Run {
  std::string run_id;
  std::string config_digest;
  nlohmann::json config_echo;  // fully resolved configuration
  std::vector<ScoredJudgment> scored;
  std::vector<DiscussionTranscript> transcripts;  // parallel to scored items
  std::string started_at;
  std::string finished_at;
  int planned_calls_per_item = 0;
  int executed_calls = 0;
  CostRecord total_spend;  // sum of every item-level cost record
  bool partial = false;
};

class RunStore {
public:
  explicit RunStore(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }

  std::filesystem::path run_dir(const std::string& run_id) const {
    return root_ / "runs" / run_id;
  }

  std::string save_run(const Run& run) const {
    const auto dir = run_dir(run.run_id);
    std::filesystem::create_directories(dir);

    nlohmann::json manifest;
    manifest["schema_version"] = kRunSchemaVersion;
    manifest["run_id"] = run.run_id;
    manifest["config_digest"] = run.config_digest;
    manifest["config"] = run.config_echo;
    manifest["items"] = run.scored.size();
    manifest["planned_calls_per_item"] = run.planned_calls_per_item;
    manifest["executed_calls"] = run.executed_calls;
    manifest["cost"] = detail::cost_to_json(run.total_spend);
    manifest["partial"] = run.partial;
    manifest["started_at"] = run.started_at;
    manifest["finished_at"] = run.finished_at;
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");

    std::ostringstream scores;
    for (const auto& scored : run.scored) {
      scores << detail::scored_to_json(scored).dump() << "\n";
    }
    write_file(dir / "scores.jsonl", scores.str());

    std::ostringstream transcripts;
    for (std::size_t item = 0; item < run.transcripts.size(); ++item) {
      for (const auto& entry : run.transcripts[item].entries) {
        transcripts << detail::transcript_entry_to_json(entry, item).dump() << "\n";
      }
    }
    write_file(dir / "transcripts.jsonl", transcripts.str());
    return run.run_id;
  }

  Run load_run(const std::string& run_id) const {
    const auto dir = run_dir(run_id);
    if (!std::filesystem::exists(dir / "manifest.json")) {
      throw NotFoundError("run '" + run_id + "' not found under " + root_.string());
    }
    const auto manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
    const int version = manifest.value("schema_version", -1);
    if (version != kRunSchemaVersion) {
      throw VersionMismatchError("run '" + run_id + "' written with schema v" +
                                 std::to_string(version) + ", expected v" +
                                 std::to_string(kRunSchemaVersion));
    }

    Run run;
    run.run_id = manifest.at("run_id").get<std::string>();
    run.config_digest = manifest.at("config_digest").get<std::string>();
    run.config_echo = manifest.at("config");
    run.planned_calls_per_item = manifest.value("planned_calls_per_item", 0);
    run.executed_calls = manifest.value("executed_calls", 0);
    if (manifest.contains("cost")) {
      run.total_spend = detail::cost_from_json(manifest.at("cost"));
    }
    run.partial = manifest.value("partial", false);
    run.started_at = manifest.value("started_at", "");
    run.finished_at = manifest.value("finished_at", "");

    for (const auto& line : detail::split_lines(read_file(dir / "scores.jsonl"))) {
      if (detail::trim(line).empty()) continue;
      run.scored.push_back(detail::scored_from_json(nlohmann::json::parse(line)));
    }

    run.transcripts.resize(run.scored.size());
    if (std::filesystem::exists(dir / "transcripts.jsonl")) {
      for (const auto& line : detail::split_lines(read_file(dir / "transcripts.jsonl"))) {
        if (detail::trim(line).empty()) continue;
        const auto doc = nlohmann::json::parse(line);
        const auto item = doc.at("item").get<std::size_t>();
        if (item >= run.transcripts.size()) {
          throw ValidationError("transcript references unknown item index");
        }
        TranscriptEntry entry;
        entry.pass = doc.at("pass").get<int>();
        entry.panel_position = doc.at("position").get<int>();
        entry.agent_id = doc.at("agent_id").get<std::string>();
        entry.saw_entries = doc.at("saw_entries").get<int>();
        if (doc.contains("judgment")) {
          entry.judgment = detail::meta_judgment_from_json(doc.at("judgment"));
        }
        entry.error = doc.value("error", "");
        run.transcripts[item].entries.push_back(std::move(entry));
      }
    }
    return run;
  }

private:
  static void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
  }

  static std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
  }

  std::filesystem::path root_;
};

}  // namespace metajudge
