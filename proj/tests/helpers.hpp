#pragma once

// Shared builders for tests: tiny datasets, deterministic agents, and
// temporary directories.

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "metajudge/agents.hpp"
#include "metajudge/core.hpp"
#include "metajudge/rubric.hpp"

namespace testutil {

inline metajudge::ResponsePair make_pair(std::string id,
                                         metajudge::TaskCategory category,
                                         metajudge::Decision label) {
  metajudge::ResponsePair pair;
  pair.id = std::move(id);
  pair.category = category;
  pair.question = "Question for " + pair.id + "?";
  pair.answer_a = "Answer A for " + pair.id + ".";
  pair.answer_b = "Answer B for " + pair.id + ".";
  pair.label = label;
  pair.source = "synthetic";
  return pair;
}

inline metajudge::JudgmentRecord make_judgment(const metajudge::ResponsePair& pair,
                                               metajudge::Decision decision) {
  return metajudge::make_judgment(pair, "test-judge", decision,
                                  "Judgment explanation for " + pair.id + ".");
}

// Synthetic dataset with the requested per-category sizes; labels alternate.
inline std::vector<metajudge::ResponsePair> make_dataset(long knowledge, long reasoning,
                                                         long math, long coding) {
  using metajudge::Decision;
  using metajudge::TaskCategory;
  std::vector<metajudge::ResponsePair> pairs;
  long serial = 0;
  auto add = [&](TaskCategory category, long count) {
    for (long i = 0; i < count; ++i) {
      ++serial;
      pairs.push_back(make_pair("p" + std::to_string(serial), category,
                                serial % 2 == 0 ? Decision::AWins : Decision::BWins));
    }
  };
  add(TaskCategory::Knowledge, knowledge);
  add(TaskCategory::Reasoning, reasoning);
  add(TaskCategory::Math, math);
  add(TaskCategory::Coding, coding);
  return pairs;
}

inline metajudge::AgentConfig scripted_agent(std::string id, std::string salt = {}) {
  metajudge::AgentConfig agent;
  agent.agent_id = id;
  agent.backend = metajudge::ScriptedBackend{"synthetic:" + (salt.empty() ? id : salt)};
  agent.retry_initial_delay = std::chrono::milliseconds(0);
  return agent;
}

// A response that scores every criterion of the rubric with `score`.
inline std::string uniform_scored_response(const metajudge::Rubric& rubric, int score) {
  std::string out;
  for (const auto& criterion : rubric.criteria) {
    out += "Criterion: " + criterion.name + "\n";
    out += "Score: " + std::to_string(score) + "\n";
    out += "Explanation: fixed assessment of " + criterion.name + ".\n";
  }
  return out;
}

class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() /
            ("metajudge_test_" + tag + "_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

}  // namespace testutil
