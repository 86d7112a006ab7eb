#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <map>
#include <mutex>

#include "metajudge/panel.hpp"

#include "helpers.hpp"

using namespace metajudge;

namespace {

struct RecordingFactory {
  // Thread-safe capture of every request routed through the factory.
  struct State {
    std::mutex mutex;
    std::vector<std::pair<std::string, std::string>> requests;  // agent id, prompt text
    std::map<std::string, CallbackTransport::Fn> behaviors;
    CallbackTransport::Fn fallback;
  };
  std::shared_ptr<State> state = std::make_shared<State>();

  TransportFactory factory() {
    auto shared = state;
    return [shared](const AgentConfig& agent) -> std::shared_ptr<ChatTransport> {
      auto behavior = shared->behaviors.count(agent.agent_id)
                          ? shared->behaviors.at(agent.agent_id)
                          : shared->fallback;
      const std::string id = agent.agent_id;
      return std::make_shared<CallbackTransport>(
          [shared, behavior, id](const ChatRequest& request) {
            {
              std::lock_guard<std::mutex> lock(shared->mutex);
              shared->requests.emplace_back(id, request_text(request));
            }
            return behavior(request);
          });
    };
  }
};

PanelPlan make_plan(int agents, PanelMode mode, RubricVariant variant = RubricVariant::Short) {
  PanelPlan plan;
  for (int i = 1; i <= agents; ++i) {
    plan.agents.push_back(testutil::scripted_agent("a" + std::to_string(i)));
  }
  plan.mode = mode;
  plan.rubric = builtin_rubric(variant);
  assign_default_agent_weights(plan);
  return plan;
}

}  // namespace

TEST_CASE("independent runs share no history", "[panel]") {
  const auto pair = testutil::make_pair("p1", TaskCategory::Knowledge, Decision::AWins);
  const auto judgment = testutil::make_judgment(pair, Decision::AWins);
  auto plan = make_plan(3, PanelMode::Independent);

  RecordingFactory recorder;
  recorder.state->fallback = [&plan](const ChatRequest&) {
    return testutil::uniform_scored_response(plan.rubric, 4);
  };

  const auto result = run_independent(plan, pair, judgment, recorder.factory());
  CHECK(result.judgments.size() == 3);
  CHECK(result.executed_calls == 3);
  CHECK_FALSE(result.partial);
  CHECK(result.transcript.entries.empty());
  REQUIRE(recorder.state->requests.size() == 3);
  for (const auto& [agent_id, prompt] : recorder.state->requests) {
    CHECK(prompt.find("[meta-judgment history]") == std::string::npos);
  }
}

TEST_CASE("a one-agent panel degenerates to one scoring call", "[panel]") {
  const auto pair = testutil::make_pair("p1", TaskCategory::Math, Decision::BWins);
  const auto judgment = testutil::make_judgment(pair, Decision::BWins);
  auto plan = make_plan(1, PanelMode::Independent);

  const auto result = run_independent(plan, pair, judgment, scripted_only_transport_factory);
  REQUIRE(result.judgments.size() == 1);
  CHECK(result.executed_calls == 1);

  // Identical to calling score_with_rubric directly.
  const auto prompt = render_meta_prompt(plan.rubric, judgment, pair, {});
  auto transport = make_scripted_transport("synthetic:a1");
  const auto direct = score_with_rubric(plan.agents[0], prompt, plan.rubric, *transport);
  CHECK(result.judgments[0] == direct);
}

TEST_CASE("one failing agent yields a partial item, not an abort", "[panel]") {
  const auto pair = testutil::make_pair("p1", TaskCategory::Coding, Decision::AWins);
  const auto judgment = testutil::make_judgment(pair, Decision::AWins);
  auto plan = make_plan(3, PanelMode::Independent);
  for (auto& agent : plan.agents) agent.retries = 0;

  RecordingFactory recorder;
  recorder.state->fallback = [&plan](const ChatRequest&) {
    return testutil::uniform_scored_response(plan.rubric, 4);
  };
  recorder.state->behaviors["a2"] = [](const ChatRequest&) -> std::string {
    throw TransportError("injected fault");
  };

  const auto result = run_independent(plan, pair, judgment, recorder.factory());
  CHECK(result.judgments.size() == 2);
  CHECK(result.partial);
  REQUIRE(result.errors.size() == 1);
  CHECK(result.errors[0].find("injected fault") != std::string::npos);

  // Every agent failing is the item-level failure.
  recorder.state->behaviors["a1"] = recorder.state->behaviors["a2"];
  recorder.state->behaviors["a3"] = recorder.state->behaviors["a2"];
  CHECK_THROWS_AS(run_independent(plan, pair, judgment, recorder.factory()), ItemFailed);
}

TEST_CASE("discussion passes history forward in panel order", "[panel]") {
  const auto pair = testutil::make_pair("p1", TaskCategory::Reasoning, Decision::AWins);
  const auto judgment = testutil::make_judgment(pair, Decision::AWins);
  auto plan = make_plan(2, PanelMode::Discussion);
  plan.passes = 1;

  RecordingFactory recorder;
  recorder.state->behaviors["a1"] = [&plan](const ChatRequest&) {
    return testutil::uniform_scored_response(plan.rubric, 5);
  };
  recorder.state->behaviors["a2"] = [&plan](const ChatRequest&) {
    return testutil::uniform_scored_response(plan.rubric, 2);
  };

  const auto result = run_discussion(plan, pair, judgment, recorder.factory());
  CHECK(result.judgments.size() == 2);
  CHECK(result.executed_calls == 2);

  REQUIRE(recorder.state->requests.size() == 2);
  const auto& first_prompt = recorder.state->requests[0].second;
  const auto& second_prompt = recorder.state->requests[1].second;
  CHECK(first_prompt.find("[meta-judgment history]") == std::string::npos);
  CHECK(second_prompt.find("[meta-judgment history]") != std::string::npos);
  CHECK(second_prompt.find("Agent: a1") != std::string::npos);
  CHECK(second_prompt.find(std::string(kDiscussionSystemInstruction)) != std::string::npos);

  audit_transcript(result.transcript);
  REQUIRE(result.transcript.entries.size() == 2);
  CHECK(result.transcript.entries[0].saw_entries == 0);
  CHECK(result.transcript.entries[1].saw_entries == 1);
}

TEST_CASE("two passes double the agent calls and keep last-pass judgments", "[panel]") {
  const auto pair = testutil::make_pair("p1", TaskCategory::Knowledge, Decision::BWins);
  const auto judgment = testutil::make_judgment(pair, Decision::BWins);
  auto plan = make_plan(2, PanelMode::Discussion);
  plan.passes = 2;

  RecordingFactory recorder;
  std::atomic<int> counter{0};
  recorder.state->fallback = [&plan, &counter](const ChatRequest&) {
    const int score = 1 + counter.fetch_add(1) % 5;
    return testutil::uniform_scored_response(plan.rubric, score);
  };

  const auto result = run_discussion(plan, pair, judgment, recorder.factory());
  CHECK(recorder.state->requests.size() == 4);
  CHECK(result.executed_calls == 4);
  REQUIRE(result.transcript.entries.size() == 4);

  // Final judgments come from pass 2.
  REQUIRE(result.judgments.size() == 2);
  CHECK(result.judgments[0] == *result.transcript.entries[2].judgment);
  CHECK(result.judgments[1] == *result.transcript.entries[3].judgment);

  // Pass-2 agents saw the full pass-1 transcript (plus earlier pass-2 turns).
  CHECK(result.transcript.entries[2].saw_entries == 2);
  CHECK(result.transcript.entries[3].saw_entries == 3);
}

TEST_CASE("discussion requires at least two agents", "[panel]") {
  const auto pair = testutil::make_pair("p1", TaskCategory::Knowledge, Decision::AWins);
  const auto judgment = testutil::make_judgment(pair, Decision::AWins);
  auto plan = make_plan(1, PanelMode::Discussion);
  CHECK_THROWS_AS(run_discussion(plan, pair, judgment, scripted_only_transport_factory),
                  PreconditionError);
}

TEST_CASE("failed agents leave a recorded gap and are skipped in history", "[panel]") {
  const auto pair = testutil::make_pair("p1", TaskCategory::Math, Decision::AWins);
  const auto judgment = testutil::make_judgment(pair, Decision::AWins);
  auto plan = make_plan(3, PanelMode::Discussion);
  plan.passes = 1;
  for (auto& agent : plan.agents) agent.retries = 0;

  RecordingFactory recorder;
  recorder.state->fallback = [&plan](const ChatRequest&) {
    return testutil::uniform_scored_response(plan.rubric, 4);
  };
  recorder.state->behaviors["a2"] = [](const ChatRequest&) -> std::string {
    throw TransportError("down");
  };

  const auto result = run_discussion(plan, pair, judgment, recorder.factory());
  CHECK(result.partial);
  CHECK(result.judgments.size() == 2);
  REQUIRE(result.transcript.entries.size() == 3);
  CHECK_FALSE(result.transcript.entries[1].ok());
  CHECK(result.transcript.entries[1].error.find("down") != std::string::npos);
  // Agent 3 saw only agent 1's entry.
  CHECK(result.transcript.entries[2].saw_entries == 1);
  const auto& third_prompt = recorder.state->requests[2].second;
  CHECK(third_prompt.find("Agent: a1") != std::string::npos);
  CHECK(third_prompt.find("Agent: a2") == std::string::npos);
  audit_transcript(result.transcript);
}

TEST_CASE("transcript audit rejects causality violations", "[panel]") {
  DiscussionTranscript transcript;
  TranscriptEntry first;
  first.pass = 1;
  first.panel_position = 0;
  first.agent_id = "a1";
  first.judgment = AgentMetaJudgment{};
  first.saw_entries = 0;
  TranscriptEntry second = first;
  second.panel_position = 1;
  second.agent_id = "a2";
  second.saw_entries = 2;  // claims to have seen an entry that came later
  transcript.entries = {first, second};
  CHECK_THROWS_AS(audit_transcript(transcript), ValidationError);
}

TEST_CASE("summarizer embeds the whole transcript and parses per criterion", "[panel]") {
  const auto pair = testutil::make_pair("p1", TaskCategory::Coding, Decision::BWins);
  const auto judgment = testutil::make_judgment(pair, Decision::BWins);
  auto plan = make_plan(2, PanelMode::Discussion);
  plan.passes = 1;
  plan.aggregation = Strategy::Summarized;
  plan.summarizer = testutil::scripted_agent("sum");
  plan.summarizer->role = persona_for(Role::Summarizer);

  RecordingFactory recorder;
  recorder.state->fallback = [&plan](const ChatRequest&) {
    return testutil::uniform_scored_response(plan.rubric, 4);
  };
  recorder.state->behaviors["sum"] = [&plan](const ChatRequest&) {
    return testutil::uniform_scored_response(plan.rubric, 5);
  };

  const auto result = run_discussion(plan, pair, judgment, recorder.factory());
  const auto summary =
      run_summarizer(plan, result.transcript, pair, judgment, recorder.factory());
  CHECK(summary.agent_id == "sum");
  CHECK(summary.per_criterion.size() == 7);

  const auto& summarizer_prompt = recorder.state->requests.back().second;
  CHECK(summarizer_prompt.find("Agent: a1") != std::string::npos);
  CHECK(summarizer_prompt.find("Agent: a2") != std::string::npos);
  CHECK(summarizer_prompt.find(persona_for(Role::Summarizer).preamble) != std::string::npos);

  CHECK_THROWS_AS(run_summarizer(plan, DiscussionTranscript{}, pair, judgment,
                                 recorder.factory()),
                  PreconditionError);
}

TEST_CASE("scripted discussions are deterministic end to end", "[panel]") {
  const auto pair = testutil::make_pair("p1", TaskCategory::Knowledge, Decision::AWins);
  const auto judgment = testutil::make_judgment(pair, Decision::AWins);
  auto plan = make_plan(3, PanelMode::Discussion);

  const auto first = run_discussion(plan, pair, judgment, scripted_only_transport_factory);
  const auto second = run_discussion(plan, pair, judgment, scripted_only_transport_factory);
  CHECK(first.judgments == second.judgments);
  REQUIRE(first.transcript.entries.size() == second.transcript.entries.size());
  for (std::size_t i = 0; i < first.transcript.entries.size(); ++i) {
    CHECK(first.transcript.entries[i].judgment == second.transcript.entries[i].judgment);
  }
}

TEST_CASE("plan validation and cost plans", "[panel]") {
  SECTION("expected call counts per mode") {
    auto independent = make_plan(3, PanelMode::Independent);
    CHECK(total_cost(independent).total() == 3);

    auto discussion = make_plan(2, PanelMode::Discussion);
    discussion.passes = 2;
    CHECK(total_cost(discussion).total() == 4);

    discussion.aggregation = Strategy::Summarized;
    discussion.summarizer = testutil::scripted_agent("sum");
    discussion.summarizer->role = persona_for(Role::Summarizer);
    const auto cost = total_cost(discussion);
    CHECK(cost.agent_passes == 4);
    CHECK(cost.summarizer_passes == 1);
    CHECK(cost.total() == 5);
  }
  SECTION("summarizer requires the summarizer role") {
    auto plan = make_plan(2, PanelMode::Discussion);
    plan.aggregation = Strategy::Summarized;
    plan.summarizer = testutil::scripted_agent("sum");  // no role set
    CHECK_THROWS_AS(validate_plan(plan), ValidationError);
  }
  SECTION("summarized aggregation requires a summarizer") {
    auto plan = make_plan(2, PanelMode::Discussion);
    plan.aggregation = Strategy::Summarized;
    CHECK_THROWS_AS(validate_plan(plan), ValidationError);
  }
  SECTION("agent weights must sum to one") {
    auto plan = make_plan(2, PanelMode::Independent);
    plan.agents[0].agent_weight = 0.9;
    plan.agents[1].agent_weight = 0.9;
    CHECK_THROWS_AS(validate_plan(plan), ValidationError);
  }
}
