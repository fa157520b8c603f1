#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "toolmaster/agent.hpp"
#include "toolmaster/evaluation.hpp"

using namespace toolmaster;

TEST_CASE("golden replay: correct trace") {
    ToolRegistry registry = fixtures::make_registry();
    Trajectory t = fixtures::run_correct(registry);

    CHECK(t.termination == Termination::Answered);
    REQUIRE(t.steps.size() == 6);
    CHECK(count_tool_calls(t) == 6);

    int trial = 0, exec = 0;
    for (const Step& s : t.steps) (s.phase == Phase::Trial ? trial : exec)++;
    CHECK(trial == 2);
    CHECK(exec == 4);

    // Step indices are 1-based and contiguous.
    for (size_t i = 0; i < t.steps.size(); ++i) CHECK(t.steps[i].index == static_cast<int>(i) + 1);

    auto expected = fixtures::correct_observations();
    REQUIRE(t.steps.size() == expected.size());
    for (size_t i = 0; i < expected.size(); ++i) {
        CAPTURE(i);
        CHECK(t.steps[i].observation.text == expected[i]);
        CHECK(t.steps[i].observation.ok());
    }

    CHECK(t.trial_summary == "TRIAL COMPLETE");
    REQUIRE(t.answer.has_value());
    CHECK(*t.answer == fixtures::kFinalAnswerText);
    CHECK(answer_correct(*t.answer, fixtures::kGoldAnswer));
    CHECK(trajectory_format_reward(t).reward == 1);
    CHECK(correct_path_rate(t, fixtures::gold_tools()) == doctest::Approx(1.0));
}

TEST_CASE("golden replay: failed trace") {
    ToolRegistry registry = fixtures::make_registry();
    Trajectory t = fixtures::run_failed(registry);

    CHECK(t.termination == Termination::Answered);
    REQUIRE(t.steps.size() == 5);
    for (const Step& s : t.steps) CHECK(s.phase == Phase::Exec);

    auto expected = fixtures::failed_observations();
    REQUIRE(t.steps.size() == expected.size());
    for (size_t i = 0; i < expected.size(); ++i) {
        CAPTURE(i);
        CHECK(t.steps[i].observation.text == expected[i]);
    }
    CHECK(t.steps[0].observation.status == ObsStatus::SchemaError);
    CHECK(t.steps[1].observation.status == ObsStatus::ToolError);
    CHECK(t.steps[2].observation.status == ObsStatus::SchemaError);

    // Structurally valid even though every call failed.
    CHECK(trajectory_format_reward(t).reward == 1);
    CHECK(classify_error_heuristic(t) == ErrorClass::II);
}

TEST_CASE("render_history layout") {
    ToolRegistry registry = fixtures::make_registry();
    auto messages = render_history("QQ", {}, PromptTemplates::defaults(), registry, Phase::Trial);
    REQUIRE(messages.size() == 2);
    CHECK(messages[0].role == Role::System);
    CHECK(messages[0].content.find("family_relationship_finder") != std::string::npos);
    CHECK(messages[0].content.find("{tool_docs}") == std::string::npos);
    CHECK(messages[1].role == Role::User);
    CHECK(messages[1].content.rfind("QQ", 0) == 0);
    CHECK(messages[1].content.find("TRIAL COMPLETE") != std::string::npos);

    Step step;
    step.raw_turn = "<tool_call>{\"name\": \"count_letters\", \"arguments\": {\"input\": \"a\"}}</tool_call>";
    step.observation.text = "1";
    messages = render_history("QQ", {step}, PromptTemplates::defaults(), registry, Phase::Exec);
    REQUIRE(messages.size() == 4);
    CHECK(messages[2].role == Role::Assistant);
    CHECK(messages[2].content == step.raw_turn);
    CHECK(messages[3].role == Role::Tool);
    CHECK(messages[3].content == "<tool_response>1</tool_response>");
}

TEST_CASE("step budget exhaustion") {
    ToolRegistry registry = fixtures::make_registry();
    std::vector<std::string> turns(30,
        "<tool_call>{\"name\": \"count_letters\", \"arguments\": {\"input\": \"x\"}}</tool_call>");
    ScriptedBackend backend = fixtures::sequential_backend(turns);
    RolloutConfig config;
    config.two_stage = false;
    config.max_total_steps = 4;
    config.context_budget_tokens = 1 << 20;
    Trajectory t = run_rollout("q", registry, backend, PromptTemplates::defaults(), config);
    CHECK(t.termination == Termination::StepBudgetExhausted);
    CHECK(t.steps.size() == 4);
    CHECK(!t.answer.has_value());
}

TEST_CASE("trial step budget moves to the execution stage") {
    ToolRegistry registry = fixtures::make_registry();
    std::vector<std::string> turns(5,
        "<tool_call>{\"name\": \"count_letters\", \"arguments\": {\"input\": \"x\"}}</tool_call>");
    turns.push_back("<answer>done</answer>");
    ScriptedBackend backend = fixtures::sequential_backend(turns);
    RolloutConfig config;
    config.max_trial_steps = 2;
    config.context_budget_tokens = 1 << 20;
    Trajectory t = run_rollout("q", registry, backend, PromptTemplates::defaults(), config);
    CHECK(t.termination == Termination::Answered);
    REQUIRE(t.steps.size() == 5);
    CHECK(t.steps[0].phase == Phase::Trial);
    CHECK(t.steps[1].phase == Phase::Trial);
    CHECK(t.steps[2].phase == Phase::Exec);
    CHECK(!t.trial_summary.has_value());
}

TEST_CASE("context budget exhaustion") {
    ToolRegistry registry = fixtures::make_registry();
    ScriptedBackend backend = fixtures::sequential_backend({"<answer>never reached</answer>"});
    RolloutConfig config;
    config.context_budget_tokens = 10;  // system prompt alone blows this
    Trajectory t = run_rollout("q", registry, backend, PromptTemplates::defaults(), config);
    CHECK(t.termination == Termination::ContextBudgetExhausted);
    CHECK(t.steps.empty());
}

TEST_CASE("malformed turn: one corrective retry, then BackendError") {
    ToolRegistry registry = fixtures::make_registry();
    SUBCASE("retry succeeds") {
        ScriptedBackend backend = fixtures::sequential_backend(
            {"garbled output", "<answer>TRIAL COMPLETE</answer>", "<answer>fixed</answer>"});
        RolloutConfig config;
        Trajectory t = run_rollout("q", registry, backend, PromptTemplates::defaults(), config);
        CHECK(t.termination == Termination::Answered);
        CHECK(t.answer == "fixed");
    }
    SUBCASE("retry fails too") {
        ScriptedBackend backend =
            fixtures::sequential_backend({"garbled once", "garbled twice"});
        RolloutConfig config;
        Trajectory t = run_rollout("q", registry, backend, PromptTemplates::defaults(), config);
        CHECK(t.termination == Termination::BackendError);
        REQUIRE(t.steps.size() == 1);
        CHECK(t.steps[0].raw_turn == "garbled twice");
        CHECK(t.steps[0].observation.text == "malformed assistant turn");
    }
}

TEST_CASE("script exhaustion becomes BackendError") {
    ToolRegistry registry = fixtures::make_registry();
    ScriptedBackend backend = fixtures::sequential_backend({});
    RolloutConfig config;
    Trajectory t = run_rollout("q", registry, backend, PromptTemplates::defaults(), config);
    CHECK(t.termination == Termination::BackendError);
}

TEST_CASE("transcript rendering") {
    ToolRegistry registry = fixtures::make_registry();
    Trajectory t = fixtures::run_correct(registry);
    std::string transcript = render_transcript(t);
    CHECK(transcript.rfind("User: " + std::string(fixtures::kQuery), 0) == 0);
    CHECK(transcript.find("Tool: <tool_response>Tom Hood</tool_response>") != std::string::npos);
    CHECK(transcript.find(fixtures::kFinalAnswerText) != std::string::npos);
}

TEST_CASE("trajectory JSON round-trip") {
    ToolRegistry registry = fixtures::make_registry();
    for (Trajectory t : {fixtures::run_correct(registry), fixtures::run_failed(registry)}) {
        json j = trajectory_to_json(t);
        Trajectory back = trajectory_from_json(j);
        CHECK(back.query == t.query);
        CHECK(back.answer == t.answer);
        CHECK(back.trial_summary == t.trial_summary);
        CHECK(back.termination == t.termination);
        REQUIRE(back.steps.size() == t.steps.size());
        for (size_t i = 0; i < t.steps.size(); ++i) {
            CHECK(back.steps[i].phase == t.steps[i].phase);
            CHECK(back.steps[i].action == t.steps[i].action);
            CHECK(back.steps[i].observation.text == t.steps[i].observation.text);
            CHECK(back.steps[i].observation.status == t.steps[i].observation.status);
            CHECK(back.steps[i].raw_turn == t.steps[i].raw_turn);
        }
        // Serialization is deterministic.
        CHECK(trajectory_to_json(back).dump() == j.dump());
    }
}

TEST_CASE("assistant_turns includes the answer turn but not the trial marker") {
    ToolRegistry registry = fixtures::make_registry();
    Trajectory t = fixtures::run_correct(registry);
    auto turns = t.assistant_turns();
    REQUIRE(turns.size() == 7);  // 6 tool-call turns + final answer
    CHECK(turns.back().find("<answer>") != std::string::npos);
    for (const std::string& turn : turns)
        CHECK(turn.find("TRIAL COMPLETE") == std::string::npos);
}
