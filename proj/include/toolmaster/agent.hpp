#pragma once

#include <optional>
#include <string>
#include <vector>

#include "toolmaster/llm_io.hpp"
#include "toolmaster/protocol.hpp"
#include "toolmaster/toolenv.hpp"

namespace toolmaster {

enum class Phase { Trial, Exec };
const char* phase_name(Phase p);
std::optional<Phase> phase_from_name(const std::string& name);

/// One reasoning-action-observation step. The final answer is not a step;
/// it lives on the trajectory.
struct Step {
    int index = 0;  // 1-based
    Phase phase = Phase::Exec;
    std::optional<std::string> think;
    ToolCall action;
    Observation observation;
    std::string raw_turn;  // assistant turn text, verbatim
};

enum class Termination { Answered, StepBudgetExhausted, ContextBudgetExhausted, BackendError };
const char* termination_name(Termination t);
std::optional<Termination> termination_from_name(const std::string& name);

struct Trajectory {
    std::string query;
    std::vector<Step> steps;
    std::optional<std::string> answer;
    std::optional<std::string> answer_raw_turn;
    std::optional<std::string> trial_summary;  // trial-stage closing text, not a step
    Termination termination = Termination::Answered;
    long long elapsed_ms = 0;

    /// All assistant turn texts in order, including the answer turn.
    std::vector<std::string> assistant_turns() const;
};

struct PromptTemplates {
    std::string system_template;      // must contain {tool_docs}
    std::string trial_instruction;
    std::string exec_instruction;

    static PromptTemplates defaults();
    /// Single-stage templates replaying the combined synthesis instruction.
    static PromptTemplates synthesis_defaults();
};

struct RolloutConfig {
    int max_trial_steps = 8;
    int max_total_steps = 20;
    GenerationConfig generation;
    bool two_stage = true;
    // Context budget: 8,192 tokens estimated at 4 characters per token.
    int context_budget_tokens = 8192;
    int chars_per_token = 4;
};

/// System + user + alternating assistant/tool messages for the given steps.
std::vector<ChatMessage> render_history(const std::string& query, const std::vector<Step>& steps,
                                        const PromptTemplates& templates, const ToolRegistry& registry,
                                        Phase stage, const std::optional<std::string>& trial_summary = {});

/// The reasoning-action-observation loop. Two-stage mode runs a trial
/// stage first (an <answer> turn closes it) and then re-prompts for the
/// execution stage with the trial steps prepended.
Trajectory run_rollout(const std::string& query, const ToolRegistry& registry, ChatBackend& backend,
                       const PromptTemplates& templates, const RolloutConfig& config);

int count_tool_calls(const Trajectory& trajectory);

/// Full turn transcript rendered as text, for judges and reports.
std::string render_transcript(const Trajectory& trajectory);

FormatReport trajectory_format_reward(const Trajectory& trajectory);

json trajectory_to_json(const Trajectory& t);
Trajectory trajectory_from_json(const json& j);

}  // namespace toolmaster
