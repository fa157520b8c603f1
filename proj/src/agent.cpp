#include "toolmaster/agent.hpp"

#include <chrono>

namespace toolmaster {
namespace {

constexpr const char* kCorrectiveMessage =
    "Your previous reply did not follow the required format. Reply with exactly one "
    "<tool_call>...</tool_call> or one <answer>...</answer>, optionally preceded by a single "
    "<think>...</think> block, and nothing else.";

size_t estimate_tokens(const std::vector<ChatMessage>& messages, int chars_per_token) {
    size_t chars = 0;
    for (const ChatMessage& m : messages) chars += m.content.size() + 16;
    return chars / std::max(1, chars_per_token);
}

}  // namespace

const char* phase_name(Phase p) { return p == Phase::Trial ? "trial" : "exec"; }

std::optional<Phase> phase_from_name(const std::string& name) {
    if (name == "trial") return Phase::Trial;
    if (name == "exec") return Phase::Exec;
    return std::nullopt;
}

const char* termination_name(Termination t) {
    switch (t) {
        case Termination::Answered: return "Answered";
        case Termination::StepBudgetExhausted: return "StepBudgetExhausted";
        case Termination::ContextBudgetExhausted: return "ContextBudgetExhausted";
        case Termination::BackendError: return "BackendError";
    }
    return "BackendError";
}

std::optional<Termination> termination_from_name(const std::string& name) {
    for (Termination t : {Termination::Answered, Termination::StepBudgetExhausted,
                          Termination::ContextBudgetExhausted, Termination::BackendError})
        if (name == termination_name(t)) return t;
    return std::nullopt;
}

std::vector<std::string> Trajectory::assistant_turns() const {
    std::vector<std::string> turns;
    for (const Step& s : steps) turns.push_back(s.raw_turn);
    if (answer_raw_turn) turns.push_back(*answer_raw_turn);
    return turns;
}

PromptTemplates PromptTemplates::defaults() {
    return {prompts::system_prompt("{tool_docs}"), prompts::trial_instruction(),
            prompts::exec_instruction()};
}

PromptTemplates PromptTemplates::synthesis_defaults() {
    return {prompts::data_synthesis_prompt("{tool_docs}"), "", ""};
}

std::vector<ChatMessage> render_history(const std::string& query, const std::vector<Step>& steps,
                                        const PromptTemplates& templates, const ToolRegistry& registry,
                                        Phase stage, const std::optional<std::string>& trial_summary) {
    std::vector<ChatMessage> messages;
    std::string system = prompts::render_template(
        templates.system_template, {{"tool_docs", prompts::render_tool_docs(registry.docs())}});
    messages.push_back({Role::System, std::move(system)});

    const std::string& instruction =
        stage == Phase::Trial ? templates.trial_instruction : templates.exec_instruction;
    std::string user = query;
    if (!instruction.empty()) user += "\n\n" + instruction;
    messages.push_back({Role::User, std::move(user)});

    for (const Step& step : steps) {
        messages.push_back({Role::Assistant, step.raw_turn});
        messages.push_back({Role::Tool, wrap_tool_response(step.observation.text)});
    }
    (void)trial_summary;
    return messages;
}

Trajectory run_rollout(const std::string& query, const ToolRegistry& registry, ChatBackend& backend,
                       const PromptTemplates& templates, const RolloutConfig& config) {
    auto start = std::chrono::steady_clock::now();
    Trajectory t;
    t.query = query;
    auto finish = [&](Termination reason) {
        t.termination = reason;
        t.elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - start)
                           .count();
        return t;
    };

    std::vector<Phase> stages = config.two_stage ? std::vector<Phase>{Phase::Trial, Phase::Exec}
                                                 : std::vector<Phase>{Phase::Exec};
    int trial_steps = 0;

    for (Phase stage : stages) {
        bool stage_done = false;
        while (!stage_done) {
            if (static_cast<int>(t.steps.size()) >= config.max_total_steps)
                return finish(Termination::StepBudgetExhausted);
            if (stage == Phase::Trial && trial_steps >= config.max_trial_steps) break;

            std::vector<ChatMessage> messages =
                render_history(query, t.steps, templates, registry, stage, t.trial_summary);
            if (estimate_tokens(messages, config.chars_per_token) >=
                static_cast<size_t>(config.context_budget_tokens))
                return finish(Termination::ContextBudgetExhausted);

            std::string raw;
            try {
                raw = complete(backend, messages, config.generation);
            } catch (const TransportError&) {
                return finish(Termination::BackendError);
            } catch (const ScriptMiss&) {
                return finish(Termination::BackendError);
            }

            ParseResult parsed = parse_turn(raw, ParseMode::Strict);
            if (!parsed.ok()) {
                // One lenient re-prompt with a corrective user message; a
                // second failure ends the rollout with the turn kept raw so
                // reward computation can observe the format break.
                messages.push_back({Role::Assistant, raw});
                messages.push_back({Role::User, kCorrectiveMessage});
                try {
                    raw = complete(backend, messages, config.generation);
                } catch (const TransportError&) {
                    return finish(Termination::BackendError);
                } catch (const ScriptMiss&) {
                    return finish(Termination::BackendError);
                }
                parsed = parse_turn(raw, ParseMode::Strict);
                if (!parsed.ok()) {
                    Step step;
                    step.index = static_cast<int>(t.steps.size()) + 1;
                    step.phase = stage;
                    step.raw_turn = raw;
                    step.observation.status = ObsStatus::ToolError;
                    step.observation.text = "malformed assistant turn";
                    t.steps.push_back(std::move(step));
                    return finish(Termination::BackendError);
                }
            }

            const ParsedTurn& turn = *parsed.turn;
            if (turn.is_answer()) {
                if (stage == Phase::Trial) {
                    t.trial_summary = turn.answer().text;
                    stage_done = true;
                } else {
                    t.answer = turn.answer().text;
                    t.answer_raw_turn = raw;
                    return finish(Termination::Answered);
                }
                continue;
            }

            Step step;
            step.index = static_cast<int>(t.steps.size()) + 1;
            step.phase = stage;
            step.think = turn.think;
            step.action = turn.call();
            step.observation = registry.execute(turn.call());
            step.raw_turn = raw;
            t.steps.push_back(std::move(step));
            if (stage == Phase::Trial) ++trial_steps;
        }
    }
    return finish(Termination::StepBudgetExhausted);
}

int count_tool_calls(const Trajectory& trajectory) {
    return static_cast<int>(trajectory.steps.size());
}

std::string render_transcript(const Trajectory& trajectory) {
    std::string out = "User: " + trajectory.query + "\n";
    for (const Step& step : trajectory.steps) {
        out += "Assistant: " + step.raw_turn + "\n";
        out += "Tool: " + wrap_tool_response(step.observation.text) + "\n";
    }
    if (trajectory.answer_raw_turn) out += "Assistant: " + *trajectory.answer_raw_turn + "\n";
    return out;
}

FormatReport trajectory_format_reward(const Trajectory& trajectory) {
    return format_reward(trajectory.assistant_turns());
}

json trajectory_to_json(const Trajectory& t) {
    json steps = json::array();
    for (const Step& s : t.steps) {
        json step = {
            {"index", s.index},
            {"phase", phase_name(s.phase)},
            {"action", {{"name", s.action.name}, {"arguments", s.action.arguments}}},
            {"observation",
             {{"status", obs_status_name(s.observation.status)},
              {"text", s.observation.text},
              {"elapsed_ms", s.observation.elapsed.count()}}},
            {"raw_turn", s.raw_turn},
        };
        if (s.think) step["think"] = *s.think;
        steps.push_back(std::move(step));
    }
    json out = {{"query", t.query},
                {"steps", std::move(steps)},
                {"termination", termination_name(t.termination)},
                {"timing", {{"elapsed_ms", t.elapsed_ms}}}};
    if (t.answer) out["answer"] = *t.answer;
    if (t.answer_raw_turn) out["answer_raw_turn"] = *t.answer_raw_turn;
    if (t.trial_summary) out["trial_summary"] = *t.trial_summary;
    return out;
}

Trajectory trajectory_from_json(const json& j) {
    Trajectory t;
    t.query = j.at("query").get<std::string>();
    for (const json& s : j.at("steps")) {
        Step step;
        step.index = s.at("index").get<int>();
        auto phase = phase_from_name(s.at("phase").get<std::string>());
        if (!phase) throw std::runtime_error("bad phase in trajectory record");
        step.phase = *phase;
        if (s.contains("think")) step.think = s.at("think").get<std::string>();
        step.action.name = s.at("action").at("name").get<std::string>();
        step.action.arguments = s.at("action").at("arguments");
        auto status = obs_status_from_name(s.at("observation").at("status").get<std::string>());
        if (!status) throw std::runtime_error("bad observation status in trajectory record");
        step.observation.status = *status;
        step.observation.text = s.at("observation").at("text").get<std::string>();
        step.observation.elapsed =
            std::chrono::milliseconds(s.at("observation").value("elapsed_ms", 0));
        step.raw_turn = s.value("raw_turn", "");
        t.steps.push_back(std::move(step));
    }
    auto termination = termination_from_name(j.at("termination").get<std::string>());
    if (!termination) throw std::runtime_error("bad termination in trajectory record");
    t.termination = *termination;
    if (j.contains("answer")) t.answer = j.at("answer").get<std::string>();
    if (j.contains("answer_raw_turn")) t.answer_raw_turn = j.at("answer_raw_turn").get<std::string>();
    if (j.contains("trial_summary")) t.trial_summary = j.at("trial_summary").get<std::string>();
    if (j.contains("timing")) t.elapsed_ms = j.at("timing").value("elapsed_ms", 0LL);
    return t;
}

}  // namespace toolmaster
