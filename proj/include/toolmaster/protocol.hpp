#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace toolmaster {

using json = nlohmann::ordered_json;

/// A single tool invocation: tool name plus an argument object.
/// Argument order is preserved so serialized fixtures stay byte-stable.
struct ToolCall {
    std::string name;
    json arguments = json::object();

    bool operator==(const ToolCall& other) const {
        return name == other.name && arguments == other.arguments;
    }
};

struct FinalAnswer {
    std::string text;
    bool operator==(const FinalAnswer&) const = default;
};

/// Unmatched content captured by lenient parsing. Never well-formed.
struct Bare {
    std::string text;
    bool operator==(const Bare&) const = default;
};

struct ParsedTurn {
    std::optional<std::string> think;
    std::variant<ToolCall, FinalAnswer, Bare> payload;

    bool is_tool_call() const { return std::holds_alternative<ToolCall>(payload); }
    bool is_answer() const { return std::holds_alternative<FinalAnswer>(payload); }
    bool is_bare() const { return std::holds_alternative<Bare>(payload); }

    const ToolCall& call() const { return std::get<ToolCall>(payload); }
    const FinalAnswer& answer() const { return std::get<FinalAnswer>(payload); }
    const Bare& bare() const { return std::get<Bare>(payload); }

    bool operator==(const ParsedTurn&) const = default;
};

enum class Violation {
    MissingAnswer,
    MultipleCalls,
    MalformedCallBody,
    TrailingContent,
    UnclosedTag,
    EmptyTurn,
};

const char* violation_name(Violation v);

struct FormatVerdict {
    std::vector<Violation> violations;
    bool well_formed() const { return violations.empty(); }

    bool operator==(const FormatVerdict&) const = default;
};

enum class ParseMode { Strict, Lenient };

struct ParseOptions {
    int max_value_depth = 8;
};

struct ParseResult {
    std::optional<ParsedTurn> turn;
    std::vector<Violation> violations;

    bool ok() const { return turn.has_value() && violations.empty(); }
};

/// Parses one assistant turn. Strict mode accepts only an optional single
/// <think> prefix followed by exactly one <tool_call> or one <answer>,
/// with nothing else but whitespace. Lenient mode never fails; anything
/// that does not match strictly comes back as a Bare payload holding the
/// whole input verbatim.
ParseResult parse_turn(const std::string& raw, ParseMode mode, const ParseOptions& opts = {});

/// Canonical serialization. parse_turn(render_turn(t), Strict) == t for
/// every ToolCall/FinalAnswer turn. Throws std::invalid_argument on Bare.
std::string render_turn(const ParsedTurn& turn);

/// Canonical JSON text with ": " and ", " separators, matching the call
/// bodies shown in stored fixtures.
std::string canonical_json(const json& value);

struct FormatReport {
    int reward = 0;  // 0 or 1
    std::vector<FormatVerdict> per_turn;
    std::vector<Violation> trajectory_violations;

    std::vector<Violation> all_violations() const;
};

/// R_fmt over the assistant turns of a trajectory: 1 iff every turn is
/// strict-well-formed, exactly the last turn is a final answer, and every
/// earlier turn is a tool call.
FormatReport format_reward(const std::vector<std::string>& assistant_turns,
                           const ParseOptions& opts = {});

}  // namespace toolmaster
