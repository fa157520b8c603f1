#include "toolmaster/protocol.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace toolmaster {
namespace {

constexpr const char* kThinkOpen = "<think>";
constexpr const char* kThinkClose = "</think>";
constexpr const char* kCallOpen = "<tool_call>";
constexpr const char* kCallClose = "</tool_call>";
constexpr const char* kAnswerOpen = "<answer>";
constexpr const char* kAnswerClose = "</answer>";

bool is_ws(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r';
}

size_t skip_ws(const std::string& s, size_t pos) {
    while (pos < s.size() && is_ws(s[pos])) ++pos;
    return pos;
}

bool only_ws_after(const std::string& s, size_t pos) {
    return skip_ws(s, pos) == s.size();
}

size_t count_occurrences(const std::string& s, const std::string& needle) {
    size_t n = 0;
    for (size_t pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + needle.size()))
        ++n;
    return n;
}

int value_depth(const json& v) {
    if (!v.is_object() && !v.is_array()) return 0;
    int deepest = 0;
    for (const auto& child : v)
        deepest = std::max(deepest, value_depth(child));
    return 1 + deepest;
}

void write_json(std::ostringstream& out, const json& v) {
    if (v.is_object()) {
        out << '{';
        bool first = true;
        for (auto it = v.begin(); it != v.end(); ++it) {
            if (!first) out << ", ";
            first = false;
            out << json(it.key()).dump() << ": ";
            write_json(out, it.value());
        }
        out << '}';
    } else if (v.is_array()) {
        out << '[';
        bool first = true;
        for (const auto& item : v) {
            if (!first) out << ", ";
            first = false;
            write_json(out, item);
        }
        out << ']';
    } else {
        out << v.dump();
    }
}

// Strict-grammar scan over one assistant turn. Collects every violation it
// can identify rather than stopping at the first.
std::vector<Violation> scan_strict(const std::string& raw, ParsedTurn& turn, const ParseOptions& opts) {
    std::vector<Violation> violations;
    size_t pos = skip_ws(raw, 0);
    if (pos == raw.size()) {
        violations.push_back(Violation::EmptyTurn);
        return violations;
    }

    if (count_occurrences(raw, kCallOpen) >= 2) violations.push_back(Violation::MultipleCalls);

    if (raw.compare(pos, std::string(kThinkOpen).size(), kThinkOpen) == 0) {
        size_t body = pos + std::string(kThinkOpen).size();
        size_t close = raw.find(kThinkClose, body);
        if (close == std::string::npos) {
            violations.push_back(Violation::UnclosedTag);
            return violations;
        }
        turn.think = raw.substr(body, close - body);
        pos = skip_ws(raw, close + std::string(kThinkClose).size());
    }

    if (raw.compare(pos, std::string(kCallOpen).size(), kCallOpen) == 0) {
        size_t body = pos + std::string(kCallOpen).size();
        size_t close = raw.find(kCallClose, body);
        if (close == std::string::npos) {
            violations.push_back(Violation::UnclosedTag);
            return violations;
        }
        std::string body_text = raw.substr(body, close - body);
        json parsed = json::parse(body_text, nullptr, false);
        if (parsed.is_discarded() || !parsed.is_object() ||
            !parsed.contains("name") || !parsed["name"].is_string() ||
            parsed["name"].get<std::string>().empty() ||
            !parsed.contains("arguments") || !parsed["arguments"].is_object() ||
            value_depth(parsed["arguments"]) > opts.max_value_depth) {
            violations.push_back(Violation::MalformedCallBody);
        } else {
            turn.payload = ToolCall{parsed["name"].get<std::string>(), parsed["arguments"]};
        }
        if (!only_ws_after(raw, close + std::string(kCallClose).size()) &&
            std::find(violations.begin(), violations.end(), Violation::MultipleCalls) == violations.end()) {
            violations.push_back(Violation::TrailingContent);
        }
    } else if (raw.compare(pos, std::string(kAnswerOpen).size(), kAnswerOpen) == 0) {
        size_t body = pos + std::string(kAnswerOpen).size();
        size_t close = raw.find(kAnswerClose, body);
        if (close == std::string::npos) {
            violations.push_back(Violation::UnclosedTag);
            return violations;
        }
        // Whitespace inside <answer> is preserved verbatim.
        turn.payload = FinalAnswer{raw.substr(body, close - body)};
        if (!only_ws_after(raw, close + std::string(kAnswerClose).size()))
            violations.push_back(Violation::TrailingContent);
    } else {
        violations.push_back(Violation::TrailingContent);
    }
    return violations;
}

}  // namespace

const char* violation_name(Violation v) {
    switch (v) {
        case Violation::MissingAnswer: return "MissingAnswer";
        case Violation::MultipleCalls: return "MultipleCalls";
        case Violation::MalformedCallBody: return "MalformedCallBody";
        case Violation::TrailingContent: return "TrailingContent";
        case Violation::UnclosedTag: return "UnclosedTag";
        case Violation::EmptyTurn: return "EmptyTurn";
    }
    return "Unknown";
}

ParseResult parse_turn(const std::string& raw, ParseMode mode, const ParseOptions& opts) {
    ParsedTurn turn;
    turn.payload = Bare{raw};
    std::vector<Violation> violations = scan_strict(raw, turn, opts);

    ParseResult result;
    if (violations.empty()) {
        result.turn = std::move(turn);
        return result;
    }
    if (mode == ParseMode::Lenient) {
        // Lenient never errors and loses no characters: the whole input
        // survives as the Bare payload.
        ParsedTurn bare_turn;
        bare_turn.payload = Bare{raw};
        result.turn = std::move(bare_turn);
        result.violations = std::move(violations);
        return result;
    }
    result.violations = std::move(violations);
    return result;
}

std::string canonical_json(const json& value) {
    std::ostringstream out;
    write_json(out, value);
    return out.str();
}

std::string render_turn(const ParsedTurn& turn) {
    if (turn.is_bare()) throw std::invalid_argument("render_turn: Bare payload is not renderable");
    std::string out;
    if (turn.think) out += std::string(kThinkOpen) + *turn.think + kThinkClose;
    if (turn.is_tool_call()) {
        json body = json::object();
        body["name"] = turn.call().name;
        body["arguments"] = turn.call().arguments;
        out += std::string(kCallOpen) + canonical_json(body) + kCallClose;
    } else {
        out += std::string(kAnswerOpen) + turn.answer().text + kAnswerClose;
    }
    return out;
}

std::vector<Violation> FormatReport::all_violations() const {
    std::vector<Violation> all = trajectory_violations;
    for (const auto& verdict : per_turn)
        all.insert(all.end(), verdict.violations.begin(), verdict.violations.end());
    return all;
}

FormatReport format_reward(const std::vector<std::string>& assistant_turns, const ParseOptions& opts) {
    FormatReport report;
    if (assistant_turns.empty()) {
        report.trajectory_violations.push_back(Violation::EmptyTurn);
        return report;
    }

    bool all_ok = true;
    std::vector<std::optional<ParsedTurn>> parsed;
    for (const auto& raw : assistant_turns) {
        ParseResult r = parse_turn(raw, ParseMode::Strict, opts);
        report.per_turn.push_back(FormatVerdict{r.violations});
        if (!r.ok()) all_ok = false;
        parsed.push_back(std::move(r.turn));
    }

    bool last_is_answer = parsed.back() && parsed.back()->is_answer();
    if (!last_is_answer) {
        report.trajectory_violations.push_back(Violation::MissingAnswer);
        all_ok = false;
    }
    for (size_t i = 0; i + 1 < parsed.size(); ++i) {
        if (parsed[i] && parsed[i]->is_answer()) {
            // An answer before the final turn is treated as the final
            // answer being out of place.
            report.trajectory_violations.push_back(Violation::MissingAnswer);
            all_ok = false;
            break;
        }
    }
    report.reward = all_ok ? 1 : 0;
    return report;
}

}  // namespace toolmaster
