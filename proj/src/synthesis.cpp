#include "toolmaster/synthesis.hpp"

#include <fstream>
#include <stdexcept>

namespace toolmaster {
namespace {

std::string replace_all(std::string text, const std::string& from, const std::string& to) {
    size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
    return text;
}

std::string trim(const std::string& s) {
    size_t begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    size_t end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

Candidate synthesize(const SynthesisJob& job) {
    Candidate candidate;
    candidate.trajectory =
        run_rollout(job.query, *job.registry, *job.teacher, job.templates, job.rollout);
    if (candidate.trajectory.termination == Termination::BackendError) {
        candidate.backend_failed = true;
        return candidate;
    }
    if (!candidate.trajectory.answer) {
        // Budget ran out before an answer turn: one explicit final-answer
        // request conditioned on everything gathered so far.
        std::vector<ChatMessage> messages = render_history(
            job.query, candidate.trajectory.steps, job.templates, *job.registry, Phase::Exec,
            candidate.trajectory.trial_summary);
        messages.push_back(
            {Role::User, "Provide your final answer now, inside <answer></answer> tags."});
        try {
            std::string raw = complete(*job.teacher, messages, job.rollout.generation);
            ParseResult parsed = parse_turn(raw, ParseMode::Strict);
            if (parsed.ok() && parsed.turn->is_answer()) {
                candidate.trajectory.answer = parsed.turn->answer().text;
                candidate.trajectory.answer_raw_turn = raw;
                candidate.trajectory.termination = Termination::Answered;
            }
        } catch (const TransportError&) {
            candidate.backend_failed = true;
        } catch (const ScriptMiss&) {
            candidate.backend_failed = true;
        }
    }
    candidate.answer = candidate.trajectory.answer;
    return candidate;
}

const char* prefilter_reason_name(PrefilterReason r) {
    switch (r) {
        case PrefilterReason::BadFormat: return "BadFormat";
        case PrefilterReason::NoTrialPhase: return "NoTrialPhase";
        case PrefilterReason::NoAnswer: return "NoAnswer";
        case PrefilterReason::UnknownTool: return "UnknownTool";
    }
    return "BadFormat";
}

PrefilterResult structural_prefilter(const Candidate& candidate, const ToolRegistry& registry) {
    const Trajectory& t = candidate.trajectory;
    if (!t.answer || t.answer->empty()) return {false, PrefilterReason::NoAnswer};
    if (trajectory_format_reward(t).reward != 1) return {false, PrefilterReason::BadFormat};
    bool has_trial_call = false;
    for (const Step& s : t.steps) {
        if (s.phase == Phase::Trial) has_trial_call = true;
        if (!registry.has(s.action.name)) return {false, PrefilterReason::UnknownTool};
    }
    if (!has_trial_call) return {false, PrefilterReason::NoTrialPhase};
    return {true, std::nullopt};
}

const char* drop_reason_name(DropReason r) {
    switch (r) {
        case DropReason::PrefilterFailed: return "PrefilterFailed";
        case DropReason::BehaviorMissing: return "BehaviorMissing";
        case DropReason::NotSolved: return "NotSolved";
        case DropReason::JudgeUnavailable: return "JudgeUnavailable";
    }
    return "PrefilterFailed";
}

FilterVerdict filter_candidate(const Candidate& candidate, ChatBackend& filter_judge,
                               ChatBackend& passrate_judge) {
    FilterVerdict verdict;
    std::string transcript = render_transcript(candidate.trajectory);
    try {
        FilterResult behaviors = judge_filter(filter_judge, transcript);
        verdict.analysis = behaviors.analysis;
        if (!behaviors.keep) {
            verdict.reason = DropReason::BehaviorMissing;
            return verdict;
        }
        JudgeVerdict pass = judge_passrate(passrate_judge, candidate.trajectory.query,
                                           candidate.trajectory.answer.value_or(""), transcript);
        if (pass.status != PassStatus::Pass) {
            verdict.reason = DropReason::NotSolved;
            return verdict;
        }
    } catch (const TransportError& e) {
        verdict.reason = DropReason::JudgeUnavailable;
        verdict.analysis = e.what();
        return verdict;
    }
    verdict.keep = true;
    return verdict;
}

SftRecord make_sft_record(const Candidate& candidate, const SynthesisJob& job,
                          const std::string& filter_analysis) {
    const Trajectory& t = candidate.trajectory;
    if (!t.answer || t.answer->empty())
        throw std::invalid_argument("make_sft_record: candidate has no answer");
    if (trajectory_format_reward(t).reward != 1)
        throw std::invalid_argument("make_sft_record: candidate is not format-clean");

    SftRecord record;
    record.query = t.query;
    record.answer = *t.answer;
    record.teacher_id = job.teacher_id;
    record.filter_analysis = filter_analysis;

    // Exported transcripts speak the runtime dialect regardless of which
    // instruction produced them.
    record.messages.push_back(
        {Role::System, prompts::system_prompt(prompts::render_tool_docs(job.registry->docs()))});
    record.messages.push_back({Role::User, t.query});
    for (const Step& s : t.steps) {
        record.messages.push_back({Role::Assistant, normalize_dialect(s.raw_turn)});
        record.messages.push_back({Role::Tool, wrap_tool_response(s.observation.text)});
    }
    record.messages.push_back({Role::Assistant, normalize_dialect(*t.answer_raw_turn)});
    for (const ChatMessage& m : record.messages)
        record.loss_mask.push_back(m.role == Role::Assistant);
    return record;
}

json sft_record_to_json(const SftRecord& record) {
    json messages = json::array();
    for (size_t i = 0; i < record.messages.size(); ++i) {
        messages.push_back({{"role", role_name(record.messages[i].role)},
                            {"content", record.messages[i].content},
                            {"train", record.loss_mask[i]}});
    }
    return {{"query", record.query},
            {"messages", std::move(messages)},
            {"answer", record.answer},
            {"provenance",
             {{"teacher_id", record.teacher_id}, {"filter_analysis", record.filter_analysis}}}};
}

SftRecord sft_record_from_json(const json& j) {
    SftRecord record;
    record.query = j.at("query").get<std::string>();
    record.answer = j.at("answer").get<std::string>();
    record.teacher_id = j.at("provenance").value("teacher_id", "");
    record.filter_analysis = j.at("provenance").value("filter_analysis", "");
    for (const json& m : j.at("messages")) {
        auto role = role_from_name(m.at("role").get<std::string>());
        if (!role) throw std::runtime_error("bad role in SFT record");
        record.messages.push_back({*role, m.at("content").get<std::string>()});
        record.loss_mask.push_back(m.at("train").get<bool>());
    }
    return record;
}

json ExportManifest::to_json() const {
    json drop_counts = json::object();
    int dropped = 0;
    for (const auto& [reason, count] : drops) {
        drop_counts[reason] = count;
        dropped += count;
    }
    return {{"kept", kept}, {"dropped", dropped}, {"drops_by_reason", std::move(drop_counts)}};
}

void export_sft(const std::vector<SftRecord>& records, const std::string& dataset_path,
                const std::string& manifest_path, const ExportManifest& manifest) {
    for (const SftRecord& record : records) {
        if (record.answer.empty())
            throw std::invalid_argument("export_sft: record with empty answer");
        std::vector<std::string> turns;
        for (const ChatMessage& m : record.messages)
            if (m.role == Role::Assistant) turns.push_back(m.content);
        if (format_reward(turns).reward != 1)
            throw std::invalid_argument("export_sft: record is not format-clean");
    }
    std::ofstream out(dataset_path);
    if (!out) throw std::runtime_error("cannot open dataset file: " + dataset_path);
    for (const SftRecord& record : records) out << sft_record_to_json(record).dump() << '\n';
    std::ofstream mout(manifest_path);
    if (!mout) throw std::runtime_error("cannot open manifest file: " + manifest_path);
    mout << manifest.to_json().dump(2) << '\n';
}

std::vector<SftRecord> load_sft(const std::string& dataset_path) {
    std::ifstream in(dataset_path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + dataset_path);
    std::vector<SftRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        records.push_back(sft_record_from_json(json::parse(line)));
    }
    return records;
}

std::string normalize_dialect(const std::string& turn_text) {
    std::string text = replace_all(turn_text, "<thought>", "<think>");
    text = replace_all(text, "</thought>", "</think>");

    const std::string calls_begin = "<|tool calls begin|>";
    const std::string calls_end = "<|tool calls end|>";
    const std::string call_begin = "<|tool call begin|>";
    const std::string call_end = "<|tool call end|>";
    const std::string sep = "<|tool sep|>";

    size_t block_start = text.find(calls_begin);
    if (block_start == std::string::npos) return text;
    size_t block_end = text.find(calls_end, block_start);
    if (block_end == std::string::npos) return text;

    std::string inner = text.substr(block_start + calls_begin.size(), block_end - block_start - calls_begin.size());
    std::string rebuilt;
    size_t pos = 0;
    while ((pos = inner.find(call_begin, pos)) != std::string::npos) {
        size_t body_start = pos + call_begin.size();
        size_t body_end = inner.find(call_end, body_start);
        if (body_end == std::string::npos) return text;
        std::string body = inner.substr(body_start, body_end - body_start);
        size_t sep_pos = body.find(sep);
        if (sep_pos == std::string::npos) return text;
        std::string name = trim(body.substr(0, sep_pos));
        json args = json::parse(body.substr(sep_pos + sep.size()), nullptr, false);
        if (args.is_discarded() || !args.is_object()) return text;
        json call = json::object();
        call["name"] = name;
        call["arguments"] = args;
        rebuilt += "<tool_call>" + canonical_json(call) + "</tool_call>";
        pos = body_end + call_end.size();
    }
    if (rebuilt.empty()) return text;
    return text.substr(0, block_start) + rebuilt + text.substr(block_end + calls_end.size());
}

}  // namespace toolmaster
