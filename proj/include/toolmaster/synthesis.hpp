#pragma once

#include <optional>
#include <string>
#include <vector>

#include "toolmaster/agent.hpp"

namespace toolmaster {

struct SynthesisJob {
    std::string query;
    const ToolRegistry* registry = nullptr;
    ChatBackend* teacher = nullptr;
    PromptTemplates templates = PromptTemplates::defaults();
    RolloutConfig rollout;
    std::string teacher_id = "teacher";
};

struct Candidate {
    Trajectory trajectory;
    std::optional<std::string> answer;
    bool backend_failed = false;
};

/// Trial stage, exec stage conditioned on the trial steps, then one
/// explicit final-answer request if the rollout ended without an answer.
Candidate synthesize(const SynthesisJob& job);

enum class PrefilterReason { BadFormat, NoTrialPhase, NoAnswer, UnknownTool };
const char* prefilter_reason_name(PrefilterReason r);

struct PrefilterResult {
    bool pass = false;
    std::optional<PrefilterReason> reason;
};

/// Cheap structural gate before any judge call: format reward 1, at least
/// one trial-phase tool call, answer present, every call names a
/// registered tool.
PrefilterResult structural_prefilter(const Candidate& candidate, const ToolRegistry& registry);

enum class DropReason { PrefilterFailed, BehaviorMissing, NotSolved, JudgeUnavailable };
const char* drop_reason_name(DropReason r);

struct FilterVerdict {
    bool keep = false;
    std::optional<DropReason> reason;
    std::optional<PrefilterReason> prefilter_reason;
    std::string analysis;
};

/// Judge conjunction: keep iff the filter judge sees all three behaviors
/// AND the pass-rate judge returns Pass. Must run after the pre-filter.
FilterVerdict filter_candidate(const Candidate& candidate, ChatBackend& filter_judge,
                               ChatBackend& passrate_judge);

struct SftRecord {
    std::string query;
    std::vector<ChatMessage> messages;
    std::vector<bool> loss_mask;  // per message: assistant turns trainable
    std::string answer;
    std::string teacher_id;
    std::string filter_analysis;
};

/// Builds the exported chat transcript for a kept candidate. Throws if the
/// candidate violates the SftRecord invariants (format reward, answer).
SftRecord make_sft_record(const Candidate& candidate, const SynthesisJob& job,
                          const std::string& filter_analysis);

json sft_record_to_json(const SftRecord& record);
SftRecord sft_record_from_json(const json& j);

struct ExportManifest {
    int kept = 0;
    std::map<std::string, int> drops;  // reason name -> count

    json to_json() const;
};

/// One record per line plus a manifest. Rejects records violating the
/// SftRecord invariants.
void export_sft(const std::vector<SftRecord>& records, const std::string& dataset_path,
                const std::string& manifest_path, const ExportManifest& manifest);

std::vector<SftRecord> load_sft(const std::string& dataset_path);

/// Converts the alternate synthesis dialect (<thought>, <|tool calls
/// begin|> ... <|tool call end|>) to the canonical tags. Canonical input
/// passes through unchanged.
std::string normalize_dialect(const std::string& turn_text);

}  // namespace toolmaster
