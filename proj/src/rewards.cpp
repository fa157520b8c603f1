#include "toolmaster/rewards.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace toolmaster {

std::optional<int> correctness_reward(const std::string& query, const Trajectory& trajectory,
                                      const std::string& answer, ChatBackend& judge,
                                      std::string* rationale) {
    try {
        JudgeVerdict verdict = judge_passrate(judge, query, answer, render_transcript(trajectory));
        if (rationale) *rationale = verdict.rationale;
        return verdict.status == PassStatus::Pass ? 1 : 0;
    } catch (const TransportError& e) {
        if (rationale) *rationale = e.what();
        return std::nullopt;
    } catch (const ScriptMiss& e) {
        if (rationale) *rationale = e.what();
        return std::nullopt;
    }
}

RewardRecord total_reward(const std::string& trajectory_id, const Trajectory& trajectory,
                          ChatBackend& judge) {
    RewardRecord record;
    record.trajectory_id = trajectory_id;
    record.r_fmt = trajectory_format_reward(trajectory).reward;
    auto corr = correctness_reward(trajectory.query, trajectory, trajectory.answer.value_or(""),
                                   judge, &record.judge_rationale);
    if (!corr) {
        record.pending = true;
        return record;
    }
    record.r_corr = *corr;
    record.total = record.r_fmt + record.r_corr;
    return record;
}

std::vector<double> group_advantages(const GrpoGroup& group, double epsilon) {
    if (group.members.size() < 2)
        throw std::invalid_argument("group_advantages: group needs at least 2 members");
    double mean = 0.0;
    for (const auto& [_, r] : group.members) mean += r;
    mean /= static_cast<double>(group.members.size());
    double variance = 0.0;
    for (const auto& [_, r] : group.members) variance += (r - mean) * (r - mean);
    variance /= static_cast<double>(group.members.size());
    double std_dev = std::sqrt(variance);
    std::vector<double> advantages;
    advantages.reserve(group.members.size());
    for (const auto& [_, r] : group.members)
        advantages.push_back((r - mean) / (std_dev + epsilon));
    if (std_dev == 0.0) std::fill(advantages.begin(), advantages.end(), 0.0);
    return advantages;
}

void export_grpo(const std::vector<GrpoExportEntry>& entries, const std::string& path,
                 double epsilon) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open GRPO export file: " + path);
    for (const GrpoExportEntry& entry : entries) {
        if (entry.transcripts.size() != entry.group.members.size())
            throw std::invalid_argument("export_grpo: transcript/member count mismatch");
        if (static_cast<int>(entry.group.members.size()) != entry.group.group_size)
            throw std::invalid_argument("export_grpo: group is not full");
        std::vector<double> advantages = group_advantages(entry.group, epsilon);
        json members = json::array();
        for (size_t i = 0; i < entry.group.members.size(); ++i) {
            members.push_back({{"trajectory_id", entry.group.members[i].first},
                               {"reward", entry.group.members[i].second},
                               {"advantage", advantages[i]},
                               {"transcript", entry.transcripts[i]}});
        }
        json record = {{"query_id", entry.group.query_id},
                       {"group_size", entry.group.group_size},
                       {"kl_beta", entry.group.kl_beta},
                       {"members", std::move(members)}};
        out << record.dump() << '\n';
    }
}

}  // namespace toolmaster
