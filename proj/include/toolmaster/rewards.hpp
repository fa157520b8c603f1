#pragma once

#include <optional>
#include <string>
#include <vector>

#include "toolmaster/agent.hpp"

namespace toolmaster {

struct RewardRecord {
    std::string trajectory_id;
    int r_fmt = 0;
    int r_corr = 0;
    int total = 0;  // r_fmt + r_corr
    std::string judge_rationale;
    bool pending = false;  // judge unavailable; never silently 0
};

/// R_corr: 1 iff the pass-rate judge says Pass; Fail and Unsure are 0.
/// Judge unavailability yields nullopt (deferred), never a silent 0.
std::optional<int> correctness_reward(const std::string& query, const Trajectory& trajectory,
                                      const std::string& answer, ChatBackend& judge,
                                      std::string* rationale = nullptr);

RewardRecord total_reward(const std::string& trajectory_id, const Trajectory& trajectory,
                          ChatBackend& judge);

struct GrpoGroup {
    std::string query_id;
    std::vector<std::pair<std::string, int>> members;  // (trajectory id, total reward)
    int group_size = 4;
    double kl_beta = 0.002;
};

/// Group-relative advantages: (r - mean) / (population std + epsilon).
/// A degenerate group (all rewards equal) yields all zeros.
std::vector<double> group_advantages(const GrpoGroup& group, double epsilon = 1e-6);

struct GrpoExportEntry {
    GrpoGroup group;
    std::vector<std::string> transcripts;  // one per member, same order
};

/// Per-group records for the external trainer: query, transcripts, raw
/// rewards, advantages, kl_beta, group_size.
void export_grpo(const std::vector<GrpoExportEntry>& entries, const std::string& path,
                 double epsilon = 1e-6);

}  // namespace toolmaster
