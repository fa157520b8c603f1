#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "toolmaster/synthesis.hpp"

namespace toolmaster {

struct StoredCandidate {
    std::string query_id;
    std::string run_id;
    Candidate candidate;
};

/// Fingerprint used for judge resumability: stable hash of the candidate's
/// trajectory content.
std::string candidate_fingerprint(const Candidate& candidate);

/// Append-only record log under one directory. Single writer, many
/// readers; each record is one whole line so readers never observe a
/// partial append.
class TrajectoryStore {
public:
    explicit TrajectoryStore(std::string dir);

    void append_candidate(const StoredCandidate& record);
    std::vector<StoredCandidate> candidates() const;

    void append_failure(const std::string& query_id, const std::string& reason);
    int failure_count() const;

    void record_judged(const std::string& fingerprint, const json& verdict);
    std::optional<json> judged(const std::string& fingerprint) const;

    const std::string& dir() const { return dir_; }
    std::string path(const std::string& filename) const;

private:
    void append_line(const std::string& filename, const std::string& line);

    std::string dir_;
    mutable std::mutex mutex_;
};

}  // namespace toolmaster
