#include "toolmaster/store.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace toolmaster {
namespace {

namespace fs = std::filesystem;

uint64_t fnv1a(const std::string& data) {
    uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

std::vector<json> read_jsonl(const std::string& path) {
    std::vector<json> records;
    std::ifstream in(path);
    if (!in) return records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        records.push_back(nlohmann::ordered_json::parse(line));
    }
    return records;
}

}  // namespace

std::string candidate_fingerprint(const Candidate& candidate) {
    std::ostringstream hex;
    hex << std::hex << fnv1a(trajectory_to_json(candidate.trajectory).dump());
    return hex.str();
}

TrajectoryStore::TrajectoryStore(std::string dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
}

std::string TrajectoryStore::path(const std::string& filename) const {
    return (fs::path(dir_) / filename).string();
}

void TrajectoryStore::append_line(const std::string& filename, const std::string& line) {
    std::lock_guard<std::mutex> lock(mutex_);
    std::ofstream out(path(filename), std::ios::app);
    if (!out) throw std::runtime_error("cannot open store file: " + path(filename));
    out << line << '\n';
    out.flush();
}

void TrajectoryStore::append_candidate(const StoredCandidate& record) {
    json entry = {{"query_id", record.query_id},
                  {"run_id", record.run_id},
                  {"backend_failed", record.candidate.backend_failed},
                  {"trajectory", trajectory_to_json(record.candidate.trajectory)}};
    append_line("candidates.jsonl", entry.dump());
}

std::vector<StoredCandidate> TrajectoryStore::candidates() const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::vector<StoredCandidate> out;
    for (const json& entry : read_jsonl(path("candidates.jsonl"))) {
        StoredCandidate record;
        record.query_id = entry.at("query_id").get<std::string>();
        record.run_id = entry.value("run_id", "");
        record.candidate.backend_failed = entry.value("backend_failed", false);
        record.candidate.trajectory = trajectory_from_json(entry.at("trajectory"));
        record.candidate.answer = record.candidate.trajectory.answer;
        out.push_back(std::move(record));
    }
    return out;
}

void TrajectoryStore::append_failure(const std::string& query_id, const std::string& reason) {
    json entry = {{"query_id", query_id}, {"reason", reason}};
    append_line("failures.jsonl", entry.dump());
}

int TrajectoryStore::failure_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return static_cast<int>(read_jsonl(path("failures.jsonl")).size());
}

void TrajectoryStore::record_judged(const std::string& fingerprint, const json& verdict) {
    json entry = {{"fingerprint", fingerprint}, {"verdict", verdict}};
    append_line("judged.jsonl", entry.dump());
}

std::optional<json> TrajectoryStore::judged(const std::string& fingerprint) const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::optional<json> found;
    for (const json& entry : read_jsonl(path("judged.jsonl")))
        if (entry.at("fingerprint").get<std::string>() == fingerprint) found = entry.at("verdict");
    return found;
}

}  // namespace toolmaster
