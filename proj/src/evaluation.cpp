#include "toolmaster/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <stdexcept>

namespace toolmaster {
namespace {

bool error_like_text(const std::string& text) {
    std::string low;
    low.reserve(text.size());
    for (char c : text) low += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (low.empty()) return true;
    std::string trimmed = low;
    trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
    trimmed.erase(trimmed.find_last_not_of(" \t\r\n") + 1);
    if (trimmed == "[]" || trimmed == "none" || trimmed == "null" || trimmed.empty()) return true;
    return low.find("error") != std::string::npos || low.find("not found") != std::string::npos;
}

bool failed_observation(const Observation& obs) {
    return obs.status != ObsStatus::Ok || error_like_text(obs.text);
}

}  // namespace

const char* solve_verdict_name(SolveVerdict v) {
    switch (v) {
        case SolveVerdict::Solved: return "Solved";
        case SolveVerdict::Unsolved: return "Unsolved";
        case SolveVerdict::Unsure: return "Unsure";
    }
    return "Unsure";
}

std::optional<SolveVerdict> solve_verdict_from_name(const std::string& name) {
    for (SolveVerdict v : {SolveVerdict::Solved, SolveVerdict::Unsolved, SolveVerdict::Unsure})
        if (name == solve_verdict_name(v)) return v;
    return std::nullopt;
}

double sopr(const std::vector<SolveVerdict>& verdicts) {
    if (verdicts.empty()) throw std::invalid_argument("sopr: empty verdict list");
    int solved = static_cast<int>(
        std::count(verdicts.begin(), verdicts.end(), SolveVerdict::Solved));
    return static_cast<double>(solved) / static_cast<double>(verdicts.size());
}

std::string normalize_for_containment(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char raw : text) {
        unsigned char c = static_cast<unsigned char>(raw);
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

bool answer_correct(const std::string& final_answer, const std::string& gold) {
    if (final_answer.empty() || gold.empty())
        throw std::invalid_argument("answer_correct: empty input");
    return normalize_for_containment(final_answer).find(normalize_for_containment(gold)) !=
           std::string::npos;
}

ErrorClass classify_error_heuristic(const Trajectory& trajectory,
                                    const std::optional<std::set<std::string>>& gold_tools) {
    // I: under-calling — nothing called, or a gold tool never attempted.
    if (trajectory.steps.empty()) return ErrorClass::I;
    if (gold_tools) {
        std::set<std::string> called;
        for (const Step& s : trajectory.steps) called.insert(s.action.name);
        for (const std::string& tool : *gold_tools)
            if (!called.count(tool)) return ErrorClass::I;
    }

    // II: the tool layer never yielded usable data — the run ends on an
    // unrecovered error/empty observation, or the same failed call was
    // repeated at least 3 times.
    if (failed_observation(trajectory.steps.back().observation)) return ErrorClass::II;
    std::map<std::string, int> failed_repeats;
    for (const Step& s : trajectory.steps) {
        if (!failed_observation(s.observation)) continue;
        std::string key = s.action.name + "\x1f" + canonical_json(s.action.arguments);
        if (++failed_repeats[key] >= 3) return ErrorClass::II;
    }

    return ErrorClass::III;
}

double correct_path_rate(const std::set<std::string>& called_tools,
                         const std::set<std::string>& gold_tools) {
    if (gold_tools.empty()) throw std::invalid_argument("correct_path_rate: empty gold tool set");
    int hit = 0;
    for (const std::string& tool : gold_tools)
        if (called_tools.count(tool)) ++hit;
    return static_cast<double>(hit) / static_cast<double>(gold_tools.size());
}

double correct_path_rate(const Trajectory& trajectory, const std::set<std::string>& gold_tools) {
    std::set<std::string> called;
    for (const Step& s : trajectory.steps) called.insert(s.action.name);
    return correct_path_rate(called, gold_tools);
}

std::vector<CurvePoint> cumulative_correctness_curve(
    const std::vector<std::pair<int, bool>>& records, int max_step) {
    if (records.empty())
        throw std::invalid_argument("cumulative_correctness_curve: empty records");
    std::vector<CurvePoint> curve;
    for (int s = 0; s <= max_step; ++s) {
        int hits = 0;
        for (const auto& [calls, correct] : records)
            if (correct && calls <= s) ++hits;
        curve.push_back({s, static_cast<double>(hits) / static_cast<double>(records.size())});
    }
    return curve;
}

double avg_tool_calls(const std::vector<int>& call_counts) {
    if (call_counts.empty()) throw std::invalid_argument("avg_tool_calls: empty input");
    double total = 0;
    for (int c : call_counts) total += c;
    return total / static_cast<double>(call_counts.size());
}

double avg_tool_calls(const std::vector<Trajectory>& trajectories) {
    std::vector<int> counts;
    counts.reserve(trajectories.size());
    for (const Trajectory& t : trajectories) counts.push_back(count_tool_calls(t));
    return avg_tool_calls(counts);
}

json eval_record_to_json(const EvalRecord& record) {
    json out = {{"query_id", record.query_id},
                {"verdict", solve_verdict_name(record.verdict)},
                {"tool_calls", record.tool_calls}};
    if (record.contains_gold) out["contains_gold"] = *record.contains_gold;
    if (record.error_class) out["error_class"] = error_class_name(*record.error_class);
    if (record.path_recall) out["path_recall"] = *record.path_recall;
    return out;
}

BenchmarkRecord benchmark_record_from_json(const json& j) {
    BenchmarkRecord record;
    if (j.contains("query_id")) record.query_id = j.at("query_id").is_string()
                                                      ? j.at("query_id").get<std::string>()
                                                      : j.at("query_id").dump();
    else if (j.contains("id")) record.query_id = j.at("id").is_string() ? j.at("id").get<std::string>()
                                                                        : j.at("id").dump();
    if (j.contains("query")) record.query = j.at("query").get<std::string>();
    else if (j.contains("question")) record.query = j.at("question").get<std::string>();
    else throw std::runtime_error("benchmark record missing query/question");

    const char* tool_keys[] = {"tools", "api_list"};
    for (const char* key : tool_keys) {
        if (!j.contains(key)) continue;
        for (const json& doc : j.at(key)) record.tools.push_back(tool_doc_from_json(doc));
        break;
    }
    if (j.contains("gold_answer")) record.gold_answer = j.at("gold_answer").get<std::string>();
    else if (j.contains("answer")) record.gold_answer = j.at("answer").get<std::string>();

    const char* gold_tool_keys[] = {"gold_tools", "relevant_apis"};
    for (const char* key : gold_tool_keys) {
        if (!j.contains(key)) continue;
        std::set<std::string> tools;
        for (const json& t : j.at(key)) tools.insert(t.get<std::string>());
        record.gold_tools = std::move(tools);
        break;
    }
    return record;
}

std::vector<BenchmarkRecord> load_benchmark_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open benchmark file: " + path);
    std::vector<BenchmarkRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        records.push_back(benchmark_record_from_json(json::parse(line)));
    }
    return records;
}

}  // namespace toolmaster
