#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "toolmaster/agent.hpp"

namespace toolmaster {

enum class SolveVerdict { Solved, Unsolved, Unsure };
const char* solve_verdict_name(SolveVerdict v);
std::optional<SolveVerdict> solve_verdict_from_name(const std::string& name);

struct EvalRecord {
    std::string query_id;
    SolveVerdict verdict = SolveVerdict::Unsure;
    std::optional<bool> contains_gold;
    std::optional<ErrorClass> error_class;  // only when not Solved
    std::optional<double> path_recall;
    int tool_calls = 0;
};

struct GoldSpec {
    std::string query_id;
    std::optional<std::string> gold_answer;
    std::optional<std::set<std::string>> gold_tools;
};

/// Solvable Pass Rate: mean of per-verdict scores, Solved=1, others 0.
double sopr(const std::vector<SolveVerdict>& verdicts);

/// Case-fold + whitespace-collapse containment of the gold answer.
bool answer_correct(const std::string& final_answer, const std::string& gold);
std::string normalize_for_containment(const std::string& text);

/// Deterministic cascade mirroring the judge's priority logic, for offline
/// use. Judge mode (judge_error_type) is authoritative when available.
ErrorClass classify_error_heuristic(const Trajectory& trajectory,
                                    const std::optional<std::set<std::string>>& gold_tools = {});

/// Recall of the gold tool set over the distinct tools the trajectory
/// invoked. Multiplicity and order are irrelevant.
double correct_path_rate(const Trajectory& trajectory, const std::set<std::string>& gold_tools);
double correct_path_rate(const std::set<std::string>& called_tools,
                         const std::set<std::string>& gold_tools);

struct CurvePoint {
    int step = 0;
    double fraction = 0.0;
};

/// Fraction of records correct with tool_calls <= s, for s = 0..max_step.
/// Non-decreasing in s.
std::vector<CurvePoint> cumulative_correctness_curve(
    const std::vector<std::pair<int, bool>>& records, int max_step);

double avg_tool_calls(const std::vector<int>& call_counts);
double avg_tool_calls(const std::vector<Trajectory>& trajectories);

json eval_record_to_json(const EvalRecord& record);

/// Benchmark record: query, tool docs, optional gold answer/tools. The
/// loader accepts the field spellings used by the common public tool-use
/// benchmarks (query/question, answer/gold_answer, tools/api_list,
/// gold_tools/relevant_apis).
struct BenchmarkRecord {
    std::string query_id;
    std::string query;
    std::vector<ToolDoc> tools;
    std::optional<std::string> gold_answer;
    std::optional<std::set<std::string>> gold_tools;
};

std::vector<BenchmarkRecord> load_benchmark_file(const std::string& path);
BenchmarkRecord benchmark_record_from_json(const json& j);

}  // namespace toolmaster
