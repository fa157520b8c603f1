// toolmaster: trajectory factory and evaluation pipeline.
//
// Subcommands: synth, filter, rollout, eval, analyze, similarity, export.
// Exit codes: 0 success, 1 partial failures, 2 configuration error,
// 3 total backend failure.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "toolmaster/config.hpp"
#include "toolmaster/evaluation.hpp"
#include "toolmaster/rewards.hpp"
#include "toolmaster/similarity.hpp"
#include "toolmaster/store.hpp"
#include "toolmaster/synthesis.hpp"

namespace tmr = toolmaster;
using tmr::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitConfig = 2;
constexpr int kExitBackend = 3;

struct QueryItem {
    std::string id;
    std::string query;
};

std::vector<QueryItem> load_queries(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw tmr::ConfigError("cannot open query file: " + path);
    std::vector<QueryItem> out;
    std::string line;
    int index = 0;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        json j = nlohmann::ordered_json::parse(line);
        QueryItem item;
        item.id = j.contains("id")         ? j.at("id").get<std::string>()
                  : j.contains("query_id") ? j.at("query_id").get<std::string>()
                                           : "q" + std::to_string(index);
        item.query = j.contains("query") ? j.at("query").get<std::string>()
                                         : j.at("question").get<std::string>();
        out.push_back(std::move(item));
        ++index;
    }
    return out;
}

// Wall-clock timings are scrubbed before persisting so reruns with the
// same scripts produce byte-identical store contents.
void scrub_timing(tmr::Trajectory& t) {
    t.elapsed_ms = 0;
    for (tmr::Step& s : t.steps) s.observation.elapsed = std::chrono::milliseconds(0);
}

void write_report(const tmr::TrajectoryStore& store, const std::string& filename, const json& body) {
    std::ofstream out(store.path(filename));
    if (!out) throw std::runtime_error("cannot open report file: " + store.path(filename));
    out << body.dump(2) << '\n';
}

int outcome_exit(int attempted, int failed) {
    if (failed == 0) return kExitOk;
    return failed == attempted ? kExitBackend : kExitPartial;
}

json verdict_to_json(const tmr::FilterVerdict& v) {
    json j = {{"keep", v.keep}, {"analysis", v.analysis}};
    if (v.reason) j["drop_reason"] = tmr::drop_reason_name(*v.reason);
    if (v.prefilter_reason) j["prefilter_reason"] = tmr::prefilter_reason_name(*v.prefilter_reason);
    return j;
}

tmr::FilterVerdict verdict_from_json(const json& j) {
    tmr::FilterVerdict v;
    v.keep = j.at("keep").get<bool>();
    v.analysis = j.value("analysis", "");
    if (j.contains("drop_reason")) {
        std::string name = j.at("drop_reason").get<std::string>();
        for (auto r : {tmr::DropReason::PrefilterFailed, tmr::DropReason::BehaviorMissing,
                       tmr::DropReason::NotSolved, tmr::DropReason::JudgeUnavailable})
            if (name == tmr::drop_reason_name(r)) v.reason = r;
    }
    return v;
}

int cmd_synth(const tmr::PipelineConfig& config, const std::string& query_file) {
    std::vector<QueryItem> queries = load_queries(query_file);
    tmr::ToolRegistry registry = tmr::load_registry_file(config.registry_path);
    auto teacher = tmr::make_chat_backend(config.teacher);
    tmr::TrajectoryStore store(config.store_dir);

    std::set<std::string> seen;
    for (const tmr::StoredCandidate& c : store.candidates()) seen.insert(c.query_id);
    // Failure records also count as seen: a rerun never retries silently.
    {
        std::ifstream in(store.path("failures.jsonl"));
        std::string line;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
            seen.insert(json::parse(line).at("query_id").get<std::string>());
        }
    }

    int attempted = 0, synthesized = 0, failed = 0, skipped = 0;
    for (const QueryItem& item : queries) {
        if (seen.count(item.id)) {
            ++skipped;
            continue;
        }
        ++attempted;
        tmr::SynthesisJob job;
        job.query = item.query;
        job.registry = &registry;
        job.teacher = teacher.get();
        job.rollout = config.rollout;
        tmr::Candidate candidate = tmr::synthesize(job);
        if (candidate.backend_failed) {
            ++failed;
            store.append_failure(item.id, "backend failure during synthesis");
            continue;
        }
        ++synthesized;
        scrub_timing(candidate.trajectory);
        store.append_candidate({item.id, "synth", std::move(candidate)});
    }

    json report = {{"queries", static_cast<int>(queries.size())},
                   {"synthesized", synthesized},
                   {"failed", failed},
                   {"skipped", skipped}};
    write_report(store, "synth_report.json", report);
    std::cout << report.dump(2) << '\n';
    return attempted == 0 ? kExitOk : outcome_exit(attempted, failed);
}

int cmd_filter(const tmr::PipelineConfig& config, bool reuse_only) {
    tmr::ToolRegistry registry = tmr::load_registry_file(config.registry_path);
    tmr::TrajectoryStore store(config.store_dir);
    std::vector<tmr::StoredCandidate> candidates = store.candidates();

    std::unique_ptr<tmr::ChatBackend> filter_judge, passrate_judge;
    if (!reuse_only) {
        filter_judge = tmr::make_chat_backend(config.filter_judge);
        passrate_judge = tmr::make_chat_backend(config.judge);
    }

    std::vector<tmr::SftRecord> records;
    tmr::ExportManifest manifest;
    int judge_calls = 0, judge_failures = 0, unjudged = 0;

    for (const tmr::StoredCandidate& stored : candidates) {
        tmr::FilterVerdict verdict;
        std::string fingerprint = tmr::candidate_fingerprint(stored.candidate);
        if (auto cached = store.judged(fingerprint)) {
            verdict = verdict_from_json(*cached);
        } else if (reuse_only) {
            ++unjudged;
            continue;
        } else {
            tmr::PrefilterResult pre = tmr::structural_prefilter(stored.candidate, registry);
            if (!pre.pass) {
                verdict.reason = tmr::DropReason::PrefilterFailed;
                verdict.prefilter_reason = pre.reason;
            } else {
                ++judge_calls;
                try {
                    verdict = tmr::filter_candidate(stored.candidate, *filter_judge, *passrate_judge);
                } catch (const tmr::ScriptMiss& e) {
                    verdict.reason = tmr::DropReason::JudgeUnavailable;
                    verdict.analysis = e.what();
                }
            }
            if (verdict.reason == tmr::DropReason::JudgeUnavailable) {
                // Left unrecorded so a later run can retry the judges.
                ++judge_failures;
            } else {
                store.record_judged(fingerprint, verdict_to_json(verdict));
            }
        }

        if (verdict.keep) {
            tmr::SynthesisJob job;
            job.query = stored.candidate.trajectory.query;
            job.registry = &registry;
            records.push_back(tmr::make_sft_record(stored.candidate, job, verdict.analysis));
            ++manifest.kept;
        } else if (verdict.reason) {
            ++manifest.drops[tmr::drop_reason_name(*verdict.reason)];
        }
    }

    tmr::export_sft(records, store.path("sft_dataset.jsonl"), store.path("sft_manifest.json"),
                   manifest);
    json report = manifest.to_json();
    report["candidates"] = static_cast<int>(candidates.size());
    report["unjudged_skipped"] = unjudged;
    std::cout << report.dump(2) << '\n';
    if (judge_failures > 0) return outcome_exit(judge_calls, judge_failures);
    return kExitOk;
}

int cmd_rollout(const tmr::PipelineConfig& config, const std::string& query_file) {
    std::vector<QueryItem> queries = load_queries(query_file);
    tmr::ToolRegistry registry = tmr::load_registry_file(config.registry_path);
    auto policy = tmr::make_chat_backend(config.policy);
    auto judge = tmr::make_chat_backend(config.judge);
    tmr::TrajectoryStore store(config.store_dir);

    std::vector<tmr::GrpoExportEntry> entries;
    int attempted = 0, failed = 0, pending_groups = 0;
    for (const QueryItem& item : queries) {
        tmr::GrpoExportEntry entry;
        entry.group.query_id = item.id;
        entry.group.group_size = config.group_size;
        entry.group.kl_beta = config.kl_beta;
        bool group_pending = false, group_failed = false;
        for (int i = 0; i < config.group_size; ++i) {
            ++attempted;
            std::string trajectory_id = item.id + "#" + std::to_string(i);
            tmr::Trajectory t = tmr::run_rollout(item.query, registry, *policy,
                                               tmr::PromptTemplates::defaults(), config.rollout);
            if (t.termination == tmr::Termination::BackendError) {
                ++failed;
                group_failed = true;
                store.append_failure(trajectory_id, "backend failure during rollout");
                continue;
            }
            scrub_timing(t);
            tmr::RewardRecord reward = tmr::total_reward(trajectory_id, t, *judge);
            if (reward.pending) {
                group_pending = true;
                continue;
            }
            entry.group.members.emplace_back(trajectory_id, reward.total);
            entry.transcripts.push_back(tmr::render_transcript(t));
            tmr::Candidate candidate;
            candidate.trajectory = std::move(t);
            candidate.answer = candidate.trajectory.answer;
            store.append_candidate({trajectory_id, "rollout", std::move(candidate)});
        }
        if (group_pending || group_failed) {
            // A partial group exports nothing; advantages need the full group.
            ++pending_groups;
            continue;
        }
        entries.push_back(std::move(entry));
    }

    tmr::export_grpo(entries, store.path("grpo_export.jsonl"), config.advantage_epsilon);
    json report = {{"queries", static_cast<int>(queries.size())},
                   {"groups_exported", static_cast<int>(entries.size())},
                   {"groups_blocked", pending_groups},
                   {"rollouts_failed", failed}};
    write_report(store, "rollout_report.json", report);
    std::cout << report.dump(2) << '\n';
    if (failed == attempted && attempted > 0) return kExitBackend;
    return (failed > 0 || pending_groups > 0) ? kExitPartial : kExitOk;
}

int cmd_eval(const tmr::PipelineConfig& config, const std::string& benchmark_file,
             const std::string& mode) {
    std::vector<tmr::BenchmarkRecord> benchmark = tmr::load_benchmark_file(benchmark_file);
    if (benchmark.empty()) throw tmr::ConfigError("benchmark file is empty: " + benchmark_file);

    tmr::ToolRegistry registry = tmr::load_registry_file(config.registry_path);
    auto policy = tmr::make_chat_backend(config.policy);
    std::unique_ptr<tmr::ChatBackend> judge;
    if (mode == "sopr") judge = tmr::make_chat_backend(config.judge);
    tmr::TrajectoryStore store(config.store_dir);

    std::vector<tmr::SolveVerdict> aggregated;
    json record_reports = json::array();
    int attempted = 0, failed = 0, excluded = 0;
    for (const tmr::BenchmarkRecord& record : benchmark) {
        ++attempted;
        tmr::Trajectory t = tmr::run_rollout(record.query, registry, *policy,
                                           tmr::PromptTemplates::defaults(), config.rollout);
        if (t.termination == tmr::Termination::BackendError) {
            ++failed;
            json row = {{"query_id", record.query_id}, {"error", "backend failure"}};
            record_reports.push_back(std::move(row));
            continue;
        }
        scrub_timing(t);

        tmr::EvalRecord ev;
        ev.query_id = record.query_id;
        ev.tool_calls = tmr::count_tool_calls(t);
        bool has_verdict = true;
        if (mode == "containment") {
            if (!record.gold_answer) {
                // Missing gold: flagged, excluded from the aggregate.
                ev.verdict = tmr::SolveVerdict::Unsure;
                has_verdict = false;
                ++excluded;
            } else {
                ev.contains_gold = t.answer && tmr::answer_correct(*t.answer, *record.gold_answer);
                ev.verdict =
                    *ev.contains_gold ? tmr::SolveVerdict::Solved : tmr::SolveVerdict::Unsolved;
            }
        } else {
            try {
                tmr::JudgeVerdict jv = tmr::judge_passrate(*judge, t.query, t.answer.value_or(""),
                                                         tmr::render_transcript(t));
                ev.verdict = jv.status == tmr::PassStatus::Pass   ? tmr::SolveVerdict::Solved
                             : jv.status == tmr::PassStatus::Fail ? tmr::SolveVerdict::Unsolved
                                                                 : tmr::SolveVerdict::Unsure;
            } catch (const tmr::TransportError&) {
                ++failed;
                has_verdict = false;
            } catch (const tmr::ScriptMiss&) {
                ++failed;
                has_verdict = false;
            }
        }
        if (ev.verdict != tmr::SolveVerdict::Solved)
            ev.error_class = tmr::classify_error_heuristic(t, record.gold_tools);
        if (record.gold_tools) ev.path_recall = tmr::correct_path_rate(t, *record.gold_tools);
        if (has_verdict) aggregated.push_back(ev.verdict);

        json row = tmr::eval_record_to_json(ev);
        row["excluded"] = !has_verdict;
        record_reports.push_back(std::move(row));
    }

    json report = {{"mode", mode},
                   {"records", std::move(record_reports)},
                   {"evaluated", static_cast<int>(aggregated.size())},
                   {"excluded", excluded}};
    if (!aggregated.empty()) report["sopr"] = tmr::sopr(aggregated);
    write_report(store, "eval_report.json", report);
    std::cout << report.dump(2) << '\n';
    return outcome_exit(attempted, failed);
}

int cmd_analyze(const tmr::PipelineConfig& config, const std::string& mode,
                const std::string& benchmark_file) {
    tmr::TrajectoryStore store(config.store_dir);
    std::vector<tmr::StoredCandidate> candidates = store.candidates();
    if (candidates.empty()) throw tmr::ConfigError("store is empty; run synth or rollout first");

    std::map<std::string, tmr::GoldSpec> gold;
    if (!benchmark_file.empty()) {
        for (const tmr::BenchmarkRecord& r : tmr::load_benchmark_file(benchmark_file))
            gold[r.query_id] = {r.query_id, r.gold_answer, r.gold_tools};
    }
    auto gold_for = [&](const std::string& query_id) -> const tmr::GoldSpec* {
        auto it = gold.find(query_id);
        return it == gold.end() ? nullptr : &it->second;
    };

    json report;
    if (mode == "errors") {
        std::map<std::string, int> counts;
        json rows = json::array();
        for (const tmr::StoredCandidate& c : candidates) {
            const tmr::GoldSpec* g = gold_for(c.query_id);
            tmr::ErrorClass cls = tmr::classify_error_heuristic(
                c.candidate.trajectory, g ? g->gold_tools : std::optional<std::set<std::string>>{});
            ++counts[tmr::error_class_name(cls)];
            rows.push_back({{"query_id", c.query_id}, {"class", tmr::error_class_name(cls)}});
        }
        report = {{"mode", "errors"}, {"counts", counts}, {"records", std::move(rows)}};
        write_report(store, "error_report.json", report);
    } else if (mode == "paths") {
        if (gold.empty()) throw tmr::ConfigError("paths mode needs --benchmark with gold tools");
        json rows = json::array();
        double sum = 0.0;
        int scored = 0;
        for (const tmr::StoredCandidate& c : candidates) {
            const tmr::GoldSpec* g = gold_for(c.query_id);
            if (!g || !g->gold_tools) continue;
            double recall = tmr::correct_path_rate(c.candidate.trajectory, *g->gold_tools);
            rows.push_back({{"query_id", c.query_id}, {"path_recall", recall}});
            sum += recall;
            ++scored;
        }
        if (scored == 0) throw tmr::ConfigError("no stored trajectory matches a gold tool spec");
        report = {{"mode", "paths"}, {"mean_path_recall", sum / scored}, {"records", std::move(rows)}};
        write_report(store, "paths_report.json", report);
    } else if (mode == "calls") {
        std::vector<int> counts;
        for (const tmr::StoredCandidate& c : candidates)
            counts.push_back(tmr::count_tool_calls(c.candidate.trajectory));
        report = {{"mode", "calls"},
                  {"avg_tool_calls", tmr::avg_tool_calls(counts)},
                  {"trajectories", static_cast<int>(counts.size())}};
        write_report(store, "calls_report.json", report);
    } else if (mode == "curve") {
        std::vector<std::pair<int, bool>> points;
        for (const tmr::StoredCandidate& c : candidates) {
            const tmr::Trajectory& t = c.candidate.trajectory;
            const tmr::GoldSpec* g = gold_for(c.query_id);
            bool correct = t.answer.has_value();
            if (g && g->gold_answer)
                correct = t.answer && tmr::answer_correct(*t.answer, *g->gold_answer);
            points.emplace_back(tmr::count_tool_calls(t), correct);
        }
        json curve = json::array();
        for (const tmr::CurvePoint& p :
             tmr::cumulative_correctness_curve(points, config.rollout.max_total_steps))
            curve.push_back({{"step", p.step}, {"fraction", p.fraction}});
        report = {{"mode", "curve"}, {"curve", std::move(curve)}};
        write_report(store, "curve_report.json", report);
    } else {
        throw tmr::ConfigError("unknown analyze mode: " + mode);
    }
    std::cout << report.dump(2) << '\n';
    return kExitOk;
}

std::vector<tmr::ToolDoc> load_doc_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw tmr::ConfigError("cannot open tool doc file: " + path);
    std::vector<tmr::ToolDoc> docs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        docs.push_back(tmr::tool_doc_from_json(nlohmann::ordered_json::parse(line)));
    }
    return docs;
}

int cmd_similarity(const tmr::PipelineConfig& config, const std::string& training_file,
                   const std::string& test_file, const std::string& benchmark_file) {
    std::vector<tmr::ToolDoc> training = load_doc_file(training_file);
    std::vector<tmr::ToolDoc> test = load_doc_file(test_file);
    if (training.empty() || test.empty())
        throw tmr::ConfigError("similarity needs non-empty training and test doc files");

    auto backend = tmr::make_embedding_backend(config.embedding);
    tmr::TrajectoryStore store(config.store_dir);
    tmr::EmbeddingCache cache(*backend);
    cache.load(store.path("embedding_cache.json"));

    tmr::SimilarityReport report;
    std::vector<double> scores;
    for (const tmr::ToolDoc& doc : test)
        scores.push_back(tmr::max_similarity_to_training(doc, training, cache));

    std::vector<tmr::SimGroup> groups;
    if (config.tertile_mode) {
        groups = tmr::assign_groups_tertile(scores);
    } else {
        for (double s : scores) groups.push_back(tmr::assign_group(s, config.thresholds));
    }
    std::map<std::string, tmr::SimGroup> tool_groups;
    for (size_t i = 0; i < test.size(); ++i) {
        report.tools.push_back({test[i].name, scores[i], groups[i]});
        tool_groups[test[i].name] = groups[i];
    }

    std::vector<tmr::Trajectory> trajectories;
    for (const tmr::StoredCandidate& c : store.candidates())
        trajectories.push_back(c.candidate.trajectory);
    report.aggregates = tmr::group_aggregates(trajectories, tool_groups);

    if (!benchmark_file.empty()) {
        for (const tmr::BenchmarkRecord& r : tmr::load_benchmark_file(benchmark_file)) {
            if (!r.gold_tools) continue;
            std::vector<tmr::SimGroup> gold_groups;
            bool complete = true;
            for (const std::string& tool : *r.gold_tools) {
                auto it = tool_groups.find(tool);
                if (it == tool_groups.end()) {
                    complete = false;
                    break;
                }
                gold_groups.push_back(it->second);
            }
            if (complete && !gold_groups.empty())
                report.query_familiarity[r.query_id] = tmr::classify_query_familiarity(gold_groups);
        }
    }

    cache.save(store.path("embedding_cache.json"));
    json body = tmr::similarity_report_to_json(report);
    write_report(store, "similarity_report.json", body);
    std::cout << body.dump(2) << '\n';
    return kExitOk;
}

int cmd_export(const tmr::PipelineConfig& config, const std::string& kind) {
    if (kind == "sft") return cmd_filter(config, /*reuse_only=*/true);
    if (kind == "grpo") {
        // GRPO export happens inside `rollout`; this re-reports what exists.
        tmr::TrajectoryStore store(config.store_dir);
        std::ifstream in(store.path("grpo_export.jsonl"));
        int groups = 0;
        std::string line;
        while (in && std::getline(in, line))
            if (line.find_first_not_of(" \t\r\n") != std::string::npos) ++groups;
        json report = {{"kind", "grpo"}, {"groups", groups}};
        std::cout << report.dump(2) << '\n';
        return kExitOk;
    }
    throw tmr::ConfigError("unknown export kind: " + kind);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"toolmaster: tool-agent trajectory factory and evaluation pipeline"};
    app.require_subcommand(1);

    std::string config_path, query_file, benchmark_file, mode, kind;
    std::string training_file, test_file;

    auto* synth = app.add_subcommand("synth", "Synthesize teacher trajectories for a query file");
    synth->add_option("--config", config_path)->required();
    synth->add_option("--queries", query_file)->required();

    auto* filter = app.add_subcommand("filter", "Judge stored candidates and export the SFT dataset");
    filter->add_option("--config", config_path)->required();

    auto* rollout = app.add_subcommand("rollout", "Policy rollouts, rewards, and GRPO group export");
    rollout->add_option("--config", config_path)->required();
    rollout->add_option("--queries", query_file)->required();

    auto* eval = app.add_subcommand("eval", "Evaluate the policy on a benchmark file");
    eval->add_option("--config", config_path)->required();
    eval->add_option("--benchmark", benchmark_file)->required();
    eval->add_option("--mode", mode)
        ->default_val("sopr")
        ->check(CLI::IsMember({"sopr", "containment"}));

    auto* analyze = app.add_subcommand("analyze", "Report over the stored trajectories");
    analyze->add_option("--config", config_path)->required();
    analyze->add_option("--mode", mode)
        ->required()
        ->check(CLI::IsMember({"errors", "paths", "calls", "curve"}));
    analyze->add_option("--benchmark", benchmark_file);

    auto* similarity = app.add_subcommand("similarity", "Tool-similarity grouping and aggregates");
    similarity->add_option("--config", config_path)->required();
    similarity->add_option("--training", training_file)->required();
    similarity->add_option("--test", test_file)->required();
    similarity->add_option("--benchmark", benchmark_file);

    auto* exp = app.add_subcommand("export", "Re-export datasets from the store without judge calls");
    exp->add_option("--config", config_path)->required();
    exp->add_option("--kind", kind)->required()->check(CLI::IsMember({"sft", "grpo"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        tmr::PipelineConfig config = tmr::PipelineConfig::load(config_path);
        if (synth->parsed()) return cmd_synth(config, query_file);
        if (filter->parsed()) return cmd_filter(config, /*reuse_only=*/false);
        if (rollout->parsed()) return cmd_rollout(config, query_file);
        if (eval->parsed()) return cmd_eval(config, benchmark_file, mode);
        if (analyze->parsed()) return cmd_analyze(config, mode, benchmark_file);
        if (similarity->parsed())
            return cmd_similarity(config, training_file, test_file, benchmark_file);
        if (exp->parsed()) return cmd_export(config, kind);
    } catch (const tmr::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const tmr::ScriptMiss& e) {
        std::cerr << "backend failure: " << e.what() << '\n';
        return kExitBackend;
    } catch (const tmr::TransportError& e) {
        std::cerr << "backend failure: " << e.what() << '\n';
        return kExitBackend;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitConfig;
}
