#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "toolmaster/rewards.hpp"

using namespace toolmaster;

namespace {

struct DownBackend : ChatBackend {
    std::string complete_raw(const std::vector<ChatMessage>&, const GenerationConfig&) override {
        throw TransportError("endpoint unreachable");
    }
};

}  // namespace

TEST_CASE("correctness reward follows the judge") {
    ToolRegistry registry = fixtures::make_registry();
    Trajectory t = fixtures::run_correct(registry);

    ScriptedBackend pass = fixtures::sequential_backend({fixtures::kJudgePass});
    std::string rationale;
    CHECK(correctness_reward(t.query, t, *t.answer, pass, &rationale) == 1);
    CHECK(rationale == "The execution chain supports the final answer.");

    ScriptedBackend fail = fixtures::sequential_backend({fixtures::kJudgeFail});
    CHECK(correctness_reward(t.query, t, *t.answer, fail) == 0);

    // Unsure scores 0: only a confident Pass earns the reward.
    ScriptedBackend unsure = fixtures::sequential_backend({fixtures::kJudgeUnsure});
    CHECK(correctness_reward(t.query, t, *t.answer, unsure) == 0);

    DownBackend down;
    CHECK(!correctness_reward(t.query, t, *t.answer, down).has_value());
}

TEST_CASE("total reward composition") {
    ToolRegistry registry = fixtures::make_registry();
    Trajectory correct = fixtures::run_correct(registry);
    Trajectory failed = fixtures::run_failed(registry);

    ScriptedBackend pass = fixtures::sequential_backend({fixtures::kJudgePass});
    RewardRecord r = total_reward("t1", correct, pass);
    CHECK(r.r_fmt == 1);
    CHECK(r.r_corr == 1);
    CHECK(r.total == 2);
    CHECK(!r.pending);

    // The failed baseline is format-clean but fails the judge: total 1.
    ScriptedBackend fail = fixtures::sequential_backend({fixtures::kJudgeFail});
    r = total_reward("t2", failed, fail);
    CHECK(r.r_fmt == 1);
    CHECK(r.r_corr == 0);
    CHECK(r.total == 1);

    DownBackend down;
    r = total_reward("t3", correct, down);
    CHECK(r.pending);
    CHECK(r.total == 0);  // placeholder, not a judged zero
}

TEST_CASE("group advantages: hand-checked cases") {
    GrpoGroup group;
    group.query_id = "q";
    group.members = {{"a", 2}, {"b", 1}, {"c", 1}, {"d", 0}};
    auto adv = group_advantages(group);
    REQUIRE(adv.size() == 4);
    // mean 1, population std sqrt(1/2)
    double sd = std::sqrt(0.5);
    CHECK(adv[0] == doctest::Approx(1.0 / (sd + 1e-6)).epsilon(1e-12));
    CHECK(adv[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(adv[3] == doctest::Approx(-1.0 / (sd + 1e-6)).epsilon(1e-12));

    GrpoGroup degenerate;
    degenerate.members = {{"a", 2}, {"b", 2}, {"c", 2}, {"d", 2}};
    adv = group_advantages(degenerate);
    for (double a : adv) CHECK(a == 0.0);

    GrpoGroup tiny;
    tiny.members = {{"a", 1}};
    CHECK_THROWS_AS(group_advantages(tiny), std::invalid_argument);
}

TEST_CASE("group advantages match a brute-force oracle on 1000 random groups") {
    std::mt19937 rng(424242);
    std::uniform_int_distribution<int> reward(0, 2);
    std::uniform_int_distribution<int> size(2, 8);
    for (int trial = 0; trial < 1000; ++trial) {
        GrpoGroup group;
        int n = size(rng);
        for (int i = 0; i < n; ++i)
            group.members.emplace_back("m" + std::to_string(i), reward(rng));

        auto got = group_advantages(group);

        // Oracle: direct recomputation from the definition.
        double mean = 0;
        for (auto& [_, r] : group.members) mean += r;
        mean /= n;
        double var = 0;
        for (auto& [_, r] : group.members) var += (r - mean) * (r - mean);
        var /= n;
        double sd = std::sqrt(var);
        for (int i = 0; i < n; ++i) {
            double expected =
                sd == 0.0 ? 0.0 : (group.members[i].second - mean) / (sd + 1e-6);
            CHECK(std::abs(got[i] - expected) < 1e-9);
        }
        // Advantages of a non-degenerate group sum to ~0.
        double sum = 0;
        for (double a : got) sum += a;
        CHECK(std::abs(sum) < 1e-9);
    }
}

TEST_CASE("GRPO export: validation and file shape") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "tm_grpo_test";
    fs::create_directories(dir);
    std::string path = (dir / "g.jsonl").string();

    GrpoExportEntry entry;
    entry.group.query_id = "q1";
    entry.group.members = {{"a", 2}, {"b", 1}, {"c", 0}, {"d", 1}};
    entry.transcripts = {"ta", "tb", "tc", "td"};
    export_grpo({entry}, path);

    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    json record = json::parse(line);
    CHECK(record.at("query_id") == "q1");
    CHECK(record.at("group_size") == 4);
    CHECK(record.at("kl_beta") == doctest::Approx(0.002));
    REQUIRE(record.at("members").size() == 4);
    double sum = 0;
    for (const json& m : record.at("members")) sum += m.at("advantage").get<double>();
    CHECK(std::abs(sum) < 1e-9);
    CHECK(record.at("members")[0].at("transcript") == "ta");

    GrpoExportEntry partial = entry;
    partial.group.members.pop_back();
    partial.transcripts.pop_back();
    CHECK_THROWS_AS(export_grpo({partial}, path), std::invalid_argument);

    GrpoExportEntry mismatched = entry;
    mismatched.transcripts.pop_back();
    CHECK_THROWS_AS(export_grpo({mismatched}, path), std::invalid_argument);
    fs::remove_all(dir);
}
