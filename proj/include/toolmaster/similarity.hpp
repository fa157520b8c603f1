#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "toolmaster/agent.hpp"
#include "toolmaster/llm_io.hpp"
#include "toolmaster/toolenv.hpp"

namespace toolmaster {

enum class SimGroup { Low, Medium, High };
const char* sim_group_name(SimGroup g);

enum class Familiarity { Familiar, Unfamiliar, Other };
const char* familiarity_name(Familiarity f);

struct GroupThresholds {
    double t_low_med = 0.65;
    double t_med_high = 0.80;

    bool valid() const { return -1.0 < t_low_med && t_low_med < t_med_high && t_med_high < 1.0; }
};

/// Deterministic doc rendering: name, description, then params in
/// declaration order.
std::string canonical_doc_text(const ToolDoc& doc);

/// Embedding cache keyed by canonical doc text. Vectors are stored
/// normalized.
class EmbeddingCache {
public:
    explicit EmbeddingCache(EmbeddingBackend& backend) : backend_(&backend) {}

    const std::vector<double>& vector_for(const std::string& canonical_text);

    void load(const std::string& path);
    void save(const std::string& path) const;
    size_t size() const { return cache_.size(); }

private:
    EmbeddingBackend* backend_;
    std::map<std::string, std::vector<double>> cache_;
};

double dot(const std::vector<double>& a, const std::vector<double>& b);

/// Dot product of the two normalized doc embeddings.
double similarity(const ToolDoc& a, const ToolDoc& b, EmbeddingCache& cache);

double max_similarity_to_training(const ToolDoc& tool, const std::vector<ToolDoc>& training_docs,
                                  EmbeddingCache& cache);

/// Low if score < t_low_med; Medium if t_low_med <= score < t_med_high;
/// High otherwise.
SimGroup assign_group(double score, const GroupThresholds& thresholds);

/// Tertile alternative to fixed thresholds: sorted scores split into three
/// groups whose sizes differ by at most one.
std::vector<SimGroup> assign_groups_tertile(const std::vector<double>& scores);

/// Unfamiliar if any gold tool is Low; Familiar if all are High; Other
/// otherwise. Depends only on the multiset of groups.
Familiarity classify_query_familiarity(const std::vector<SimGroup>& gold_tool_groups);

struct GroupAggregate {
    int attempts = 0;
    int successes = 0;
    double success_rate() const { return attempts == 0 ? 0.0 : static_cast<double>(successes) / attempts; }
    double frequency = 0.0;  // share of all calls landing in this group
};

/// Per-group success rate (observation status ok over attempts) and call
/// frequency, over all tool calls whose tool has a group assignment.
std::map<SimGroup, GroupAggregate> group_aggregates(
    const std::vector<Trajectory>& trajectories, const std::map<std::string, SimGroup>& tool_groups);

struct ToolSimilarityRow {
    std::string tool;
    double max_score = 0.0;
    SimGroup group = SimGroup::Low;
};

struct SimilarityReport {
    std::vector<ToolSimilarityRow> tools;
    std::map<SimGroup, GroupAggregate> aggregates;
    std::map<std::string, Familiarity> query_familiarity;  // query id -> class
};

json similarity_report_to_json(const SimilarityReport& report);

}  // namespace toolmaster
