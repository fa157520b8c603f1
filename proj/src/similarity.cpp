#include "toolmaster/similarity.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace toolmaster {

const char* sim_group_name(SimGroup g) {
    switch (g) {
        case SimGroup::Low: return "Low";
        case SimGroup::Medium: return "Medium";
        case SimGroup::High: return "High";
    }
    return "Low";
}

const char* familiarity_name(Familiarity f) {
    switch (f) {
        case Familiarity::Familiar: return "Familiar";
        case Familiarity::Unfamiliar: return "Unfamiliar";
        case Familiarity::Other: return "Other";
    }
    return "Other";
}

std::string canonical_doc_text(const ToolDoc& doc) {
    std::string out = "tool: " + doc.name + "\n";
    out += "description: " + doc.description + "\n";
    for (const ParamSpec& p : doc.params) {
        out += "param: " + p.name + " kind=" + param_kind_name(p.kind) +
               (p.required ? " required" : " optional");
        if (p.enum_values) out += " enum=" + canonical_json(json(*p.enum_values));
        out += "\n";
    }
    return out;
}

const std::vector<double>& EmbeddingCache::vector_for(const std::string& canonical_text) {
    auto it = cache_.find(canonical_text);
    if (it != cache_.end()) return it->second;
    auto vectors = embed(*backend_, {canonical_text});
    return cache_.emplace(canonical_text, std::move(vectors.front())).first->second;
}

void EmbeddingCache::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) return;  // missing cache file is an empty cache
    json data = json::parse(in);
    for (auto it = data.begin(); it != data.end(); ++it)
        cache_[it.key()] = it.value().get<std::vector<double>>();
}

void EmbeddingCache::save(const std::string& path) const {
    json data = json::object();
    for (const auto& [text, vector] : cache_) data[text] = vector;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open embedding cache file: " + path);
    out << data.dump() << '\n';
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DimensionMismatch("dot: vector size mismatch");
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double similarity(const ToolDoc& a, const ToolDoc& b, EmbeddingCache& cache) {
    std::vector<double> va = cache.vector_for(canonical_doc_text(a));
    return dot(va, cache.vector_for(canonical_doc_text(b)));
}

double max_similarity_to_training(const ToolDoc& tool, const std::vector<ToolDoc>& training_docs,
                                  EmbeddingCache& cache) {
    if (training_docs.empty())
        throw std::invalid_argument("max_similarity_to_training: empty training set");
    double best = -1.0;
    for (const ToolDoc& doc : training_docs)
        best = std::max(best, similarity(tool, doc, cache));
    return best;
}

SimGroup assign_group(double score, const GroupThresholds& thresholds) {
    if (!thresholds.valid()) throw std::invalid_argument("assign_group: invalid thresholds");
    if (score < thresholds.t_low_med) return SimGroup::Low;
    if (score < thresholds.t_med_high) return SimGroup::Medium;
    return SimGroup::High;
}

std::vector<SimGroup> assign_groups_tertile(const std::vector<double>& scores) {
    size_t n = scores.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return scores[a] < scores[b]; });
    // Sizes differ by at most one; the remainder goes to the lower groups.
    size_t base = n / 3, extra = n % 3;
    size_t low_size = base + (extra > 0 ? 1 : 0);
    size_t med_size = base + (extra > 1 ? 1 : 0);
    std::vector<SimGroup> groups(n, SimGroup::High);
    for (size_t rank = 0; rank < n; ++rank) {
        SimGroup g = rank < low_size              ? SimGroup::Low
                     : rank < low_size + med_size ? SimGroup::Medium
                                                  : SimGroup::High;
        groups[order[rank]] = g;
    }
    return groups;
}

Familiarity classify_query_familiarity(const std::vector<SimGroup>& gold_tool_groups) {
    if (gold_tool_groups.empty())
        throw std::invalid_argument("classify_query_familiarity: no gold tool groups");
    bool any_low = std::any_of(gold_tool_groups.begin(), gold_tool_groups.end(),
                               [](SimGroup g) { return g == SimGroup::Low; });
    if (any_low) return Familiarity::Unfamiliar;
    bool all_high = std::all_of(gold_tool_groups.begin(), gold_tool_groups.end(),
                                [](SimGroup g) { return g == SimGroup::High; });
    return all_high ? Familiarity::Familiar : Familiarity::Other;
}

std::map<SimGroup, GroupAggregate> group_aggregates(
    const std::vector<Trajectory>& trajectories, const std::map<std::string, SimGroup>& tool_groups) {
    std::map<SimGroup, GroupAggregate> out;
    int total_calls = 0;
    for (const Trajectory& t : trajectories) {
        for (const Step& s : t.steps) {
            auto it = tool_groups.find(s.action.name);
            if (it == tool_groups.end()) continue;
            GroupAggregate& agg = out[it->second];
            ++agg.attempts;
            if (s.observation.ok()) ++agg.successes;
            ++total_calls;
        }
    }
    for (auto& [_, agg] : out)
        agg.frequency = total_calls == 0 ? 0.0 : static_cast<double>(agg.attempts) / total_calls;
    return out;
}

json similarity_report_to_json(const SimilarityReport& report) {
    json tools = json::array();
    for (const ToolSimilarityRow& row : report.tools)
        tools.push_back({{"tool", row.tool},
                         {"max_score", row.max_score},
                         {"group", sim_group_name(row.group)}});
    json groups = json::object();
    for (const auto& [group, agg] : report.aggregates)
        groups[sim_group_name(group)] = {{"attempts", agg.attempts},
                                         {"successes", agg.successes},
                                         {"success_rate", agg.success_rate()},
                                         {"frequency", agg.frequency}};
    json familiarity = json::object();
    for (const auto& [query, f] : report.query_familiarity)
        familiarity[query] = familiarity_name(f);
    return {{"tools", std::move(tools)},
            {"groups", std::move(groups)},
            {"query_familiarity", std::move(familiarity)}};
}

}  // namespace toolmaster
