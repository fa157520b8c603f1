#include "toolmaster/config.hpp"

#include <filesystem>
#include <fstream>

namespace toolmaster {
namespace {

namespace fs = std::filesystem;

BackendDescriptor parse_backend(const json& j, const std::string& name) {
    BackendDescriptor d;
    d.kind = j.value("kind", "scripted");
    if (d.kind == "scripted") {
        if (!j.contains("script_path"))
            throw ConfigError("backend '" + name + "': scripted kind requires script_path");
        d.script_path = j.at("script_path").get<std::string>();
    } else if (d.kind == "http") {
        if (!j.contains("base_url") || !j.contains("model"))
            throw ConfigError("backend '" + name + "': http kind requires base_url and model");
        d.endpoint.base_url = j.at("base_url").get<std::string>();
        d.endpoint.model = j.at("model").get<std::string>();
        d.endpoint.key_env = j.value("key_env", "");
        d.endpoint.max_attempts = j.value("max_attempts", 3);
        d.endpoint.timeout_seconds = j.value("timeout_seconds", 60);
        d.endpoint.jitter_seed = j.value("jitter_seed", 0u);
        // API keys come from the environment only; reject inline secrets.
        if (j.contains("api_key") || j.contains("key") || j.contains("token"))
            throw ConfigError("backend '" + name +
                              "': API keys must come from the environment (key_env), never the "
                              "config file");
    } else {
        throw ConfigError("backend '" + name + "': unknown kind '" + d.kind + "'");
    }
    return d;
}

void require_file(const std::string& path, const std::string& what) {
    if (!fs::is_regular_file(path))
        throw ConfigError(what + " does not exist: " + path);
}

}  // namespace

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        j = nlohmann::ordered_json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config parse error: " + std::string(e.what()));
    }

    PipelineConfig c;
    try {
        for (auto& [field, dest] : std::initializer_list<std::pair<const char*, BackendDescriptor*>>{
                 {"policy", &c.policy},
                 {"teacher", &c.teacher},
                 {"judge", &c.judge},
                 {"filter_judge", &c.filter_judge},
                 {"embedding", &c.embedding}})
            if (j.contains(field)) *dest = parse_backend(j.at(field), field);

        if (j.contains("rollout")) {
            const json& r = j.at("rollout");
            c.rollout.max_trial_steps = r.value("max_trial_steps", c.rollout.max_trial_steps);
            c.rollout.max_total_steps = r.value("max_total_steps", c.rollout.max_total_steps);
            c.rollout.two_stage = r.value("two_stage", c.rollout.two_stage);
            c.rollout.context_budget_tokens =
                r.value("context_budget_tokens", c.rollout.context_budget_tokens);
            c.rollout.chars_per_token = r.value("chars_per_token", c.rollout.chars_per_token);
            c.rollout.generation.temperature =
                r.value("temperature", c.rollout.generation.temperature);
            c.rollout.generation.max_tokens = r.value("max_tokens", c.rollout.generation.max_tokens);
        }

        if (j.contains("thresholds")) {
            const json& t = j.at("thresholds");
            c.thresholds.t_low_med = t.value("low_medium", c.thresholds.t_low_med);
            c.thresholds.t_med_high = t.value("medium_high", c.thresholds.t_med_high);
        }
        c.tertile_mode = j.value("tertile_mode", c.tertile_mode);

        c.registry_path = j.value("registry_path", "");
        c.store_dir = j.value("store_dir", "store");

        c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
        c.query_cap = j.value("query_cap", c.query_cap);
        c.seed = j.value("seed", c.seed);

        c.group_size = j.value("group_size", c.group_size);
        c.kl_beta = j.value("kl_beta", c.kl_beta);
        c.advantage_epsilon = j.value("advantage_epsilon", c.advantage_epsilon);
        c.sft_learning_rate = j.value("sft_learning_rate", c.sft_learning_rate);
        c.rl_learning_rate = j.value("rl_learning_rate", c.rl_learning_rate);
    } catch (const json::exception& e) {
        throw ConfigError("config field error: " + std::string(e.what()));
    }

    if (c.registry_path.empty()) throw ConfigError("registry_path is required");
    if (!c.thresholds.valid()) throw ConfigError("invalid similarity thresholds");
    if (c.max_concurrency < 1) throw ConfigError("max_concurrency must be >= 1");
    if (c.group_size < 2) throw ConfigError("group_size must be >= 2");

    // Paths in the config are resolved relative to the config file.
    fs::path base = fs::path(path).parent_path();
    auto resolve = [&](std::string& p) {
        if (!p.empty() && fs::path(p).is_relative()) p = (base / p).string();
    };
    resolve(c.registry_path);
    resolve(c.store_dir);
    for (BackendDescriptor* d : {&c.policy, &c.teacher, &c.judge, &c.filter_judge, &c.embedding})
        resolve(d->script_path);

    require_file(c.registry_path, "registry file");
    for (const auto& [name, d] :
         std::initializer_list<std::pair<const char*, const BackendDescriptor*>>{
             {"policy", &c.policy},
             {"teacher", &c.teacher},
             {"judge", &c.judge},
             {"filter_judge", &c.filter_judge},
             {"embedding", &c.embedding}})
        if (d->kind == "scripted" && !d->script_path.empty())
            require_file(d->script_path, std::string("backend '") + name + "' script");

    std::error_code ec;
    fs::create_directories(c.store_dir, ec);
    if (ec) throw ConfigError("cannot create store directory: " + c.store_dir);

    return c;
}

std::unique_ptr<ChatBackend> make_chat_backend(const BackendDescriptor& descriptor) {
    if (descriptor.kind == "scripted") {
        if (descriptor.script_path.empty())
            throw ConfigError("scripted chat backend has no script file");
        return std::make_unique<ScriptedBackend>(ScriptedBackend::load_entries(descriptor.script_path));
    }
    if (descriptor.kind == "http") return std::make_unique<HttpChatBackend>(descriptor.endpoint);
    throw ConfigError("unknown chat backend kind: " + descriptor.kind);
}

std::unique_ptr<EmbeddingBackend> make_embedding_backend(const BackendDescriptor& descriptor) {
    if (descriptor.kind == "scripted") {
        // "Scripted" embeddings are fixed vectors loaded from a JSON map.
        auto stub = std::make_unique<StubEmbeddingBackend>(8, true);
        if (!descriptor.script_path.empty()) {
            std::ifstream in(descriptor.script_path);
            if (!in) throw ConfigError("cannot open embedding script: " + descriptor.script_path);
            json data = json::parse(in);
            for (auto it = data.begin(); it != data.end(); ++it)
                stub->set(it.key(), it.value().get<std::vector<double>>());
        }
        return stub;
    }
    if (descriptor.kind == "http")
        return std::make_unique<HttpEmbeddingBackend>(descriptor.endpoint);
    throw ConfigError("unknown embedding backend kind: " + descriptor.kind);
}

}  // namespace toolmaster
