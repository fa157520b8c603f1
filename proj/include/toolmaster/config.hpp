#pragma once

#include <memory>
#include <string>

#include "toolmaster/agent.hpp"
#include "toolmaster/llm_io.hpp"
#include "toolmaster/rewards.hpp"
#include "toolmaster/similarity.hpp"

namespace toolmaster {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BackendDescriptor {
    std::string kind = "scripted";  // scripted | http
    std::string script_path;        // scripted
    HttpEndpoint endpoint;          // http; key_env names the env var, value never stored
};

struct PipelineConfig {
    BackendDescriptor policy;
    BackendDescriptor teacher;
    BackendDescriptor judge;
    BackendDescriptor filter_judge;
    BackendDescriptor embedding;

    RolloutConfig rollout;
    GroupThresholds thresholds;
    bool tertile_mode = false;

    std::string registry_path;
    std::string store_dir;

    int max_concurrency = 4;
    int query_cap = 0;  // 0 = unlimited
    unsigned seed = 0;

    int group_size = 4;
    double kl_beta = 0.002;
    double advantage_epsilon = 1e-6;

    // Trainer-export metadata only; this artifact performs no training.
    double sft_learning_rate = 1e-5;
    double rl_learning_rate = 1e-6;

    /// Loads and validates: referenced files must exist; the store
    /// directory is created if missing. Throws ConfigError.
    static PipelineConfig load(const std::string& path);
};

std::unique_ptr<ChatBackend> make_chat_backend(const BackendDescriptor& descriptor);
std::unique_ptr<EmbeddingBackend> make_embedding_backend(const BackendDescriptor& descriptor);

}  // namespace toolmaster
