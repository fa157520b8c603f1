#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "toolmaster/toolenv.hpp"

namespace toolmaster {

enum class Role { System, User, Assistant, Tool };

const char* role_name(Role r);
std::optional<Role> role_from_name(const std::string& name);

struct ChatMessage {
    Role role = Role::User;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

/// Wraps observation text as a tool-role message body.
std::string wrap_tool_response(const std::string& observation_text);

struct GenerationConfig {
    double temperature = 0.1;
    int max_tokens = 8192;
};

class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a scripted backend has no entry for a request. Always a
/// test bug; never silently improvised.
class ScriptMiss : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string complete_raw(const std::vector<ChatMessage>& messages,
                                     const GenerationConfig& config) = 0;
};

/// Precondition-checked completion: messages non-empty, first is system.
std::string complete(ChatBackend& backend, const std::vector<ChatMessage>& messages,
                     const GenerationConfig& config);

/// Stable request fingerprint over message roles, contents, and config.
std::string request_fingerprint(const std::vector<ChatMessage>& messages,
                                const GenerationConfig& config);

struct ScriptEntry {
    std::string fingerprint;  // "*" matches any request, consumed in order
    std::string response;
};

/// Deterministic replay backend. Two flavors share one file format:
/// fingerprint-keyed scripts answer by request fingerprint (repeat
/// requests replay the last matching entry); scripts containing any "*"
/// entry are consumed strictly in order.
class ScriptedBackend : public ChatBackend {
public:
    ScriptedBackend() = default;
    explicit ScriptedBackend(std::vector<ScriptEntry> entries);

    void add(const std::vector<ChatMessage>& messages, const GenerationConfig& config,
             std::string response);
    void add_next(std::string response);  // "*" entry

    std::string complete_raw(const std::vector<ChatMessage>& messages,
                             const GenerationConfig& config) override;

    static std::vector<ScriptEntry> load_entries(const std::string& path);
    static ScriptedBackend from_file(const std::string& path);
    void save(const std::string& path) const;

private:
    std::vector<ScriptEntry> entries_;
    std::vector<bool> consumed_;
    size_t cursor_ = 0;
    bool sequential_ = false;
    mutable std::mutex mutex_;
};

class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    virtual std::vector<std::vector<double>> embed_raw(const std::vector<std::string>& texts) = 0;
};

/// One vector per text, all the same dimension, L2-normalized on receipt
/// so dot product equals cosine similarity.
std::vector<std::vector<double>> embed(EmbeddingBackend& backend,
                                       const std::vector<std::string>& texts);

/// Test embedding backend: fixed vectors per text, with an optional
/// deterministic hash-derived fallback for texts not pinned explicitly.
class StubEmbeddingBackend : public EmbeddingBackend {
public:
    explicit StubEmbeddingBackend(size_t dimension = 8, bool hash_fallback = true)
        : dimension_(dimension), hash_fallback_(hash_fallback) {}

    void set(const std::string& text, std::vector<double> vector);

    std::vector<std::vector<double>> embed_raw(const std::vector<std::string>& texts) override;

private:
    size_t dimension_;
    bool hash_fallback_;
    std::map<std::string, std::vector<double>> fixed_;
};

struct HttpEndpoint {
    std::string base_url;   // e.g. https://api.example.com/v1
    std::string model;
    std::string key_env;    // env var holding the API key; value never stored
    int max_attempts = 3;
    int timeout_seconds = 60;
    unsigned jitter_seed = 0;
};

/// OpenAI-compatible chat-completions client.
class HttpChatBackend : public ChatBackend {
public:
    explicit HttpChatBackend(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
    std::string complete_raw(const std::vector<ChatMessage>& messages,
                             const GenerationConfig& config) override;

private:
    HttpEndpoint endpoint_;
};

class HttpEmbeddingBackend : public EmbeddingBackend {
public:
    explicit HttpEmbeddingBackend(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
    std::vector<std::vector<double>> embed_raw(const std::vector<std::string>& texts) override;

private:
    HttpEndpoint endpoint_;
};

enum class PassStatus { Pass, Fail, Unsure };
const char* pass_status_name(PassStatus s);

struct JudgeVerdict {
    PassStatus status = PassStatus::Unsure;
    std::string rationale;
};

enum class ErrorClass { I, II, III, Unclassified };
const char* error_class_name(ErrorClass c);

/// Locates the last well-formed JSON object embedded in free text.
std::optional<json> last_json_object(const std::string& text);

JudgeVerdict judge_passrate(ChatBackend& backend, const std::string& query,
                            const std::string& final_answer, const std::string& execution_chain,
                            const GenerationConfig& config = {0.0, 8192});

struct FilterResult {
    bool keep = false;
    std::string analysis;
};

FilterResult judge_filter(ChatBackend& backend, const std::string& transcript,
                          const GenerationConfig& config = {0.0, 8192});

ErrorClass judge_error_type(ChatBackend& backend, const std::string& question,
                            const std::string& ground_truth, const std::string& response,
                            const GenerationConfig& config = {0.0, 8192});

// --- Prompt catalog -------------------------------------------------------

namespace prompts {

std::string system_prompt(const std::string& tool_docs);
std::string data_synthesis_prompt(const std::string& tool_docs);
std::string trajectory_filter_prompt();
std::string passrate_prompt();
std::string passrate_input(const std::string& query, const std::string& final_answer,
                           const std::string& execution_chain);
std::string error_judge_prompt(const std::string& question, const std::string& ground_truth,
                               const std::string& response);

/// Default stage instructions for two-stage rollouts.
std::string trial_instruction();
std::string exec_instruction();

std::string render_tool_docs(const std::vector<const ToolDoc*>& docs);

/// Replaces {key} placeholders; returns the names of any that remain.
std::string render_template(std::string text, const std::map<std::string, std::string>& values);
std::vector<std::string> unresolved_placeholders(const std::string& text);

}  // namespace prompts

}  // namespace toolmaster
