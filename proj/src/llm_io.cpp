#include "toolmaster/llm_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>

namespace toolmaster {
namespace {

std::string lowered(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

uint64_t fnv1a(const std::string& data, uint64_t seed = 1469598103934665603ull) {
    uint64_t hash = seed;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

struct UrlParts {
    std::string base;
    std::string path_prefix;
};

UrlParts split_base_url(const std::string& url) {
    size_t scheme_end = url.find("://");
    size_t path_start = scheme_end == std::string::npos ? url.find('/')
                                                        : url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, ""};
    return {url.substr(0, path_start), url.substr(path_start)};
}

json http_post_json(const HttpEndpoint& endpoint, const std::string& route, const json& body) {
    UrlParts url = split_base_url(endpoint.base_url);
    httplib::Headers headers;
    if (!endpoint.key_env.empty()) {
        const char* key = std::getenv(endpoint.key_env.c_str());
        if (key && *key) headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    std::mt19937 rng(endpoint.jitter_seed);
    std::uniform_int_distribution<int> jitter(0, 250);
    std::string last_error = "transport failure";
    for (int attempt = 0; attempt < std::max(1, endpoint.max_attempts); ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds((250 << (attempt - 1)) + jitter(rng)));
        httplib::Client client(url.base);
        client.set_connection_timeout(endpoint.timeout_seconds);
        client.set_read_timeout(endpoint.timeout_seconds);
        auto res = client.Post(url.path_prefix + route, headers, body.dump(), "application/json");
        if (res && res->status >= 200 && res->status < 300) {
            json parsed = json::parse(res->body, nullptr, false);
            if (!parsed.is_discarded()) return parsed;
            last_error = "invalid JSON response body";
        } else if (res) {
            last_error = "HTTP status " + std::to_string(res->status);
        } else {
            last_error = "transport failure: " + httplib::to_string(res.error());
        }
    }
    throw TransportError(last_error);
}

}  // namespace

const char* role_name(Role r) {
    switch (r) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
        case Role::Tool: return "tool";
    }
    return "user";
}

std::optional<Role> role_from_name(const std::string& name) {
    for (Role r : {Role::System, Role::User, Role::Assistant, Role::Tool})
        if (name == role_name(r)) return r;
    return std::nullopt;
}

std::string wrap_tool_response(const std::string& observation_text) {
    return "<tool_response>" + observation_text + "</tool_response>";
}

std::string request_fingerprint(const std::vector<ChatMessage>& messages,
                                const GenerationConfig& config) {
    std::ostringstream buf;
    for (const ChatMessage& m : messages)
        buf << role_name(m.role) << '\x1e' << m.content << '\x1e';
    buf << "temperature=" << config.temperature << ";max_tokens=" << config.max_tokens;
    std::ostringstream hex;
    hex << std::hex << fnv1a(buf.str());
    return hex.str();
}

std::string complete(ChatBackend& backend, const std::vector<ChatMessage>& messages,
                     const GenerationConfig& config) {
    if (messages.empty()) throw std::invalid_argument("complete: empty message list");
    if (messages.front().role != Role::System)
        throw std::invalid_argument("complete: first message must be system");
    return backend.complete_raw(messages, config);
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptEntry> entries) : entries_(std::move(entries)) {
    consumed_.assign(entries_.size(), false);
    sequential_ = std::any_of(entries_.begin(), entries_.end(),
                              [](const ScriptEntry& e) { return e.fingerprint == "*"; });
}

void ScriptedBackend::add(const std::vector<ChatMessage>& messages, const GenerationConfig& config,
                          std::string response) {
    entries_.push_back({request_fingerprint(messages, config), std::move(response)});
    consumed_.push_back(false);
}

void ScriptedBackend::add_next(std::string response) {
    entries_.push_back({"*", std::move(response)});
    consumed_.push_back(false);
    sequential_ = true;
}

std::string ScriptedBackend::complete_raw(const std::vector<ChatMessage>& messages,
                                          const GenerationConfig& config) {
    std::lock_guard<std::mutex> lock(mutex_);
    std::string fp = request_fingerprint(messages, config);
    if (sequential_) {
        if (cursor_ >= entries_.size())
            throw ScriptMiss("script exhausted at request " + fp);
        const ScriptEntry& entry = entries_[cursor_];
        if (entry.fingerprint != "*" && entry.fingerprint != fp)
            throw ScriptMiss("script order mismatch: expected " + entry.fingerprint + ", got " + fp);
        ++cursor_;
        return entry.response;
    }
    const ScriptEntry* fallback = nullptr;
    for (size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].fingerprint != fp) continue;
        if (!consumed_[i]) {
            consumed_[i] = true;
            return entries_[i].response;
        }
        fallback = &entries_[i];
    }
    if (fallback) return fallback->response;  // repeat requests replay
    throw ScriptMiss("no scripted entry for request " + fp);
}

std::vector<ScriptEntry> ScriptedBackend::load_entries(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScriptMiss("cannot open script file: " + path);
    json data = json::parse(in);
    std::vector<ScriptEntry> entries;
    for (const json& e : data)
        entries.push_back({e.at("fingerprint").get<std::string>(), e.at("response").get<std::string>()});
    return entries;
}

ScriptedBackend ScriptedBackend::from_file(const std::string& path) {
    return ScriptedBackend(load_entries(path));
}

void ScriptedBackend::save(const std::string& path) const {
    json data = json::array();
    for (const ScriptEntry& e : entries_)
        data.push_back({{"fingerprint", e.fingerprint}, {"response", e.response}});
    std::ofstream out(path);
    out << data.dump(2) << '\n';
}

std::vector<std::vector<double>> embed(EmbeddingBackend& backend,
                                       const std::vector<std::string>& texts) {
    if (texts.empty()) throw std::invalid_argument("embed: empty text list");
    auto vectors = backend.embed_raw(texts);
    if (vectors.size() != texts.size())
        throw DimensionMismatch("embedding backend returned wrong batch size");
    size_t dim = vectors.empty() ? 0 : vectors.front().size();
    for (auto& v : vectors) {
        if (v.size() != dim || v.empty())
            throw DimensionMismatch("embedding backend returned ragged vectors");
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) throw DimensionMismatch("embedding backend returned a zero vector");
        for (double& x : v) x /= norm;
    }
    return vectors;
}

void StubEmbeddingBackend::set(const std::string& text, std::vector<double> vector) {
    fixed_[text] = std::move(vector);
}

std::vector<std::vector<double>> StubEmbeddingBackend::embed_raw(const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out;
    size_t dim = fixed_.empty() ? dimension_ : fixed_.begin()->second.size();
    for (const std::string& text : texts) {
        auto it = fixed_.find(text);
        if (it != fixed_.end()) {
            out.push_back(it->second);
            continue;
        }
        if (!hash_fallback_) throw TransportError("stub embedding: no vector for text");
        std::mt19937_64 rng(fnv1a(text));
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<double> v(dim);
        for (double& x : v) x = gauss(rng);
        out.push_back(std::move(v));
    }
    return out;
}

std::string HttpChatBackend::complete_raw(const std::vector<ChatMessage>& messages,
                                          const GenerationConfig& config) {
    json body;
    body["model"] = endpoint_.model;
    body["messages"] = json::array();
    for (const ChatMessage& m : messages)
        body["messages"].push_back({{"role", role_name(m.role)}, {"content", m.content}});
    body["temperature"] = config.temperature;
    body["max_tokens"] = config.max_tokens;
    json reply = http_post_json(endpoint_, "/chat/completions", body);
    try {
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        throw TransportError("malformed chat-completions response");
    }
}

std::vector<std::vector<double>> HttpEmbeddingBackend::embed_raw(const std::vector<std::string>& texts) {
    json body;
    body["model"] = endpoint_.model;
    body["input"] = texts;
    json reply = http_post_json(endpoint_, "/embeddings", body);
    std::vector<std::vector<double>> out;
    try {
        for (const json& item : reply.at("data"))
            out.push_back(item.at("embedding").get<std::vector<double>>());
    } catch (const json::exception&) {
        throw TransportError("malformed embeddings response");
    }
    return out;
}

const char* pass_status_name(PassStatus s) {
    switch (s) {
        case PassStatus::Pass: return "Pass";
        case PassStatus::Fail: return "Fail";
        case PassStatus::Unsure: return "Unsure";
    }
    return "Unsure";
}

const char* error_class_name(ErrorClass c) {
    switch (c) {
        case ErrorClass::I: return "I";
        case ErrorClass::II: return "II";
        case ErrorClass::III: return "III";
        case ErrorClass::Unclassified: return "Unclassified";
    }
    return "Unclassified";
}

std::optional<json> last_json_object(const std::string& text) {
    std::optional<json> found;
    for (size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '{') continue;
        int depth = 0;
        bool in_string = false;
        for (size_t j = i; j < text.size(); ++j) {
            char c = text[j];
            if (in_string) {
                if (c == '\\') ++j;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}') {
                if (--depth == 0) {
                    json parsed = json::parse(text.substr(i, j - i + 1), nullptr, false);
                    if (!parsed.is_discarded() && parsed.is_object()) {
                        found = parsed;
                        i = j;  // a parsed object is opaque; keep scanning after it
                    }
                    break;
                }
            }
        }
    }
    return found;
}

JudgeVerdict judge_passrate(ChatBackend& backend, const std::string& query,
                            const std::string& final_answer, const std::string& execution_chain,
                            const GenerationConfig& config) {
    std::vector<ChatMessage> messages = {
        {Role::System, prompts::passrate_prompt()},
        {Role::User, prompts::passrate_input(query, final_answer, execution_chain)},
    };
    std::string reply = complete(backend, messages, config);
    auto obj = last_json_object(reply);
    JudgeVerdict verdict;
    if (!obj || !obj->contains("answer_status") || !(*obj)["answer_status"].is_string()) {
        verdict.status = PassStatus::Unsure;
        verdict.rationale = "unparseable";
        return verdict;
    }
    std::string status = (*obj)["answer_status"].get<std::string>();
    if (status == "Pass") verdict.status = PassStatus::Pass;
    else if (status == "Fail") verdict.status = PassStatus::Fail;
    else verdict.status = PassStatus::Unsure;
    verdict.rationale = obj->value("content", "");
    return verdict;
}

FilterResult judge_filter(ChatBackend& backend, const std::string& transcript,
                          const GenerationConfig& config) {
    std::vector<ChatMessage> messages = {
        {Role::System, prompts::trajectory_filter_prompt()},
        {Role::User, transcript},
    };
    std::string reply = complete(backend, messages, config);
    FilterResult result;
    result.analysis = reply;

    std::string low = lowered(reply);
    size_t pos = low.rfind("result");
    if (pos != std::string::npos) {
        size_t cursor = pos + 6;
        while (cursor < low.size() && (low[cursor] == ':' || std::isspace(static_cast<unsigned char>(low[cursor])) ||
                                       low[cursor] == '*'))
            ++cursor;
        result.keep = low.compare(cursor, 4, "true") == 0;
        return result;
    }
    // No Result token: accept a reply that is just the verdict word.
    std::string trimmed = low;
    trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
    trimmed.erase(trimmed.find_last_not_of(" \t\r\n.") + 1);
    if (trimmed == "true") {
        result.keep = true;
    } else {
        result.keep = false;
        if (trimmed != "false") result.analysis = "unparseable: " + reply;
    }
    return result;
}

ErrorClass judge_error_type(ChatBackend& backend, const std::string& question,
                            const std::string& ground_truth, const std::string& response,
                            const GenerationConfig& config) {
    std::vector<ChatMessage> messages = {
        {Role::System, prompts::error_judge_prompt(question, ground_truth, response)},
        {Role::User, "Classify the trajectory."},
    };
    std::string reply = complete(backend, messages, config);
    auto obj = last_json_object(reply);
    if (!obj || !obj->contains("category_code") || !(*obj)["category_code"].is_string())
        return ErrorClass::Unclassified;
    std::string code = (*obj)["category_code"].get<std::string>();
    if (code == "I") return ErrorClass::I;
    if (code == "II") return ErrorClass::II;
    if (code == "III") return ErrorClass::III;
    return ErrorClass::Unclassified;
}

}  // namespace toolmaster
