#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "toolmaster/protocol.hpp"

namespace toolmaster {

enum class ParamKind { String, Integer, Number, Boolean, Array, Object };

const char* param_kind_name(ParamKind k);
std::optional<ParamKind> param_kind_from_name(const std::string& name);

struct ParamSpec {
    std::string name;
    ParamKind kind = ParamKind::String;
    bool required = false;
    std::optional<std::vector<json>> enum_values;
    std::optional<json> default_value;
};

struct ToolDoc {
    std::string name;
    std::string description;
    std::vector<ParamSpec> params;
};

enum class ObsStatus { Ok, ToolError, NotFound, SchemaError };

const char* obs_status_name(ObsStatus s);
std::optional<ObsStatus> obs_status_from_name(const std::string& name);

struct Observation {
    std::string text;
    ObsStatus status = ObsStatus::Ok;
    std::chrono::milliseconds elapsed{0};
    bool transport_failure = false;

    bool ok() const { return status == ObsStatus::Ok; }
};

enum class SchemaViolationKind { UnknownArgument, MissingRequired, KindMismatch, EnumViolation };

struct SchemaViolation {
    SchemaViolationKind kind;
    std::string param;
    std::string message;  // rendered, byte-stable under a fixed template
};

/// Deterministic function over argument maps. Throwing signals a tool
/// error; the message becomes the observation text.
using MockFn = std::function<std::string(const json& arguments)>;

struct HttpBinding {
    std::string url;
    std::chrono::milliseconds timeout{30000};
    int retries = 2;
};

struct ToolBackend {
    enum class Kind { Mock, Http } kind = Kind::Mock;
    MockFn mock;
    HttpBinding http;

    static ToolBackend make_mock(MockFn fn) {
        ToolBackend b;
        b.kind = Kind::Mock;
        b.mock = std::move(fn);
        return b;
    }
    static ToolBackend make_http(HttpBinding binding) {
        ToolBackend b;
        b.kind = Kind::Http;
        b.http = std::move(binding);
        return b;
    }
};

struct EnvConfig {
    // Default templates reproduce the error strings observed in recorded
    // traces, including the original "occured" spelling.
    std::string error_template = "an error occured when call {tool}: {detail}";
    size_t observation_cap = 4096;
    std::string truncation_marker = "...[truncated]";
};

class ToolEnvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The tool registry plus execution. Immutable after construction-time
/// registration; execute() never mutates state and may run concurrently.
class ToolRegistry {
public:
    explicit ToolRegistry(EnvConfig config = {}) : config_(std::move(config)) {}

    /// Throws ToolEnvError (DuplicateTool) if doc.name is already present.
    void register_tool(ToolDoc doc, ToolBackend backend);

    bool has(const std::string& name) const { return entries_.count(name) > 0; }
    const ToolDoc* lookup(const std::string& name) const;
    size_t size() const { return entries_.size(); }
    std::vector<const ToolDoc*> docs() const;

    Observation execute(const ToolCall& call) const;

    const EnvConfig& config() const { return config_; }

private:
    struct Entry {
        ToolDoc doc;
        ToolBackend backend;
    };
    std::map<std::string, Entry> entries_;
    EnvConfig config_;
};

/// Schema validation of a call against its doc: required params present,
/// no unknown argument names, kinds match, enum membership holds.
std::vector<SchemaViolation> validate_call(const ToolCall& call, const ToolDoc& doc,
                                           const EnvConfig& config = {});

/// Builtin mock library sufficient for the bundled fixtures: string ops,
/// arithmetic, and lookup tables.
namespace builtins {
MockFn extract_first_name();
MockFn extract_first_letter();
MockFn count_letters();
MockFn arithmetic_calculator();
MockFn constant(std::string text);
MockFn echo();
/// Lookup table keyed by the values of key_args joined with '\x1f'.
MockFn lookup_table(std::map<std::string, std::string> table, std::vector<std::string> key_args,
                    std::string miss_template);
std::optional<MockFn> by_name(const std::string& id, const json& binding);
}  // namespace builtins

/// Registry file loader. One document per tool:
///   {"name":..., "description":..., "params":[{"name","kind","required","enum","default"}],
///    "binding": {"kind":"mock","builtin":...} | {"kind":"http","url":...,"timeout_ms":...,"retries":...}}
ToolRegistry load_registry_file(const std::string& path, EnvConfig config = {});
ToolRegistry load_registry_json(const json& docs, EnvConfig config = {});
json tool_doc_to_json(const ToolDoc& doc);
ToolDoc tool_doc_from_json(const json& j);

}  // namespace toolmaster
