#include "toolmaster/toolenv.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

namespace toolmaster {
namespace {

/// Thrown by mock functions whose message should reach the agent verbatim
/// (no error-template wrapping).
struct VerbatimToolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string replace_all(std::string text, const std::string& from, const std::string& to) {
    size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
    return text;
}

std::string render_error(const EnvConfig& config, const std::string& tool, const std::string& detail) {
    std::string out = replace_all(config.error_template, "{tool}", tool);
    return replace_all(out, "{detail}", detail);
}

bool kind_matches(ParamKind kind, const json& value) {
    switch (kind) {
        case ParamKind::String: return value.is_string();
        case ParamKind::Integer: return value.is_number_integer();
        case ParamKind::Number: return value.is_number();
        case ParamKind::Boolean: return value.is_boolean();
        case ParamKind::Array: return value.is_array();
        case ParamKind::Object: return value.is_object();
    }
    return false;
}

std::string python_repr(const json& value) {
    if (value.is_string()) return "'" + value.get<std::string>() + "'";
    return value.dump();
}

std::string enum_list_repr(const std::vector<json>& values) {
    std::string out = "[";
    for (size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        out += python_repr(values[i]);
    }
    return out + "]";
}

std::string value_as_text(const json& value) {
    if (value.is_string()) return value.get<std::string>();
    return canonical_json(value);
}

std::string truncate_observation(std::string text, const EnvConfig& config) {
    if (text.size() <= config.observation_cap) return text;
    text.resize(config.observation_cap);
    return text + config.truncation_marker;
}

struct ParsedUrl {
    std::string base;  // scheme://host[:port]
    std::string path;
};

ParsedUrl split_url(const std::string& url) {
    size_t scheme_end = url.find("://");
    size_t path_start = scheme_end == std::string::npos ? url.find('/')
                                                        : url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

Observation http_execute(const ToolCall& call, const HttpBinding& binding, const EnvConfig& config) {
    ParsedUrl url = split_url(replace_all(binding.url, "{tool}", call.name));
    std::string body = canonical_json(call.arguments);
    std::string last_error = "transport failure";
    for (int attempt = 0; attempt <= binding.retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(100 << (attempt - 1)));
        httplib::Client client(url.base);
        client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(binding.timeout));
        client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(binding.timeout));
        auto res = client.Post(url.path, body, "application/json");
        if (res) {
            Observation obs;
            obs.text = truncate_observation(res->body, config);
            obs.status = (res->status >= 200 && res->status < 300) ? ObsStatus::Ok : ObsStatus::ToolError;
            return obs;
        }
        last_error = "transport failure: " + httplib::to_string(res.error());
    }
    Observation obs;
    obs.status = ObsStatus::ToolError;
    obs.transport_failure = true;
    obs.text = render_error(config, call.name, last_error);
    return obs;
}

}  // namespace

const char* param_kind_name(ParamKind k) {
    switch (k) {
        case ParamKind::String: return "string";
        case ParamKind::Integer: return "integer";
        case ParamKind::Number: return "number";
        case ParamKind::Boolean: return "boolean";
        case ParamKind::Array: return "array";
        case ParamKind::Object: return "object";
    }
    return "string";
}

std::optional<ParamKind> param_kind_from_name(const std::string& name) {
    for (ParamKind k : {ParamKind::String, ParamKind::Integer, ParamKind::Number,
                        ParamKind::Boolean, ParamKind::Array, ParamKind::Object}) {
        if (name == param_kind_name(k)) return k;
    }
    return std::nullopt;
}

const char* obs_status_name(ObsStatus s) {
    switch (s) {
        case ObsStatus::Ok: return "ok";
        case ObsStatus::ToolError: return "tool_error";
        case ObsStatus::NotFound: return "not_found";
        case ObsStatus::SchemaError: return "schema_error";
    }
    return "ok";
}

std::optional<ObsStatus> obs_status_from_name(const std::string& name) {
    for (ObsStatus s : {ObsStatus::Ok, ObsStatus::ToolError, ObsStatus::NotFound, ObsStatus::SchemaError})
        if (name == obs_status_name(s)) return s;
    return std::nullopt;
}

void ToolRegistry::register_tool(ToolDoc doc, ToolBackend backend) {
    if (entries_.count(doc.name))
        throw ToolEnvError("DuplicateTool: " + doc.name);
    std::string name = doc.name;
    entries_.emplace(std::move(name), Entry{std::move(doc), std::move(backend)});
}

const ToolDoc* ToolRegistry::lookup(const std::string& name) const {
    auto it = entries_.find(name);
    return it == entries_.end() ? nullptr : &it->second.doc;
}

std::vector<const ToolDoc*> ToolRegistry::docs() const {
    std::vector<const ToolDoc*> out;
    out.reserve(entries_.size());
    for (const auto& [_, entry] : entries_) out.push_back(&entry.doc);
    return out;
}

std::vector<SchemaViolation> validate_call(const ToolCall& call, const ToolDoc& doc,
                                           const EnvConfig& config) {
    std::vector<SchemaViolation> violations;

    for (auto it = call.arguments.begin(); it != call.arguments.end(); ++it) {
        const std::string& arg = it.key();
        auto spec = std::find_if(doc.params.begin(), doc.params.end(),
                                 [&](const ParamSpec& p) { return p.name == arg; });
        if (spec == doc.params.end()) {
            violations.push_back({SchemaViolationKind::UnknownArgument, arg,
                                  render_error(config, doc.name,
                                               doc.name + "() got an unexpected keyword argument '" + arg + "'")});
            continue;
        }
        if (!kind_matches(spec->kind, it.value())) {
            violations.push_back({SchemaViolationKind::KindMismatch, arg,
                                  render_error(config, doc.name,
                                               doc.name + "() argument '" + arg + "' has invalid type, expected " +
                                                   param_kind_name(spec->kind))});
            continue;
        }
        if (spec->enum_values) {
            bool member = std::any_of(spec->enum_values->begin(), spec->enum_values->end(),
                                      [&](const json& v) { return v == it.value(); });
            if (!member) {
                violations.push_back({SchemaViolationKind::EnumViolation, arg,
                                      "Error: '" + arg + "' must be one of " +
                                          enum_list_repr(*spec->enum_values) + "."});
            }
        }
    }

    for (const ParamSpec& p : doc.params) {
        if (p.required && !call.arguments.contains(p.name)) {
            violations.push_back({SchemaViolationKind::MissingRequired, p.name,
                                  render_error(config, doc.name,
                                               doc.name + "() missing required argument '" + p.name + "'")});
        }
    }
    return violations;
}

Observation ToolRegistry::execute(const ToolCall& call) const {
    auto start = std::chrono::steady_clock::now();
    auto finish = [&](Observation obs) {
        obs.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - start);
        return obs;
    };

    auto it = entries_.find(call.name);
    if (it == entries_.end()) {
        Observation obs;
        obs.status = ObsStatus::NotFound;
        obs.text = render_error(config_, call.name, "tool '" + call.name + "' not found");
        return finish(obs);
    }

    auto violations = validate_call(call, it->second.doc, config_);
    if (!violations.empty()) {
        Observation obs;
        obs.status = ObsStatus::SchemaError;
        obs.text = violations.front().message;
        return finish(obs);
    }

    const ToolBackend& backend = it->second.backend;
    if (backend.kind == ToolBackend::Kind::Http)
        return finish(http_execute(call, backend.http, config_));

    try {
        Observation obs;
        obs.text = truncate_observation(backend.mock(call.arguments), config_);
        obs.status = ObsStatus::Ok;
        return finish(obs);
    } catch (const VerbatimToolError& e) {
        Observation obs;
        obs.status = ObsStatus::ToolError;
        obs.text = truncate_observation(e.what(), config_);
        return finish(obs);
    } catch (const std::exception& e) {
        Observation obs;
        obs.status = ObsStatus::ToolError;
        obs.text = truncate_observation(render_error(config_, call.name, e.what()), config_);
        return finish(obs);
    }
}

namespace builtins {

MockFn extract_first_name() {
    return [](const json& args) {
        const json& names = args.contains("full_names") ? args.at("full_names") : args.at("names");
        std::string out;
        auto first_token = [](const std::string& s) {
            size_t end = s.find(' ');
            return end == std::string::npos ? s : s.substr(0, end);
        };
        if (names.is_array()) {
            for (size_t i = 0; i < names.size(); ++i) {
                if (i) out += ", ";
                out += first_token(names[i].get<std::string>());
            }
        } else {
            out = first_token(names.get<std::string>());
        }
        return out;
    };
}

MockFn extract_first_letter() {
    return [](const json& args) -> std::string {
        std::string input = args.at("input").get<std::string>();
        for (char c : input)
            if (std::isalpha(static_cast<unsigned char>(c))) return std::string(1, c);
        return "";
    };
}

MockFn count_letters() {
    return [](const json& args) {
        std::string input = args.at("input").get<std::string>();
        size_t n = std::count_if(input.begin(), input.end(),
                                 [](unsigned char c) { return std::isalpha(c) != 0; });
        return std::to_string(n);
    };
}

MockFn arithmetic_calculator() {
    return [](const json& args) {
        std::string op = args.at("operation").get<std::string>();
        const json& numbers = args.at("numbers");
        if (!numbers.is_array() || numbers.empty())
            throw VerbatimToolError("Error: 'numbers' must be a non-empty array.");
        double acc = numbers[0].get<double>();
        for (size_t i = 1; i < numbers.size(); ++i) {
            double v = numbers[i].get<double>();
            if (op == "add") acc += v;
            else if (op == "subtract") acc -= v;
            else if (op == "multiply") acc *= v;
            else if (op == "divide") {
                if (v == 0) throw VerbatimToolError("Error: division by zero.");
                acc /= v;
            } else {
                throw VerbatimToolError(
                    "Error: 'operation' must be one of ['add', 'subtract', 'multiply', 'divide'].");
            }
        }
        if (acc == static_cast<long long>(acc)) return std::to_string(static_cast<long long>(acc));
        std::ostringstream out;
        out << acc;
        return out.str();
    };
}

MockFn constant(std::string text) {
    return [text = std::move(text)](const json&) { return text; };
}

MockFn echo() {
    return [](const json& args) { return canonical_json(args); };
}

MockFn lookup_table(std::map<std::string, std::string> table, std::vector<std::string> key_args,
                    std::string miss_template) {
    return [table = std::move(table), key_args = std::move(key_args),
            miss_template = std::move(miss_template)](const json& args) {
        std::string key;
        for (size_t i = 0; i < key_args.size(); ++i) {
            if (i) key += '\x1f';
            if (args.contains(key_args[i])) key += value_as_text(args.at(key_args[i]));
        }
        auto it = table.find(key);
        if (it != table.end()) return it->second;
        std::string msg = miss_template;
        for (const auto& arg : key_args) {
            std::string value = args.contains(arg) ? value_as_text(args.at(arg)) : "";
            msg = replace_all(msg, "{" + arg + "}", value);
        }
        throw VerbatimToolError(msg);
    };
}

std::optional<MockFn> by_name(const std::string& id, const json& binding) {
    if (id == "extract_first_name") return extract_first_name();
    if (id == "extract_first_letter") return extract_first_letter();
    if (id == "count_letters") return count_letters();
    if (id == "arithmetic") return arithmetic_calculator();
    if (id == "echo") return echo();
    if (id == "constant") return constant(binding.value("text", ""));
    if (id == "lookup") {
        std::map<std::string, std::string> table;
        for (auto it = binding.at("table").begin(); it != binding.at("table").end(); ++it)
            table[it.key()] = it.value().get<std::string>();
        std::vector<std::string> key_args = binding.at("key_args").get<std::vector<std::string>>();
        return lookup_table(std::move(table), std::move(key_args), binding.value("miss", "Error: no data found."));
    }
    return std::nullopt;
}

}  // namespace builtins

json tool_doc_to_json(const ToolDoc& doc) {
    json params = json::array();
    for (const ParamSpec& p : doc.params) {
        json entry = {{"name", p.name}, {"kind", param_kind_name(p.kind)}, {"required", p.required}};
        if (p.enum_values) entry["enum"] = *p.enum_values;
        if (p.default_value) entry["default"] = *p.default_value;
        params.push_back(std::move(entry));
    }
    return {{"name", doc.name}, {"description", doc.description}, {"params", std::move(params)}};
}

ToolDoc tool_doc_from_json(const json& j) {
    ToolDoc doc;
    doc.name = j.at("name").get<std::string>();
    doc.description = j.value("description", "");
    for (const json& p : j.value("params", json::array())) {
        ParamSpec spec;
        spec.name = p.at("name").get<std::string>();
        auto kind = param_kind_from_name(p.value("kind", "string"));
        if (!kind) throw ToolEnvError("unknown param kind in doc for " + doc.name);
        spec.kind = *kind;
        spec.required = p.value("required", false);
        if (p.contains("enum")) spec.enum_values = p.at("enum").get<std::vector<json>>();
        if (p.contains("default")) spec.default_value = p.at("default");
        doc.params.push_back(std::move(spec));
    }
    return doc;
}

ToolRegistry load_registry_json(const json& docs, EnvConfig config) {
    ToolRegistry registry(std::move(config));
    for (const json& entry : docs) {
        ToolDoc doc = tool_doc_from_json(entry);
        const json& binding = entry.at("binding");
        std::string kind = binding.value("kind", "mock");
        if (kind == "mock") {
            auto fn = builtins::by_name(binding.at("builtin").get<std::string>(), binding);
            if (!fn) throw ToolEnvError("unknown builtin for tool " + doc.name);
            registry.register_tool(std::move(doc), ToolBackend::make_mock(std::move(*fn)));
        } else if (kind == "http") {
            HttpBinding http;
            http.url = binding.at("url").get<std::string>();
            http.timeout = std::chrono::milliseconds(binding.value("timeout_ms", 30000));
            http.retries = binding.value("retries", 2);
            registry.register_tool(std::move(doc), ToolBackend::make_http(std::move(http)));
        } else {
            throw ToolEnvError("unknown binding kind '" + kind + "' for tool " + doc.name);
        }
    }
    return registry;
}

ToolRegistry load_registry_file(const std::string& path, EnvConfig config) {
    std::ifstream in(path);
    if (!in) throw ToolEnvError("cannot open registry file: " + path);
    json docs = json::parse(in);
    return load_registry_json(docs, std::move(config));
}

}  // namespace toolmaster
