#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "toolmaster/toolenv.hpp"

using namespace toolmaster;

namespace {

ToolCall make_call(const std::string& name, const json& args) {
    ToolCall call;
    call.name = name;
    call.arguments = args;
    return call;
}

}  // namespace

TEST_CASE("unknown argument reproduces the recorded error byte-for-byte") {
    ToolRegistry registry = fixtures::make_registry();
    ToolCall call = make_call("family_relationship_finder",
                              nlohmann::ordered_json::parse(
                                  R"({"individual_name": "Lori Lyons", "relationship_type": "child",
                                      "data_source": "FamilySearch", "output_format": "json"})"));
    Observation obs = registry.execute(call);
    CHECK(obs.status == ObsStatus::SchemaError);
    CHECK(obs.text ==
          "an error occured when call family_relationship_finder: family_relationship_finder() "
          "got an unexpected keyword argument 'output_format'");
}

TEST_CASE("enum violation reproduces the recorded error byte-for-byte") {
    ToolRegistry registry = fixtures::make_registry();
    ToolCall call = make_call("family_relationship_finder",
                              nlohmann::ordered_json::parse(
                                  R"({"individual_name": "Lori Lyons", "relationship_type": "parent",
                                      "data_source": "FamilySearch"})"));
    Observation obs = registry.execute(call);
    CHECK(obs.status == ObsStatus::SchemaError);
    CHECK(obs.text ==
          "Error: 'relationship_type' must be one of ['father', 'mother', 'sibling', 'child', "
          "'grandparent', 'aunt', 'uncle', 'cousin'].");
}

TEST_CASE("lookup miss and constant error bodies match the recorded trace") {
    ToolRegistry registry = fixtures::make_registry();
    Observation miss = registry.execute(make_call(
        "family_relationship_finder",
        nlohmann::ordered_json::parse(
            R"({"individual_name": "Lori Lyons", "relationship_type": "child", "data_source": "FamilySearch"})")));
    CHECK(miss.status == ObsStatus::ToolError);
    CHECK(miss.text == "Error: No data found for Lori Lyons with relationship type child.");

    Observation hit = registry.execute(make_call(
        "family_relationship_finder",
        nlohmann::ordered_json::parse(
            R"({"individual_name": "Frances Freeling Broderip", "relationship_type": "sibling"})")));
    CHECK(hit.status == ObsStatus::Ok);
    CHECK(hit.text == "Tom Hood");

    Observation enhanced = registry.execute(make_call(
        "enhanced_family_relationship_finder",
        nlohmann::ordered_json::parse(
            R"({"person_name": "Frances Freeling Broderip", "data_source": "FamilySearch",
                "relationship_type": "sibling"})")));
    CHECK(enhanced.status == ObsStatus::Ok);
    CHECK(enhanced.text == "{\"error\": \"Person not found in the data source.\"}");
}

TEST_CASE("validate_call covers all four violation kinds") {
    ToolDoc doc;
    doc.name = "t";
    doc.params = {{"a", ParamKind::String, true, std::nullopt, std::nullopt},
                  {"b", ParamKind::Integer, false,
                   std::vector<json>{1, 2, 3}, std::nullopt}};

    SUBCASE("clean") {
        auto v = validate_call(make_call("t", {{"a", "x"}, {"b", 2}}), doc);
        CHECK(v.empty());
    }
    SUBCASE("missing required") {
        auto v = validate_call(make_call("t", json::object()), doc);
        REQUIRE(v.size() == 1);
        CHECK(v[0].kind == SchemaViolationKind::MissingRequired);
        CHECK(v[0].param == "a");
        CHECK(v[0].message == "an error occured when call t: t() missing required argument 'a'");
    }
    SUBCASE("unknown argument") {
        auto v = validate_call(make_call("t", {{"a", "x"}, {"zz", 1}}), doc);
        REQUIRE(v.size() == 1);
        CHECK(v[0].kind == SchemaViolationKind::UnknownArgument);
        CHECK(v[0].param == "zz");
    }
    SUBCASE("kind mismatch") {
        auto v = validate_call(make_call("t", {{"a", 5}}), doc);
        REQUIRE(v.size() == 1);
        CHECK(v[0].kind == SchemaViolationKind::KindMismatch);
        CHECK(v[0].message ==
              "an error occured when call t: t() argument 'a' has invalid type, expected string");
    }
    SUBCASE("enum violation") {
        auto v = validate_call(make_call("t", {{"a", "x"}, {"b", 9}}), doc);
        REQUIRE(v.size() == 1);
        CHECK(v[0].kind == SchemaViolationKind::EnumViolation);
        CHECK(v[0].message == "Error: 'b' must be one of [1, 2, 3].");
    }
    SUBCASE("violations accumulate") {
        auto v = validate_call(make_call("t", {{"zz", 1}, {"b", 9}}), doc);
        CHECK(v.size() == 3);  // unknown, enum, missing-required
    }
}

TEST_CASE("execute never throws; failures arrive as observations") {
    ToolRegistry registry;
    ToolDoc doc;
    doc.name = "boom";
    registry.register_tool(doc, ToolBackend::make_mock([](const json&) -> std::string {
        throw std::runtime_error("kaboom");
    }));

    Observation obs = registry.execute(make_call("boom", json::object()));
    CHECK(obs.status == ObsStatus::ToolError);
    CHECK(obs.text == "an error occured when call boom: kaboom");

    Observation missing = registry.execute(make_call("nope", json::object()));
    CHECK(missing.status == ObsStatus::NotFound);
    CHECK(missing.text == "an error occured when call nope: tool 'nope' not found");
}

TEST_CASE("duplicate registration throws") {
    ToolRegistry registry;
    ToolDoc doc;
    doc.name = "x";
    registry.register_tool(doc, ToolBackend::make_mock(builtins::echo()));
    CHECK_THROWS_AS(registry.register_tool(doc, ToolBackend::make_mock(builtins::echo())),
                    ToolEnvError);
    CHECK(registry.size() == 1);
}

TEST_CASE("observation truncation at the cap") {
    EnvConfig config;
    config.observation_cap = 10;
    ToolRegistry registry(config);
    ToolDoc doc;
    doc.name = "big";
    registry.register_tool(doc, ToolBackend::make_mock(builtins::constant(std::string(64, 'z'))));
    Observation obs = registry.execute(make_call("big", json::object()));
    CHECK(obs.text == std::string(10, 'z') + "...[truncated]");
    CHECK(obs.status == ObsStatus::Ok);
}

TEST_CASE("builtin behaviors") {
    json args;
    args["full_names"] = json::array({"Lori Lyons", "Tom Hood"});
    CHECK(builtins::extract_first_name()(args) == "Lori, Tom");
    CHECK(builtins::extract_first_name()({{"names", "Frances Freeling Broderip"}}) == "Frances");
    CHECK(builtins::extract_first_letter()({{"input", "  42nd Tom"}}) == "n");
    CHECK(builtins::count_letters()({{"input", "Lori"}}) == "4");
    CHECK(builtins::count_letters()({{"input", "T-o-m!"}}) == "3");
    CHECK(builtins::arithmetic_calculator()(
              {{"operation", "subtract"}, {"numbers", json::array({4, 3})}}) == "1");
    CHECK(builtins::arithmetic_calculator()(
              {{"operation", "divide"}, {"numbers", json::array({5, 2})}}) == "2.5");
    CHECK_THROWS(builtins::arithmetic_calculator()(
        {{"operation", "divide"}, {"numbers", json::array({1, 0})}}));
    CHECK(builtins::echo()({{"k", "v"}}) == "{\"k\": \"v\"}");
}

TEST_CASE("tool doc JSON round-trip") {
    for (const json& entry : fixtures::registry_json()) {
        ToolDoc doc = tool_doc_from_json(entry);
        json back = tool_doc_to_json(doc);
        CHECK(tool_doc_from_json(back).name == doc.name);
        CHECK(back.at("params").size() == doc.params.size());
    }
}

TEST_CASE("bulk registry property: registration matches an association list") {
    std::mt19937 rng(99);
    ToolRegistry registry;
    std::vector<std::string> names;
    for (int i = 0; i < 3000; ++i) {
        std::string name = "tool_" + std::to_string(i);
        ToolDoc doc;
        doc.name = name;
        doc.description = "d" + std::to_string(rng() % 1000);
        registry.register_tool(doc, ToolBackend::make_mock(builtins::constant(name)));
        names.push_back(std::move(name));
    }
    CHECK(registry.size() == 3000);
    std::shuffle(names.begin(), names.end(), rng);
    for (const std::string& name : names) {
        const ToolDoc* doc = registry.lookup(name);
        REQUIRE(doc != nullptr);
        CHECK(doc->name == name);
        Observation obs = registry.execute(make_call(name, json::object()));
        CHECK(obs.text == name);
    }
    CHECK(registry.lookup("tool_3000") == nullptr);
    // docs() is sorted and complete
    auto docs = registry.docs();
    CHECK(docs.size() == 3000);
    CHECK(std::is_sorted(docs.begin(), docs.end(),
                         [](const ToolDoc* a, const ToolDoc* b) { return a->name < b->name; }));
}
