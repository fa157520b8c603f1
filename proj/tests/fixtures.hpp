#pragma once

// Shared golden fixtures: the family-letters query, its mock registry, and
// the recorded correct/failed solution paths, replayed through scripted
// backends.

#include <set>
#include <string>
#include <vector>

#include "toolmaster/agent.hpp"
#include "toolmaster/synthesis.hpp"
#include "toolmaster/toolenv.hpp"

namespace fixtures {

using namespace toolmaster;

inline const char* kQuery =
    "How many additional letters does the first name of Lori Lyons have compared to the first "
    "name of Frances Freeling Broderip's sibling?";

inline const char* kGoldAnswer = "1";

inline std::set<std::string> gold_tools() {
    return {"extract_first_name", "family_relationship_finder", "count_letters"};
}

inline const char* kRelationshipEnum[] = {"father",      "mother", "sibling", "child",
                                          "grandparent", "aunt",   "uncle",   "cousin"};

inline json registry_json() {
    json docs = json::array();
    docs.push_back({{"name", "extract_first_name"},
                    {"description", "Extracts the first name from each of the given full names."},
                    {"params", json::array({{{"name", "full_names"},
                                             {"kind", "array"},
                                             {"required", true}}})},
                    {"binding", {{"kind", "mock"}, {"builtin", "extract_first_name"}}}});

    json relationship_enum = json::array();
    for (const char* v : kRelationshipEnum) relationship_enum.push_back(v);
    json lookup_table = json::object();
    lookup_table[std::string("Frances Freeling Broderip") + '\x1f' + "sibling"] = "Tom Hood";
    docs.push_back(
        {{"name", "family_relationship_finder"},
         {"description", "Finds relatives of an individual filtered by relationship type."},
         {"params",
          json::array({{{"name", "individual_name"}, {"kind", "string"}, {"required", true}},
                       {{"name", "relationship_type"},
                        {"kind", "string"},
                        {"required", true},
                        {"enum", relationship_enum}},
                       {{"name", "data_source"}, {"kind", "string"}, {"required", false}}})},
         {"binding",
          {{"kind", "mock"},
           {"builtin", "lookup"},
           {"table", lookup_table},
           {"key_args", json::array({"individual_name", "relationship_type"})},
           {"miss",
            "Error: No data found for {individual_name} with relationship type "
            "{relationship_type}."}}}});

    docs.push_back(
        {{"name", "enhanced_family_relationship_finder"},
         {"description",
          "Enhanced relative lookup across configurable genealogy data sources."},
         {"params",
          json::array({{{"name", "person_name"}, {"kind", "string"}, {"required", true}},
                       {{"name", "data_source"}, {"kind", "string"}, {"required", false}},
                       {{"name", "relationship_type"}, {"kind", "string"}, {"required", false}}})},
         {"binding",
          {{"kind", "mock"},
           {"builtin", "constant"},
           {"text", "{\"error\": \"Person not found in the data source.\"}"}}}});

    docs.push_back({{"name", "count_letters"},
                    {"description", "Counts the alphabetic characters in the input string."},
                    {"params", json::array({{{"name", "input"},
                                             {"kind", "string"},
                                             {"required", true}}})},
                    {"binding", {{"kind", "mock"}, {"builtin", "count_letters"}}}});

    docs.push_back(
        {{"name", "advanced_arithmetic_calculator"},
         {"description", "Applies an arithmetic operation across a list of numbers."},
         {"params", json::array({{{"name", "operation"}, {"kind", "string"}, {"required", true}},
                                 {{"name", "numbers"}, {"kind", "array"}, {"required", true}}})},
         {"binding", {{"kind", "mock"}, {"builtin", "arithmetic"}}}});
    return docs;
}

inline ToolRegistry make_registry() { return load_registry_json(registry_json()); }

inline const char* kFinalAnswerText =
    "The first name \"Lori\" has 1 additional letter compared to the first name \"Tom\" of "
    "Frances Freeling Broderip's sibling.";

// Assistant turns of the correct solution path: two trial calls, the
// trial-closing marker, four execution calls, then the final answer.
inline std::vector<std::string> correct_turns() {
    return {
        "<think>1. Exploration Phase: First, I need to understand the functionality of the "
        "tools. I'll start by exploring the extract_first_name tool to extract the first names "
        "from the given names. I'll test with \"Lori Lyons\" and \"Frances Freeling Broderip\" "
        "to see how the tool works. 2. Sub-goal 1: Extract the first name \"Lori\" from \"Lori "
        "Lyons\".</think>\n<tool_call>{\"name\": \"extract_first_name\", \"arguments\": "
        "{\"full_names\": [\"Lori Lyons\"]}}</tool_call>",

        "<think>Great! The tool correctly extracted \"Lori\" from \"Lori Lyons\". Now, I'll "
        "test it on \"Frances Freeling Broderip\" to extract \"Frances\".</think>\n"
        "<tool_call>{\"name\": \"extract_first_name\", \"arguments\": {\"full_names\": "
        "[\"Frances Freeling Broderip\"]}}</tool_call>",

        "<answer>TRIAL COMPLETE</answer>",

        "<think>Perfect! The tool works well for both names. Now, I need to find the siblings "
        "of \"Frances Freeling Broderip\" using the family_relationship_finder tool. I'll set "
        "the relationship type to \"sibling\".</think>\n<tool_call>{\"name\": "
        "\"family_relationship_finder\", \"arguments\": {\"individual_name\": \"Frances "
        "Freeling Broderip\", \"relationship_type\": \"sibling\"}}</tool_call>",

        "<think>Interesting! The tool found one sibling for \"Frances Freeling Broderip\": "
        "\"Tom Hood\". Now, I need to extract the first name \"Tom\" from \"Tom Hood\".</think>\n"
        "<tool_call>{\"name\": \"extract_first_name\", \"arguments\": {\"full_names\": [\"Tom "
        "Hood\"]}}</tool_call>",

        "<think>Excellent! The tool extracted \"Tom\" from \"Tom Hood\". Now, I have both "
        "first names. I'll count the letters in each name, starting with \"Lori\".</think>\n"
        "<tool_call>{\"name\": \"count_letters\", \"arguments\": {\"input\": "
        "\"Lori\"}}</tool_call>",

        "<think>Great! \"Lori\" has 4 letters. Now, I'll count the letters in \"Tom\".</think>\n"
        "<tool_call>{\"name\": \"count_letters\", \"arguments\": {\"input\": "
        "\"Tom\"}}</tool_call>",

        std::string("<think>Perfect! \"Tom\" has 3 letters. The final step is to calculate the "
                    "difference: 4 (Lori) - 3 (Tom) = 1. I'll validate all steps: we "
                    "successfully extracted the first names, found the sibling, and counted the "
                    "letters. The answer is 1.</think>\n<answer>") +
            kFinalAnswerText + "</answer>",
    };
}

inline std::vector<std::string> correct_observations() {
    return {"Lori", "Frances", "Tom Hood", "Tom", "4", "3"};
}

// Assistant turns of the failed baseline path: five execution-phase calls
// hitting schema and data errors, then a giving-up answer.
inline std::vector<std::string> failed_turns() {
    return {
        "<think>I need to find the first names of Lori Lyons and Frances Freeling Broderip's "
        "sibling using the family relationship finder tools. First, I'll start by finding the "
        "first name of Lori Lyons using the family relationship finder.</think>\n"
        "<tool_call>{\"name\": \"family_relationship_finder\", \"arguments\": "
        "{\"individual_name\": \"Lori Lyons\", \"relationship_type\": \"child\", "
        "\"data_source\": \"FamilySearch\", \"output_format\": \"json\"}}</tool_call>",

        "<think>I received an error because I specified \"output_format\" which is not a "
        "required or optional parameter for the family_relationship_finder. I'll try without "
        "it.</think>\n<tool_call>{\"name\": \"family_relationship_finder\", \"arguments\": "
        "{\"individual_name\": \"Lori Lyons\", \"relationship_type\": \"child\", "
        "\"data_source\": \"FamilySearch\"}}</tool_call>",

        "<think>I got an error for Lori Lyons. Let me try with a different relationship type, "
        "like \"parent\", to see if that works better.</think>\n<tool_call>{\"name\": "
        "\"family_relationship_finder\", \"arguments\": {\"individual_name\": \"Lori Lyons\", "
        "\"relationship_type\": \"parent\", \"data_source\": \"FamilySearch\"}}</tool_call>",

        "<think>I see that \"parent\" is not a valid relationship type for this tool. I'll try "
        "\"sibling\" with the enhanced family relationship finder, as it might handle the "
        "dataset aspect better.</think>\n<tool_call>{\"name\": "
        "\"enhanced_family_relationship_finder\", \"arguments\": {\"person_name\": \"Frances "
        "Freeling Broderip\", \"data_source\": \"FamilySearch\", \"relationship_type\": "
        "\"sibling\", \"output_format\": \"json\"}}</tool_call>",

        "<think>I received an error for the enhanced family relationship finder as well, due "
        "to the \"output_format\" parameter. I'll try without it.</think>\n<tool_call>{\"name\": "
        "\"enhanced_family_relationship_finder\", \"arguments\": {\"person_name\": \"Frances "
        "Freeling Broderip\", \"data_source\": \"FamilySearch\", \"relationship_type\": "
        "\"sibling\"}}</tool_call>",

        "<think>I have attempted to retrieve the first names using the available tools, but "
        "both queries resulted in errors or data not found. Since I've tried the available "
        "approaches and encountered limitations, I should provide a final answer based on the "
        "findings.</think>\n<answer>I attempted to retrieve the first names using the "
        "available tools, but encountered several limitations. The family relationship finder "
        "for \"Lori Lyons\" resulted in an error when specifying an \"output_format\", and "
        "when I removed it, it returned \"No data found for Lori Lyons with relationship type "
        "child.\" The enhanced family relationship finder for \"Frances Freeling Broderip\" "
        "also had an issue with the \"sibling\" relationship type, returning an error. Due to "
        "these limitations, I was unable to retrieve the specific first names for the "
        "calculation.</answer>",
    };
}

inline std::vector<std::string> failed_observations() {
    return {
        "an error occured when call family_relationship_finder: family_relationship_finder() "
        "got an unexpected keyword argument 'output_format'",
        "Error: No data found for Lori Lyons with relationship type child.",
        "Error: 'relationship_type' must be one of ['father', 'mother', 'sibling', 'child', "
        "'grandparent', 'aunt', 'uncle', 'cousin'].",
        "an error occured when call enhanced_family_relationship_finder: "
        "enhanced_family_relationship_finder() got an unexpected keyword argument "
        "'output_format'",
        "{\"error\": \"Person not found in the data source.\"}",
    };
}

inline ScriptedBackend sequential_backend(const std::vector<std::string>& turns) {
    std::vector<ScriptEntry> entries;
    for (const std::string& turn : turns) entries.push_back({"*", turn});
    return ScriptedBackend(std::move(entries));
}

inline Trajectory run_correct(const ToolRegistry& registry) {
    ScriptedBackend backend = sequential_backend(correct_turns());
    RolloutConfig config;
    return run_rollout(kQuery, registry, backend, PromptTemplates::defaults(), config);
}

inline Trajectory run_failed(const ToolRegistry& registry) {
    ScriptedBackend backend = sequential_backend(failed_turns());
    RolloutConfig config;
    config.two_stage = false;
    return run_rollout(kQuery, registry, backend, PromptTemplates::defaults(), config);
}

// Canned judge replies.
inline const char* kJudgePass =
    "{\"content\": \"The execution chain supports the final answer.\", \"answer_status\": "
    "\"Pass\"}";
inline const char* kJudgeFail =
    "{\"content\": \"The chain shows unrecovered tool errors.\", \"answer_status\": \"Fail\"}";
inline const char* kJudgeUnsure =
    "{\"content\": \"Cannot verify the evidence.\", \"answer_status\": \"Unsure\"}";
inline const char* kFilterTrue =
    "Analysis: planning, exploration, and validation are all clearly present.\nResult: True";
inline const char* kFilterFalse =
    "Analysis: no exploration phase appears anywhere in the log.\nResult: False";

}  // namespace fixtures
