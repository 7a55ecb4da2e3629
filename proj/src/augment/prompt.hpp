#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace reachfuzz::augment {

// Assembled prompt: five content slots plus a cheap token estimate
// (4 chars/token heuristic, documented as approximate).
struct Prompt {
    std::string harness_text;
    std::string target_urapi;
    nlohmann::ordered_json static_metadata; // constructor candidates + URAPI list
    std::string docs_excerpt;               // truncated to the token budget
    std::string template_id;
    std::string instructions; // rendered goal text
    size_t token_estimate = 0;
    std::string rendered; // full transport text

    const std::string& render() const { return rendered; }
};

struct PromptInputs {
    std::string harness_text;
    std::string target_urapi;
    nlohmann::ordered_json metadata;
    std::string docs;
    size_t token_budget = 4096;
    // goal selection
    bool multiple_constructors = false; // >= 2 candidates somewhere
    bool has_unsafe_trait_customs = false;
    std::string compiler_error; // retry prompts append the latest diagnostics
};

// [OP] build_prompt
Prompt build_prompt(const PromptInputs& in);

size_t estimate_tokens(const std::string& text);

// Versioned template text (repo file wins over the embedded copy).
std::string load_template(const std::string& repo_root = {});
inline constexpr const char* kTemplateId = "augment_v1";

} // namespace reachfuzz::augment
