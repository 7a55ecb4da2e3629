#include "augment/augmenter.hpp"

#include <algorithm>
#include <cctype>

namespace reachfuzz::augment {

PolicyVariant policy_from_name(const std::string& name) {
    if (name == "skip-all") return PolicyVariant::SkipAll;
    if (name == "no-skip") return PolicyVariant::NoSkip;
    return PolicyVariant::Default;
}

std::string policy_name(PolicyVariant v) {
    switch (v) {
        case PolicyVariant::SkipAll: return "skip-all";
        case PolicyVariant::NoSkip: return "no-skip";
        default: return "default";
    }
}

bool source_mentions_unsafe(const std::string& source) {
    // lexical scan skipping string literals and comments
    for (size_t i = 0; i < source.size();) {
        char c = source[i];
        if (c == '"') {
            ++i;
            while (i < source.size() && source[i] != '"') {
                if (source[i] == '\\') ++i;
                ++i;
            }
            ++i;
            continue;
        }
        if (c == '/' && i + 1 < source.size() && source[i + 1] == '/') {
            while (i < source.size() && source[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && i + 1 < source.size() && source[i + 1] == '*') {
            i += 2;
            while (i + 1 < source.size() && !(source[i] == '*' && source[i + 1] == '/')) ++i;
            i += 2;
            continue;
        }
        if (source.compare(i, 6, "unsafe") == 0) {
            bool left_ok = i == 0 || (!isalnum(static_cast<unsigned char>(source[i - 1])) &&
                                      source[i - 1] != '_');
            size_t after = i + 6;
            bool right_ok = after >= source.size() ||
                            (!isalnum(static_cast<unsigned char>(source[after])) &&
                             source[after] != '_');
            // the forbid directive itself names `unsafe_code`, which the
            // right-boundary check already excludes
            if (left_ok && right_ok) return true;
            ++i;
            continue;
        }
        ++i;
    }
    return false;
}

std::vector<std::string> scan_invoked_urapis(const std::string& source,
                                             const std::vector<std::string>& urapi_paths) {
    std::vector<std::string> out;
    for (const auto& path : urapi_paths) {
        std::string name = path;
        auto pos = name.rfind("::");
        if (pos != std::string::npos) name = name.substr(pos + 2);
        // direct call syntax: `.name(` for methods, `name(` for free fns
        bool called = source.find("." + name + "(") != std::string::npos ||
                      source.find("::" + name + "(") != std::string::npos ||
                      source.find(" " + name + "(") != std::string::npos;
        if (called) out.push_back(path);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

// strip markdown fences backends often wrap code in
std::string extract_code(const std::string& response) {
    auto fence = response.find("```");
    if (fence == std::string::npos) return response;
    auto line_end = response.find('\n', fence);
    if (line_end == std::string::npos) return response;
    auto close = response.find("```", line_end);
    if (close == std::string::npos) return response.substr(line_end + 1);
    return response.substr(line_end + 1, close - line_end - 1);
}

size_t parse_guard(const std::string& source) {
    auto pos = source.find("data.len() < ");
    if (pos == std::string::npos) return 0;
    return std::strtoull(source.c_str() + pos + 13, nullptr, 10);
}

} // namespace

AugmentationResult augment_harness(const harness::HarnessArtifact& seed, LlmClient& client,
                                   const SourceOracle& oracle, const AugmentOptions& opts) {
    AugmentationResult result;
    std::string current_source = seed.source_text;
    std::string last_diag;

    int max_tries = std::max(1, opts.max_tries);
    for (int attempt = 1; attempt <= max_tries; ++attempt) {
        result.tries_used = attempt;
        PromptInputs in;
        in.harness_text = current_source;
        in.target_urapi = seed.target_path;
        in.metadata = opts.metadata;
        in.docs = opts.docs;
        in.token_budget = opts.token_budget;
        in.multiple_constructors = opts.multiple_constructors;
        in.has_unsafe_trait_customs = seed.contains_unsafe;
        in.compiler_error = last_diag;
        Prompt prompt = build_prompt(in);

        auto reply = client.complete(prompt.render());
        TranscriptEntry entry;
        entry.prompt = prompt.render();
        if (!reply.ok) {
            entry.response = "";
            entry.compile_diagnostics = "transport: " + reply.error;
            result.transcript.push_back(std::move(entry));
            result.last_error = reply.error;
            continue; // a failed exchange still consumes a try
        }
        entry.response = reply.text;

        std::string candidate = extract_code(reply.text);
        // forbid-unsafe is non-negotiable for augmented harnesses
        if (candidate.find("#![forbid(unsafe_code)]") == std::string::npos)
            candidate = "#![forbid(unsafe_code)]\n" + candidate;

        OracleVerdict verdict = oracle(candidate);
        entry.compile_diagnostics = verdict.diagnostics;
        result.transcript.push_back(std::move(entry));

        if (!verdict.ok) {
            last_diag = verdict.diagnostics;
            result.last_error = verdict.diagnostics;
            current_source = candidate;
            continue;
        }
        if (source_mentions_unsafe(candidate)) {
            last_diag = "the harness must not contain the `unsafe` keyword";
            result.last_error = last_diag;
            current_source = candidate;
            continue;
        }
        auto invoked = scan_invoked_urapis(candidate, opts.urapi_paths);
        if (invoked.empty()) {
            last_diag = "the augmented harness no longer calls any target function; call " +
                        seed.target_path;
            result.last_error = last_diag;
            current_source = candidate;
            continue;
        }

        harness::HarnessArtifact art = seed;
        art.source_text = candidate;
        art.provenance = harness::Provenance::Augmented;
        art.contains_unsafe = false;
        art.invoked_paths = invoked;
        art.min_input_len = parse_guard(candidate);
        art.name = seed.name + "_aug";
        result.artifact = std::move(art);
        result.success = true;
        return result;
    }
    return result;
}

bool should_skip(const std::string& urapi, const harness::HarnessArtifact& static_harness,
                 const SelectionPolicy& policy, const AugmentationState& augmented_state) {
    switch (policy.variant) {
        case PolicyVariant::NoSkip: return false;
        case PolicyVariant::SkipAll: return augmented_state.is_invoked(urapi);
        case PolicyVariant::Default:
            return augmented_state.is_invoked(urapi) && !static_harness.has_custom_functionality;
    }
    return false;
}

FuzzingCorpus assemble_corpus(const std::vector<CorpusCandidate>& augmented,
                              const std::vector<CorpusCandidate>& statics,
                              const SelectionPolicy& policy,
                              const std::set<std::string>& failed_augmentation_urapis) {
    FuzzingCorpus corpus;

    auto admit = [&](const harness::HarnessArtifact& art) {
        if (art.contains_unsafe || source_mentions_unsafe(art.source_text)) {
            corpus.warnings.push_back("excluded " + art.name +
                                      ": contains unsafe code pending replacement");
            return;
        }
        for (const auto& m : corpus.members)
            if (m.name == art.name) return;
        corpus.members.push_back(art);
    };

    // 1. every compilable augmented harness
    for (const auto& c : augmented)
        if (c.compiled) admit(c.artifact);

    // 2. per URAPI whose augmentation failed: up to N compilable statics
    for (const auto& urapi : failed_augmentation_urapis) {
        int taken = 0;
        for (const auto& c : statics) {
            if (!c.compiled || c.artifact.target_path != urapi) continue;
            if (taken >= policy.static_fallback_quota) break;
            if (c.artifact.contains_unsafe) continue;
            admit(c.artifact);
            taken++;
        }
    }

    // 3. per URAPI with custom functionality: up to N compilable statics,
    //    regardless of augmentation success
    std::set<std::string> custom_urapis;
    for (const auto& c : statics)
        if (c.artifact.has_custom_functionality) custom_urapis.insert(c.artifact.target_path);
    for (const auto& urapi : custom_urapis) {
        int taken = 0;
        for (const auto& c : statics) {
            if (!c.compiled || c.artifact.target_path != urapi) continue;
            if (!c.artifact.has_custom_functionality) continue;
            if (c.artifact.contains_unsafe) continue;
            if (taken >= policy.custom_fn_quota) break;
            admit(c.artifact);
            taken++;
        }
    }

    if (corpus.members.empty()) {
        corpus.empty_warning = true;
        corpus.warnings.push_back("fuzzing corpus is empty: no compilable harnesses survived");
    }
    return corpus;
}

nlohmann::ordered_json AugmentationResult::transcript_json() const {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& e : transcript) {
        arr.push_back({{"prompt", e.prompt},
                       {"response", e.response},
                       {"diagnostics", e.compile_diagnostics}});
    }
    nlohmann::ordered_json j;
    j["success"] = success;
    j["tries_used"] = tries_used;
    if (!success) j["last_error"] = last_error;
    j["transcript"] = arr;
    return j;
}

} // namespace reachfuzz::augment
