#pragma once

#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "augment/llm_client.hpp"
#include "augment/prompt.hpp"
#include "harness/codegen.hpp"

namespace reachfuzz::augment {

// Compile oracle the augmenter validates candidate sources against.
struct OracleVerdict {
    bool ok = false;
    std::string diagnostics;
};
using SourceOracle = std::function<OracleVerdict(const std::string& main_rs_source)>;

struct TranscriptEntry {
    std::string prompt;
    std::string response;
    std::string compile_diagnostics;
};

struct AugmentationResult {
    bool success = false;
    harness::HarnessArtifact artifact; // valid when success
    int tries_used = 0;
    std::string last_error;
    std::vector<TranscriptEntry> transcript;

    nlohmann::ordered_json transcript_json() const;
};

enum class PolicyVariant { Default, SkipAll, NoSkip };

struct SelectionPolicy {
    PolicyVariant variant = PolicyVariant::Default;
    int static_fallback_quota = 4;
    int custom_fn_quota = 4;
};

PolicyVariant policy_from_name(const std::string& name);
std::string policy_name(PolicyVariant v);

// Single-writer record of URAPIs already invoked by completed augmentations;
// skip decisions observe a consistent prefix of completions.
class AugmentationState {
public:
    void record_invoked(const std::vector<std::string>& urapis) {
        std::lock_guard<std::mutex> lock(m_);
        for (const auto& u : urapis) invoked_.insert(u);
    }
    bool is_invoked(const std::string& urapi) const {
        std::lock_guard<std::mutex> lock(m_);
        return invoked_.count(urapi) > 0;
    }
    std::set<std::string> snapshot() const {
        std::lock_guard<std::mutex> lock(m_);
        return invoked_;
    }

private:
    mutable std::mutex m_;
    std::set<std::string> invoked_;
};

struct AugmentOptions {
    int max_tries = 6;
    size_t token_budget = 4096;
    std::string docs;
    nlohmann::ordered_json metadata; // constructor candidates + URAPI list
    std::vector<std::string> urapi_paths; // for invoked-URAPI scanning
    bool multiple_constructors = false;
};

// [OP] augment_harness — prompt/compile retry loop with forbid-unsafe
// enforcement; transport errors consume a try.
AugmentationResult augment_harness(const harness::HarnessArtifact& seed, LlmClient& client,
                                   const SourceOracle& oracle, const AugmentOptions& opts);

// [OP] should_skip — Harness Augmenter selection policy.
bool should_skip(const std::string& urapi, const harness::HarnessArtifact& static_harness,
                 const SelectionPolicy& policy, const AugmentationState& augmented_state);

// [OP] assemble_corpus — Harness Selector policy over compile outcomes.
struct CorpusCandidate {
    harness::HarnessArtifact artifact;
    bool compiled = false;
};

struct FuzzingCorpus {
    std::vector<harness::HarnessArtifact> members;
    std::vector<std::string> warnings;
    bool empty_warning = false;
};

FuzzingCorpus assemble_corpus(const std::vector<CorpusCandidate>& augmented,
                              const std::vector<CorpusCandidate>& statics,
                              const SelectionPolicy& policy,
                              const std::set<std::string>& failed_augmentation_urapis);

// Lexical safety check: `unsafe` outside string literals / comments.
bool source_mentions_unsafe(const std::string& source);

// Scans a harness source for direct calls into the URAPI list.
std::vector<std::string> scan_invoked_urapis(const std::string& source,
                                             const std::vector<std::string>& urapi_paths);

} // namespace reachfuzz::augment
