#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace reachfuzz::augment {

// Pluggable chat-completion backend. The shipped deterministic mock keys
// scripted responses by prompt hash so the whole pipeline runs offline.
class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual std::string model_name() const = 0;

    struct Reply {
        bool ok = false;
        std::string text;
        std::string error;
    };
    virtual Reply complete(const std::string& prompt) = 0;
};

// File-backed deterministic mock. Script schema:
//   {
//     "by_hash":  { "<fnv64 hex of prompt>": ["resp1", "resp2", ...] },
//     "by_target": { "<urapi path>": ["resp1", ...] },
//     "default":  ["resp", ...]
//   }
// Responses are consumed in order per key; the last one repeats.
class MockLlmClient : public LlmClient {
public:
    static std::unique_ptr<MockLlmClient> from_file(const std::string& script_path,
                                                    std::string* error = nullptr);
    static std::unique_ptr<MockLlmClient> from_json_text(const std::string& json_text);

    std::string model_name() const override { return "mock"; }
    Reply complete(const std::string& prompt) override;

    // the augmenter stamps the current target so by_target scripting works
    void set_current_target(const std::string& urapi_path) { current_target_ = urapi_path; }

    static std::string prompt_hash(const std::string& prompt);

private:
    std::map<std::string, std::vector<std::string>> by_hash_;
    std::map<std::string, std::vector<std::string>> by_target_;
    std::vector<std::string> default_;
    std::map<std::string, size_t> cursor_;
    std::string current_target_;
};

// HTTP JSON chat endpoint (OpenAI-style /chat/completions). The key is read
// from the named environment variable, never stored in config files.
struct HttpLlmConfig {
    std::string base_url = "http://127.0.0.1:8080";
    std::string model = "deepseek-reasoner";
    std::string api_key_env = "REACHFUZZ_LLM_KEY";
    double temperature = 1.0;
    double top_p = 1.0;
    int timeout_seconds = 120;
};

class HttpLlmClient : public LlmClient {
public:
    explicit HttpLlmClient(HttpLlmConfig cfg);
    std::string model_name() const override { return cfg_.model; }
    Reply complete(const std::string& prompt) override;

private:
    HttpLlmConfig cfg_;
};

} // namespace reachfuzz::augment
