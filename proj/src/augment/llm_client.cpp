#include "augment/llm_client.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

namespace reachfuzz::augment {

std::string MockLlmClient::prompt_hash(const std::string& prompt) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : prompt) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[24];
    snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::unique_ptr<MockLlmClient> MockLlmClient::from_file(const std::string& script_path,
                                                        std::string* error) {
    std::ifstream in(script_path);
    if (!in) {
        if (error) *error = "mock script not found: " + script_path;
        return nullptr;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::unique_ptr<MockLlmClient> MockLlmClient::from_json_text(const std::string& json_text) {
    auto client = std::make_unique<MockLlmClient>();
    auto j = nlohmann::json::parse(json_text, nullptr, false);
    if (j.is_discarded()) return client; // empty script: every call errors
    if (j.contains("by_hash"))
        for (const auto& [k, v] : j.at("by_hash").items())
            client->by_hash_[k] = v.get<std::vector<std::string>>();
    if (j.contains("by_target"))
        for (const auto& [k, v] : j.at("by_target").items())
            client->by_target_[k] = v.get<std::vector<std::string>>();
    if (j.contains("default")) client->default_ = j.at("default").get<std::vector<std::string>>();
    return client;
}

LlmClient::Reply MockLlmClient::complete(const std::string& prompt) {
    Reply r;
    const std::vector<std::string>* seq = nullptr;
    std::string key;
    std::string h = prompt_hash(prompt);
    if (by_hash_.count(h)) {
        seq = &by_hash_.at(h);
        key = "hash:" + h;
    } else if (!current_target_.empty() && by_target_.count(current_target_)) {
        seq = &by_target_.at(current_target_);
        key = "target:" + current_target_;
    } else if (!default_.empty()) {
        seq = &default_;
        key = "default";
    }
    if (!seq || seq->empty()) {
        r.error = "mock script has no response for this prompt";
        return r;
    }
    size_t& cur = cursor_[key];
    r.text = (*seq)[std::min(cur, seq->size() - 1)];
    cur++;
    r.ok = true;
    return r;
}

HttpLlmClient::HttpLlmClient(HttpLlmConfig cfg) : cfg_(std::move(cfg)) {}

LlmClient::Reply HttpLlmClient::complete(const std::string& prompt) {
    Reply r;
    const char* key = std::getenv(cfg_.api_key_env.c_str());

    httplib::Client cli(cfg_.base_url);
    cli.set_read_timeout(cfg_.timeout_seconds, 0);
    cli.set_connection_timeout(10, 0);
    httplib::Headers headers;
    if (key && *key) headers.emplace("Authorization", std::string("Bearer ") + key);

    nlohmann::json body = {
        {"model", cfg_.model},
        {"temperature", cfg_.temperature},
        {"top_p", cfg_.top_p},
        {"messages", nlohmann::json::array({nlohmann::json{{"role", "user"}, {"content", prompt}}})},
    };
    auto res = cli.Post("/chat/completions", headers, body.dump(), "application/json");
    if (!res) {
        r.error = "transport error contacting " + cfg_.base_url;
        return r;
    }
    if (res->status != 200) {
        r.error = "backend returned status " + std::to_string(res->status);
        return r;
    }
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || j["choices"].empty()) {
        r.error = "malformed completion payload";
        return r;
    }
    const auto& choice = j["choices"][0];
    if (choice.contains("message") && choice["message"].contains("content"))
        r.text = choice["message"]["content"].get<std::string>();
    else if (choice.contains("text"))
        r.text = choice["text"].get<std::string>();
    r.ok = true;
    return r;
}

} // namespace reachfuzz::augment
