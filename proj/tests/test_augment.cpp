#include <doctest.h>

#include <httplib.h>
#include <thread>

#include "augment/augmenter.hpp"
#include "augment/llm_client.hpp"
#include "augment/prompt.hpp"

using namespace reachfuzz;
using namespace reachfuzz::augment;
using reachfuzz::harness::HarnessArtifact;
using reachfuzz::harness::Provenance;

namespace {

HarnessArtifact make_static(const std::string& name, const std::string& target, bool custom,
                            bool has_unsafe = false) {
    HarnessArtifact a;
    a.name = name;
    a.target_path = target;
    a.source_text = "#![forbid(unsafe_code)]\nfn main() { fuzz_nohook!(|data: &[u8]| { if "
                    "data.len() < 4 { return; } }); }";
    a.has_custom_functionality = custom;
    a.contains_unsafe = has_unsafe;
    a.provenance = Provenance::Static;
    return a;
}

SourceOracle accepting_oracle() {
    return [](const std::string&) { return OracleVerdict{true, ""}; };
}

SourceOracle rejecting_unsafe_oracle() {
    // approximates the forbid directive: any unsafe keyword fails the build
    return [](const std::string& src) {
        if (source_mentions_unsafe(src))
            return OracleVerdict{false, "error[E0133]: usage of an `unsafe` block"};
        if (src.find("fn main") == std::string::npos)
            return OracleVerdict{false, "error: `main` function not found"};
        return OracleVerdict{true, ""};
    };
}

} // namespace

TEST_CASE("prompt carries all five slots and honors the budget") {
    PromptInputs in;
    in.harness_text = "fn main() {}";
    in.target_urapi = "Shape::foo";
    in.metadata = {{"urapis", {"Shape::foo"}}, {"constructors", {{"Shape", {"new", "zero"}}}}};
    in.docs = std::string(40000, 'd'); // ~10k tokens of docs
    in.token_budget = 4000;
    in.multiple_constructors = true;
    in.has_unsafe_trait_customs = true;
    Prompt p = build_prompt(in);

    CHECK(p.harness_text == in.harness_text);
    CHECK(p.target_urapi == "Shape::foo");
    CHECK_FALSE(p.static_metadata.empty());
    CHECK_FALSE(p.docs_excerpt.empty());
    CHECK(p.docs_excerpt.size() < in.docs.size()); // truncated
    CHECK(p.token_estimate <= in.token_budget);
    CHECK(p.template_id == kTemplateId);

    const std::string& text = p.render();
    CHECK(text.find("switch driven by a decoder byte") != std::string::npos);
    CHECK(text.find("library-defined types that already implement") != std::string::npos);
    CHECK(text.find("sequences") != std::string::npos);
}

TEST_CASE("prompt goals shrink when features are absent") {
    PromptInputs in;
    in.harness_text = "fn main() {}";
    in.target_urapi = "t::lonely";
    in.metadata = nlohmann::ordered_json::object();
    in.multiple_constructors = false;
    in.has_unsafe_trait_customs = false;
    Prompt p = build_prompt(in);
    CHECK(p.instructions.find("switch") == std::string::npos);
    CHECK(p.instructions.find("unsafe traits") == std::string::npos);
    CHECK(p.instructions.find("sequence") != std::string::npos);
}

TEST_CASE("mock client: hash keying, sequences, and fallbacks") {
    auto mock = MockLlmClient::from_json_text(R"({
        "by_hash": {},
        "by_target": {"t::foo": ["first", "second"]},
        "default": ["dflt"]
    })");
    mock->set_current_target("t::foo");
    CHECK(mock->complete("p").text == "first");
    CHECK(mock->complete("p").text == "second");
    CHECK(mock->complete("p").text == "second"); // last repeats
    mock->set_current_target("t::other");
    CHECK(mock->complete("p").text == "dflt");

    // exact hash keying wins over target
    std::string prompt = "the exact prompt";
    std::string h = MockLlmClient::prompt_hash(prompt);
    auto mock2 = MockLlmClient::from_json_text(
        std::string(R"({"by_hash": {")") + h + R"(": ["hashed"]}, "default": ["d"]})");
    CHECK(mock2->complete(prompt).text == "hashed");
    CHECK(mock2->complete("different").text == "d");
}

TEST_CASE("augment loop: failure then success uses two tries") {
    auto seed = make_static("h1", "t::foo", true);
    auto mock = MockLlmClient::from_json_text(R"({
        "default": [
            "#![forbid(unsafe_code)]\nbroken {",
            "#![forbid(unsafe_code)]\nfn main() { t_foo(); }"
        ]
    })");
    AugmentOptions opts;
    opts.max_tries = 6;
    opts.urapi_paths = {"t::foo"};
    SourceOracle oracle = [](const std::string& src) {
        if (src.find("broken") != std::string::npos)
            return OracleVerdict{false, "error: expected item, found `{`"};
        return OracleVerdict{true, ""};
    };
    auto result = augment_harness(seed, *mock, oracle, opts);
    CHECK(result.success);
    CHECK(result.tries_used == 2);
    REQUIRE(result.transcript.size() == 2);
    CHECK(result.transcript[0].compile_diagnostics.find("expected item") != std::string::npos);
    // the retry prompt embeds the failing source plus the compiler error
    CHECK(result.transcript[1].prompt.find("expected item") != std::string::npos);
    CHECK(result.artifact.provenance == Provenance::Augmented);
    CHECK_FALSE(result.artifact.contains_unsafe);
}

TEST_CASE("augment loop: unchanged compilable response succeeds on try one") {
    auto seed = make_static("h2", "t::foo", false);
    seed.source_text = "#![forbid(unsafe_code)]\nfn main() { t_foo(); }";
    auto mock = MockLlmClient::from_json_text(
        R"({"default": ["#![forbid(unsafe_code)]\nfn main() { t_foo(); }"]})");
    AugmentOptions opts;
    opts.urapi_paths = {"t::foo"};
    auto result = augment_harness(seed, *mock, accepting_oracle(), opts);
    CHECK(result.success);
    CHECK(result.tries_used == 1);
    CHECK(result.artifact.invoked_paths == std::vector<std::string>{"t::foo"});
}

TEST_CASE("augment loop: persistent unsafe output fails after max tries") {
    auto seed = make_static("h3", "t::foo", true);
    auto mock = MockLlmClient::from_json_text(
        R"({"default": ["fn main() { unsafe { t_foo(); } }"]})");
    AugmentOptions opts;
    opts.max_tries = 6;
    opts.urapi_paths = {"t::foo"};
    auto result = augment_harness(seed, *mock, rejecting_unsafe_oracle(), opts);
    CHECK_FALSE(result.success);
    CHECK(result.tries_used == 6);
    CHECK(result.transcript.size() == 6);
    CHECK_FALSE(result.last_error.empty());
}

TEST_CASE("augment loop: transport errors consume tries") {
    auto seed = make_static("h4", "t::foo", false);
    auto mock = MockLlmClient::from_json_text(R"({})"); // no responses scripted
    AugmentOptions opts;
    opts.max_tries = 3;
    opts.urapi_paths = {"t::foo"};
    auto result = augment_harness(seed, *mock, accepting_oracle(), opts);
    CHECK_FALSE(result.success);
    CHECK(result.tries_used == 3);
}

TEST_CASE("should_skip: the three policies") {
    SelectionPolicy dflt;
    SelectionPolicy skip_all;
    skip_all.variant = PolicyVariant::SkipAll;
    SelectionPolicy no_skip;
    no_skip.variant = PolicyVariant::NoSkip;

    AugmentationState state;
    state.record_invoked({"t::a"});

    auto custom = make_static("c", "t::a", true);
    auto plain = make_static("p", "t::a", false);
    auto fresh = make_static("f", "t::b", false);

    // default: skip iff already invoked AND no custom functionality
    CHECK_FALSE(should_skip("t::a", custom, dflt, state));
    CHECK(should_skip("t::a", plain, dflt, state));
    CHECK_FALSE(should_skip("t::b", fresh, dflt, state));

    // skip-all: already invoked suffices
    CHECK(should_skip("t::a", custom, skip_all, state));
    CHECK(should_skip("t::a", plain, skip_all, state));
    CHECK_FALSE(should_skip("t::b", fresh, skip_all, state));

    // no-skip: never
    CHECK_FALSE(should_skip("t::a", custom, no_skip, state));
    CHECK_FALSE(should_skip("t::a", plain, no_skip, state));
}

TEST_CASE("policy lattice: prompted sets are nested across policies") {
    AugmentationState state;
    state.record_invoked({"t::a", "t::b"});
    std::vector<HarnessArtifact> harnesses = {
        make_static("h_a", "t::a", true),  make_static("h_b", "t::b", false),
        make_static("h_c", "t::c", true),  make_static("h_d", "t::d", false),
        make_static("h_a2", "t::a", false),
    };
    auto prompted = [&](PolicyVariant v) {
        SelectionPolicy p;
        p.variant = v;
        std::set<std::string> out;
        for (const auto& h : harnesses)
            if (!should_skip(h.target_path, h, p, state)) out.insert(h.name);
        return out;
    };
    auto skip_all = prompted(PolicyVariant::SkipAll);
    auto dflt = prompted(PolicyVariant::Default);
    auto no_skip = prompted(PolicyVariant::NoSkip);
    for (const auto& n : skip_all) CHECK(dflt.count(n) == 1);
    for (const auto& n : dflt) CHECK(no_skip.count(n) == 1);
    CHECK(no_skip.size() == harnesses.size());
}

TEST_CASE("corpus assembly: fallback quota takes four of seven statics") {
    std::vector<CorpusCandidate> statics;
    for (int i = 0; i < 7; ++i)
        statics.push_back({make_static("s" + std::to_string(i), "t::fail", false), true});
    SelectionPolicy policy;
    auto corpus = assemble_corpus({}, statics, policy, {"t::fail"});
    CHECK(corpus.members.size() == 4);
}

TEST_CASE("corpus assembly: custom-fn quota joins the augmented harness") {
    std::vector<CorpusCandidate> augmented;
    auto aug = make_static("aug", "t::x", false);
    aug.provenance = Provenance::Augmented;
    augmented.push_back({aug, true});

    std::vector<CorpusCandidate> statics;
    for (int i = 0; i < 6; ++i)
        statics.push_back({make_static("cs" + std::to_string(i), "t::x", true), true});

    SelectionPolicy policy;
    auto corpus = assemble_corpus(augmented, statics, policy, {});
    CHECK(corpus.members.size() == 1 + 4); // augmented + up to four custom statics
}

TEST_CASE("corpus assembly: success without custom fns keeps only the augmented") {
    std::vector<CorpusCandidate> augmented;
    auto aug = make_static("aug", "t::y", false);
    aug.provenance = Provenance::Augmented;
    augmented.push_back({aug, true});
    std::vector<CorpusCandidate> statics;
    for (int i = 0; i < 3; ++i)
        statics.push_back({make_static("py" + std::to_string(i), "t::y", false), true});
    auto corpus = assemble_corpus(augmented, statics, {}, {});
    REQUIRE(corpus.members.size() == 1);
    CHECK(corpus.members[0].name == "aug");
}

TEST_CASE("corpus safety: unsafe members are rejected, empty corpus warns") {
    std::vector<CorpusCandidate> statics;
    auto tainted = make_static("tainted", "t::z", true, /*has_unsafe=*/true);
    tainted.source_text = "fn main() { unsafe { } }";
    statics.push_back({tainted, true});
    auto corpus = assemble_corpus({}, statics, {}, {"t::z"});
    CHECK(corpus.members.empty());
    CHECK(corpus.empty_warning);
    for (const auto& m : corpus.members) {
        CHECK_FALSE(source_mentions_unsafe(m.source_text));
        CHECK(m.source_text.find("#![forbid(unsafe_code)]") != std::string::npos);
    }
}

TEST_CASE("lexical unsafe scan ignores strings and comments") {
    CHECK(source_mentions_unsafe("fn main() { unsafe { } }"));
    CHECK_FALSE(source_mentions_unsafe("fn main() { let s = \"unsafe\"; }"));
    CHECK_FALSE(source_mentions_unsafe("// unsafe in a comment\nfn main() {}"));
    CHECK_FALSE(source_mentions_unsafe("/* unsafe */ fn main() {}"));
    CHECK_FALSE(source_mentions_unsafe("#![forbid(unsafe_code)]\nfn main() {}"));
    CHECK(source_mentions_unsafe("unsafe impl Tr for T {}"));
}

TEST_CASE("http client round-trips against a local chat endpoint") {
    httplib::Server server;
    server.Post("/chat/completions", [](const httplib::Request& req, httplib::Response& res) {
        auto j = nlohmann::json::parse(req.body);
        std::string prompt = j["messages"][0]["content"];
        nlohmann::json reply = {
            {"choices",
             {{{"message", {{"role", "assistant"}, {"content", "echo: " + prompt.substr(0, 5)}}}}}}};
        res.set_content(reply.dump(), "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpLlmConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
    HttpLlmClient client(cfg);
    auto reply = client.complete("hello world");
    CHECK(reply.ok);
    CHECK(reply.text == "echo: hello");

    server.stop();
    th.join();
}
