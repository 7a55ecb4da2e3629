#include "augment/prompt.hpp"

#include <fstream>
#include <sstream>

namespace reachfuzz::augment {

size_t estimate_tokens(const std::string& text) { return text.size() / 4; }

namespace {

const char* kEmbeddedTemplate = R"TPL(You are improving a Rust fuzz harness so a fuzzer can exercise deeper library states.

TARGET FUNCTION: {{TARGET}}

CURRENT HARNESS:
```rust
{{HARNESS}}
```

STATIC ANALYSIS METADATA (constructor candidates per type, full target-function list):
{{METADATA}}

LIBRARY DOCUMENTATION (may be truncated):
{{DOCS}}

GOALS:
{{GOALS}}

HARD RULES:
- Keep `#![forbid(unsafe_code)]` as the first line; never write an `unsafe` block, fn, or impl.
- Keep `mod fuzz_rt;` and derive every runtime value from the decoder helpers (_to_* fixed offsets, _next_* cursor reads).
- Keep the `fn main` / fuzz_nohook! entry shape and the input-length guard.
- Preserve existing custom types and custom fns unless a goal says to replace them.
- Reply with the complete `src/main.rs` contents only.
{{ERROR}})TPL";

} // namespace

std::string load_template(const std::string& repo_root) {
    if (!repo_root.empty()) {
        std::ifstream in(repo_root + "/prompts/" + kTemplateId + ".txt");
        if (in) {
            std::ostringstream ss;
            ss << in.rdbuf();
            return ss.str();
        }
    }
    return kEmbeddedTemplate;
}

Prompt build_prompt(const PromptInputs& in) {
    Prompt p;
    p.harness_text = in.harness_text;
    p.target_urapi = in.target_urapi;
    p.static_metadata = in.metadata;
    p.template_id = kTemplateId;

    std::ostringstream goals;
    int n = 1;
    if (in.multiple_constructors) {
        goals << n++
              << ". Several constructor candidates exist for complex arguments. Pick a "
                 "heterogeneous subset you consider relevant and add a switch driven by a decoder "
                 "byte so the fuzzer chooses the constructor at runtime.\n";
    }
    if (in.has_unsafe_trait_customs) {
        goals << n++
              << ". Custom types implementing unsafe traits are placeholders. Replace only those "
                 "with library-defined types that already implement the required unsafe traits; "
                 "preserve every other custom type and custom fn, since they simulate user-defined "
                 "code.\n";
    }
    goals << n++
          << ". Identify library functions semantically related to the target and embed the "
             "target in call sequences with them. Drive both the length and the order of the "
             "sequence from decoder bytes (a loop over an op-selector byte), so the fuzzer "
             "composes, repeats, or skips calls at runtime.\n";
    p.instructions = goals.str();

    // docs: whatever fits the remaining budget
    std::string tpl = load_template();
    size_t fixed = estimate_tokens(tpl) + estimate_tokens(p.harness_text) +
                   estimate_tokens(p.static_metadata.dump()) + estimate_tokens(p.instructions);
    size_t remaining_chars = in.token_budget > fixed ? (in.token_budget - fixed) * 4 : 0;
    p.docs_excerpt = in.docs.substr(0, remaining_chars);

    std::string rendered = tpl;
    auto replace_all = [&](const std::string& slot, const std::string& value) {
        size_t pos;
        while ((pos = rendered.find(slot)) != std::string::npos)
            rendered.replace(pos, slot.size(), value);
    };
    replace_all("{{TARGET}}", p.target_urapi);
    replace_all("{{HARNESS}}", p.harness_text);
    replace_all("{{METADATA}}", p.static_metadata.dump(2));
    replace_all("{{DOCS}}", p.docs_excerpt.empty() ? "(none included)" : p.docs_excerpt);
    replace_all("{{GOALS}}", p.instructions);
    replace_all("{{ERROR}}",
                in.compiler_error.empty()
                    ? ""
                    : "\nTHE PREVIOUS ATTEMPT FAILED TO COMPILE WITH:\n" + in.compiler_error +
                          "\nFix the harness and reply with the corrected complete file.\n");
    p.token_estimate = estimate_tokens(rendered);
    p.rendered = std::move(rendered);
    return p;
}

} // namespace reachfuzz::augment
