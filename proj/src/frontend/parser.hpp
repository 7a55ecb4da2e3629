#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "frontend/ast.hpp"
#include "frontend/lexer.hpp"
#include "support/diagnostics.hpp"
#include "support/span.hpp"

namespace reachfuzz::frontend {

// Resolves `mod name;` declarations to source text. Returns the file id
// (already registered with the SourceMap) plus its text, or nullopt when
// the module file cannot be found.
using ModuleLoader =
    std::function<std::optional<std::pair<uint32_t, std::string>>(const std::string& name)>;

struct ParseOptions {
    // Module names whose file content is intentionally not parsed (the
    // emitted fuzzing runtime has native semantics in the executor).
    std::vector<std::string> opaque_modules;
    ModuleLoader load_module; // may be null: `mod name;` then errors
};

std::unique_ptr<ast::Crate> parse_crate(uint32_t file_id, std::string_view text,
                                        DiagnosticSink& diags, const ParseOptions& opts = {});

} // namespace reachfuzz::frontend
