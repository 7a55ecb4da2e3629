#pragma once

#include <string>
#include <vector>

#include "support/span.hpp"

namespace reachfuzz {

enum class Severity { Error, Warning, Note };

struct Diagnostic {
    Severity severity = Severity::Error;
    std::string message;
    Span span;
    std::string location; // resolved "path:line:col", filled by the emitter
};

class DiagnosticSink {
public:
    void error(std::string msg, Span sp = {}) { emit(Severity::Error, std::move(msg), sp); }
    void warning(std::string msg, Span sp = {}) { emit(Severity::Warning, std::move(msg), sp); }
    void note(std::string msg, Span sp = {}) { emit(Severity::Note, std::move(msg), sp); }

    void emit(Severity sev, std::string msg, Span sp) {
        diags_.push_back(Diagnostic{sev, std::move(msg), sp, {}});
        if (sev == Severity::Error) ++error_count_;
    }

    void resolve_locations(const SourceMap& sm) {
        for (auto& d : diags_)
            if (d.span.valid() || d.span.file < sm.file_count()) d.location = sm.describe(d.span);
    }

    bool has_errors() const { return error_count_ > 0; }
    size_t error_count() const { return error_count_; }
    const std::vector<Diagnostic>& all() const { return diags_; }
    std::string to_string() const {
        std::string out;
        for (const auto& d : diags_) {
            out += (d.severity == Severity::Error     ? "error: "
                    : d.severity == Severity::Warning ? "warning: "
                                                      : "note: ");
            if (!d.location.empty()) out += d.location + ": ";
            out += d.message + "\n";
        }
        return out;
    }

private:
    std::vector<Diagnostic> diags_;
    size_t error_count_ = 0;
};

} // namespace reachfuzz
