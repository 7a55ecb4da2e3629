#include "support/span.hpp"

#include <algorithm>

namespace reachfuzz {

uint32_t SourceMap::add_file(std::string path, std::string text) {
    File f;
    f.path = std::move(path);
    f.text = std::move(text);
    f.line_starts.push_back(0);
    for (uint32_t i = 0; i < f.text.size(); ++i) {
        if (f.text[i] == '\n') f.line_starts.push_back(i + 1);
    }
    files_.push_back(std::move(f));
    return static_cast<uint32_t>(files_.size() - 1);
}

LineCol SourceMap::line_col(uint32_t file, uint32_t offset) const {
    const auto& ls = files_.at(file).line_starts;
    auto it = std::upper_bound(ls.begin(), ls.end(), offset);
    uint32_t line = static_cast<uint32_t>(it - ls.begin());
    uint32_t start = ls[line - 1];
    return LineCol{line, offset - start + 1};
}

std::string SourceMap::snippet(const Span& sp) const {
    const auto& text = files_.at(sp.file).text;
    if (sp.lo >= text.size()) return {};
    return text.substr(sp.lo, std::min<size_t>(sp.hi, text.size()) - sp.lo);
}

std::string SourceMap::describe(const Span& sp) const {
    if (sp.file >= files_.size()) return "<unknown>";
    auto lc = line_col(sp.file, sp.lo);
    return files_[sp.file].path + ":" + std::to_string(lc.line) + ":" + std::to_string(lc.col);
}

} // namespace reachfuzz
