#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace reachfuzz {

// Byte range inside one source file. line/col are 1-based and derived
// lazily by the SourceMap so spans stay cheap to copy.
struct Span {
    uint32_t file = 0;
    uint32_t lo = 0;
    uint32_t hi = 0;

    bool valid() const { return hi >= lo && (lo != 0 || hi != 0); }
    bool contains(const Span& other) const {
        return file == other.file && lo <= other.lo && other.hi <= hi;
    }
    static Span join(const Span& a, const Span& b) {
        if (!a.valid()) return b;
        if (!b.valid()) return a;
        return Span{a.file, a.lo < b.lo ? a.lo : b.lo, a.hi > b.hi ? a.hi : b.hi};
    }
    bool operator==(const Span&) const = default;
};

struct LineCol {
    uint32_t line = 0;
    uint32_t col = 0;
};

// Owns source text for all files in a crate and resolves spans to
// file/line positions for diagnostics and unsafe-line accounting.
class SourceMap {
public:
    uint32_t add_file(std::string path, std::string text);
    const std::string& file_path(uint32_t id) const { return files_[id].path; }
    const std::string& file_text(uint32_t id) const { return files_[id].text; }
    size_t file_count() const { return files_.size(); }

    LineCol line_col(uint32_t file, uint32_t offset) const;
    uint32_t line_of(const Span& sp) const { return line_col(sp.file, sp.lo).line; }
    uint32_t end_line_of(const Span& sp) const {
        return line_col(sp.file, sp.hi > sp.lo ? sp.hi - 1 : sp.hi).line;
    }
    std::string snippet(const Span& sp) const;
    std::string describe(const Span& sp) const;

private:
    struct File {
        std::string path;
        std::string text;
        std::vector<uint32_t> line_starts;
    };
    std::vector<File> files_;
};

} // namespace reachfuzz
