#include <filesystem>
#include <fstream>
#include <sstream>

#include "frontend/parser.hpp"
#include "model/crate_model.hpp"

namespace reachfuzz::model {

namespace fs = std::filesystem;

namespace {

std::optional<std::string> read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Minimal manifest reader: package name and the default feature set.
struct Manifest {
    std::string name;
    std::set<std::string> default_features;
};

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    size_t b = s.find_last_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    return s.substr(a, b - a + 1);
}

Manifest parse_manifest(const std::string& text) {
    Manifest mf;
    std::istringstream in(text);
    std::string line, section;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            section = trim(t.substr(1, t.find(']') - 1));
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos) continue;
        std::string key = trim(t.substr(0, eq));
        std::string val = trim(t.substr(eq + 1));
        if (section == "package" && key == "name") {
            auto q1 = val.find('"');
            auto q2 = val.rfind('"');
            if (q1 != std::string::npos && q2 > q1) mf.name = val.substr(q1 + 1, q2 - q1 - 1);
        } else if (section == "features" && key == "default") {
            size_t pos = 0;
            while ((pos = val.find('"', pos)) != std::string::npos) {
                size_t end = val.find('"', pos + 1);
                if (end == std::string::npos) break;
                mf.default_features.insert(val.substr(pos + 1, end - pos - 1));
                pos = end + 1;
            }
        }
    }
    return mf;
}

} // namespace

LoadedCrate load_crate(const std::string& source_root, const std::set<std::string>& features) {
    DiagnosticSink diags;
    auto sources = std::make_shared<SourceMap>();

    fs::path root(source_root);
    auto manifest_text = read_file(root / "Cargo.toml");
    if (!manifest_text) {
        diags.error("no Cargo.toml under " + source_root);
        LoadedCrate out;
        out.sources = sources;
        out.ast = std::make_shared<ast::Crate>();
        out.diagnostics = std::move(diags);
        return out;
    }
    Manifest mf = parse_manifest(*manifest_text);
    if (mf.name.empty()) {
        diags.error("Cargo.toml has no package name");
        mf.name = root.filename().string();
    }
    std::set<std::string> enabled = features.empty() ? mf.default_features : features;

    fs::path lib_path = root / "src" / "lib.rs";
    auto lib_text = read_file(lib_path);
    if (!lib_text) {
        diags.error("no src/lib.rs under " + source_root);
        LoadedCrate out;
        out.sources = sources;
        out.ast = std::make_shared<ast::Crate>();
        out.diagnostics = std::move(diags);
        return out;
    }
    uint32_t root_file = sources->add_file(lib_path.string(), *lib_text);

    frontend::ParseOptions opts;
    fs::path mod_dir = root / "src";
    opts.load_module = [&](const std::string& name)
        -> std::optional<std::pair<uint32_t, std::string>> {
        for (fs::path cand : {mod_dir / (name + ".rs"), mod_dir / name / "mod.rs"}) {
            if (auto text = read_file(cand)) {
                uint32_t id = sources->add_file(cand.string(), *text);
                return std::make_pair(id, *text);
            }
        }
        return std::nullopt;
    };

    auto crate = std::shared_ptr<ast::Crate>(
        frontend::parse_crate(root_file, sources->file_text(root_file), diags, opts));
    if (diags.has_errors()) {
        diags.resolve_locations(*sources);
        LoadedCrate out;
        out.sources = sources;
        out.ast = crate;
        out.diagnostics = std::move(diags);
        out.model.crate_name = mf.name;
        return out;
    }
    return build_model_from_ast(mf.name, crate, sources, enabled, std::move(diags));
}

LoadedCrate load_crate_from_source(const std::string& crate_name, const std::string& lib_rs,
                                   const std::set<std::string>& features) {
    DiagnosticSink diags;
    auto sources = std::make_shared<SourceMap>();
    uint32_t file = sources->add_file(crate_name + "/src/lib.rs", lib_rs);
    auto crate = std::shared_ptr<ast::Crate>(
        frontend::parse_crate(file, sources->file_text(file), diags, {}));
    return build_model_from_ast(crate_name, crate, sources, features, std::move(diags));
}

LoadedCrate load_harness_source(const std::string& name, const std::string& main_rs) {
    DiagnosticSink diags;
    auto sources = std::make_shared<SourceMap>();
    uint32_t file = sources->add_file(name + "/src/main.rs", main_rs);
    frontend::ParseOptions opts;
    opts.opaque_modules = {"fuzz_rt"};
    auto crate = std::shared_ptr<ast::Crate>(
        frontend::parse_crate(file, sources->file_text(file), diags, opts));
    return build_model_from_ast(name, crate, sources, {}, std::move(diags));
}

} // namespace reachfuzz::model
