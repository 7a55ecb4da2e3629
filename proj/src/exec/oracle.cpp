#include "exec/oracle.hpp"

#include <array>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

namespace reachfuzz::exec {

namespace fs = std::filesystem;

int run_command(const std::string& cmdline, std::string& output) {
    output.clear();
    std::string cmd = cmdline + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return -1;
    std::array<char, 4096> buf;
    size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) output.append(buf.data(), n);
    int status = pclose(pipe);
    return status;
}

CompileOracle::CompileOracle(OracleConfig cfg) : cfg_(std::move(cfg)) {}

bool CompileOracle::toolchain_available() const {
    std::string out;
    return run_command(cfg_.rustc_path + " --version", out) == 0;
}

void CompileOracle::require_toolchain() const {
    if (!toolchain_available())
        throw std::runtime_error("compile oracle unavailable: required external tool '" +
                                 cfg_.rustc_path + "' was not found on PATH");
}

CompileResult CompileOracle::compile_target(const std::string& crate_dir,
                                            const std::string& crate_name,
                                            const std::string& out_dir) {
    require_toolchain();
    CompileResult res;
    fs::create_directories(out_dir);
    fs::path lib_rs = fs::path(crate_dir) / "src" / "lib.rs";
    fs::path rlib = fs::path(out_dir) / ("lib" + crate_name + ".rlib");
    std::string cmd = cfg_.rustc_path + " --edition " + cfg_.edition +
                      " --crate-type lib --crate-name " + crate_name + " " + lib_rs.string() +
                      " -o " + rlib.string();
    res.ok = run_command(cmd, res.stderr_text) == 0;
    if (res.ok) res.artifact_path = rlib.string();
    return res;
}

CompileResult CompileOracle::check_harness(const std::string& harness_dir,
                                           const std::string& crate_name,
                                           const std::string& target_rlib,
                                           const std::string& out_dir) {
    require_toolchain();
    CompileResult res;
    fs::create_directories(out_dir);
    fs::path main_rs = fs::path(harness_dir) / "src" / "main.rs";
    std::string name = fs::path(harness_dir).filename().string();
    for (auto& ch : name)
        if (ch == '-' || ch == '.') ch = '_';
    if (name.empty()) name = "harness";

    std::string cmd = cfg_.rustc_path + " --edition " + cfg_.edition + " --crate-name " + name +
                      " " + main_rs.string() + " --extern " + crate_name + "=" + target_rlib;
    if (cfg_.emit_binary) {
        fs::path bin = fs::path(out_dir) / name;
        cmd += " -o " + bin.string();
        res.artifact_path = bin.string();
    } else {
        fs::path meta = fs::path(out_dir) / ("lib" + name + ".rmeta");
        cmd += " --emit=metadata -o " + meta.string();
        res.artifact_path = meta.string();
    }
    res.ok = run_command(cmd, res.stderr_text) == 0;
    if (!res.ok) res.artifact_path.clear();
    return res;
}

} // namespace reachfuzz::exec
