#pragma once

#include <optional>
#include <string>

namespace reachfuzz::exec {

// External-toolchain compile oracle. Harness sources are accepted or
// rejected by the real compiler, which also enforces ownership discipline
// (no use of moved values) on generated code.
struct OracleConfig {
    std::string rustc_path = "rustc"; // resolved via PATH
    std::string edition = "2021";
    bool emit_binary = false; // default: type/borrow check only (fast)
};

struct CompileResult {
    bool ok = false;
    std::string stderr_text;
    std::string artifact_path; // rlib / rmeta / binary
};

class CompileOracle {
public:
    explicit CompileOracle(OracleConfig cfg = {});

    // Throws std::runtime_error naming the missing tool when rustc is absent.
    void require_toolchain() const;
    bool toolchain_available() const;

    // Compiles the target library crate once; result is cached per (dir).
    CompileResult compile_target(const std::string& crate_dir, const std::string& crate_name,
                                 const std::string& out_dir);

    // Type-checks (or fully builds) one harness package directory laid out as
    // src/main.rs + src/fuzz_rt.rs against a prebuilt target rlib.
    CompileResult check_harness(const std::string& harness_dir, const std::string& crate_name,
                                const std::string& target_rlib, const std::string& out_dir);

private:
    OracleConfig cfg_;
};

// Runs a command, capturing combined stdout+stderr; returns exit status.
int run_command(const std::string& cmdline, std::string& output);

} // namespace reachfuzz::exec
