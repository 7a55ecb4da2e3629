#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "exec/heap.hpp"
#include "exec/value.hpp"
#include "model/crate_model.hpp"

namespace reachfuzz::exec {

// Marker message synthesized custom fns panic with; used by triage to keep
// harness-local assertion failures apart from library panics.
inline constexpr const char* kPanicMarker = "INTENTIONAL PANIC!";

struct ExecOptions {
    size_t alloc_limit_bytes = 1u << 20;
    size_t step_limit = 4'000'000;
    size_t max_call_depth = 192;
    bool overflow_checks = true;
    bool collect_coverage = true;
};

enum class OutcomeKind {
    Ok,
    Panic,          // unwound to the top without corruption
    MemoryFault,    // shadow memory flagged a corruption
    Oversize,       // allocation above the limit (filtered)
    StepLimit,      // input ran too long (treated like a hang, filtered)
    Abort,          // double panic / interpreter hard stop
    SetupError,     // harness shape not executable
};

struct ExecOutcome {
    OutcomeKind kind = OutcomeKind::Ok;
    std::string message;
    FaultCategory category = FaultCategory::OtherMemory;
    std::vector<std::string> frames;       // innermost first
    std::vector<std::string> crate_frames; // subset inside the target crate
    bool panic_from_harness = false;       // marker panic or harness-frame origin
    std::set<std::pair<uint32_t, uint32_t>> covered; // (file, line) in the target crate
};

// Executes one harness (its own parsed crate) against the target crate,
// with shadow-memory checking on every raw-pointer and allocator operation.
class Interpreter {
public:
    Interpreter(const model::LoadedCrate* target, const model::LoadedCrate* harness,
                ExecOptions opts = {});

    // Runs harness `fn main` / fuzz macro body once over `input`.
    ExecOutcome run_input(const std::vector<uint8_t>& input);

    struct Impl;

private:
    const model::LoadedCrate* target_;
    const model::LoadedCrate* harness_;
    ExecOptions opts_;
};

} // namespace reachfuzz::exec
