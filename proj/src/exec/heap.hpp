#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace reachfuzz::exec {

struct Value;
using Cell = std::shared_ptr<Value>;

enum class FaultCategory { HeapBufferOverflow, DoubleFree, UseAfterFree, OtherMemory };

const char* fault_category_name(FaultCategory c);

// Raised when the shadow memory model observes a corruption. Execution of
// the current input halts immediately (no further drops), the way a
// sanitizer aborts the process.
struct MemoryFault {
    FaultCategory category;
    std::string message;
    std::vector<std::string> frames;          // full call stack, innermost first
    std::vector<std::string> crate_frames;    // frames inside the target crate
};

// Allocation larger than the configured limit. Filtered by triage rather
// than reported as a finding.
struct OversizeAbort {
    size_t requested;
    size_t limit;
};

// One tracked allocation: element slots with a fixed stride. Slot cells stay
// alive after free so stale safe references cannot crash the host; raw
// accesses are checked against the freed flag instead.
struct AllocRecord {
    uint64_t id = 0;
    size_t elem_size = 1;
    size_t elem_count = 0; // capacity in elements
    bool freed = false;
    std::vector<Cell> slots;
    std::string origin;
};

class Heap {
public:
    explicit Heap(size_t byte_limit = 1u << 20) : byte_limit_(byte_limit) {}

    uint64_t allocate(size_t elem_count, size_t elem_size, std::string origin);
    void deallocate(uint64_t id);
    AllocRecord& record(uint64_t id);
    const AllocRecord& record(uint64_t id) const;
    bool is_live(uint64_t id) const;

    // byte-granular access check used by raw pointer reads/writes
    void check_access(uint64_t id, int64_t byte_off, size_t len, bool is_write);
    Cell& slot_at(uint64_t id, int64_t byte_off, size_t expect_elem_size, bool is_write);

    size_t live_allocations() const;
    size_t total_allocated_bytes() const { return total_bytes_; }

    // callbacks the interpreter installs so faults carry stack traces
    std::function<std::vector<std::string>()> capture_frames;
    std::function<std::vector<std::string>()> capture_crate_frames;

    [[noreturn]] void fault(FaultCategory cat, std::string message);

private:
    std::vector<std::unique_ptr<AllocRecord>> records_;
    size_t byte_limit_;
    size_t total_bytes_ = 0;
};

} // namespace reachfuzz::exec
