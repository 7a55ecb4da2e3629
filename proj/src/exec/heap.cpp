#include "exec/heap.hpp"

#include "exec/value.hpp"

namespace reachfuzz::exec {

const char* fault_category_name(FaultCategory c) {
    switch (c) {
        case FaultCategory::HeapBufferOverflow: return "heap-buffer-overflow";
        case FaultCategory::DoubleFree: return "double-free";
        case FaultCategory::UseAfterFree: return "use-after-free";
        case FaultCategory::OtherMemory: return "other-memory";
    }
    return "?";
}

void Heap::fault(FaultCategory cat, std::string message) {
    MemoryFault f;
    f.category = cat;
    f.message = std::move(message);
    if (capture_frames) f.frames = capture_frames();
    if (capture_crate_frames) f.crate_frames = capture_crate_frames();
    throw f;
}

uint64_t Heap::allocate(size_t elem_count, size_t elem_size, std::string origin) {
    size_t bytes = elem_count * elem_size;
    if (bytes > byte_limit_) throw OversizeAbort{bytes, byte_limit_};
    auto rec = std::make_unique<AllocRecord>();
    rec->id = records_.size() + 1; // 0 stays the null/dangling sentinel
    rec->elem_size = elem_size == 0 ? 1 : elem_size;
    rec->elem_count = elem_count;
    rec->origin = std::move(origin);
    rec->slots.resize(elem_count);
    for (auto& s : rec->slots) s = std::make_shared<Value>(make_uninit());
    total_bytes_ += bytes;
    records_.push_back(std::move(rec));
    return records_.back()->id;
}

AllocRecord& Heap::record(uint64_t id) {
    if (id == 0 || id > records_.size())
        fault(FaultCategory::OtherMemory, "access through null or wild pointer");
    return *records_[id - 1];
}

const AllocRecord& Heap::record(uint64_t id) const { return *records_.at(id - 1); }

bool Heap::is_live(uint64_t id) const {
    return id != 0 && id <= records_.size() && !records_[id - 1]->freed;
}

void Heap::deallocate(uint64_t id) {
    AllocRecord& rec = record(id);
    if (rec.freed)
        fault(FaultCategory::DoubleFree,
              "double free of allocation #" + std::to_string(id) + " (" + rec.origin + ")");
    rec.freed = true;
}

void Heap::check_access(uint64_t id, int64_t byte_off, size_t len, bool is_write) {
    AllocRecord& rec = record(id);
    if (rec.freed)
        fault(FaultCategory::UseAfterFree,
              std::string(is_write ? "write" : "read") + " to freed allocation #" +
                  std::to_string(id) + " (" + rec.origin + ")");
    int64_t size = static_cast<int64_t>(rec.elem_count * rec.elem_size);
    if (byte_off < 0 || byte_off + static_cast<int64_t>(len) > size)
        fault(FaultCategory::HeapBufferOverflow,
              std::string(is_write ? "write" : "read") + " of " + std::to_string(len) +
                  " bytes at offset " + std::to_string(byte_off) + " past allocation #" +
                  std::to_string(id) + " of size " + std::to_string(size) + " (" + rec.origin + ")");
}

Cell& Heap::slot_at(uint64_t id, int64_t byte_off, size_t expect_elem_size, bool is_write) {
    check_access(id, byte_off, expect_elem_size, is_write);
    AllocRecord& rec = record(id);
    size_t idx = static_cast<size_t>(byte_off) / rec.elem_size;
    if (idx >= rec.slots.size())
        fault(FaultCategory::HeapBufferOverflow, "slot index past allocation end");
    return rec.slots[idx];
}

size_t Heap::live_allocations() const {
    size_t n = 0;
    for (const auto& r : records_)
        if (!r->freed) n++;
    return n;
}

} // namespace reachfuzz::exec
