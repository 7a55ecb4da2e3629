#include <doctest.h>

#include "exec/interp.hpp"
#include "model/crate_model.hpp"

using namespace reachfuzz;
using namespace reachfuzz::model;
using namespace reachfuzz::exec;

namespace {

LoadedCrate load_fixture(const char* name) {
    auto lc = load_crate(std::string(RF_FIXTURE_DIR) + "/" + name);
    INFO(lc.diagnostics.to_string());
    REQUIRE_FALSE(lc.diagnostics.has_errors());
    return lc;
}

LoadedCrate harness_of(const std::string& text) {
    auto lc = load_harness_source("harness", text);
    INFO(lc.diagnostics.to_string());
    REQUIRE_FALSE(lc.diagnostics.has_errors());
    return lc;
}

ExecOutcome run(const LoadedCrate& target, const LoadedCrate& harness,
                std::vector<uint8_t> input) {
    Interpreter interp(&target, &harness);
    return interp.run_input(input);
}

// Harness mirroring the static-generation shape for foo::Shape::foo.
const char* kFooHarness = R"(
#[macro_use]
mod fuzz_rt;
use fuzz_rt::*;
use foo::Shape;
use foo::STrait;
use foo::UTrait;

struct CustomTy0(String);
struct CustomTy1(String);

impl STrait for CustomTy0 {
    fn desc(&self) -> String {
        if _to_u8(DATA, 0) < 32 {
            panic!("INTENTIONAL PANIC!");
        }
        let t2 = _to_u8(DATA, 1);
        return String::from(_to_str(DATA, 2, 2 + t2 as usize));
    }
}

unsafe impl UTrait for CustomTy1 {
    fn u_desc(&self) -> String {
        if _to_u8(DATA, 10) < 32 {
            panic!("INTENTIONAL PANIC!");
        }
        let t3 = _to_u8(DATA, 11);
        return String::from(_to_str(DATA, 12, 12 + t3 as usize));
    }
}

fn main() {
    fuzz_nohook!(|data: &[u8]| {
        if data.len() < 24 { return; }
        set_global_data(data);
        let t0 = Shape::zero();
        let t8 = _to_str(DATA, 20, 22);
        let t9 = CustomTy0(String::from(t8));
        let t10 = _to_str(DATA, 22, 24);
        let t13 = CustomTy1(String::from(t10));
        (&t0).foo(t9, t13);
    });
}
)";

} // namespace

TEST_CASE("foo harness executes clean on benign input") {
    auto target = load_fixture("foo");
    auto harness = harness_of(kFooHarness);
    std::vector<uint8_t> input(24, 200); // no panic branch (bytes >= 32)
    auto out = run(target, harness, input);
    INFO(out.message);
    CHECK(out.kind == OutcomeKind::Ok);
    CHECK_FALSE(out.covered.empty()); // target lines executed
}

TEST_CASE("short input returns through the guard") {
    auto target = load_fixture("foo");
    auto harness = harness_of(kFooHarness);
    auto out = run(target, harness, {1, 2, 3});
    CHECK(out.kind == OutcomeKind::Ok);
    CHECK(out.covered.empty()); // target never entered
}

TEST_CASE("custom-fn panic branch raises the marker panic") {
    auto target = load_fixture("foo");
    auto harness = harness_of(kFooHarness);
    std::vector<uint8_t> input(24, 200);
    input[0] = 5; // desc() takes the panic branch
    auto out = run(target, harness, input);
    CHECK(out.kind == OutcomeKind::Panic);
    CHECK(out.message == kPanicMarker);
    CHECK(out.panic_from_harness);
}

TEST_CASE("grid insert_row with init constructor corrupts memory") {
    auto target = load_fixture("grid2d");
    auto harness = harness_of(R"(
#[macro_use]
mod fuzz_rt;
use fuzz_rt::*;
use grid2d::Grid;

struct CustomTy0(String);

impl Clone for CustomTy0 {
    fn clone(&self) -> CustomTy0 {
        if _to_u8(DATA, 0) < 32 {
            panic!("INTENTIONAL PANIC!");
        }
        CustomTy0(String::from(_to_str(DATA, 1, 3)))
    }
}

fn main() {
    fuzz_nohook!(|data: &[u8]| {
        if data.len() < 40 { return; }
        set_global_data(data);
        let cols = _to_u8(DATA, 4) as usize;
        let rows = _to_u8(DATA, 5) as usize;
        let seed = CustomTy0(String::from(_to_str(DATA, 6, 8)));
        let mut t0 = Grid::init(cols, rows, seed);
        let idx = _to_u8(DATA, 8) as usize;
        let mut row = Vec::new();
        let mut i = 0;
        while i < cols {
            row.push(CustomTy0(String::from(_to_str(DATA, 9, 11))));
            i += 1;
        }
        t0.insert_row(idx, row);
    });
}
)");
    std::vector<uint8_t> input(40, 200);
    input[4] = 2; // cols
    input[5] = 1; // rows
    input[8] = 0; // insert at row 0
    auto out = run(target, harness, input);
    INFO(out.message);
    REQUIRE(out.kind == OutcomeKind::MemoryFault);
    CHECK(out.category == FaultCategory::HeapBufferOverflow);
    // fault frames attribute into the target crate
    REQUIRE_FALSE(out.crate_frames.empty());
    CHECK(out.crate_frames[0].find("insert_row") != std::string::npos);

    // the with_capacity construction path never triggers
    auto harness2 = harness_of(R"(
#[macro_use]
mod fuzz_rt;
use fuzz_rt::*;
use grid2d::Grid;

fn main() {
    fuzz_nohook!(|data: &[u8]| {
        if data.len() < 16 { return; }
        set_global_data(data);
        let mut t0 = Grid::with_capacity(_to_u8(DATA, 0) as usize);
        let mut row = Vec::new();
        row.push(String::from(_to_str(DATA, 1, 3)));
        row.push(String::from(_to_str(DATA, 3, 5)));
        t0.insert_row(0, row);
    });
}
)");
    auto out2 = run(target, harness2, std::vector<uint8_t>(16, 7));
    INFO(out2.message);
    CHECK(out2.kind == OutcomeKind::Ok);
}

TEST_CASE("double free through ptr::read duplication is caught") {
    auto target = load_crate_from_source("dup", R"(
pub struct Holder {
    items: Vec<String>,
}

impl Holder {
    pub fn new() -> Holder {
        let mut items = Vec::new();
        items.push(String::from("payload"));
        Holder { items }
    }

    pub fn poke(&mut self) {
        unsafe {
            let base = self.items.as_mut_ptr();
            let dup = std::ptr::read(base);
            drop(dup);
        }
        self.items.truncate(0);
    }
}
)");
    REQUIRE_FALSE(target.diagnostics.has_errors());
    auto harness = harness_of(R"(
#[macro_use]
mod fuzz_rt;
use fuzz_rt::*;
use dup::Holder;

fn main() {
    fuzz_nohook!(|data: &[u8]| {
        if data.len() < 1 { return; }
        set_global_data(data);
        let mut h = Holder::new();
        h.poke();
    });
}
)");
    auto out = run(target, harness, {1});
    INFO(out.message);
    REQUIRE(out.kind == OutcomeKind::MemoryFault);
    CHECK(out.category == FaultCategory::DoubleFree);
}

TEST_CASE("use after free via stale pointer across vector growth") {
    auto target = load_crate_from_source("uaf", R"(
pub fn stale_read(n: usize) -> u8 {
    let mut v: Vec<u8> = Vec::with_capacity(2);
    v.push(1);
    v.push(2);
    let p = v.as_ptr();
    let mut i = 0;
    while i < n {
        v.push(7); // growth reallocates, freeing the old buffer
        i += 1;
    }
    unsafe { p.read() }
}
)");
    REQUIRE_FALSE(target.diagnostics.has_errors());
    auto harness = harness_of(R"(
#[macro_use]
mod fuzz_rt;
use fuzz_rt::*;
use uaf::stale_read;

fn main() {
    fuzz_nohook!(|data: &[u8]| {
        if data.len() < 1 { return; }
        set_global_data(data);
        let n = _to_u8(DATA, 0) as usize;
        stale_read(n);
    });
}
)");
    auto ok = run(target, harness, {0});
    CHECK(ok.kind == OutcomeKind::Ok);
    auto bad = run(target, harness, {3});
    INFO(bad.message);
    REQUIRE(bad.kind == OutcomeKind::MemoryFault);
    CHECK(bad.category == FaultCategory::UseAfterFree);
}

TEST_CASE("panic unwinding runs drops; drop-detected corruption wins") {
    auto target = load_crate_from_source("panicdrop", R"(
pub struct Guarded {
    items: Vec<String>,
}

impl Guarded {
    pub fn new() -> Guarded {
        let mut items = Vec::new();
        items.push(String::from("a"));
        Guarded { items }
    }

    pub fn explode(&mut self, really: bool) {
        unsafe {
            let base = self.items.as_mut_ptr();
            let dup = std::ptr::read(base);
            drop(dup); // slot 0 now stale; the Drop of `self` double-frees
        }
        if really {
            panic!("library guard");
        }
        self.items.truncate(0);
        self.items.push(String::from("recovered"));
    }
}
)");
    REQUIRE_FALSE(target.diagnostics.has_errors());
    auto harness = harness_of(R"(
#[macro_use]
mod fuzz_rt;
use fuzz_rt::*;
use panicdrop::Guarded;

fn main() {
    fuzz_nohook!(|data: &[u8]| {
        if data.len() < 1 { return; }
        set_global_data(data);
        let mut g = Guarded::new();
        g.explode(_to_bool(DATA, 0));
    });
}
)");
    // really=true: panic starts unwinding, scope drop of `g` hits the stale
    // slot and the corruption supersedes the panic
    auto out = run(target, harness, {1});
    INFO(out.message);
    REQUIRE(out.kind == OutcomeKind::MemoryFault);
    CHECK(out.category == FaultCategory::DoubleFree);
    // really=false: library self-heals, but the stale slot still double-frees
    auto out2 = run(target, harness, {0});
    CHECK(out2.kind == OutcomeKind::MemoryFault);
}

TEST_CASE("oversized allocations abort and are distinguishable") {
    auto target = load_crate_from_source("big", R"(
pub fn reserve_much(n: usize) -> usize {
    let v: Vec<u8> = Vec::with_capacity(n);
    v.capacity()
}
)");
    auto harness = harness_of(R"(
#[macro_use]
mod fuzz_rt;
use fuzz_rt::*;
use big::reserve_much;

fn main() {
    fuzz_nohook!(|data: &[u8]| {
        if data.len() < 8 { return; }
        set_global_data(data);
        reserve_much(_to_usize(DATA, 0));
    });
}
)");
    std::vector<uint8_t> huge(8, 0xff);
    auto out = run(target, harness, huge);
    CHECK(out.kind == OutcomeKind::Oversize);
}

TEST_CASE("decoder totality: any input of guard length decodes in bounds") {
    auto target = load_crate_from_source("nul", "pub fn sink(_a: u8, _b: usize, _c: bool) {}");
    auto harness = harness_of(R"(
#[macro_use]
mod fuzz_rt;
use fuzz_rt::*;
use nul::sink;

fn main() {
    fuzz_nohook!(|data: &[u8]| {
        if data.len() < 4 { return; }
        set_global_data(data);
        let s = _to_str(DATA, 1, 1 + _to_u8(DATA, 0) as usize);
        let n = s.len() + _to_usize(DATA, 60) as usize % 3;
        sink(_to_u8(DATA, 200), n, _to_bool(DATA, 3));
        let t = _next_string(DATA);
        let u = _next_usize(DATA);
        sink(_next_u8(DATA), u as usize % 7 + t.len(), _next_bool(DATA));
    });
}
)");
    // exhaustive short inputs plus patterned longer ones
    for (size_t len = 0; len <= 6; ++len) {
        for (int fill = 0; fill < 256; fill += 51) {
            std::vector<uint8_t> input(len, static_cast<uint8_t>(fill));
            auto out = run(target, harness, input);
            INFO("len=" << len << " fill=" << fill << " msg=" << out.message);
            CHECK((out.kind == OutcomeKind::Ok || out.kind == OutcomeKind::Panic));
        }
    }
}

TEST_CASE("step limit stops runaway loops without a finding") {
    auto target = load_crate_from_source("spin", R"(
pub fn spin_forever() -> usize {
    let mut n = 0usize;
    loop {
        n += 1;
        if n == 0 { return n; }
    }
}
)");
    auto harness = harness_of(R"(
#[macro_use]
mod fuzz_rt;
use fuzz_rt::*;
use spin::spin_forever;

fn main() {
    fuzz_nohook!(|data: &[u8]| {
        if data.len() < 1 { return; }
        set_global_data(data);
        spin_forever();
    });
}
)");
    ExecOptions opts;
    opts.step_limit = 50'000;
    Interpreter interp(&target, &harness, opts);
    auto out = interp.run_input({1});
    CHECK(out.kind == OutcomeKind::StepLimit);
}

TEST_CASE("library panics carry library frames, not the harness marker") {
    auto target = load_fixture("grid2d");
    auto harness = harness_of(R"(
#[macro_use]
mod fuzz_rt;
use fuzz_rt::*;
use grid2d::Grid;

fn main() {
    fuzz_nohook!(|data: &[u8]| {
        if data.len() < 4 { return; }
        set_global_data(data);
        let mut g: Grid<String> = Grid::with_capacity(4);
        let mut row = Vec::new();
        row.push(String::from("x"));
        g.insert_row(9, row); // index out of bounds: library assert fires
    });
}
)");
    auto out = run(target, harness, {9, 9, 9, 9});
    REQUIRE(out.kind == OutcomeKind::Panic);
    CHECK(out.message == "row index out of bounds");
    CHECK_FALSE(out.panic_from_harness);
}
