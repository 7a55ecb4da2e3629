#include <doctest.h>

#include "model/crate_model.hpp"

using namespace reachfuzz;
using namespace reachfuzz::model;

namespace {

LoadedCrate load_src(const std::string& src, std::set<std::string> features = {}) {
    auto lc = load_crate_from_source("t", src, features);
    INFO(lc.diagnostics.to_string());
    REQUIRE_FALSE(lc.diagnostics.has_errors());
    return lc;
}

ItemId find_item(const CrateModel& m, const std::string& name) {
    for (const auto& it : m.items)
        if (it.name == name) return it.id;
    return kNoItem;
}

} // namespace

TEST_CASE("load foo fixture crate from directory") {
    auto lc = load_crate(std::string(RF_FIXTURE_DIR) + "/foo");
    INFO(lc.diagnostics.to_string());
    REQUIRE_FALSE(lc.diagnostics.has_errors());
    const CrateModel& m = lc.model;
    CHECK(m.crate_name == "foo");

    ItemId shape = find_item(m, "Shape");
    REQUIRE(shape != kNoItem);
    CHECK(m.item(shape).kind == ItemKind::Struct);
    CHECK(m.public_path(shape) == "Shape");

    ItemId strait = find_item(m, "STrait");
    ItemId utrait = find_item(m, "UTrait");
    REQUIRE(strait != kNoItem);
    REQUIRE(utrait != kNoItem);
    CHECK_FALSE(m.trait_for(strait)->is_unsafe_trait);
    CHECK(m.trait_for(utrait)->is_unsafe_trait);
    REQUIRE(m.trait_for(strait)->required_fns.size() == 1);
    CHECK(m.trait_for(strait)->required_fns[0].name == "desc");

    // fns: new, zero, foo plus the two trait impls
    std::vector<std::string> names;
    for (const auto& fn : m.functions) names.push_back(m.item(fn.item).name);
    CHECK(std::count(names.begin(), names.end(), "new") == 1);
    CHECK(std::count(names.begin(), names.end(), "zero") == 1);
    CHECK(std::count(names.begin(), names.end(), "foo") == 1);
    CHECK(std::count(names.begin(), names.end(), "desc") == 1);
    CHECK(std::count(names.begin(), names.end(), "u_desc") == 1);

    // foo is a safe fn with exactly one unsafe block; its generics carry the bounds
    const FunctionRecord* foo = nullptr;
    for (const auto& fn : m.functions)
        if (m.item(fn.item).name == "foo") foo = &fn;
    REQUIRE(foo);
    CHECK_FALSE(foo->is_unsafe_fn);
    CHECK(foo->unsafe_block_spans.size() == 1);
    CHECK(foo->self_kind == SelfKind::SharedRef);
    REQUIRE(foo->generic_params.size() == 2);
    CHECK(foo->generic_params[0].bounds[0].name == "STrait");
    CHECK(foo->generic_params[1].bounds[0].name == "UTrait");
    CHECK(m.public_path(foo->item) == "Shape::foo");
}

TEST_CASE("empty crate loads to empty model") {
    auto lc = load_src("");
    CHECK(lc.model.functions.empty());
    CHECK(lc.model.traits.empty());
    CHECK(lc.model.impls.empty());
    // only the synthetic root module item exists
    REQUIRE(lc.model.items.size() == 1);
    CHECK(lc.model.items[0].kind == ItemKind::Module);
}

TEST_CASE("pub fn inside private module is not exported") {
    auto lc = load_src(R"(
mod hidden {
    pub fn secret() {}
}
pub fn open() {}
)");
    ItemId secret = find_item(lc.model, "secret");
    ItemId open = find_item(lc.model, "open");
    REQUIRE(secret != kNoItem);
    CHECK_FALSE(effective_visibility(secret, lc.model));
    CHECK(effective_visibility(open, lc.model));
    CHECK(lc.model.export_table.count(secret) == 0);
}

TEST_CASE("pub use re-export exposes item from private module") {
    auto lc = load_src(R"(
mod a {
    pub mod b {
        pub fn deep() {}
    }
}
mod c {
    pub fn lifted() {}
}
pub use c::lifted;
pub use a::b;
)");
    ItemId lifted = find_item(lc.model, "lifted");
    CHECK(effective_visibility(lifted, lc.model));
    CHECK(lc.model.public_path(lifted) == "lifted");
    // module re-export makes its contents visible
    ItemId deep = find_item(lc.model, "deep");
    CHECK(effective_visibility(deep, lc.model));
    CHECK(lc.model.public_path(deep) == "b::deep");
}

TEST_CASE("visibility monotonicity: opening a module never hides items") {
    const char* closed = R"(
mod m { pub fn f() {} pub struct S { pub x: u8 } }
pub fn g() {}
)";
    const char* open = R"(
pub mod m { pub fn f() {} pub struct S { pub x: u8 } }
pub fn g() {}
)";
    auto lc1 = load_src(closed);
    auto lc2 = load_src(open);
    for (const auto& it : lc1.model.items) {
        if (!effective_visibility(it.id, lc1.model)) continue;
        ItemId other = find_item(lc2.model, it.name);
        REQUIRE(other != kNoItem);
        CHECK(effective_visibility(other, lc2.model));
    }
}

TEST_CASE("effective_visibility rejects unknown ids") {
    auto lc = load_src("pub fn a() {}");
    CHECK_THROWS(effective_visibility(9999, lc.model));
}

TEST_CASE("locate_unsafe: foo crate has exactly one site") {
    auto lc = load_crate(std::string(RF_FIXTURE_DIR) + "/foo");
    auto sites = locate_unsafe(lc.model);
    REQUIRE(sites.size() == 1);
    CHECK(lc.model.item(lc.model.functions[sites[0].fn_record].item).name == "foo");
}

TEST_CASE("locate_unsafe: no unsafe keyword yields empty set") {
    auto lc = load_src("pub fn clean(x: u8) -> u8 { x + 1 }");
    CHECK(locate_unsafe(lc.model).empty());
}

TEST_CASE("locate_unsafe: two disjoint blocks yield two distinct spans") {
    std::string src = R"(
pub fn twice(v: &mut Vec<u8>) {
    unsafe { v.set_len(0); }
    let n = v.capacity();
    unsafe { v.set_len(n); }
}
)";
    auto lc = load_src(src);
    auto sites = locate_unsafe(lc.model);
    REQUIRE(sites.size() == 2);
    CHECK(sites[0].span.lo != sites[1].span.lo);

    // independent oracle: token-level scan for `unsafe {` occurrences
    size_t count = 0, pos = 0;
    while ((pos = src.find("unsafe", pos)) != std::string::npos) {
        size_t brace = src.find_first_not_of(" \t\r\n", pos + 6);
        if (brace != std::string::npos && src[brace] == '{') count++;
        pos += 6;
    }
    CHECK(sites.size() == count);
}

TEST_CASE("unsafe fns contribute their whole body span") {
    auto lc = load_src(R"(
pub unsafe fn raw(v: &Vec<u8>) -> u8 {
    let p = v.as_ptr();
    p.read()
}
)");
    auto sites = locate_unsafe(lc.model);
    REQUIRE(sites.size() == 1);
    const auto& fn = lc.model.functions[sites[0].fn_record];
    CHECK(fn.is_unsafe_fn);
    CHECK(fn.unsafe_block_spans.empty());
}

TEST_CASE("feature-gated items are excluded under default features") {
    const char* src = R"(
#[cfg(feature = "extra")]
pub fn gated() { unsafe { let _x = 0; } }
pub fn always() {}
)";
    auto off = load_src(src);
    CHECK(find_item(off.model, "gated") == kNoItem);
    CHECK(find_item(off.model, "always") != kNoItem);

    auto on = load_src(src, {"extra"});
    CHECK(find_item(on.model, "gated") != kNoItem);
}

TEST_CASE("unsupported items are retained as opaque records") {
    auto lc = load_src(R"(
macro_rules! helper { () => {}; }
pub static LIMIT: usize = 8;
pub fn real() {}
)");
    ItemId helper = find_item(lc.model, "helper");
    ItemId limit = find_item(lc.model, "LIMIT");
    REQUIRE(helper != kNoItem);
    REQUIRE(limit != kNoItem);
    CHECK(lc.model.item(helper).unsupported);
    CHECK(lc.model.item(limit).unsupported);
    CHECK(lc.model.export_table.count(limit) == 0);
}

TEST_CASE("model JSON round-trip is field-wise identical") {
    for (const char* dir : {"/foo", "/serlib"}) {
        auto lc = load_crate(std::string(RF_FIXTURE_DIR) + dir);
        REQUIRE_FALSE(lc.diagnostics.has_errors());
        auto j = lc.model.to_json();
        CrateModel reloaded = CrateModel::from_json(j);
        CHECK(lc.model.equals(reloaded));
        CHECK(reloaded.to_json().dump() == j.dump());
    }
}

TEST_CASE("trait record partitions required and default fns") {
    auto lc = load_src(R"(
pub trait Walker {
    type Item;
    fn next_step(&mut self) -> u8;
    fn total(&mut self) -> u64 {
        let mut acc = 0u64;
        let mut k = 0;
        while k < 3 { acc += self.next_step() as u64; k += 1; }
        acc
    }
}
)");
    REQUIRE(lc.model.traits.size() == 1);
    const auto& tr = lc.model.traits[0];
    REQUIRE(tr.required_fns.size() == 1);
    CHECK(tr.required_fns[0].name == "next_step");
    REQUIRE(tr.default_fns.size() == 1);
    CHECK(tr.default_fns[0].name == "total");
    REQUIRE(tr.associated_types.size() == 1);
    CHECK(tr.associated_types[0].name == "Item");
    // default body got a function record for call-graph analysis
    REQUIRE(tr.default_fn_records.size() == 1);
}

TEST_CASE("supertrait cycles are rejected") {
    auto lc = load_crate_from_source("t", R"(
trait A: B {}
trait B: A {}
)");
    CHECK(lc.diagnostics.has_errors());
}

TEST_CASE("type descriptors cover the supported categories") {
    auto lc = load_src(R"(
pub struct Thing { pub v: u8 }
pub fn sink<T: Clone>(
    a: u8,
    b: Vec<Thing>,
    c: &[u8],
    d: &str,
    e: [u8; 4],
    f: (u8, bool),
    g: Thing,
    h: &mut Thing,
    i: *const u8,
    j: T,
    k: Box<Thing>,
    l: Option<u8>,
) {}
)");
    const FunctionRecord* sink = nullptr;
    for (const auto& fn : lc.model.functions)
        if (lc.model.item(fn.item).name == "sink") sink = &fn;
    REQUIRE(sink);
    REQUIRE(sink->params.size() == 12);
    CHECK(sink->params[0].type.category() == 1);
    CHECK(sink->params[1].type.category() == 2);
    CHECK(sink->params[2].type.category() == 3);
    CHECK(sink->params[3].type.category() == 3);
    CHECK(sink->params[4].type.category() == 4);
    CHECK(sink->params[5].type.category() == 4);
    CHECK(sink->params[6].type.category() == 5);
    CHECK(sink->params[7].type.category() == 6);
    CHECK(sink->params[8].type.category() == 6);
    CHECK(sink->params[9].type.category() == 7);
    CHECK(sink->params[10].type.category() == 2);
    CHECK(sink->params[11].type.category() == 2);
    // Vec<Thing> recurses into the complex inner type
    CHECK(sink->params[1].type.children[0].shape == Shape::Complex);
}

TEST_CASE("serlib model: items and visibility match the source") {
    auto lc = load_crate(std::string(RF_FIXTURE_DIR) + "/serlib");
    REQUIRE_FALSE(lc.diagnostics.has_errors());
    const auto& m = lc.model;
    ItemId unsafe_ser = find_item(m, "unsafe_ser");
    ItemId unsafe_read = find_item(m, "unsafe_read");
    ItemId do_unsafe = find_item(m, "do_unsafe_ser");
    CHECK(effective_visibility(unsafe_ser, m));
    CHECK(effective_visibility(unsafe_read, m));
    CHECK_FALSE(effective_visibility(do_unsafe, m));
    const FunctionRecord* ur = m.function_for(unsafe_read);
    REQUIRE(ur);
    CHECK(ur->is_unsafe_fn);
    // the two trait impls of `process` are not externally reachable (private traits)
    int process_exports = 0;
    for (const auto& fn : m.functions)
        if (m.item(fn.item).name == "process" && m.is_exported(fn.item)) process_exports++;
    CHECK(process_exports == 0);
}
