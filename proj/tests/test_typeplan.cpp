#include <doctest.h>

#include "model/crate_model.hpp"
#include "typeplan/type_analysis.hpp"

using namespace reachfuzz;
using namespace reachfuzz::model;
using namespace reachfuzz::typeplan;

namespace {

LoadedCrate load_src(const std::string& src) {
    auto lc = load_crate_from_source("t", src);
    INFO(lc.diagnostics.to_string());
    REQUIRE_FALSE(lc.diagnostics.has_errors());
    return lc;
}

int32_t fn_rec(const CrateModel& m, const std::string& name) {
    for (size_t i = 0; i < m.functions.size(); ++i)
        if (m.items[m.functions[i].item].name == name) return static_cast<int32_t>(i);
    return -1;
}

TypeDescriptor complex_of(const CrateModel& m, const std::string& name) {
    TypeDescriptor d;
    d.shape = Shape::Complex;
    for (const auto& it : m.items)
        if (it.name == name) d.complex_item = it.id;
    d.name = name;
    return d;
}

std::vector<std::string> ctor_names(const std::vector<ConstructorCandidate>& cs,
                                    const CrateModel& m) {
    std::vector<std::string> out;
    for (const auto& c : cs) out.push_back(m.items[m.functions[c.fn_record].item].name);
    return out;
}

} // namespace

TEST_CASE("grid fixture constructors: exactly the three builders") {
    auto lc = load_crate(std::string(RF_FIXTURE_DIR) + "/grid2d");
    REQUIRE_FALSE(lc.diagnostics.has_errors());
    auto ctors = find_constructors(complex_of(lc.model, "Grid"), lc.model);
    auto names = ctor_names(ctors, lc.model);
    std::sort(names.begin(), names.end());
    CHECK(names == std::vector<std::string>{"from_vec", "init", "with_capacity"});
    // deterministic path-lexicographic order
    CHECK(ctors[0].public_path < ctors[1].public_path);
    CHECK(ctors[1].public_path < ctors[2].public_path);
}

TEST_CASE("shape fixture constructors: new and zero") {
    auto lc = load_crate(std::string(RF_FIXTURE_DIR) + "/foo");
    auto ctors = find_constructors(complex_of(lc.model, "Shape"), lc.model);
    auto names = ctor_names(ctors, lc.model);
    std::sort(names.begin(), names.end());
    CHECK(names == std::vector<std::string>{"new", "zero"});
}

TEST_CASE("constructor criteria are individually falsifiable") {
    // baseline: qualifies
    auto ok = load_src(R"(
pub struct W { n: usize }
pub fn make(n: usize) -> W { W { n } }
)");
    CHECK(find_constructors(complex_of(ok.model, "W"), ok.model).size() == 1);

    // (a) not public
    auto priv_fn = load_src(R"(
pub struct W { n: usize }
fn make(n: usize) -> W { W { n } }
)");
    CHECK(find_constructors(complex_of(priv_fn.model, "W"), priv_fn.model).empty());

    // (b) input contains the target (by reference)
    auto takes_target = load_src(R"(
pub struct W { n: usize }
pub fn make(prev: &W, n: usize) -> W { W { n: n + prev.n } }
)");
    CHECK(find_constructors(complex_of(takes_target.model, "W"), takes_target.model).empty());

    // (b) input contains the target nested inside a container
    auto nested = load_src(R"(
pub struct W { n: usize }
pub fn make(prev: Vec<Box<W>>, n: usize) -> W { W { n: n + prev.len() } }
)");
    CHECK(find_constructors(complex_of(nested.model, "W"), nested.model).empty());

    // (c) return type unrelated
    auto wrong_ret = load_src(R"(
pub struct W { n: usize }
pub fn make(n: usize) -> usize { n }
)");
    CHECK(find_constructors(complex_of(wrong_ret.model, "W"), wrong_ret.model).empty());
}

TEST_CASE("wrapped returns: Option, Result, tuple member") {
    auto lc = load_src(R"(
pub struct W { n: usize }
pub fn try_make(n: usize) -> Result<W, String> {
    if n > 100 { return Err(String::from("too big")); }
    Ok(W { n })
}
pub fn maybe_make(n: usize) -> Option<W> {
    if n == 0 { return None; }
    Some(W { n })
}
pub fn make_pair(n: usize) -> (usize, W) { (n, W { n }) }
)");
    auto ctors = find_constructors(complex_of(lc.model, "W"), lc.model);
    REQUIRE(ctors.size() == 3);
    std::map<std::string, ReturnWrapping> by_name;
    std::map<std::string, int> index_by_name;
    for (const auto& c : ctors) {
        std::string n = lc.model.items[lc.model.functions[c.fn_record].item].name;
        by_name[n] = c.wrapping;
        index_by_name[n] = c.tuple_index;
    }
    CHECK(by_name["try_make"] == ReturnWrapping::Result);
    CHECK(by_name["maybe_make"] == ReturnWrapping::Option);
    CHECK(by_name["make_pair"] == ReturnWrapping::TupleMember);
    CHECK(index_by_name["make_pair"] == 1);
}

TEST_CASE("trait bound collection closes over supertraits") {
    auto lc = load_src(R"(
pub trait Tr1 { fn base(&self) -> u8; }
pub trait Tr2: Tr1 { fn ext(&self) -> u8; }
pub fn take<T: Tr2>(x: T) -> u8 { x.ext() }
)");
    int32_t take = fn_rec(lc.model, "take");
    const auto& gp = lc.model.functions[take].generic_params[0];
    TraitBoundSet set = collect_trait_bounds(gp, lc.model);
    CHECK(set.transitively_closed);
    REQUIRE(set.traits.size() == 2);
    CHECK(set.traits[0].first.name == "Tr1");
    CHECK(set.traits[1].first.name == "Tr2");

    // idempotence: closing a closed set changes nothing
    model::GenericParam closed;
    closed.name = gp.name;
    for (const auto& [t, u] : set.traits) closed.bounds.push_back(t);
    TraitBoundSet set2 = collect_trait_bounds(closed, lc.model);
    REQUIRE(set2.traits.size() == set.traits.size());
    for (size_t i = 0; i < set.traits.size(); ++i)
        CHECK(set2.traits[i].first.name == set.traits[i].first.name);
}

TEST_CASE("foo generics carry safe and unsafe trait bounds") {
    auto lc = load_crate(std::string(RF_FIXTURE_DIR) + "/foo");
    int32_t foo = fn_rec(lc.model, "foo");
    const auto& gps = lc.model.functions[foo].generic_params;
    REQUIRE(gps.size() == 2);
    auto s_set = collect_trait_bounds(gps[0], lc.model);
    auto u_set = collect_trait_bounds(gps[1], lc.model);
    REQUIRE(s_set.traits.size() == 1);
    CHECK(s_set.traits[0].first.name == "STrait");
    CHECK_FALSE(s_set.traits[0].second);
    REQUIRE(u_set.traits.size() == 1);
    CHECK(u_set.traits[0].first.name == "UTrait");
    CHECK(u_set.traits[0].second); // unsafe trait
}

TEST_CASE("external trait bound is recorded as opaque") {
    auto lc = load_src(R"(
pub fn show<T: Display>(x: T) {}
)");
    const auto& gp = lc.model.functions[0].generic_params[0];
    TraitBoundSet set = collect_trait_bounds(gp, lc.model);
    REQUIRE(set.traits.size() == 1);
    CHECK(set.traits[0].first.id == kNoItem);
    CHECK(collect_trait_items(set.traits[0].first, lc.model).external_unmodeled);
}

TEST_CASE("collect_trait_items partitions trait functions") {
    auto lc = load_src(R"(
pub trait Stepper {
    type Item: Clone;
    fn next_item(&mut self) -> Option<u8>;
    fn count_items(&mut self) -> usize {
        let mut n = 0;
        while let Some(_x) = self.next_item() { n += 1; }
        n
    }
}
pub trait Silent { fn noise(&self) -> u8 { 0 } }
)");
    ItemId stepper = kNoItem;
    ItemId silent = kNoItem;
    for (const auto& it : lc.model.items) {
        if (it.name == "Stepper") stepper = it.id;
        if (it.name == "Silent") silent = it.id;
    }
    auto items = collect_trait_items(TraitId{stepper, "Stepper"}, lc.model);
    REQUIRE(items.required_fns.size() == 1);
    CHECK(items.required_fns[0].name == "next_item");
    REQUIRE(items.overridable_default_fns.size() == 1);
    CHECK(items.overridable_default_fns[0].name == "count_items");
    REQUIRE(items.associated_types.size() == 1);
    CHECK(items.associated_types[0].name == "Item");
    REQUIRE(items.associated_types[0].bounds.size() == 1);
    CHECK(items.associated_types[0].bounds[0].name == "Clone");

    auto only_defaults = collect_trait_items(TraitId{silent, "Silent"}, lc.model);
    CHECK(only_defaults.required_fns.empty());
    CHECK(only_defaults.overridable_default_fns.size() == 1);
}

TEST_CASE("analyze_args for foo mirrors the dependency layout") {
    auto lc = load_crate(std::string(RF_FIXTURE_DIR) + "/foo");
    int32_t foo = fn_rec(lc.model, "foo");
    auto plans = analyze_args(foo, lc.model);
    REQUIRE(plans.size() == 3); // self, i1, i2

    // self: &Shape with two constructors
    CHECK(plans[0].kind == PlanKind::Reference);
    REQUIRE(plans[0].children.size() == 1);
    const ArgPlan& shape_plan = plans[0].children[0];
    CHECK(shape_plan.kind == PlanKind::Complex);
    REQUIRE(shape_plan.constructors.size() == 2);
    CHECK(shape_plan.constructors[0].public_path == "Shape::new");
    CHECK(shape_plan.constructors[1].public_path == "Shape::zero");
    // Shape::new(sid: u64) recursed into a primitive leaf
    REQUIRE(shape_plan.constructors[0].arg_plans.size() == 1);
    CHECK(shape_plan.constructors[0].arg_plans[0].kind == PlanKind::PrimitiveLeaf);
    CHECK(shape_plan.constructors[1].arg_plans.empty());

    // i1: generic S bounded by STrait, trait fn desc analyzed
    CHECK(plans[1].kind == PlanKind::Generic);
    REQUIRE(plans[1].trait_fns.size() == 1);
    CHECK(plans[1].trait_fns[0].signature.name == "desc");
    CHECK(plans[1].trait_fns[0].trait_ref.name == "STrait");

    // i2: generic U bounded by the unsafe UTrait
    CHECK(plans[2].kind == PlanKind::Generic);
    REQUIRE(plans[2].bounds.traits.size() == 1);
    CHECK(plans[2].bounds.traits[0].second);
    REQUIRE(plans[2].trait_fns.size() == 1);
    CHECK(plans[2].trait_fns[0].signature.name == "u_desc");
}

TEST_CASE("primitive arg yields a single leaf") {
    auto lc = load_src("pub fn f(x: u8) {}");
    auto plans = analyze_args(fn_rec(lc.model, "f"), lc.model);
    REQUIRE(plans.size() == 1);
    CHECK(plans[0].kind == PlanKind::PrimitiveLeaf);
}

TEST_CASE("container arg recurses into complex inner type") {
    auto lc = load_src(R"(
pub struct S { pub id: u8 }
impl S {
    pub fn a() -> S { S { id: 0 } }
    pub fn b(id: u8) -> S { S { id } }
}
pub fn g(v: Vec<S>) -> usize { v.len() }
)");
    auto plans = analyze_args(fn_rec(lc.model, "g"), lc.model);
    REQUIRE(plans.size() == 1);
    CHECK(plans[0].kind == PlanKind::StdContainer);
    REQUIRE(plans[0].children.size() == 1);
    CHECK(plans[0].children[0].kind == PlanKind::Complex);
    CHECK(plans[0].children[0].constructors.size() == 2);
}

TEST_CASE("closure bound becomes a closure plan with signature") {
    auto lc = load_src(R"(
pub struct Holder { n: u8 }
pub fn filter_it<F: FnMut(&mut u8) -> bool>(h: &mut Holder, pred: F) -> bool {
    let mut x = h.n;
    pred(&mut x)
}
)");
    auto plans = analyze_args(fn_rec(lc.model, "filter_it"), lc.model);
    REQUIRE(plans.size() == 2);
    CHECK(plans[1].kind == PlanKind::Closure);
    REQUIRE(plans[1].closure_params.size() == 1);
    CHECK(plans[1].closure_params[0].shape == Shape::Reference);
    CHECK(plans[1].closure_ret.name == "bool");
}

TEST_CASE("unconstructible complex node is flagged, analysis continues") {
    auto lc = load_src(R"(
pub struct Opaque { secret: u8 }
pub fn use_it(o: Opaque, n: u8) -> u8 { o.secret + n }
)");
    auto plans = analyze_args(fn_rec(lc.model, "use_it"), lc.model);
    REQUIRE(plans.size() == 2);
    CHECK(plans[0].kind == PlanKind::Complex);
    CHECK(plans[0].unconstructible);
    CHECK(plans[1].kind == PlanKind::PrimitiveLeaf);
}

TEST_CASE("cycle guard: self-referential constructor chain terminates") {
    auto lc = load_src(R"(
pub struct Fwd { peer: Option<Box<Back>> }
pub struct Back { peer: Option<Box<Fwd>> }
pub fn make_fwd(peer: Option<Box<Back>>) -> Fwd { Fwd { peer } }
pub fn make_back(peer: Option<Box<Fwd>>) -> Back { Back { peer } }
pub fn consume(n: Fwd) -> usize { if n.peer.is_some() { 1 } else { 0 } }
)");
    auto plans = analyze_args(fn_rec(lc.model, "consume"), lc.model);
    REQUIRE(plans.size() == 1);
    const ArgPlan& node = plans[0];
    CHECK(node.kind == PlanKind::Complex);
    // wrap(Box<Node>) recursion hits the guard instead of diverging
    bool saw_guard = false;
    std::function<void(const ArgPlan&)> scan = [&](const ArgPlan& p) {
        if (p.cycle_guard) saw_guard = true;
        for (const auto& c : p.children) scan(c);
        for (const auto& ctor : p.constructors)
            for (const auto& a : ctor.arg_plans) scan(a);
        for (const auto& tf : p.trait_fns)
            for (const auto& a : tf.arg_plans) scan(a);
    };
    scan(node);
    CHECK(saw_guard);
}

TEST_CASE("every leaf is a primitive, flag, marker, or synthesizable node") {
    auto lc = load_crate(std::string(RF_FIXTURE_DIR) + "/grid2d");
    int32_t insert_row = fn_rec(lc.model, "insert_row");
    auto plans = analyze_args(insert_row, lc.model);
    std::function<void(const ArgPlan&)> scan = [&](const ArgPlan& p) {
        bool has_children = !p.children.empty() || !p.constructors.empty() || !p.trait_fns.empty();
        if (!has_children) {
            bool ok = p.kind == PlanKind::PrimitiveLeaf || p.unconstructible || p.cycle_guard ||
                      p.external_opaque || p.kind == PlanKind::Closure ||
                      p.kind == PlanKind::Generic || p.kind == PlanKind::AssociatedType ||
                      p.kind == PlanKind::StdContainer;
            CHECK(ok);
        }
        for (const auto& c : p.children) scan(c);
        for (const auto& ctor : p.constructors)
            for (const auto& a : ctor.arg_plans) scan(a);
        for (const auto& tf : p.trait_fns)
            for (const auto& a : tf.arg_plans) scan(a);
    };
    for (const auto& p : plans) scan(p);
}

TEST_CASE("Clone bound on grid generic is synthesizable") {
    auto lc = load_crate(std::string(RF_FIXTURE_DIR) + "/grid2d");
    int32_t init = fn_rec(lc.model, "init");
    auto plans = analyze_args(init, lc.model);
    REQUIRE(plans.size() == 3);
    const ArgPlan& val = plans[2];
    CHECK(val.kind == PlanKind::Generic);
    CHECK_FALSE(val.external_opaque);
    REQUIRE(val.trait_fns.size() == 1);
    CHECK(val.trait_fns[0].signature.name == "clone");
    CHECK(val.trait_fns[0].signature.ret.name == "Self");
}

TEST_CASE("arg plans serialize to JSON for prompt metadata") {
    auto lc = load_crate(std::string(RF_FIXTURE_DIR) + "/foo");
    auto plans = analyze_args(fn_rec(lc.model, "foo"), lc.model);
    auto j = plans[0].to_json();
    CHECK(j["kind"] == "reference");
    auto dumped = nlohmann::ordered_json::parse(j.dump());
    CHECK(dumped == j);
}
