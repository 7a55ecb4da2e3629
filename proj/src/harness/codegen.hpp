#pragma once

#include <map>
#include <string>
#include <vector>

#include "harness/dep_tree.hpp"
#include "model/crate_model.hpp"
#include "typeplan/type_analysis.hpp"

namespace reachfuzz::harness {

enum class FieldSemantic { U8, U16, U32, U64, Usize, Bool, LengthPrefixedString, Selector, RawSlice };

struct DecoderField {
    FieldSemantic semantic = FieldSemantic::U8;
    size_t offset = 0;   // fixed fields; cursor fields use offset = SIZE_MAX
    size_t width = 0;    // consumed bytes (length prefix only, for strings)
    int modulus = 0;     // Selector
    bool cursor = false; // consumed from the monotone cursor, not a fixed slot
    std::string consumer; // what the bytes feed ("Shape::new arg 0", ...)
};

enum class Provenance { Static, Augmented };

struct HarnessArtifact {
    std::string name;        // package/dir name
    std::string source_text; // src/main.rs
    int32_t target_fn = -1;
    std::string target_path;
    std::vector<DecoderField> decoder_layout;
    size_t min_input_len = 0;
    Provenance provenance = Provenance::Static;
    std::vector<std::string> invoked_paths; // crate fn paths called by the source
    bool has_custom_functionality = false;
    bool contains_unsafe = false; // unsafe-impl blocks pending LLM replacement
    uint64_t tree_id = 0;
    std::vector<std::string> degraded_returns; // trait fns whose returns were not synthesizable

    nlohmann::ordered_json to_json() const;
    static HarnessArtifact from_json(const nlohmann::ordered_json& j);
};

// Spec surface for custom-type synthesis; `generate_harness` uses the same
// machinery internally.
struct CustomTypeSpec {
    std::string name;
    std::vector<std::string> implemented_traits;
    std::string source; // struct + impl blocks
    bool is_for_unsafe_trait = false;
};

struct GenOptions {
    std::string crate_name;
    int panic_threshold = 32; // first decoder byte below this panics (~12.5%)
    bool override_defaults = false;
};

struct GenResult {
    bool ok = false;
    HarnessArtifact artifact;
    std::string diagnostic;
};

// [OP] generate_harness — leaves-to-root DFS emission for one bound tree.
GenResult generate_harness(const DependencyTree& tree, const model::CrateModel& model,
                           const GenOptions& opts);

// [OP] synth_custom_impl — fresh type implementing every bound trait.
CustomTypeSpec synth_custom_impl(const typeplan::TraitBoundSet& bounds,
                                 const std::vector<typeplan::TraitFnPlan>& trait_fns,
                                 const model::CrateModel& model, const GenOptions& opts,
                                 int type_index);

// [OP] synth_closure — named fn substituting a closure argument.
std::string synth_closure(const std::vector<model::TypeDescriptor>& params,
                          const model::TypeDescriptor& ret, const std::string& fn_name,
                          const std::string& custom_arg_type, const GenOptions& opts);

// Emitted runtime (src/fuzz_rt.rs): decoder helpers plus the fuzz macro.
std::string fuzz_rt_source();

// Path-dependency manifest for a harness package.
std::string harness_manifest(const std::string& harness_name, const std::string& crate_name,
                             const std::string& crate_path);

// Lays out dir/src/{main.rs,fuzz_rt.rs} and dir/Cargo.toml.
void write_harness_package(const std::string& dir, const HarnessArtifact& artifact,
                           const std::string& crate_name, const std::string& crate_path);

} // namespace reachfuzz::harness
