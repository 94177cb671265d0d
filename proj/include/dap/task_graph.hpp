#pragma once
//
// Drops, amines and the Arcs topology encoding.
//
// An amine type is a static dataflow graph: row 0 of its Arcs table is the
// input function, rows 1..n are child drops and row n+1 is the output
// function.  Each triple (dest, out, in) copies output component `out` of the
// row's producer into input component `in` of drop `dest`.
//

#include "dap/matrix.hpp"

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dap::graph {

using DropTypeId = int;
using AmineTypeId = int;

inline constexpr int kNoAmine = -1;

// ---------------------------------------------------------------------------
// topology encoding

struct Arc {
    int dest = 0;
    int out = 0;
    int in = 0;

    friend auto operator<=>(const Arc&, const Arc&) = default;
};

struct ArcsTable {
    std::vector<std::vector<Arc>> rows;

    int drop_count() const { return static_cast<int>(rows.size()) - 2; }
    int output_row() const { return static_cast<int>(rows.size()) - 1; }

    friend bool operator==(const ArcsTable&, const ArcsTable&) = default;
};

// one line per row, "d o i, d o i"; empty rows are empty lines
std::string dump_arcs(const ArcsTable& arcs);
ArcsTable parse_arcs(std::string_view text);

// ---------------------------------------------------------------------------
// catalog of drop and amine types

using Blocks = std::vector<BlockMatrix>;

// computes the drop's main part from its main inputs (sequential kernel)
using LeafMainFn = Blocks (*)(const Blocks& main, std::size_t leaf_size);
// combines the main part with the additional inputs
using FinishFn = Blocks (*)(Blocks partial, const Blocks& additional);
// true when the drop can be answered without unrolling (e.g. a zero operand)
using TrivialFn = bool (*)(const Blocks& main);

using InputFn = Blocks (*)(const Blocks& main);
using OutputFn = Blocks (*)(const Blocks& collected);

struct DropTypeInfo {
    std::string name;
    int main_inputs = 0;
    int additional_inputs = 0;
    int outputs = 0;
    LeafMainFn leaf_main = nullptr;
    FinishFn finish = nullptr;
    TrivialFn trivial = nullptr;

    // the accumulator may arrive after the drop started
    bool accumulate_late() const { return additional_inputs > 0; }
    int input_count() const { return main_inputs + additional_inputs; }
};

struct AmineType {
    std::string name;
    ArcsTable arcs;
    // drop_types[i] is the type of drop i+1
    std::vector<DropTypeId> drop_types;
    // the input function yields `input_main_outputs` components from the
    // parent's main inputs; components after those pass the parent's
    // additional inputs through unchanged
    int input_main_outputs = 0;
    int input_additional_outputs = 0;
    int output_inputs = 0;
    InputFn input_fn = nullptr;
    OutputFn output_fn = nullptr;

    int input_outputs() const { return input_main_outputs + input_additional_outputs; }
};

class Catalog {
public:
    DropTypeId register_drop_type(DropTypeInfo info);
    // validates the topology; identical re-registration returns the same id
    AmineTypeId register_amine_type(AmineType type);
    void set_unroll(DropTypeId drop, AmineTypeId amine);

    const DropTypeInfo& drop_type(DropTypeId id) const;
    const AmineType& amine_type(AmineTypeId id) const;
    std::optional<AmineTypeId> unroll_of(DropTypeId id) const;
    std::optional<DropTypeId> find_drop_type(std::string_view name) const;

    int drop_type_count() const { return static_cast<int>(drops_.size()); }
    int amine_type_count() const { return static_cast<int>(amines_.size()); }

private:
    std::vector<DropTypeInfo> drops_;
    std::vector<AmineType> amines_;
    std::vector<std::optional<AmineTypeId>> unroll_;
};

// throws MalformedTopology with a description of the first violation
void validate_topology(const Catalog& catalog, const AmineType& type);

// ---------------------------------------------------------------------------
// drop and amine instances

struct PAD {
    int np = 0; // node holding the amine
    int na = kNoAmine; // amine index on that node
    int nd = 0; // drop index within the amine (1-based)

    friend auto operator<=>(const PAD&, const PAD&) = default;
    std::string to_string() const;
};

enum class DropKind : std::uint8_t { FullInput, MainOnly, AdditionalOnly, Result };
enum class DropStatus : std::uint8_t { Waiting, Ready, Dispatched, Done };

using Slots = std::vector<std::optional<BlockMatrix>>;

struct DropDescriptor {
    PAD pad;
    DropTypeId type = 0;
    Slots in_data; // main components first, then additional
    Slots out_data;
    int rec_num = 0;
    int amine_ref = kNoAmine;
    DropKind kind = DropKind::FullInput;

    bool has_main(const DropTypeInfo& info) const;
    bool has_additional(const DropTypeInfo& info) const;
    Blocks main_inputs(const DropTypeInfo& info) const;
    Blocks additional_inputs(const DropTypeInfo& info) const;
    // side length of the first main block
    std::size_t block_size() const;
};

struct AmineInstance {
    int id = kNoAmine;
    PAD parent_pad;
    AmineTypeId type = 0;
    int rec_num = 0; // of the parent drop
    Slots in_data; // parent drop inputs
    Slots collected; // inputs of the output function
    std::vector<DropDescriptor> drops; // drops[i] is drop i+1
    std::vector<DropStatus> status;
    int pending_count = 0;
};

struct WriteOutcome {
    std::vector<int> ready; // drops whose main components just became complete
    // (drop, in_component) additional components written into drops that
    // were already ready or dispatched
    std::vector<std::pair<int, int>> late_additional;
    bool duplicate = false;
};

// unrolls a drop one level; `np` and `id` name the new amine
AmineInstance input_data_to_amine(const Catalog& catalog, const DropDescriptor& drop, int np, int id);

WriteOutcome write_results_to_amine(
    const Catalog& catalog, AmineInstance& amine, int drop_index, const Blocks& out_data);

// an additional input of the parent drop arrived after the amine was made
WriteOutcome write_additional_to_amine(
    const Catalog& catalog, AmineInstance& amine, int additional_index, const BlockMatrix& value);

void mark_dispatched(AmineInstance& amine, int drop_index);
bool amine_complete(const AmineInstance& amine);
Blocks finalize_amine(const Catalog& catalog, const AmineInstance& amine);

// ---------------------------------------------------------------------------
// sequential interpreter

struct InterpreterOptions {
    std::size_t leaf_size = 8;
    // nonzero: execute ready drops in a seeded random order
    std::uint64_t order_seed = 0;
};

struct InterpreterStats {
    std::size_t amines = 0;
    std::size_t leaves = 0;
    std::size_t trivial = 0;
    int max_rec_num = 0;
};

// runs one drop through the catalog, unrolling every drop larger than the
// leaf size; root drop has rec_num `root_rec`
Blocks interpret_drop(const Catalog& catalog, DropTypeId type, const Blocks& inputs,
    const InterpreterOptions& options, InterpreterStats* stats = nullptr, int root_rec = 1);

} // namespace dap::graph
