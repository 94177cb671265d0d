#include "dap/task_graph.hpp"

#include "dap/errors.hpp"

#include <algorithm>
#include <sstream>

namespace dap::graph {

// ---------------------------------------------------------------------------
// text form

std::string dump_arcs(const ArcsTable& arcs)
{
    std::string out;
    for (const auto& row : arcs.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i)
                out += ", ";
            out += std::to_string(row[i].dest) + " " + std::to_string(row[i].out) + " " + std::to_string(row[i].in);
        }
        out += '\n';
    }
    return out;
}

ArcsTable parse_arcs(std::string_view text)
{
    ArcsTable arcs;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos)
            eol = text.size();
        std::string line(text.substr(pos, eol - pos));
        pos = eol + 1;
        std::vector<Arc> row;
        std::stringstream groups(line);
        std::string group;
        while (std::getline(groups, group, ',')) {
            if (group.find_first_not_of(" \t\r") == std::string::npos) {
                if (line.find(',') != std::string::npos)
                    fail(Errc::ParseError, "empty triple in '" + line + "'");
                continue;
            }
            std::istringstream ts(group);
            Arc a;
            std::string extra;
            if (!(ts >> a.dest >> a.out >> a.in) || (ts >> extra))
                fail(Errc::ParseError, "bad triple '" + group + "'");
            row.push_back(a);
        }
        arcs.rows.push_back(std::move(row));
    }
    return arcs;
}

// ---------------------------------------------------------------------------
// catalog

DropTypeId Catalog::register_drop_type(DropTypeInfo info)
{
    if (info.main_inputs < 1 || info.additional_inputs < 0 || info.outputs < 1 || !info.leaf_main)
        fail(Errc::InvalidArgument, "incomplete drop type '" + info.name + "'");
    for (std::size_t i = 0; i < drops_.size(); ++i) {
        const auto& d = drops_[i];
        if (d.name == info.name) {
            if (d.main_inputs == info.main_inputs && d.additional_inputs == info.additional_inputs &&
                d.outputs == info.outputs && d.leaf_main == info.leaf_main && d.finish == info.finish &&
                d.trivial == info.trivial)
                return static_cast<DropTypeId>(i);
            fail(Errc::InvalidArgument, "drop type '" + info.name + "' registered twice with different definitions");
        }
    }
    drops_.push_back(std::move(info));
    unroll_.emplace_back();
    return static_cast<DropTypeId>(drops_.size() - 1);
}

namespace {

bool same_definition(const AmineType& a, const AmineType& b)
{
    return a.name == b.name && a.arcs == b.arcs && a.drop_types == b.drop_types &&
        a.input_main_outputs == b.input_main_outputs && a.input_additional_outputs == b.input_additional_outputs &&
        a.output_inputs == b.output_inputs && a.input_fn == b.input_fn && a.output_fn == b.output_fn;
}

[[noreturn]] void malformed(const AmineType& t, const std::string& what)
{
    fail(Errc::MalformedTopology, "amine '" + t.name + "': " + what);
}

} // namespace

void validate_topology(const Catalog& catalog, const AmineType& type)
{
    const int n = static_cast<int>(type.drop_types.size());
    if (static_cast<int>(type.arcs.rows.size()) != n + 2)
        malformed(type, "expected " + std::to_string(n + 2) + " rows, got " + std::to_string(type.arcs.rows.size()));
    if (!type.input_fn || !type.output_fn)
        malformed(type, "missing input or output function");
    if (type.input_main_outputs < 1 || type.input_additional_outputs < 0 || type.output_inputs < 1)
        malformed(type, "bad component counts");
    for (DropTypeId id : type.drop_types)
        if (id < 0 || id >= catalog.drop_type_count())
            malformed(type, "unknown drop type " + std::to_string(id));

    auto outputs_of = [&](int row) {
        return row == 0 ? type.input_outputs() : catalog.drop_type(type.drop_types[static_cast<std::size_t>(row - 1)]).outputs;
    };
    auto inputs_of = [&](int dest) {
        return dest == n + 1 ? type.output_inputs
                             : catalog.drop_type(type.drop_types[static_cast<std::size_t>(dest - 1)]).input_count();
    };

    // writers[dest][in]
    std::vector<std::vector<int>> writers(static_cast<std::size_t>(n + 2));
    for (int d = 1; d <= n + 1; ++d)
        writers[static_cast<std::size_t>(d)].assign(static_cast<std::size_t>(inputs_of(d)), 0);

    if (!type.arcs.rows.back().empty())
        malformed(type, "output-function row must be empty");

    std::vector<std::vector<int>> edges(static_cast<std::size_t>(n + 2));
    for (int r = 0; r <= n; ++r) {
        for (const Arc& a : type.arcs.rows[static_cast<std::size_t>(r)]) {
            std::string where = "row " + std::to_string(r) + " triple (" + std::to_string(a.dest) + " " +
                std::to_string(a.out) + " " + std::to_string(a.in) + ")";
            if (a.dest < 1 || a.dest > n + 1)
                malformed(type, where + ": dangling destination");
            if (a.dest == r)
                malformed(type, where + ": self loop");
            if (a.out < 0 || a.out >= outputs_of(r))
                malformed(type, where + ": no such output component");
            if (a.in < 0 || a.in >= inputs_of(a.dest))
                malformed(type, where + ": no such input component");
            int& w = writers[static_cast<std::size_t>(a.dest)][static_cast<std::size_t>(a.in)];
            if (++w > 1)
                malformed(type, where + ": input component has two writers");
            edges[static_cast<std::size_t>(r)].push_back(a.dest);
        }
    }
    for (int d = 1; d <= n + 1; ++d)
        for (std::size_t i = 0; i < writers[static_cast<std::size_t>(d)].size(); ++i)
            if (writers[static_cast<std::size_t>(d)][i] == 0)
                malformed(type, "input " + std::to_string(i) + " of row " + std::to_string(d) + " has no writer");

    // Kahn's algorithm over rows
    std::vector<int> indegree(static_cast<std::size_t>(n + 2), 0);
    for (const auto& e : edges)
        for (int d : e)
            ++indegree[static_cast<std::size_t>(d)];
    std::vector<int> queue{0};
    int visited = 0;
    while (!queue.empty()) {
        int r = queue.back();
        queue.pop_back();
        ++visited;
        for (int d : edges[static_cast<std::size_t>(r)])
            if (--indegree[static_cast<std::size_t>(d)] == 0)
                queue.push_back(d);
    }
    if (visited != n + 2)
        malformed(type, "graph has a cycle or unreachable rows");
}

AmineTypeId Catalog::register_amine_type(AmineType type)
{
    validate_topology(*this, type);
    for (std::size_t i = 0; i < amines_.size(); ++i) {
        if (amines_[i].name == type.name) {
            if (same_definition(amines_[i], type))
                return static_cast<AmineTypeId>(i);
            fail(Errc::InvalidArgument, "amine type '" + type.name + "' registered twice with different definitions");
        }
    }
    amines_.push_back(std::move(type));
    return static_cast<AmineTypeId>(amines_.size() - 1);
}

void Catalog::set_unroll(DropTypeId drop, AmineTypeId amine)
{
    const auto& d = drop_type(drop);
    const auto& a = amine_type(amine);
    if (a.input_additional_outputs != d.additional_inputs)
        fail(Errc::InvalidArgument, "amine '" + a.name + "' does not pass through the additional inputs of '" + d.name + "'");
    unroll_[static_cast<std::size_t>(drop)] = amine;
}

const DropTypeInfo& Catalog::drop_type(DropTypeId id) const
{
    if (id < 0 || id >= drop_type_count())
        fail(Errc::InvalidArgument, "unknown drop type " + std::to_string(id));
    return drops_[static_cast<std::size_t>(id)];
}

const AmineType& Catalog::amine_type(AmineTypeId id) const
{
    if (id < 0 || id >= amine_type_count())
        fail(Errc::InvalidArgument, "unknown amine type " + std::to_string(id));
    return amines_[static_cast<std::size_t>(id)];
}

std::optional<AmineTypeId> Catalog::unroll_of(DropTypeId id) const
{
    (void)drop_type(id);
    return unroll_[static_cast<std::size_t>(id)];
}

std::optional<DropTypeId> Catalog::find_drop_type(std::string_view name) const
{
    for (std::size_t i = 0; i < drops_.size(); ++i)
        if (drops_[i].name == name)
            return static_cast<DropTypeId>(i);
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// descriptors

std::string PAD::to_string() const
{
    return "(" + std::to_string(np) + "," + std::to_string(na) + "," + std::to_string(nd) + ")";
}

bool DropDescriptor::has_main(const DropTypeInfo& info) const
{
    if (static_cast<int>(in_data.size()) < info.main_inputs)
        return false;
    for (int i = 0; i < info.main_inputs; ++i)
        if (!in_data[static_cast<std::size_t>(i)])
            return false;
    return true;
}

bool DropDescriptor::has_additional(const DropTypeInfo& info) const
{
    if (static_cast<int>(in_data.size()) < info.input_count())
        return false;
    for (int i = info.main_inputs; i < info.input_count(); ++i)
        if (!in_data[static_cast<std::size_t>(i)])
            return false;
    return true;
}

Blocks DropDescriptor::main_inputs(const DropTypeInfo& info) const
{
    if (!has_main(info))
        fail(Errc::MissingMainComponents, "drop " + pad.to_string() + " of type '" + info.name + "'");
    Blocks out;
    for (int i = 0; i < info.main_inputs; ++i)
        out.push_back(*in_data[static_cast<std::size_t>(i)]);
    return out;
}

Blocks DropDescriptor::additional_inputs(const DropTypeInfo& info) const
{
    if (!has_additional(info))
        fail(Errc::InvalidArgument, "drop " + pad.to_string() + " lacks additional components");
    Blocks out;
    for (int i = info.main_inputs; i < info.input_count(); ++i)
        out.push_back(*in_data[static_cast<std::size_t>(i)]);
    return out;
}

std::size_t DropDescriptor::block_size() const
{
    for (const auto& s : in_data)
        if (s)
            return s->size();
    return 0;
}

// ---------------------------------------------------------------------------
// amine instances

namespace {

void put_slot(std::optional<BlockMatrix>& slot, const BlockMatrix& value, const std::string& where)
{
    if (slot) {
        if (!(*slot == value))
            fail(Errc::DoubleCompletion, "divergent value written to " + where);
        return;
    }
    slot = value;
}

void route(const Catalog& catalog, AmineInstance& amine, int row, int out, const BlockMatrix& value,
    WriteOutcome& outcome)
{
    const AmineType& at = catalog.amine_type(amine.type);
    const int out_row = at.arcs.output_row();
    for (const Arc& a : at.arcs.rows[static_cast<std::size_t>(row)]) {
        if (a.out != out)
            continue;
        if (a.dest == out_row) {
            put_slot(amine.collected[static_cast<std::size_t>(a.in)], value,
                "output function input " + std::to_string(a.in));
            continue;
        }
        auto di = static_cast<std::size_t>(a.dest - 1);
        DropDescriptor& d = amine.drops[di];
        const DropTypeInfo& info = catalog.drop_type(d.type);
        put_slot(d.in_data[static_cast<std::size_t>(a.in)], value, "drop " + d.pad.to_string());
        if (a.in < info.main_inputs) {
            if (amine.status[di] == DropStatus::Waiting && d.has_main(info)) {
                amine.status[di] = DropStatus::Ready;
                d.kind = d.has_additional(info) ? DropKind::FullInput : DropKind::MainOnly;
                outcome.ready.push_back(a.dest);
            }
        } else {
            if (amine.status[di] == DropStatus::Dispatched)
                outcome.late_additional.emplace_back(a.dest, a.in);
            if (amine.status[di] == DropStatus::Ready && d.has_additional(info))
                d.kind = DropKind::FullInput;
        }
    }
}

} // namespace

AmineInstance input_data_to_amine(const Catalog& catalog, const DropDescriptor& drop, int np, int id)
{
    const DropTypeInfo& info = catalog.drop_type(drop.type);
    Blocks main = drop.main_inputs(info);
    auto at_id = catalog.unroll_of(drop.type);
    if (!at_id)
        fail(Errc::InvalidArgument, "drop type '" + info.name + "' has no amine type");
    const AmineType& at = catalog.amine_type(*at_id);

    AmineInstance amine;
    amine.id = id;
    amine.parent_pad = drop.pad;
    amine.type = *at_id;
    amine.rec_num = drop.rec_num;
    amine.in_data = drop.in_data;
    amine.in_data.resize(static_cast<std::size_t>(info.input_count()));
    amine.collected.resize(static_cast<std::size_t>(at.output_inputs));
    const int n = static_cast<int>(at.drop_types.size());
    for (int i = 1; i <= n; ++i) {
        DropDescriptor child;
        child.type = at.drop_types[static_cast<std::size_t>(i - 1)];
        const DropTypeInfo& ci = catalog.drop_type(child.type);
        child.pad = PAD{np, id, i};
        child.in_data.resize(static_cast<std::size_t>(ci.input_count()));
        child.out_data.resize(static_cast<std::size_t>(ci.outputs));
        child.rec_num = drop.rec_num + 1;
        child.amine_ref = id;
        child.kind = DropKind::MainOnly;
        amine.drops.push_back(std::move(child));
    }
    amine.status.assign(static_cast<std::size_t>(n), DropStatus::Waiting);
    amine.pending_count = n;

    Blocks outputs = at.input_fn(main);
    if (static_cast<int>(outputs.size()) != at.input_main_outputs)
        fail(Errc::MalformedTopology, "input function of '" + at.name + "' returned " +
                std::to_string(outputs.size()) + " components");
    WriteOutcome ignored;
    for (int o = 0; o < at.input_main_outputs; ++o)
        route(catalog, amine, 0, o, outputs[static_cast<std::size_t>(o)], ignored);
    for (int k = 0; k < at.input_additional_outputs; ++k) {
        const auto& slot = amine.in_data[static_cast<std::size_t>(info.main_inputs + k)];
        if (slot)
            route(catalog, amine, 0, at.input_main_outputs + k, *slot, ignored);
    }
    return amine;
}

WriteOutcome write_results_to_amine(
    const Catalog& catalog, AmineInstance& amine, int drop_index, const Blocks& out_data)
{
    if (drop_index < 1 || drop_index > static_cast<int>(amine.drops.size()))
        fail(Errc::InvalidArgument, "no drop " + std::to_string(drop_index) + " in amine " + std::to_string(amine.id));
    auto di = static_cast<std::size_t>(drop_index - 1);
    DropDescriptor& d = amine.drops[di];
    const DropTypeInfo& info = catalog.drop_type(d.type);
    if (static_cast<int>(out_data.size()) != info.outputs)
        fail(Errc::InvalidArgument, "drop " + d.pad.to_string() + " returned " + std::to_string(out_data.size()) +
                " outputs, expected " + std::to_string(info.outputs));
    WriteOutcome outcome;
    if (amine.status[di] == DropStatus::Done) {
        for (std::size_t o = 0; o < out_data.size(); ++o)
            if (!(*d.out_data[o] == out_data[o]))
                fail(Errc::DoubleCompletion, "drop " + d.pad.to_string() + " completed twice with different results");
        outcome.duplicate = true;
        return outcome;
    }
    for (std::size_t o = 0; o < out_data.size(); ++o)
        d.out_data[o] = out_data[o];
    amine.status[di] = DropStatus::Done;
    --amine.pending_count;
    for (int o = 0; o < info.outputs; ++o)
        route(catalog, amine, drop_index, o, out_data[static_cast<std::size_t>(o)], outcome);
    return outcome;
}

WriteOutcome write_additional_to_amine(
    const Catalog& catalog, AmineInstance& amine, int additional_index, const BlockMatrix& value)
{
    const AmineType& at = catalog.amine_type(amine.type);
    if (additional_index < 0 || additional_index >= at.input_additional_outputs)
        fail(Errc::InvalidArgument, "amine '" + at.name + "' has no additional input " + std::to_string(additional_index));
    const std::size_t main_count = amine.in_data.size() - static_cast<std::size_t>(at.input_additional_outputs);
    auto& target = amine.in_data[main_count + static_cast<std::size_t>(additional_index)];
    WriteOutcome outcome;
    if (target) {
        if (!(*target == value))
            fail(Errc::DoubleCompletion, "divergent additional input for amine " + std::to_string(amine.id));
        outcome.duplicate = true;
        return outcome;
    }
    target = value;
    route(catalog, amine, 0, at.input_main_outputs + additional_index, value, outcome);
    return outcome;
}

void mark_dispatched(AmineInstance& amine, int drop_index)
{
    auto& s = amine.status.at(static_cast<std::size_t>(drop_index - 1));
    if (s != DropStatus::Done)
        s = DropStatus::Dispatched;
}

bool amine_complete(const AmineInstance& amine)
{
    if (amine.pending_count != 0)
        return false;
    return std::all_of(amine.collected.begin(), amine.collected.end(), [](const auto& s) { return s.has_value(); });
}

Blocks finalize_amine(const Catalog& catalog, const AmineInstance& amine)
{
    if (!amine_complete(amine))
        fail(Errc::NotComplete, "amine " + std::to_string(amine.id) + " has " + std::to_string(amine.pending_count) +
                " unfinished drops");
    const AmineType& at = catalog.amine_type(amine.type);
    Blocks collected;
    for (const auto& s : amine.collected)
        collected.push_back(*s);
    return at.output_fn(collected);
}

// ---------------------------------------------------------------------------
// interpreter

namespace {

struct Interpreter {
    const Catalog& catalog;
    const InterpreterOptions& options;
    InterpreterStats& stats;
    Rng rng;
    int next_amine = 0;

    Blocks run(const DropDescriptor& drop)
    {
        const DropTypeInfo& info = catalog.drop_type(drop.type);
        stats.max_rec_num = std::max(stats.max_rec_num, drop.rec_num);
        Blocks main = drop.main_inputs(info);
        bool trivial = info.trivial && info.trivial(main);
        if (trivial || drop.block_size() <= options.leaf_size || !catalog.unroll_of(drop.type)) {
            if (trivial)
                ++stats.trivial;
            else
                ++stats.leaves;
            Blocks partial = info.leaf_main(main, options.leaf_size);
            if (info.additional_inputs == 0)
                return partial;
            return info.finish(std::move(partial), drop.additional_inputs(info));
        }
        ++stats.amines;
        AmineInstance amine = input_data_to_amine(catalog, drop, 0, next_amine++);
        for (;;) {
            std::vector<int> runnable;
            for (std::size_t i = 0; i < amine.drops.size(); ++i) {
                if (amine.status[i] != DropStatus::Ready)
                    continue;
                const auto& d = amine.drops[i];
                if (d.has_additional(catalog.drop_type(d.type)))
                    runnable.push_back(static_cast<int>(i) + 1);
            }
            if (runnable.empty())
                break;
            std::size_t pick = 0;
            if (options.order_seed != 0)
                pick = static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(runnable.size()) - 1));
            int idx = runnable[pick];
            mark_dispatched(amine, idx);
            Blocks out = run(amine.drops[static_cast<std::size_t>(idx - 1)]);
            write_results_to_amine(catalog, amine, idx, out);
        }
        return finalize_amine(catalog, amine);
    }
};

} // namespace

Blocks interpret_drop(const Catalog& catalog, DropTypeId type, const Blocks& inputs, const InterpreterOptions& options,
    InterpreterStats* stats, int root_rec)
{
    const DropTypeInfo& info = catalog.drop_type(type);
    if (static_cast<int>(inputs.size()) != info.input_count())
        fail(Errc::InvalidArgument, "drop type '" + info.name + "' takes " + std::to_string(info.input_count()) +
                " inputs");
    DropDescriptor root;
    root.type = type;
    root.pad = PAD{0, kNoAmine, 0};
    root.rec_num = root_rec;
    for (const auto& b : inputs)
        root.in_data.emplace_back(b);
    root.out_data.resize(static_cast<std::size_t>(info.outputs));
    InterpreterStats local;
    Interpreter interp{catalog, options, stats ? *stats : local, Rng(options.order_seed), 0};
    return interp.run(root);
}

} // namespace dap::graph
