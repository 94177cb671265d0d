#include <doctest.h>

#include "dap/errors.hpp"
#include "dap/kernels.hpp"
#include "dap/task_graph.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <set>

using namespace dap;
using namespace dap::graph;
using dap::testing::code_of;

namespace {

const ScalarMode kQ = ScalarMode::rational();
const ScalarMode kD = ScalarMode::double_precision();

BlockMatrix golden_a()
{
    return BlockMatrix::from_ints(4, kQ, {16, 24, 28, 4, 24, 72, 42, 42, 28, 42, 85, 13, 4, 42, 13, 74});
}

DropDescriptor root_drop(DropType type, const Blocks& inputs, int rec = 1)
{
    const auto& info = standard_catalog().drop_type(id_of(type));
    DropDescriptor d;
    d.type = id_of(type);
    d.rec_num = rec;
    for (const auto& b : inputs)
        d.in_data.emplace_back(b);
    d.in_data.resize(static_cast<std::size_t>(info.input_count()));
    d.out_data.resize(static_cast<std::size_t>(info.outputs));
    return d;
}

Blocks run_direct(DropType type, const Blocks& in, std::size_t leaf)
{
    LeafConfig cfg{leaf};
    switch (type) {
    case DropType::Multiply: return {multiply(in[0], in[1], cfg)};
    case DropType::InvertLower: return {invert_lower_triangular(in[0], cfg)};
    case DropType::Cholesky: {
        CholeskyResult r = cholesky(in[0], cfg);
        return {r.L, r.L_inv};
    }
    default: break;
    }
    return {};
}

Blocks inputs_for(DropType type, std::uint64_t seed, std::size_t n, const ScalarMode& mode)
{
    switch (type) {
    case DropType::Multiply:
        return {random_sparse(seed, n, 0.6, mode, -9, 9), random_sparse(seed + 1, n, 0.6, mode, -9, 9)};
    case DropType::InvertLower: return {random_lower_triangular(seed, n, mode)};
    default: break;
    }
    return {random_spd(seed, n, mode).A};
}

// every writer duplicated onto an already-written slot is caught
AmineType with_rows(const AmineType& t, std::vector<std::vector<Arc>> rows)
{
    AmineType out = t;
    out.arcs.rows = std::move(rows);
    return out;
}

} // namespace

TEST_SUITE("task_graph")
{
    TEST_CASE("cholesky topology row 1")
    {
        Topology t = amine_topology(Algorithm::Cholesky);
        CHECK(t.drop_types.size() == 6);
        std::string dump = dump_arcs(t.arcs);
        CHECK(dump.substr(dump.find('\n') + 1, dump.find('\n', dump.find('\n') + 1) - dump.find('\n') - 1) ==
            "7 0 0, 2 1 0, 5 1 1, 7 1 3");
    }

    TEST_CASE("drop counts per algorithm")
    {
        Topology mul = amine_topology(Algorithm::Multiply);
        CHECK(mul.drop_types.size() == 8);
        CHECK(std::count(mul.drop_types.begin(), mul.drop_types.end(), id_of(DropType::Multiply)) == 4);
        CHECK(std::count(mul.drop_types.begin(), mul.drop_types.end(), id_of(DropType::MultiplyAdd)) == 4);
        Topology inv = amine_topology(Algorithm::TriangularInverse);
        CHECK(inv.drop_types ==
            std::vector<DropTypeId>{id_of(DropType::InvertLower), id_of(DropType::InvertLower),
                id_of(DropType::Multiply), id_of(DropType::MultiplyNeg)});
    }

    TEST_CASE("w1 depends on exactly two drops")
    {
        Topology t = amine_topology(Algorithm::Multiply);
        int out_row = t.arcs.output_row();
        // who writes output-function input 0, and who feeds that drop
        std::vector<int> writers;
        for (int r = 0; r < out_row; ++r)
            for (const Arc& a : t.arcs.rows[static_cast<std::size_t>(r)])
                if (a.dest == out_row && a.in == 0)
                    writers.push_back(r);
        REQUIRE(writers.size() == 1);
        std::set<int> feeders;
        for (int r = 1; r < out_row; ++r)
            for (const Arc& a : t.arcs.rows[static_cast<std::size_t>(r)])
                if (a.dest == writers[0])
                    feeders.insert(r);
        CHECK(feeders.size() == 1);
        // a*l feeds b*n as its accumulator
        CHECK(*feeders.begin() == 1);
        CHECK(writers[0] == 5);
    }

    TEST_CASE("every drop is targeted and every output consumed")
    {
        for (Algorithm alg : {Algorithm::Multiply, Algorithm::TriangularInverse, Algorithm::Cholesky}) {
            Topology t = amine_topology(alg);
            std::set<int> targeted;
            for (const auto& row : t.arcs.rows)
                for (const Arc& a : row)
                    targeted.insert(a.dest);
            for (int d = 1; d <= t.arcs.drop_count(); ++d) {
                CHECK(targeted.count(d) == 1);
                CHECK(!t.arcs.rows[static_cast<std::size_t>(d)].empty());
            }
            CHECK(targeted.count(t.arcs.output_row()) == 1);
            CHECK(t.arcs.rows.back().empty());
        }
    }

    TEST_CASE("standard catalog registers all amine types and round trips the dump")
    {
        const Catalog& cat = standard_catalog();
        CHECK(cat.drop_type_count() == 8);
        for (int d = 0; d < cat.drop_type_count(); ++d) {
            auto at = cat.unroll_of(d);
            REQUIRE(at.has_value());
            const AmineType& t = cat.amine_type(*at);
            CHECK(parse_arcs(dump_arcs(t.arcs)) == t.arcs);
        }
        CHECK(cat.find_drop_type("Cholesky") == id_of(DropType::Cholesky));
        CHECK(!cat.find_drop_type("Strassen"));
    }

    TEST_CASE("registration is idempotent")
    {
        Catalog cat = standard_catalog();
        const AmineType& chol = cat.amine_type(*cat.unroll_of(id_of(DropType::Cholesky)));
        int before = cat.amine_type_count();
        CHECK(cat.register_amine_type(chol) == *cat.unroll_of(id_of(DropType::Cholesky)));
        CHECK(cat.amine_type_count() == before);
        AmineType renamed = chol;
        renamed.output_fn = nullptr;
        CHECK(code_of([&] { cat.register_amine_type(renamed); }) == Errc::MalformedTopology);
    }

    TEST_CASE("malformed topologies are rejected")
    {
        Catalog cat = standard_catalog();
        const AmineType& inv = cat.amine_type(*cat.unroll_of(id_of(DropType::InvertLower)));
        auto rows = inv.arcs.rows;

        auto two_writers = rows;
        two_writers[1].push_back({4, 0, 0}); // drop 2 already writes (4,0,0)
        CHECK(code_of([&] { validate_topology(cat, with_rows(inv, two_writers)); }) == Errc::MalformedTopology);

        auto dangling = rows;
        dangling[1].push_back({9, 0, 0});
        CHECK(code_of([&] { validate_topology(cat, with_rows(inv, dangling)); }) == Errc::MalformedTopology);

        auto missing = rows;
        missing[3].clear();
        CHECK(code_of([&] { validate_topology(cat, with_rows(inv, missing)); }) == Errc::MalformedTopology);

        auto bad_out = rows;
        bad_out[3][0].out = 1; // Multiply has one output
        CHECK(code_of([&] { validate_topology(cat, with_rows(inv, bad_out)); }) == Errc::MalformedTopology);

        auto out_row = rows;
        out_row.back().push_back({1, 0, 0});
        CHECK(code_of([&] { validate_topology(cat, with_rows(inv, out_row)); }) == Errc::MalformedTopology);

        auto short_table = rows;
        short_table.pop_back();
        CHECK(code_of([&] { validate_topology(cat, with_rows(inv, short_table)); }) == Errc::MalformedTopology);

        // drop 4 feeds drop 3, which feeds drop 4
        auto cycle = rows;
        cycle[1] = {{5, 0, 0}};
        cycle[4] = {{5, 0, 1}, {3, 0, 1}};
        CHECK(code_of([&] { validate_topology(cat, with_rows(inv, cycle)); }) == Errc::MalformedTopology);
    }

    TEST_CASE("fuzzed double writers never pass validation")
    {
        const Catalog& cat = standard_catalog();
        Rng rng(2024);
        for (Algorithm alg : {Algorithm::Multiply, Algorithm::TriangularInverse, Algorithm::Cholesky}) {
            DropType dt = alg == Algorithm::Multiply ? DropType::Multiply
                : alg == Algorithm::Cholesky        ? DropType::Cholesky
                                                    : DropType::InvertLower;
            const AmineType& base = cat.amine_type(*cat.unroll_of(id_of(dt)));
            for (int trial = 0; trial < 200; ++trial) {
                auto rows = base.arcs.rows;
                // copy a random existing arc into a random other producer row
                std::vector<Arc> all;
                for (const auto& r : rows)
                    all.insert(all.end(), r.begin(), r.end());
                Arc a = all[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(all.size()) - 1))];
                long row = rng.uniform_int(0, static_cast<long>(rows.size()) - 2);
                rows[static_cast<std::size_t>(row)].push_back(a);
                CHECK(code_of([&] { validate_topology(cat, with_rows(base, rows)); }) == Errc::MalformedTopology);
            }
        }
    }

    TEST_CASE("arcs text parsing")
    {
        ArcsTable t = parse_arcs("1 0 0, 2 1 1\n\n3 0 0\n");
        REQUIRE(t.rows.size() == 3);
        CHECK(t.rows[0] == std::vector<Arc>{{1, 0, 0}, {2, 1, 1}});
        CHECK(t.rows[1].empty());
        CHECK(code_of([] { parse_arcs("1 0\n"); }) == Errc::ParseError);
        CHECK(code_of([] { parse_arcs("1 0 0 4\n"); }) == Errc::ParseError);
        CHECK(code_of([] { parse_arcs("1 0 0,,2 0 0\n"); }) == Errc::ParseError);
    }

    TEST_CASE("unrolling the golden cholesky drop")
    {
        const Catalog& cat = standard_catalog();
        DropDescriptor d = root_drop(DropType::Cholesky, {golden_a()}, 3);
        AmineInstance amine = input_data_to_amine(cat, d, 0, 7);
        CHECK(amine.id == 7);
        REQUIRE(amine.drops.size() == 6);
        CHECK(*amine.drops[0].in_data[0] == BlockMatrix::from_ints(2, kQ, {16, 24, 24, 72}));
        for (const auto& child : amine.drops) {
            CHECK(child.rec_num == 4);
            CHECK(child.amine_ref == 7);
        }
        CHECK(amine.status[0] == DropStatus::Ready);
        CHECK(amine.status[1] == DropStatus::Waiting);
        CHECK(amine.pending_count == 6);

        // Chol(alpha) finishes: the b^T multiply becomes ready with a1
        CholeskyResult top = cholesky_base(*amine.drops[0].in_data[0]);
        WriteOutcome w = write_results_to_amine(cat, amine, 1, {top.L, top.L_inv});
        CHECK(w.ready == std::vector<int>{2});
        std::vector<Scalar> a1;
        for (const char* s : {"1/4", "0", "-1/4", "1/6"})
            a1.push_back(Scalar::parse(s, kQ));
        CHECK(*amine.drops[1].in_data[0] == BlockMatrix::from_scalars(2, kQ, a1));
        CHECK(amine.pending_count == 5);
        CHECK(code_of([&] { finalize_amine(cat, amine); }) == Errc::NotComplete);

        // identical replay is tolerated, a divergent one is not
        CHECK(write_results_to_amine(cat, amine, 1, {top.L, top.L_inv}).duplicate);
        CHECK(code_of([&] { write_results_to_amine(cat, amine, 1, {top.L_inv, top.L}); }) == Errc::DoubleCompletion);
    }

    TEST_CASE("missing main components")
    {
        const Catalog& cat = standard_catalog();
        DropDescriptor d = root_drop(DropType::Multiply, {golden_a()});
        CHECK(code_of([&] { input_data_to_amine(cat, d, 0, 0); }) == Errc::MissingMainComponents);
    }

    TEST_CASE("late accumulator reaches dispatched drops")
    {
        const Catalog& cat = standard_catalog();
        BlockMatrix a = random_spd(1, 8, kQ).A, b = random_spd(2, 8, kQ).A, c = random_spd(3, 8, kQ).A;
        DropDescriptor d = root_drop(DropType::MultiplyAdd, {a, b});
        AmineInstance amine = input_data_to_amine(cat, d, 0, 0);
        for (int i = 1; i <= 4; ++i)
            CHECK(amine.status[static_cast<std::size_t>(i - 1)] == DropStatus::Ready);
        // the b*n drop has its main inputs but no accumulator yet
        CHECK(amine.status[4] == DropStatus::Ready);
        CHECK(amine.drops[4].kind == DropKind::MainOnly);
        mark_dispatched(amine, 5);
        for (int i = 1; i <= 4; ++i) {
            const auto& ch = amine.drops[static_cast<std::size_t>(i - 1)];
            WriteOutcome w =
                write_results_to_amine(cat, amine, i, {multiply(*ch.in_data[0], *ch.in_data[1], {1})});
            if (i == 1)
                CHECK(w.late_additional == std::vector<std::pair<int, int>>{{5, 2}});
        }
        WriteOutcome w = write_additional_to_amine(cat, amine, 0, c);
        CHECK(w.late_additional.empty());
        CHECK(*amine.collected[4] == c);
        for (int i = 5; i <= 8; ++i) {
            const auto& ch = amine.drops[static_cast<std::size_t>(i - 1)];
            BlockMatrix p = multiply(*ch.in_data[0], *ch.in_data[1], {1});
            write_results_to_amine(cat, amine, i, {add(*ch.in_data[2], p)});
        }
        REQUIRE(amine_complete(amine));
        CHECK(finalize_amine(cat, amine)[0] == multiply_accumulate(a, b, c, 1));
    }

    TEST_CASE("interpreter matches the recursive functions")
    {
        const Catalog& cat = standard_catalog();
        for (DropType type : {DropType::Multiply, DropType::InvertLower, DropType::Cholesky}) {
            for (std::size_t n : {2, 4, 8, 16, 32}) {
                Blocks in = inputs_for(type, n * 31, n, kQ);
                Blocks want = run_direct(type, in, 2);
                InterpreterStats stats;
                Blocks got = interpret_drop(cat, id_of(type), in, {2, 0}, &stats);
                CHECK(got == want);
                int depth = n > 2 ? static_cast<int>(std::log2(static_cast<double>(n) / 2)) + 1 : 1;
                if (type != DropType::Multiply)
                    CHECK(stats.max_rec_num == depth);
                else
                    CHECK(stats.max_rec_num <= depth);
            }
        }
    }

    TEST_CASE("completion order does not change the bytes")
    {
        const Catalog& cat = standard_catalog();
        for (DropType type : {DropType::Multiply, DropType::InvertLower, DropType::Cholesky}) {
            Blocks in = inputs_for(type, 5, 32, kD);
            Blocks first = interpret_drop(cat, id_of(type), in, {4, 0});
            for (std::uint64_t seed = 1; seed <= 10; ++seed) {
                Blocks got = interpret_drop(cat, id_of(type), in, {4, seed});
                REQUIRE(got.size() == first.size());
                for (std::size_t k = 0; k < got.size(); ++k)
                    CHECK(got[k].to_text() == first[k].to_text());
            }
            // and the graph agrees bitwise with the plain recursion
            Blocks direct = run_direct(type, in, 4);
            for (std::size_t k = 0; k < direct.size(); ++k)
                CHECK(direct[k].to_text() == first[k].to_text());
        }
    }

    TEST_CASE("depth grows by one per unrolling")
    {
        const Catalog& cat = standard_catalog();
        for (std::size_t leaf : {1, 2, 4, 8}) {
            InterpreterStats stats;
            interpret_drop(cat, id_of(DropType::Cholesky), {random_spd(9, 16, kQ).A}, {leaf, 3}, &stats);
            CHECK(stats.max_rec_num == static_cast<int>(std::log2(16.0 / static_cast<double>(leaf))) + 1);
            CHECK(stats.amines > 0);
        }
    }

    TEST_CASE("zero operands do not unroll")
    {
        const Catalog& cat = standard_catalog();
        InterpreterStats stats;
        Blocks out = interpret_drop(cat, id_of(DropType::Multiply),
            {BlockMatrix::zero(16, kQ), random_spd(1, 16, kQ).A}, {2, 0}, &stats);
        CHECK(out[0].is_zero());
        CHECK(stats.amines == 0);
        CHECK(stats.trivial == 1);
    }
}
