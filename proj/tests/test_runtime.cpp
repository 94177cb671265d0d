#include <doctest.h>

#include "dap/errors.hpp"
#include "dap/kernels.hpp"
#include "dap/runtime.hpp"
#include "oracles.hpp"

#include <map>
#include <sstream>

using namespace dap;
using namespace dap::rt;
using dap::testing::code_of;

namespace {

const ScalarMode kQ = ScalarMode::rational();
const ScalarMode kD = ScalarMode::double_precision();

BlockMatrix golden_a()
{
    return BlockMatrix::from_ints(4, kQ, {16, 24, 28, 4, 24, 72, 42, 42, 28, 42, 85, 13, 4, 42, 13, 74});
}

RuntimeOptions opts(std::size_t nodes, std::size_t leaf)
{
    RuntimeOptions o;
    o.nodes = nodes;
    o.leaf_size = leaf;
    o.audit = true;
    return o;
}

std::vector<std::string> fields(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t'))
        out.push_back(f);
    return out;
}

void require_clean(const JobResult& r)
{
    std::string first = r.audit.messages.empty() ? std::string() : r.audit.messages.front();
    INFO(first);
    REQUIRE(r.audit.ok());
    CHECK(r.audit.checks > 0);
}

std::vector<int> all_ids(std::size_t n)
{
    std::vector<int> v;
    for (std::size_t i = 0; i < n; ++i)
        v.push_back(static_cast<int>(i));
    return v;
}

} // namespace

TEST_SUITE("runtime")
{
    TEST_CASE("golden cholesky on one node")
    {
        JobResult r = submit(JobHandle{DropType::Cholesky, {golden_a()}}, opts(1, 1));
        require_clean(r);
        REQUIRE(r.outputs.size() == 2);
        CHECK(r.outputs[0] == BlockMatrix::from_ints(4, kQ, {4, 0, 0, 0, 6, 6, 0, 0, 7, 0, 6, 0, 1, 6, 1, 6}));
        CHECK(r.outputs[1].at(3, 0).to_string() == "37/144");
        CHECK(r.outputs[1].at(3, 2).to_string() == "-1/36");
        CHECK(r.stats.final_free_list == std::vector<int>{0});
        CHECK(r.stats.net.sent == 1); // the terminate broadcast
    }

    TEST_CASE("multiply by the identity returns the operand")
    {
        BlockMatrix a = random_spd(3, 16, kQ).A;
        for (std::size_t nodes : {1, 4}) {
            JobResult r = submit(JobHandle{DropType::Multiply, {a, BlockMatrix::identity(16, kQ)}}, opts(nodes, 2));
            require_clean(r);
            CHECK(r.outputs[0] == a);
        }
    }

    TEST_CASE("job output does not depend on the node count")
    {
        BlockMatrix a = random_spd(21, 32, kD).A;
        CholeskyResult ref = cholesky(a, LeafConfig{4});
        for (std::size_t nodes : {1, 4, 13}) {
            CAPTURE(nodes);
            JobResult r = submit(JobHandle{DropType::Cholesky, {a}}, opts(nodes, 4));
            require_clean(r);
            CHECK(r.outputs[0] == ref.L);
            CHECK(r.outputs[1] == ref.L_inv);
            CHECK(r.stats.final_free_list == all_ids(nodes));
            CHECK(r.stats.max_rec_num == 4);
        }
    }

    TEST_CASE("every drop type runs distributed")
    {
        BlockMatrix a = random_spd(5, 16, kQ).A;
        BlockMatrix b = random_spd(6, 16, kQ).A;
        BlockMatrix c = random_spd(7, 16, kQ).A;
        BlockMatrix l = random_lower_triangular(8, 16, kQ);
        LeafConfig lc{2};
        struct Case {
            DropType type;
            graph::Blocks in;
            BlockMatrix expect;
        };
        std::vector<Case> cases{
            {DropType::Multiply, {a, b}, multiply(a, b, lc)},
            {DropType::MultiplyAdd, {a, b, c}, multiply_accumulate(a, b, c, 1, lc)},
            {DropType::MultiplySub, {a, b, c}, multiply_accumulate(a, b, c, -1, lc)},
            {DropType::MultiplyNeg, {a, b}, neg(multiply(a, b, lc))},
            {DropType::TransMultiply, {l, b}, multiply(transpose(l), b, lc)},
            {DropType::TransMultiplySub, {l, b, c}, multiply_accumulate(transpose(l), b, c, -1, lc)},
            {DropType::InvertLower, {l}, invert_lower_triangular(l, lc)},
        };
        for (const auto& k : cases) {
            CAPTURE(to_string(k.type));
            JobResult r = submit(JobHandle{k.type, k.in}, opts(5, 2));
            require_clean(r);
            CHECK(r.outputs[0] == k.expect);
        }
    }

    TEST_CASE("job at leaf size runs as one leaf")
    {
        JobResult r = submit(JobHandle{DropType::Cholesky, {golden_a()}}, opts(3, 4));
        require_clean(r);
        CHECK(r.stats.amines == 0);
        CHECK(r.stats.leaves == 1);
        CHECK(r.stats.drops_sent == 0);
    }

    TEST_CASE("seeds and latency models change the schedule, not the answer")
    {
        BlockMatrix a = random_spd(40, 16, kD).A;
        CholeskyResult ref = cholesky(a, LeafConfig{2});
        std::map<double, int> times;
        for (std::uint64_t seed = 0; seed < 12; ++seed) {
            RuntimeOptions o = opts(6, 2);
            o.seed = seed;
            o.latency.kind = net::LatencyKind::Random;
            o.latency.seed = seed;
            JobResult r = submit(JobHandle{DropType::Cholesky, {a}}, o);
            require_clean(r);
            CHECK(r.outputs[0] == ref.L);
            CHECK(r.outputs[1] == ref.L_inv);
            ++times[r.stats.sim_time];
        }
        CHECK(times.size() > 1);
        for (auto kind : {net::LatencyKind::Zero, net::LatencyKind::Constant}) {
            RuntimeOptions o = opts(6, 2);
            o.latency.kind = kind;
            JobResult r = submit(JobHandle{DropType::Cholesky, {a}}, o);
            require_clean(r);
            CHECK(r.outputs[0] == ref.L);
        }
    }

    TEST_CASE("same seed replays the same trace")
    {
        BlockMatrix a = random_spd(41, 16, kD).A;
        RuntimeOptions o = opts(5, 2);
        o.trace = true;
        o.seed = 9;
        o.latency.kind = net::LatencyKind::Random;
        o.latency.seed = 9;
        JobResult r1 = submit(JobHandle{DropType::Cholesky, {a}}, o);
        JobResult r2 = submit(JobHandle{DropType::Cholesky, {a}}, o);
        CHECK(r1.trace == r2.trace);
        CHECK(r1.stats.sim_time == r2.stats.sim_time);
    }

    TEST_CASE("trace lines have six tab separated fields in time order")
    {
        RuntimeOptions o = opts(4, 2);
        o.trace = true;
        JobResult r = submit(JobHandle{DropType::Cholesky, {random_spd(2, 16, kD).A}}, o);
        REQUIRE(!r.trace.empty());
        double last = 0;
        for (const auto& line : r.trace) {
            auto f = fields(line);
            if (f.size() == 5)
                f.emplace_back(); // empty detail
            REQUIRE(f.size() == 6);
            double t = std::stod(f[0]);
            CHECK(t >= last);
            last = t;
        }
    }

    TEST_CASE("crashed nodes lose no drops")
    {
        BlockMatrix a = random_spd(50, 16, kD).A;
        CholeskyResult ref = cholesky(a, LeafConfig{2});
        std::uint64_t redispatched = 0;
        for (double t : {5.0, 25.0, 40.0, 60.0, 80.0}) {
            for (int victim : {1, 2, 3}) {
                CAPTURE(t);
                CAPTURE(victim);
                RuntimeOptions o = opts(4, 2);
                o.failures.push_back(FailurePlan{victim, t, true});
                JobResult r = submit(JobHandle{DropType::Cholesky, {a}}, o);
                require_clean(r);
                CHECK(r.outputs[0] == ref.L);
                CHECK(r.outputs[1] == ref.L_inv);
                std::vector<int> expect;
                for (int i = 0; i < 4; ++i)
                    if (i != victim)
                        expect.push_back(i);
                CHECK(r.stats.final_free_list == expect);
                redispatched += r.stats.redispatched;
            }
        }
        CHECK(redispatched > 0);
    }

    TEST_CASE("false suspicion is survived and late results are discarded")
    {
        BlockMatrix a = random_spd(50, 16, kD).A;
        CholeskyResult ref = cholesky(a, LeafConfig{2});
        std::uint64_t discarded = 0;
        for (double t : {20.0, 30.0, 40.0, 60.0}) {
            for (int victim : {1, 2, 3}) {
                RuntimeOptions o = opts(4, 2);
                o.failures.push_back(FailurePlan{victim, t, false});
                JobResult r = submit(JobHandle{DropType::Cholesky, {a}}, o);
                require_clean(r);
                CHECK(r.outputs[0] == ref.L);
                // the suspected node rejoins under a new incarnation
                CHECK(r.stats.final_free_list == all_ids(4));
                discarded += r.stats.discarded_results;
            }
        }
        CHECK(discarded > 0);
    }

    TEST_CASE("several failures in one run")
    {
        BlockMatrix a = random_spd(60, 32, kD).A;
        CholeskyResult ref = cholesky(a, LeafConfig{4});
        RuntimeOptions o = opts(9, 4);
        o.failures = {{3, 30, true}, {5, 31, false}, {7, 60, true}, {5, 90, true}};
        JobResult r = submit(JobHandle{DropType::Cholesky, {a}}, o);
        require_clean(r);
        CHECK(r.outputs[0] == ref.L);
        CHECK(r.stats.final_free_list == std::vector<int>{0, 1, 2, 4, 6, 8});
    }

    TEST_CASE("root failure is unrecoverable")
    {
        RuntimeOptions o = opts(4, 2);
        o.failures.push_back(FailurePlan{0, 10, true});
        CHECK(code_of([&] { submit(JobHandle{DropType::Cholesky, {random_spd(1, 16, kD).A}}, o); }) ==
            Errc::RootFailureUnrecoverable);
    }

    TEST_CASE("kernel errors surface from the cluster")
    {
        BlockMatrix bad = BlockMatrix::from_ints(4, kQ, {1, 2, 0, 0, 2, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1});
        CHECK(code_of([&] { submit(JobHandle{DropType::Cholesky, {bad}}, opts(3, 1)); }) ==
            Errc::NotPositiveDefinite);
        RuntimeOptions o = opts(2, 3);
        CHECK(code_of([&] { submit(JobHandle{DropType::Cholesky, {golden_a()}}, o); }) == Errc::InvalidArgument);
        CHECK(code_of([&] { submit(JobHandle{DropType::Multiply, {golden_a()}}, opts(2, 1)); }) ==
            Errc::InvalidArgument);
    }

    TEST_CASE("free ids split as evenly as possible")
    {
        std::vector<net::FreeEntry> ids{{1, 0}, {2, 0}, {3, 0}, {4, 0}, {5, 0}};
        auto parts = split_evenly(ids, 2);
        REQUIRE(parts.size() == 2);
        CHECK(parts[0].size() == 3);
        CHECK(parts[1].size() == 2);
        auto three = split_evenly(ids, 3);
        CHECK(three[0].size() == 2);
        CHECK(three[1].size() == 2);
        CHECK(three[2].size() == 1);
        auto many = split_evenly({{1, 0}}, 4);
        CHECK(many[0].size() == 1);
        CHECK(many[3].empty());
    }

    TEST_CASE("nodes alternate between parent and children when both qualify")
    {
        RuntimeOptions o = opts(13, 2);
        o.trace = true;
        JobResult r = submit(JobHandle{DropType::Cholesky, {random_spd(70, 32, kD).A}}, o);
        require_clean(r);
        std::map<int, std::string> last;
        int alternations = 0;
        for (const auto& line : r.trace) {
            auto f = fields(line);
            if (f.size() < 6 || f[5].find(" alt") == std::string::npos)
                continue;
            int node = std::stoi(f[1]);
            // a node may fan out to several children in one routing
            if (last.count(node) && last[node] == f[2] && f[2] == "free-up")
                FAIL("two consecutive upward routings at node " << node);
            if (last.count(node) && last[node] != f[2])
                ++alternations;
            last[node] = f[2];
        }
        CHECK(alternations > 0);
    }

    TEST_CASE("an idle node lists itself once per claim")
    {
        RuntimeOptions o = opts(6, 2);
        o.trace = true;
        JobResult r = submit(JobHandle{DropType::Cholesky, {random_spd(71, 16, kD).A}}, o);
        require_clean(r);
        // listings are only possible after a claim
        std::map<int, int> balance;
        int listings = 0;
        for (const auto& line : r.trace) {
            auto f = fields(line);
            int node = std::stoi(f[1]);
            if (f[2] == "task-in" && node != 0)
                --balance[node];
            if (f[2] == "listed" && node != 0) {
                ++listings;
                ++balance[node];
                CHECK(balance[node] <= 0);
            }
        }
        CHECK(listings > 0);
    }

    TEST_CASE("levels reported along the run match what parents record")
    {
        // the audit compares every parent record with the child's report;
        // sweep a few shapes that include mutual parent/child pairs
        for (std::size_t nodes : {2, 3, 7}) {
            for (std::uint64_t seed : {1, 2, 3}) {
                RuntimeOptions o = opts(nodes, 1);
                o.seed = seed;
                o.latency.kind = net::LatencyKind::Zero;
                JobResult r = submit(JobHandle{DropType::InvertLower, {random_lower_triangular(seed, 16, kD)}}, o);
                require_clean(r);
            }
        }
    }
}
