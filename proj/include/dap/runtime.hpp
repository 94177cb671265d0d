#pragma once
//
// Decentralized node engine running on the simulated network.  Every node
// keeps a pine of amines, a vokzal of sendable drops indexed by recursion
// level, a leaf stack, a track inbox, an aerodrome of parents and a terminal
// of children.  Idle nodes advertise themselves through free lists that
// travel between parents and children.
//

#include "dap/kernels.hpp"
#include "dap/task_graph.hpp"
#include "dap/transport.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dap::rt {

// simulated compute time: `op_us` per counted scalar operation plus
// `unit_us` per computation step; handling one message takes `msg_us`
struct CostModel {
    double op_us = 0.001;
    double unit_us = 0.5;
    // nonzero so that free ids bouncing between idle nodes advance time
    double msg_us = 0.01;
};

struct FailurePlan {
    int node = 1;
    double time = 0;
    // false: the node is only suspected and keeps running
    bool crash = true;
};

struct RuntimeOptions {
    std::size_t nodes = 1;
    std::size_t leaf_size = 8;
    // breaks ties between simultaneous events; 0 keeps node order
    std::uint64_t seed = 0;
    net::LatencyModel latency;
    CostModel cost;
    bool audit = false;
    bool trace = false;
    std::vector<FailurePlan> failures;
    std::uint64_t max_events = 20'000'000;
};

struct JobHandle {
    DropType type = DropType::Cholesky;
    graph::Blocks inputs;
};

struct AuditReport {
    std::uint64_t checks = 0;
    std::uint64_t violations = 0;
    std::vector<std::string> messages; // first few violations
    bool ok() const { return violations == 0; }
};

struct RunStats {
    double sim_time = 0; // microseconds
    std::uint64_t steps = 0;
    std::uint64_t leaves = 0;
    std::uint64_t amines = 0;
    std::uint64_t drops_sent = 0;
    std::uint64_t redispatched = 0;
    std::uint64_t discarded_results = 0;
    std::uint64_t ops = 0;
    int max_rec_num = 0;
    std::vector<int> final_free_list;
    net::NetStats net;
};

struct JobResult {
    graph::Blocks outputs;
    RunStats stats;
    AuditReport audit;
    // time, node, event, PAD, level, detail; tab separated
    std::vector<std::string> trace;
};

// runs a job to completion on a simulated cluster; kernel errors propagate,
// DeadlockDetected if the cluster stalls before finishing
JobResult submit(const JobHandle& job, const RuntimeOptions& options);

// splits ids into m parts whose sizes differ by at most one, larger first
std::vector<std::vector<net::FreeEntry>> split_evenly(const std::vector<net::FreeEntry>& ids, std::size_t m);

// the PAD that receives the final job result
inline constexpr graph::PAD kJobPad{-2, -2, 0};

} // namespace dap::rt
