#pragma once
//
// Messages exchanged between nodes, their binary frame format, and a
// deterministic simulated network with FIFO links.
//
// Frame layout (all integers little-endian):
//   magic 0xDA 0x50, version u8, kind u8, flags u8, src u32, dst u32, payload
// Matrices travel as a u32 byte length followed by the matrix text form.
//

#include "dap/matrix.hpp"
#include "dap/task_graph.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <tuple>
#include <variant>
#include <vector>

namespace dap::net {

inline constexpr std::uint8_t kFrameMagic0 = 0xDA;
inline constexpr std::uint8_t kFrameMagic1 = 0x50;
inline constexpr std::uint8_t kFrameVersion = 1;

enum class MsgKind : std::uint8_t {
    DropTask = 1,
    Result = 2,
    AdditionalComponents = 3,
    FreeList = 4,
    StateLevel = 5,
    NodeFailure = 6,
    Terminate = 7,
};

const char* to_string(MsgKind k);

// level value meaning "nothing to offer"
inline constexpr int kNoLevel = -1;

struct DropTaskPayload {
    graph::PAD ret; // where the result goes
    std::uint64_t ticket = 0; // dispatch id, echoed by the result
    int claim = 0; // incarnation of the free-list entry this task used
    graph::DropTypeId type = 0;
    int rec_num = 0;
    graph::Slots in_data;

    friend bool operator==(const DropTaskPayload&, const DropTaskPayload&) = default;
};

struct ResultPayload {
    graph::PAD pad;
    std::uint64_t ticket = 0;
    graph::Blocks out_data;

    friend bool operator==(const ResultPayload&, const ResultPayload&) = default;
};

struct AdditionalPayload {
    graph::PAD pad; // the drop the components belong to
    // (input component index, value)
    std::vector<std::pair<int, BlockMatrix>> components;

    friend bool operator==(const AdditionalPayload&, const AdditionalPayload&) = default;
};

struct FreeEntry {
    int id = 0;
    int incarnation = 0;

    friend auto operator<=>(const FreeEntry&, const FreeEntry&) = default;
};

struct FreeListPayload {
    std::vector<FreeEntry> ids;

    friend bool operator==(const FreeListPayload&, const FreeListPayload&) = default;
};

struct StateLevelPayload {
    int level = kNoLevel;
    // relay distance from the node that actually holds the drops
    int hops = 0;

    friend bool operator==(const StateLevelPayload&, const StateLevelPayload&) = default;
};

struct NodeFailurePayload {
    int failed = 0;
    int incarnation = 0;

    friend bool operator==(const NodeFailurePayload&, const NodeFailurePayload&) = default;
};

struct TerminatePayload {
    friend bool operator==(const TerminatePayload&, const TerminatePayload&) = default;
};

using Payload = std::variant<DropTaskPayload, ResultPayload, AdditionalPayload, FreeListPayload, StateLevelPayload,
    NodeFailurePayload, TerminatePayload>;

struct Message {
    int src = 0;
    int dst = 0;
    // set by the network when a message comes back from a dead host
    bool bounced = false;
    Payload payload;

    MsgKind kind() const;
    friend bool operator==(const Message&, const Message&) = default;
};

std::vector<std::uint8_t> serialize(const Message& m);
// throws MalformedFrame
Message deserialize(const std::vector<std::uint8_t>& bytes);

// ---------------------------------------------------------------------------
// simulated network; times are in microseconds

enum class LatencyKind { Zero, Constant, Random };

const char* to_string(LatencyKind k);
LatencyKind parse_latency_kind(std::string_view s);

struct LatencyModel {
    LatencyKind kind = LatencyKind::Constant;
    double base_us = 1.0;
    double per_kb_us = 0.001;
    // Random: base plus uniform [0, jitter_us) drawn from (seed, link, sequence)
    double jitter_us = 2.0;
    std::uint64_t seed = 0;

    double delay(int src, int dst, std::size_t bytes, std::uint64_t seq) const;
};

struct Delivery {
    Message msg;
    double time = 0;
    std::size_t bytes = 0;
};

// what the audits need to know about a message still on the wire
struct InFlight {
    MsgKind kind = MsgKind::Terminate;
    int src = 0;
    int dst = 0;
    bool bounced = false;
    std::vector<FreeEntry> ids; // FreeList
    int level = kNoLevel; // StateLevel
    std::uint64_t ticket = 0; // DropTask, Result
    double time = 0; // scheduled delivery
};

struct NetStats {
    std::uint64_t sent = 0;
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0;
    std::uint64_t bounced = 0;
    std::uint64_t bytes = 0;
};

class SimNet {
public:
    // tie_seed != 0 breaks equal-time ties between links pseudo-randomly
    SimNet(std::size_t nodes, LatencyModel latency, std::uint64_t tie_seed = 0);

    // stamps the message at simulated time `now`; sends to a failed host are
    // dropped (free lists bounce back to the sender)
    void send(const Message& m, double now);
    std::optional<double> next_time() const;
    // earliest message; messages for hosts that failed in flight are dropped
    std::optional<Delivery> deliver_next();

    void mark_failed(int node);
    bool failed(int node) const;

    // messages currently in flight, in delivery order
    std::vector<InFlight> in_flight() const;
    const NetStats& stats() const { return stats_; }
    std::size_t node_count() const { return failed_.size(); }

private:
    struct Key {
        double time;
        std::uint64_t tie;
        std::uint64_t seq;
        friend auto operator<=>(const Key&, const Key&) = default;
    };
    struct Event {
        std::vector<std::uint8_t> frame;
        InFlight info;
    };

    void enqueue(const Message& m, double now);
    void bounce(Message m, double now);

    LatencyModel latency_;
    std::uint64_t tie_seed_;
    std::uint64_t seq_ = 0;
    std::map<Key, Event> queue_;
    std::map<std::pair<int, int>, std::pair<double, std::uint64_t>> link_last_;
    std::vector<bool> failed_;
    double clock_ = 0;
    NetStats stats_;
};

// splitmix64 step; used for seeded hashing
std::uint64_t mix64(std::uint64_t x) noexcept;

} // namespace dap::net
