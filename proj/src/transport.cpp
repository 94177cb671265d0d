#include "dap/transport.hpp"

#include "dap/errors.hpp"

#include <algorithm>
#include <cmath>

namespace dap::net {

const char* to_string(MsgKind k)
{
    switch (k) {
    case MsgKind::DropTask: return "DropTask";
    case MsgKind::Result: return "Result";
    case MsgKind::AdditionalComponents: return "AdditionalComponents";
    case MsgKind::FreeList: return "FreeList";
    case MsgKind::StateLevel: return "StateLevel";
    case MsgKind::NodeFailure: return "NodeFailure";
    case MsgKind::Terminate: return "Terminate";
    }
    return "?";
}

MsgKind Message::kind() const { return static_cast<MsgKind>(payload.index() + 1); }

// ---------------------------------------------------------------------------
// frames

namespace {

class Writer {
public:
    void u8(std::uint8_t v) { out.push_back(v); }
    void u32(std::uint32_t v)
    {
        for (int i = 0; i < 4; ++i)
            out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void i32(int v) { u32(static_cast<std::uint32_t>(v)); }
    void u64(std::uint64_t v)
    {
        for (int i = 0; i < 8; ++i)
            out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void pad(const graph::PAD& p)
    {
        i32(p.np);
        i32(p.na);
        i32(p.nd);
    }
    void matrix(const BlockMatrix& m)
    {
        std::string text = m.to_text();
        u32(static_cast<std::uint32_t>(text.size()));
        out.insert(out.end(), text.begin(), text.end());
    }

    std::vector<std::uint8_t> out;
};

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& b) : bytes(b) {}

    void need(std::size_t n) const
    {
        if (bytes.size() - pos < n)
            fail(Errc::MalformedFrame, "truncated frame at byte " + std::to_string(pos));
    }
    std::uint8_t u8()
    {
        need(1);
        return bytes[pos++];
    }
    std::uint32_t u32()
    {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(bytes[pos++]) << (8 * i);
        return v;
    }
    int i32() { return static_cast<int>(u32()); }
    std::uint64_t u64()
    {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(bytes[pos++]) << (8 * i);
        return v;
    }
    graph::PAD pad()
    {
        graph::PAD p;
        p.np = i32();
        p.na = i32();
        p.nd = i32();
        return p;
    }
    // guards counts against the bytes that remain, so a corrupt length
    // cannot trigger a huge allocation
    std::uint32_t count(std::size_t min_item_bytes)
    {
        std::uint32_t n = u32();
        if (min_item_bytes > 0 && n > (bytes.size() - pos) / min_item_bytes)
            fail(Errc::MalformedFrame, "count " + std::to_string(n) + " exceeds frame");
        return n;
    }
    BlockMatrix matrix()
    {
        std::uint32_t len = u32();
        need(len);
        std::string_view text(reinterpret_cast<const char*>(bytes.data() + pos), len);
        pos += len;
        try {
            return parse_block_matrix(text);
        } catch (const Error& e) {
            fail(Errc::MalformedFrame, std::string("bad matrix block: ") + e.what());
        }
    }
    bool done() const { return pos == bytes.size(); }

    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;
};

} // namespace

std::vector<std::uint8_t> serialize(const Message& m)
{
    Writer w;
    w.u8(kFrameMagic0);
    w.u8(kFrameMagic1);
    w.u8(kFrameVersion);
    w.u8(static_cast<std::uint8_t>(m.kind()));
    w.u8(m.bounced ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(m.src));
    w.u32(static_cast<std::uint32_t>(m.dst));
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, DropTaskPayload>) {
                w.pad(p.ret);
                w.u64(p.ticket);
                w.i32(p.claim);
                w.i32(p.type);
                w.i32(p.rec_num);
                w.u32(static_cast<std::uint32_t>(p.in_data.size()));
                for (const auto& s : p.in_data) {
                    w.u8(s ? 1 : 0);
                    if (s)
                        w.matrix(*s);
                }
            } else if constexpr (std::is_same_v<P, ResultPayload>) {
                w.pad(p.pad);
                w.u64(p.ticket);
                w.u32(static_cast<std::uint32_t>(p.out_data.size()));
                for (const auto& b : p.out_data)
                    w.matrix(b);
            } else if constexpr (std::is_same_v<P, AdditionalPayload>) {
                w.pad(p.pad);
                w.u32(static_cast<std::uint32_t>(p.components.size()));
                for (const auto& [idx, b] : p.components) {
                    w.i32(idx);
                    w.matrix(b);
                }
            } else if constexpr (std::is_same_v<P, FreeListPayload>) {
                w.u32(static_cast<std::uint32_t>(p.ids.size()));
                for (const auto& e : p.ids) {
                    w.i32(e.id);
                    w.i32(e.incarnation);
                }
            } else if constexpr (std::is_same_v<P, StateLevelPayload>) {
                w.i32(p.level);
                w.i32(p.hops);
            } else if constexpr (std::is_same_v<P, NodeFailurePayload>) {
                w.i32(p.failed);
                w.i32(p.incarnation);
            }
        },
        m.payload);
    return std::move(w.out);
}

Message deserialize(const std::vector<std::uint8_t>& bytes)
{
    Reader r(bytes);
    if (r.u8() != kFrameMagic0 || r.u8() != kFrameMagic1)
        fail(Errc::MalformedFrame, "bad magic");
    std::uint8_t version = r.u8();
    if (version != kFrameVersion)
        fail(Errc::MalformedFrame, "unsupported version " + std::to_string(version));
    std::uint8_t kind = r.u8();
    std::uint8_t flags = r.u8();
    if (flags > 1)
        fail(Errc::MalformedFrame, "unknown flags");
    Message m;
    m.bounced = flags == 1;
    m.src = r.i32();
    m.dst = r.i32();
    switch (static_cast<MsgKind>(kind)) {
    case MsgKind::DropTask: {
        DropTaskPayload p;
        p.ret = r.pad();
        p.ticket = r.u64();
        p.claim = r.i32();
        p.type = r.i32();
        p.rec_num = r.i32();
        std::uint32_t n = r.count(1);
        for (std::uint32_t i = 0; i < n; ++i) {
            std::uint8_t present = r.u8();
            if (present > 1)
                fail(Errc::MalformedFrame, "bad slot flag");
            if (present)
                p.in_data.emplace_back(r.matrix());
            else
                p.in_data.emplace_back();
        }
        m.payload = std::move(p);
        break;
    }
    case MsgKind::Result: {
        ResultPayload p;
        p.pad = r.pad();
        p.ticket = r.u64();
        std::uint32_t n = r.count(4);
        for (std::uint32_t i = 0; i < n; ++i)
            p.out_data.push_back(r.matrix());
        m.payload = std::move(p);
        break;
    }
    case MsgKind::AdditionalComponents: {
        AdditionalPayload p;
        p.pad = r.pad();
        std::uint32_t n = r.count(8);
        for (std::uint32_t i = 0; i < n; ++i) {
            int idx = r.i32();
            p.components.emplace_back(idx, r.matrix());
        }
        m.payload = std::move(p);
        break;
    }
    case MsgKind::FreeList: {
        FreeListPayload p;
        std::uint32_t n = r.count(8);
        for (std::uint32_t i = 0; i < n; ++i) {
            FreeEntry e;
            e.id = r.i32();
            e.incarnation = r.i32();
            p.ids.push_back(e);
        }
        m.payload = std::move(p);
        break;
    }
    case MsgKind::StateLevel: {
        StateLevelPayload p;
        p.level = r.i32();
        p.hops = r.i32();
        m.payload = p;
        break;
    }
    case MsgKind::NodeFailure: {
        NodeFailurePayload p;
        p.failed = r.i32();
        p.incarnation = r.i32();
        m.payload = p;
        break;
    }
    case MsgKind::Terminate: m.payload = TerminatePayload{}; break;
    default: fail(Errc::MalformedFrame, "bad kind tag " + std::to_string(kind));
    }
    if (!r.done())
        fail(Errc::MalformedFrame, "trailing bytes after payload");
    return m;
}

// ---------------------------------------------------------------------------
// latency

std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

const char* to_string(LatencyKind k)
{
    switch (k) {
    case LatencyKind::Zero: return "zero";
    case LatencyKind::Constant: return "constant";
    case LatencyKind::Random: return "random";
    }
    return "?";
}

LatencyKind parse_latency_kind(std::string_view s)
{
    if (s == "zero")
        return LatencyKind::Zero;
    if (s == "constant")
        return LatencyKind::Constant;
    if (s == "random")
        return LatencyKind::Random;
    fail(Errc::InvalidArgument, "unknown latency model '" + std::string(s) + "'");
}

double LatencyModel::delay(int src, int dst, std::size_t bytes, std::uint64_t seq) const
{
    if (kind == LatencyKind::Zero)
        return 0.0;
    double d = base_us + per_kb_us * static_cast<double>(bytes) / 1024.0;
    if (kind == LatencyKind::Random) {
        std::uint64_t link = static_cast<std::uint64_t>(src) * 0x100000001ULL + static_cast<std::uint64_t>(dst);
        std::uint64_t h = mix64(seed ^ mix64(link ^ mix64(seq)));
        d += jitter_us * static_cast<double>(h >> 11) * 0x1.0p-53;
    }
    return d;
}

// ---------------------------------------------------------------------------
// network

SimNet::SimNet(std::size_t nodes, LatencyModel latency, std::uint64_t tie_seed)
    : latency_(latency), tie_seed_(tie_seed), failed_(nodes, false)
{
}

void SimNet::enqueue(const Message& m, double now)
{
    std::vector<std::uint8_t> frame = serialize(m);
    std::uint64_t seq = seq_++;
    double t = now + latency_.delay(m.src, m.dst, frame.size(), seq);
    std::uint64_t tie = tie_seed_ ? mix64(tie_seed_ ^ mix64(seq)) : 0;
    // FIFO per link: never overtake the previous message on the same link
    auto link = std::make_pair(m.src, m.dst);
    auto it = link_last_.find(link);
    if (it != link_last_.end()) {
        auto [lt, ltie] = it->second;
        if (std::make_pair(t, tie) <= std::make_pair(lt, ltie)) {
            t = lt;
            tie = ltie;
        }
    }
    link_last_[link] = {t, tie};
    ++stats_.sent;
    stats_.bytes += frame.size();
    InFlight info;
    info.kind = m.kind();
    info.src = m.src;
    info.dst = m.dst;
    info.bounced = m.bounced;
    info.time = t;
    if (const auto* fl = std::get_if<FreeListPayload>(&m.payload))
        info.ids = fl->ids;
    else if (const auto* sl = std::get_if<StateLevelPayload>(&m.payload))
        info.level = sl->level;
    else if (const auto* dt = std::get_if<DropTaskPayload>(&m.payload))
        info.ticket = dt->ticket;
    else if (const auto* rp = std::get_if<ResultPayload>(&m.payload))
        info.ticket = rp->ticket;
    queue_.emplace(Key{t, tie, seq}, Event{std::move(frame), std::move(info)});
}

void SimNet::bounce(Message m, double now)
{
    if (m.kind() != MsgKind::FreeList || m.bounced || failed(m.src)) {
        ++stats_.dropped;
        return;
    }
    ++stats_.bounced;
    std::swap(m.src, m.dst);
    m.bounced = true;
    enqueue(m, now);
}

void SimNet::send(const Message& m, double now)
{
    if (m.dst < 0 || m.dst >= static_cast<int>(failed_.size()))
        fail(Errc::InvalidArgument, "no node " + std::to_string(m.dst));
    if (failed(m.dst)) {
        bounce(m, now);
        return;
    }
    enqueue(m, now);
}

std::optional<double> SimNet::next_time() const
{
    if (queue_.empty())
        return std::nullopt;
    return queue_.begin()->first.time;
}

std::optional<Delivery> SimNet::deliver_next()
{
    while (!queue_.empty()) {
        auto node = queue_.extract(queue_.begin());
        double t = node.key().time;
        clock_ = std::max(clock_, t);
        Event& ev = node.mapped();
        Message m = deserialize(ev.frame);
        if (failed(ev.info.dst)) {
            bounce(std::move(m), clock_);
            continue;
        }
        ++stats_.delivered;
        return Delivery{std::move(m), clock_, ev.frame.size()};
    }
    return std::nullopt;
}

void SimNet::mark_failed(int node) { failed_.at(static_cast<std::size_t>(node)) = true; }

bool SimNet::failed(int node) const
{
    return node >= 0 && node < static_cast<int>(failed_.size()) && failed_[static_cast<std::size_t>(node)];
}

std::vector<InFlight> SimNet::in_flight() const
{
    std::vector<InFlight> out;
    out.reserve(queue_.size());
    for (const auto& [k, ev] : queue_)
        out.push_back(ev.info);
    return out;
}

} // namespace dap::net
