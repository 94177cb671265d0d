#include "dap/runtime.hpp"

#include "dap/errors.hpp"

#include <algorithm>
#include <climits>
#include <cstdio>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <tuple>

namespace dap::rt {

std::vector<std::vector<net::FreeEntry>> split_evenly(const std::vector<net::FreeEntry>& ids, std::size_t m)
{
    if (m == 0)
        fail(Errc::InvalidArgument, "split into zero parts");
    std::vector<std::vector<net::FreeEntry>> parts(m);
    const std::size_t base = ids.size() / m;
    const std::size_t extra = ids.size() % m;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t take = base + (i < extra ? 1 : 0);
        parts[i].assign(ids.begin() + static_cast<long>(pos), ids.begin() + static_cast<long>(pos + take));
        pos += take;
    }
    return parts;
}

namespace {

using namespace dap::graph;
using net::FreeEntry;
using net::kNoLevel;
using net::Message;
using net::MsgKind;

enum class TicketState { Outstanding, Returned, Abandoned };

struct Ticket {
    int sender = 0;
    int child = 0;
    int child_incarnation = 0;
    TicketState state = TicketState::Outstanding;
};

enum class Stage { Track, Leaf, Parked, Amine };

struct HostedTask {
    std::uint64_t id = 0;
    PAD ret;
    std::uint64_t ticket = 0;
    int parent = -1; // node owed the result; -1 for the job itself
    DropTypeId type = 0;
    int rec_num = 0;
    Slots in_data;
    Stage stage = Stage::Track;
    int amine = kNoAmine;
    Blocks partial;
};

// a level as advertised: the recursion level of the shallowest sendable drop
// and how many relays it passed; relayed levels can echo around cycles of
// mutual children, the hop bound lets such echoes die out
struct Level {
    int level = kNoLevel;
    int hops = 0;

    bool none() const { return level == kNoLevel; }
    friend bool operator==(const Level&, const Level&) = default;
};

// shallower first, then fewer relays, none last
bool before(const Level& a, const Level& b)
{
    if (a.none())
        return false;
    if (b.none())
        return true;
    return std::tie(a.level, a.hops) < std::tie(b.level, b.hops);
}

std::string to_string(const Level& l)
{
    return std::to_string(l.level) + "/" + std::to_string(l.hops);
}

struct ChildRecord {
    Level level;
    // ticket -> (amine, drop)
    std::map<std::uint64_t, std::pair<int, int>> outstanding;
};

struct TrackItem {
    enum Kind { Task, Result, Finalize, FinishParked } kind = Task;
    std::uint64_t task = 0;
    PAD pad;
    Blocks out;
    int amine = kNoAmine;
};

class Cluster;

class Node {
public:
    Node(Cluster& cl, int id);

    int id;
    bool alive = true;
    bool terminated = false;
    int incarnation = 0;
    double clock = 0;
    bool wake_pending = false;
    std::deque<Message> inbox;
    std::vector<Message> outbox;

    std::map<int, AmineInstance> pine;
    std::map<int, std::deque<std::pair<int, int>>> vokzal;
    std::deque<std::uint64_t> leaf_stack;
    std::deque<TrackItem> track;
    std::map<std::uint64_t, HostedTask> tasks;
    std::multimap<PAD, std::uint64_t> by_pad;
    std::map<int, std::uint64_t> amine_task;
    std::map<int, ChildRecord> terminal;
    std::map<int, int> aerodrome;
    int pinned = -1;
    std::map<int, Level> last_sent;
    std::vector<FreeEntry> held;
    std::map<int, int> dead;
    std::set<std::uint64_t> abandoned;
    bool listed = false;
    bool idle = true;
    bool send_up_next = true;

    bool is_root() const { return id == 0; }
    bool quiescent() const;
    bool calc_ready() const { return !track.empty() || !leaf_stack.empty() || vokzal_total() > 0; }
    bool has_work() const { return alive && !terminated && (!inbox.empty() || calc_ready()); }
    std::size_t vokzal_total() const;
    std::size_t sendable_count() const;
    Level level() const;
    // usable child record, with our relay added
    std::optional<Level> relayed(const ChildRecord& rec) const;
    bool valid_entry(const FreeEntry& e) const;

    // one atomic unit; returns its simulated duration
    double step(double now);
    void inject_job(const JobHandle& job);
    void crash();

private:
    Cluster& cl_;
    const Catalog& cat_;
    double now_ = 0;
    std::uint64_t next_task_ = 1;
    int next_amine_ = 0;
    std::set<int> finalize_queued_;

    void send(int dst, net::Payload p);
    void trace(const char* ev, PAD pad = PAD{}, const std::string& detail = "");

    // dispatcher
    void handle(const Message& m);
    void on_drop_task(int src, const net::DropTaskPayload& p);
    void on_result(int src, const net::ResultPayload& p);
    void on_additional(const net::AdditionalPayload& p);
    void on_failure(const net::NodeFailurePayload& p);
    void reset_after_suspicion();
    void after_step();
    void route_free(std::vector<FreeEntry> incoming);
    std::vector<int> eligible_children() const;
    void dispatch_shallowest(const FreeEntry& to);
    void report_levels();

    // calculator
    double calc_step();
    void process_track(TrackItem item);
    bool runs_as_leaf(DropTypeId type, const Slots& in_data, std::size_t block) const;
    std::uint64_t new_task(PAD ret, std::uint64_t ticket, int parent, DropTypeId type, int rec, Slots in);
    void unroll(HostedTask& t);
    void run_leaf(HostedTask& t);
    bool has_all_inputs(const HostedTask& t) const;
    void complete_task(std::uint64_t task_id, Blocks out);
    void accept_result(int amine, int drop, const Blocks& out);
    void finalize(int amine);
    void on_ready(int amine, int drop);
    void handle_outcome(int amine, const WriteOutcome& o);
    void forward_additional(int amine, int drop, int in);
    void deliver_additional(HostedTask& t, int idx, const BlockMatrix& value);
    void cancel_task(std::uint64_t task_id);
    void cancel_amine(int amine);
    void remove_from_vokzal(int amine, int drop);
};

class Cluster {
public:
    Cluster(const JobHandle& job, const RuntimeOptions& opts);
    JobResult run();

    const RuntimeOptions& opts;
    const Catalog& catalog;
    net::SimNet net;
    std::vector<std::unique_ptr<Node>> nodes;
    std::map<std::uint64_t, Ticket> tickets;
    std::map<int, int> suspected; // node -> highest suspected incarnation
    std::optional<Blocks> result;
    double now = 0;
    JobResult out;

    std::uint64_t new_ticket(int sender, const FreeEntry& child)
    {
        std::uint64_t t = ++ticket_seq_;
        tickets[t] = Ticket{sender, child.id, child.incarnation, TicketState::Outstanding};
        return t;
    }
    void set_ticket(std::uint64_t t, TicketState s)
    {
        auto it = tickets.find(t);
        if (it != tickets.end())
            it->second.state = s;
    }
    void trace(int node, const char* ev, PAD pad, int level, const std::string& detail)
    {
        if (!opts.trace)
            return;
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3f", now);
        out.trace.push_back(std::string(buf) + '\t' + std::to_string(node) + '\t' + ev + '\t' + pad.to_string() + '\t' +
            std::to_string(level) + '\t' + detail);
    }
    void violation(const std::string& what)
    {
        ++out.audit.violations;
        if (out.audit.messages.size() < 10) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "t=%.3f ", now);
            out.audit.messages.push_back(buf + what);
        }
    }

private:
    std::uint64_t ticket_seq_ = 0;
    std::uint64_t wake_seq_ = 0;
    std::set<std::tuple<double, std::uint64_t, int>> wakes_;
    std::vector<FailurePlan> failures_;

    void schedule(Node& n);
    std::string recent_trace() const
    {
        std::string s;
        std::size_t from = getenv("DAP_FULL") ? 0 : (out.trace.size() > 40 ? out.trace.size() - 40 : 0);
        for (std::size_t i = from; i < out.trace.size(); ++i)
            s += "\n  " + out.trace[i];
        for (const auto& n : nodes) {
            if (!n->alive)
                continue;
            s += "\n  node " + std::to_string(n->id) + " level " + to_string(n->level()) + " vokzal " +
                std::to_string(n->vokzal_total()) + " children";
            for (const auto& [c, rec] : n->terminal)
                s += " " + std::to_string(c) + "@" + to_string(rec.level);
            s += " parents";
            for (const auto& [p, k] : n->aerodrome)
                s += " " + std::to_string(p) + "x" + std::to_string(k);
            s += " inbox " + std::to_string(n->inbox.size()) + " clock " + std::to_string(n->clock);
        }
        return s;
    }
    void apply_failure(const FailurePlan& f);
    bool finished() const;
    void audit();
    void final_audit();
    bool next_event();
};

// ---------------------------------------------------------------------------
// node

Node::Node(Cluster& cl, int id_) : id(id_), cl_(cl), cat_(cl.catalog) {}

std::size_t Node::vokzal_total() const
{
    std::size_t n = 0;
    for (const auto& [lv, q] : vokzal)
        n += q.size();
    return n;
}

std::size_t Node::sendable_count() const
{
    std::size_t total = vokzal_total();
    // keep one drop for ourselves when nothing else is runnable
    std::size_t reserve = (track.empty() && leaf_stack.empty()) ? 1 : 0;
    return total > reserve ? total - reserve : 0;
}

std::optional<Level> Node::relayed(const ChildRecord& rec) const
{
    if (rec.level.none() || rec.level.hops + 1 > static_cast<int>(cl_.nodes.size()))
        return std::nullopt;
    return Level{rec.level.level, rec.level.hops + 1};
}

Level Node::level() const
{
    Level lv;
    if (sendable_count() > 0) {
        for (const auto& [l, q] : vokzal)
            if (!q.empty()) {
                lv = Level{l, 0};
                break;
            }
    }
    for (const auto& [c, rec] : terminal) {
        auto r = relayed(rec);
        if (r && before(*r, lv))
            lv = *r;
    }
    return lv;
}

bool Node::valid_entry(const FreeEntry& e) const
{
    if (e.id < 0 || e.id >= static_cast<int>(cl_.nodes.size()))
        return false;
    auto it = dead.find(e.id);
    return it == dead.end() || e.incarnation > it->second;
}

void Node::send(int dst, net::Payload p)
{
    outbox.push_back(Message{id, dst, false, std::move(p)});
}

void Node::trace(const char* ev, PAD pad, const std::string& detail)
{
    cl_.trace(id, ev, pad, level().level, detail);
}

void Node::inject_job(const JobHandle& job)
{
    const DropTypeInfo& info = cat_.drop_type(id_of(job.type));
    if (static_cast<int>(job.inputs.size()) != info.input_count())
        fail(Errc::InvalidArgument, "drop type '" + info.name + "' takes " + std::to_string(info.input_count()) +
                " inputs");
    Slots in;
    for (const auto& b : job.inputs)
        in.emplace_back(b);
    std::uint64_t t = new_task(kJobPad, 0, -1, id_of(job.type), 1, std::move(in));
    track.push_back(TrackItem{TrackItem::Task, t, {}, {}, kNoAmine});
}

void Node::crash()
{
    alive = false;
    inbox.clear();
    outbox.clear();
}

double Node::step(double now)
{
    now_ = now;
    double cost = 0;
    if (!inbox.empty()) {
        Message m = std::move(inbox.front());
        inbox.pop_front();
        handle(m);
        cost = cl_.opts.cost.msg_us;
    } else if (calc_ready()) {
        cost = calc_step();
    }
    if (alive && !terminated)
        after_step();
    return cost;
}

// ---------------------------------------------------------------------------
// dispatcher

void Node::handle(const Message& m)
{
    if (terminated)
        return;
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, net::DropTaskPayload>) {
                on_drop_task(m.src, p);
            } else if constexpr (std::is_same_v<P, net::ResultPayload>) {
                on_result(m.src, p);
            } else if constexpr (std::is_same_v<P, net::AdditionalPayload>) {
                on_additional(p);
            } else if constexpr (std::is_same_v<P, net::FreeListPayload>) {
                std::string ids;
                for (const auto& e : p.ids)
                    ids += (ids.empty() ? "" : ",") + std::to_string(e.id) + "#" + std::to_string(e.incarnation);
                trace(m.bounced ? "free-bounced" : "free-in", PAD{}, ids);
                route_free(p.ids);
            } else if constexpr (std::is_same_v<P, net::StateLevelPayload>) {
                auto it = terminal.find(m.src);
                if (it != terminal.end())
                    it->second.level = Level{p.level, p.hops};
                trace("level-in", PAD{}, std::to_string(m.src) + ":" + to_string(Level{p.level, p.hops}));
            } else if constexpr (std::is_same_v<P, net::NodeFailurePayload>) {
                on_failure(p);
            } else {
                terminated = true;
            }
        },
        m.payload);
}

void Node::on_drop_task(int src, const net::DropTaskPayload& p)
{
    if (p.claim != incarnation) {
        // claimed before we were suspected; the parent abandons it
        trace("task-stale", p.ret, "from " + std::to_string(src));
        return;
    }
    std::uint64_t t = new_task(p.ret, p.ticket, src, p.type, p.rec_num, p.in_data);
    // the claim used up our free-list entry
    listed = false;
    ++aerodrome[src];
    if (pinned < 0 && !is_root())
        pinned = src;
    track.push_back(TrackItem{TrackItem::Task, t, {}, {}, kNoAmine});
    trace("task-in", p.ret, "from " + std::to_string(src));
}

void Node::on_result(int src, const net::ResultPayload& p)
{
    bool known = false;
    auto it = terminal.find(src);
    if (it != terminal.end()) {
        auto jt = it->second.outstanding.find(p.ticket);
        if (jt != it->second.outstanding.end()) {
            it->second.outstanding.erase(jt);
            if (it->second.outstanding.empty())
                terminal.erase(it);
            cl_.set_ticket(p.ticket, TicketState::Returned);
            known = true;
        }
    }
    if (!known && !abandoned.count(p.ticket))
        fail(Errc::UnknownChild, "node " + std::to_string(id) + " got a result from " + std::to_string(src) +
                " for unknown ticket " + std::to_string(p.ticket));
    track.push_back(TrackItem{TrackItem::Result, 0, p.pad, p.out_data, kNoAmine});
    trace("result-in", p.pad, known ? "" : "late");
}

void Node::on_additional(const net::AdditionalPayload& p)
{
    std::vector<std::uint64_t> ids;
    for (auto [it, end] = by_pad.equal_range(p.pad); it != end; ++it)
        ids.push_back(it->second);
    for (auto tid : ids) {
        auto t = tasks.find(tid);
        if (t == tasks.end())
            continue;
        for (const auto& [idx, value] : p.components)
            deliver_additional(t->second, idx, value);
    }
}

void Node::on_failure(const net::NodeFailurePayload& p)
{
    if (p.failed == id) {
        if (p.incarnation == incarnation)
            reset_after_suspicion();
        return;
    }
    auto d = dead.find(p.failed);
    if (d != dead.end() && d->second >= p.incarnation)
        return;
    dead[p.failed] = p.incarnation;
    trace("failure", PAD{}, std::to_string(p.failed));

    std::erase_if(held, [&](const FreeEntry& e) { return !valid_entry(e); });

    auto t = terminal.find(p.failed);
    if (t != terminal.end()) {
        auto lost = std::move(t->second.outstanding);
        terminal.erase(t);
        for (const auto& [ticket, ad] : lost) {
            cl_.set_ticket(ticket, TicketState::Abandoned);
            abandoned.insert(ticket);
            auto am = pine.find(ad.first);
            if (am == pine.end())
                continue;
            auto& st = am->second.status[static_cast<std::size_t>(ad.second - 1)];
            if (st == DropStatus::Done)
                continue;
            st = DropStatus::Ready;
            ++cl_.out.stats.redispatched;
            on_ready(ad.first, ad.second);
        }
    }

    std::vector<std::uint64_t> orphans;
    for (const auto& [tid, task] : tasks)
        if (task.parent == p.failed)
            orphans.push_back(tid);
    for (auto tid : orphans)
        cancel_task(tid);
    aerodrome.erase(p.failed);
    last_sent.erase(p.failed);
    if (pinned == p.failed)
        pinned = 0;
}

void Node::reset_after_suspicion()
{
    trace("suspected", PAD{}, std::to_string(incarnation));
    ++incarnation;
    listed = false;
    for (auto& [c, rec] : terminal)
        for (const auto& [ticket, ad] : rec.outstanding) {
            cl_.set_ticket(ticket, TicketState::Abandoned);
            abandoned.insert(ticket);
        }
    terminal.clear();
    std::vector<std::uint64_t> all;
    for (const auto& [tid, task] : tasks)
        if (task.parent != -1 && task.parent != id)
            all.push_back(tid);
    for (auto tid : all)
        cancel_task(tid);
    aerodrome.clear();
    last_sent.clear();
}

void Node::after_step()
{
    std::vector<FreeEntry> incoming;
    if (!calc_ready()) {
        if (!idle)
            trace("idle");
        idle = true;
        if (!listed) {
            listed = true;
            trace("listed", PAD{}, std::to_string(incarnation));
            incoming.push_back(FreeEntry{id, incarnation});
        }
    } else {
        idle = false;
    }
    route_free(std::move(incoming));
    report_levels();
}

std::vector<int> Node::eligible_children() const
{
    int best = kNoLevel;
    for (const auto& [c, rec] : terminal) {
        auto r = relayed(rec);
        if (r && (best == kNoLevel || r->level < best))
            best = r->level;
    }
    std::vector<int> out;
    if (best == kNoLevel)
        return out;
    for (const auto& [c, rec] : terminal) {
        auto r = relayed(rec);
        if (r && r->level == best)
            out.push_back(c);
    }
    return out;
}

void Node::dispatch_shallowest(const FreeEntry& to)
{
    for (auto& [lv, q] : vokzal) {
        if (q.empty())
            continue;
        auto [a, d] = q.front();
        q.pop_front();
        if (q.empty())
            vokzal.erase(lv);
        AmineInstance& am = pine.at(a);
        mark_dispatched(am, d);
        const DropDescriptor& drop = am.drops[static_cast<std::size_t>(d - 1)];
        std::uint64_t ticket = cl_.new_ticket(id, to);
        terminal[to.id].outstanding[ticket] = {a, d};
        ++cl_.out.stats.drops_sent;
        send(to.id, net::DropTaskPayload{PAD{id, a, d}, ticket, to.incarnation, drop.type, drop.rec_num, drop.in_data});
        trace("send-drop", PAD{id, a, d}, "to " + std::to_string(to.id));
        return;
    }
}

void Node::route_free(std::vector<FreeEntry> incoming)
{
    // merge, drop stale entries, keep one entry per id
    std::vector<FreeEntry> pool = std::move(held);
    held.clear();
    pool.insert(pool.end(), incoming.begin(), incoming.end());
    std::vector<FreeEntry> others;
    std::optional<FreeEntry> self;
    std::set<int> seen;
    for (const auto& e : pool) {
        if (!valid_entry(e) || seen.count(e.id))
            continue;
        seen.insert(e.id);
        if (e.id == id) {
            if (e.incarnation == incarnation)
                self = e;
            continue;
        }
        others.push_back(e);
    }

    std::size_t used = 0;
    while (used < others.size() && sendable_count() > 0)
        dispatch_shallowest(others[used++]);
    std::vector<FreeEntry> rest(others.begin() + static_cast<long>(used), others.end());

    if (is_root()) {
        if (self)
            held.push_back(*self);
        if (rest.empty())
            return;
        auto kids = eligible_children();
        if (kids.empty()) {
            held.insert(held.end(), rest.begin(), rest.end());
            return;
        }
        auto parts = split_evenly(rest, kids.size());
        for (std::size_t i = 0; i < kids.size(); ++i)
            if (!parts[i].empty()) {
                trace("free-down", PAD{}, std::to_string(kids[i]) + ":" + std::to_string(parts[i].size()));
                send(kids[i], net::FreeListPayload{parts[i]});
            }
        return;
    }

    if (self)
        rest.push_back(*self);
    if (rest.empty())
        return;
    int up = pinned >= 0 ? pinned : 0;
    auto kids = eligible_children();
    bool go_up = true;
    if (!kids.empty()) {
        go_up = send_up_next;
        send_up_next = !send_up_next;
    }
    if (go_up) {
        trace("free-up", PAD{}, std::to_string(up) + ":" + std::to_string(rest.size()) + (kids.empty() ? "" : " alt"));
        send(up, net::FreeListPayload{rest});
        return;
    }
    auto parts = split_evenly(rest, kids.size());
    for (std::size_t i = 0; i < kids.size(); ++i)
        if (!parts[i].empty()) {
            trace("free-down", PAD{}, std::to_string(kids[i]) + ":" + std::to_string(parts[i].size()) + " alt");
            send(kids[i], net::FreeListPayload{parts[i]});
        }
}

void Node::report_levels()
{
    const Level lv = level();
    for (const auto& [p, count] : aerodrome) {
        auto it = last_sent.find(p);
        // a new parent always hears from us once
        if (it != last_sent.end() && it->second == lv)
            continue;
        last_sent[p] = lv;
        send(p, net::StateLevelPayload{lv.level, lv.hops});
        cl_.trace(id, "level-out", PAD{}, lv.level, std::to_string(p) + " " + to_string(lv));
    }
}

// ---------------------------------------------------------------------------
// calculator

double Node::calc_step()
{
    reset_op_count();
    ++cl_.out.stats.steps;
    if (!track.empty()) {
        TrackItem item = std::move(track.front());
        track.pop_front();
        process_track(std::move(item));
    } else if (!leaf_stack.empty()) {
        std::uint64_t tid = leaf_stack.front();
        leaf_stack.pop_front();
        auto it = tasks.find(tid);
        if (it != tasks.end())
            run_leaf(it->second);
    } else {
        // deepest level first
        auto lv = std::prev(vokzal.end());
        auto [a, d] = lv->second.front();
        lv->second.pop_front();
        if (lv->second.empty())
            vokzal.erase(lv);
        AmineInstance& am = pine.at(a);
        mark_dispatched(am, d);
        const DropDescriptor& drop = am.drops[static_cast<std::size_t>(d - 1)];
        std::uint64_t tid = new_task(PAD{id, a, d}, 0, id, drop.type, drop.rec_num, drop.in_data);
        unroll(tasks.at(tid));
    }
    std::uint64_t ops = op_count();
    cl_.out.stats.ops += ops;
    return static_cast<double>(ops) * cl_.opts.cost.op_us + cl_.opts.cost.unit_us;
}

bool Node::runs_as_leaf(DropTypeId type, const Slots& in_data, std::size_t block) const
{
    const DropTypeInfo& info = cat_.drop_type(type);
    if (block <= cl_.opts.leaf_size || !cat_.unroll_of(type))
        return true;
    if (!info.trivial)
        return false;
    Blocks main;
    for (int i = 0; i < info.main_inputs; ++i)
        main.push_back(*in_data[static_cast<std::size_t>(i)]);
    return info.trivial(main);
}

std::uint64_t Node::new_task(PAD ret, std::uint64_t ticket, int parent, DropTypeId type, int rec, Slots in)
{
    HostedTask t;
    t.id = next_task_++;
    t.ret = ret;
    t.ticket = ticket;
    t.parent = parent;
    t.type = type;
    t.rec_num = rec;
    t.in_data = std::move(in);
    t.in_data.resize(static_cast<std::size_t>(cat_.drop_type(type).input_count()));
    by_pad.emplace(ret, t.id);
    cl_.out.stats.max_rec_num = std::max(cl_.out.stats.max_rec_num, rec);
    auto id_ = t.id;
    tasks.emplace(id_, std::move(t));
    return id_;
}

void Node::process_track(TrackItem item)
{
    switch (item.kind) {
    case TrackItem::Task: {
        auto it = tasks.find(item.task);
        if (it == tasks.end())
            return;
        HostedTask& t = it->second;
        if (runs_as_leaf(t.type, t.in_data, t.in_data[0]->size())) {
            t.stage = Stage::Leaf;
            leaf_stack.push_back(t.id);
        } else {
            unroll(t);
        }
        return;
    }
    case TrackItem::Result:
        accept_result(item.pad.na, item.pad.nd, item.out);
        return;
    case TrackItem::Finalize:
        finalize_queued_.erase(item.amine);
        if (pine.count(item.amine) && amine_complete(pine.at(item.amine)))
            finalize(item.amine);
        return;
    case TrackItem::FinishParked: {
        auto it = tasks.find(item.task);
        if (it == tasks.end() || it->second.stage != Stage::Parked)
            return;
        HostedTask& t = it->second;
        DropDescriptor view;
        view.in_data = t.in_data;
        Blocks out = cat_.drop_type(t.type).finish(std::move(t.partial), view.additional_inputs(cat_.drop_type(t.type)));
        complete_task(t.id, std::move(out));
        return;
    }
    }
}

void Node::unroll(HostedTask& t)
{
    const DropTypeInfo& info = cat_.drop_type(t.type);
    DropDescriptor desc;
    desc.pad = t.ret;
    desc.type = t.type;
    desc.in_data = t.in_data;
    desc.out_data.resize(static_cast<std::size_t>(info.outputs));
    desc.rec_num = t.rec_num;
    int a = next_amine_++;
    AmineInstance am = input_data_to_amine(cat_, desc, id, a);
    t.stage = Stage::Amine;
    t.amine = a;
    amine_task[a] = t.id;
    ++cl_.out.stats.amines;
    trace("unroll", t.ret, "amine " + std::to_string(a));
    auto& placed = pine.emplace(a, std::move(am)).first->second;
    for (std::size_t i = 0; i < placed.status.size(); ++i)
        if (placed.status[i] == DropStatus::Ready)
            on_ready(a, static_cast<int>(i) + 1);
}

bool Node::has_all_inputs(const HostedTask& t) const
{
    return std::all_of(t.in_data.begin(), t.in_data.end(), [](const auto& s) { return s.has_value(); });
}

void Node::run_leaf(HostedTask& t)
{
    const DropTypeInfo& info = cat_.drop_type(t.type);
    DropDescriptor view;
    view.in_data = t.in_data;
    Blocks partial = info.leaf_main(view.main_inputs(info), cl_.opts.leaf_size);
    ++cl_.out.stats.leaves;
    if (info.additional_inputs == 0) {
        complete_task(t.id, std::move(partial));
        return;
    }
    if (has_all_inputs(t)) {
        complete_task(t.id, info.finish(std::move(partial), view.additional_inputs(info)));
        return;
    }
    t.stage = Stage::Parked;
    t.partial = std::move(partial);
    trace("park", t.ret);
}

void Node::complete_task(std::uint64_t task_id, Blocks out)
{
    auto it = tasks.find(task_id);
    HostedTask t = std::move(it->second);
    tasks.erase(it);
    for (auto [b, e] = by_pad.equal_range(t.ret); b != e; ++b)
        if (b->second == task_id) {
            by_pad.erase(b);
            break;
        }
    if (t.ret == kJobPad) {
        trace("job-done");
        cl_.result = std::move(out);
        return;
    }
    if (t.parent == id) {
        accept_result(t.ret.na, t.ret.nd, out);
        return;
    }
    trace("result-out", t.ret, "to " + std::to_string(t.parent));
    send(t.parent, net::ResultPayload{t.ret, t.ticket, std::move(out)});
    auto a = aerodrome.find(t.parent);
    if (a != aerodrome.end() && --a->second == 0) {
        aerodrome.erase(a);
        last_sent.erase(t.parent);
    }
}

void Node::remove_from_vokzal(int amine, int drop)
{
    for (auto it = vokzal.begin(); it != vokzal.end(); ++it) {
        auto& q = it->second;
        auto f = std::find(q.begin(), q.end(), std::make_pair(amine, drop));
        if (f != q.end()) {
            q.erase(f);
            if (q.empty())
                vokzal.erase(it);
            return;
        }
    }
}

void Node::accept_result(int amine, int drop, const Blocks& out)
{
    auto it = pine.find(amine);
    if (it == pine.end()) {
        ++cl_.out.stats.discarded_results;
        trace("discard", PAD{id, amine, drop}, "no amine");
        return;
    }
    AmineInstance& am = it->second;
    if (am.status[static_cast<std::size_t>(drop - 1)] == DropStatus::Ready)
        remove_from_vokzal(amine, drop);
    WriteOutcome o = write_results_to_amine(cat_, am, drop, out);
    if (o.duplicate) {
        ++cl_.out.stats.discarded_results;
        trace("discard", PAD{id, amine, drop}, "duplicate");
        return;
    }
    handle_outcome(amine, o);
    if (pine.count(amine) && amine_complete(pine.at(amine)))
        finalize(amine);
}

void Node::finalize(int amine)
{
    Blocks out = finalize_amine(cat_, pine.at(amine));
    std::uint64_t tid = amine_task.at(amine);
    pine.erase(amine);
    amine_task.erase(amine);
    trace("finalize", PAD{id, amine, 0});
    complete_task(tid, std::move(out));
}

void Node::on_ready(int amine, int drop)
{
    AmineInstance& am = pine.at(amine);
    const DropDescriptor& d = am.drops[static_cast<std::size_t>(drop - 1)];
    if (runs_as_leaf(d.type, d.in_data, d.block_size())) {
        mark_dispatched(am, drop);
        std::uint64_t tid = new_task(PAD{id, amine, drop}, 0, id, d.type, d.rec_num, d.in_data);
        tasks.at(tid).stage = Stage::Leaf;
        leaf_stack.push_back(tid);
        return;
    }
    vokzal[d.rec_num].emplace_back(amine, drop);
}

void Node::handle_outcome(int amine, const WriteOutcome& o)
{
    for (int d : o.ready)
        on_ready(amine, d);
    for (auto [d, in] : o.late_additional)
        forward_additional(amine, d, in);
}

void Node::forward_additional(int amine, int drop, int in)
{
    const BlockMatrix value = *pine.at(amine).drops[static_cast<std::size_t>(drop - 1)].in_data[static_cast<std::size_t>(in)];
    const PAD pad{id, amine, drop};
    std::vector<std::uint64_t> local;
    for (auto [b, e] = by_pad.equal_range(pad); b != e; ++b)
        local.push_back(b->second);
    for (auto tid : local) {
        auto t = tasks.find(tid);
        if (t != tasks.end())
            deliver_additional(t->second, in, value);
    }
    for (const auto& [child, rec] : terminal)
        for (const auto& [ticket, ad] : rec.outstanding)
            if (ad == std::make_pair(amine, drop)) {
                send(child, net::AdditionalPayload{pad, {{in, value}}});
                break;
            }
}

void Node::deliver_additional(HostedTask& t, int idx, const BlockMatrix& value)
{
    if (idx < 0 || idx >= static_cast<int>(t.in_data.size()))
        fail(Errc::InvalidArgument, "bad additional component index " + std::to_string(idx));
    auto& slot = t.in_data[static_cast<std::size_t>(idx)];
    if (slot) {
        if (!(*slot == value))
            fail(Errc::DoubleCompletion, "divergent additional component for " + t.ret.to_string());
        return;
    }
    slot = value;
    const int main = cat_.drop_type(t.type).main_inputs;
    if (t.stage == Stage::Amine) {
        auto am = pine.find(t.amine);
        if (am == pine.end())
            return;
        WriteOutcome o = write_additional_to_amine(cat_, am->second, idx - main, value);
        handle_outcome(t.amine, o);
        if (amine_complete(am->second) && finalize_queued_.insert(t.amine).second)
            track.push_back(TrackItem{TrackItem::Finalize, 0, {}, {}, t.amine});
    } else if (t.stage == Stage::Parked && has_all_inputs(t)) {
        track.push_back(TrackItem{TrackItem::FinishParked, t.id, {}, {}, kNoAmine});
    }
}

void Node::cancel_task(std::uint64_t task_id)
{
    auto it = tasks.find(task_id);
    if (it == tasks.end())
        return;
    HostedTask t = std::move(it->second);
    tasks.erase(it);
    for (auto [b, e] = by_pad.equal_range(t.ret); b != e; ++b)
        if (b->second == task_id) {
            by_pad.erase(b);
            break;
        }
    std::erase(leaf_stack, task_id);
    std::erase_if(track, [&](const TrackItem& i) {
        return (i.kind == TrackItem::Task || i.kind == TrackItem::FinishParked) && i.task == task_id;
    });
    if (t.stage == Stage::Amine)
        cancel_amine(t.amine);
    if (t.parent >= 0 && t.parent != id) {
        auto a = aerodrome.find(t.parent);
        if (a != aerodrome.end() && --a->second == 0) {
            aerodrome.erase(a);
            last_sent.erase(t.parent);
        }
    }
    trace("cancel", t.ret);
}

void Node::cancel_amine(int amine)
{
    if (!pine.count(amine))
        return;
    for (auto it = vokzal.begin(); it != vokzal.end();) {
        std::erase_if(it->second, [&](const auto& ad) { return ad.first == amine; });
        it = it->second.empty() ? vokzal.erase(it) : std::next(it);
    }
    std::erase_if(track, [&](const TrackItem& i) {
        return (i.kind == TrackItem::Result && i.pad.np == id && i.pad.na == amine) ||
            (i.kind == TrackItem::Finalize && i.amine == amine);
    });
    finalize_queued_.erase(amine);
    pine.erase(amine);
    amine_task.erase(amine);
    std::vector<std::uint64_t> local;
    for (auto b = by_pad.lower_bound(PAD{id, amine, INT_MIN}); b != by_pad.end() && b->first.np == id &&
         b->first.na == amine;
         ++b)
        local.push_back(b->second);
    for (auto tid : local)
        cancel_task(tid);
}

// ---------------------------------------------------------------------------
// cluster

Cluster::Cluster(const JobHandle& job, const RuntimeOptions& o)
    : opts(o), catalog(standard_catalog()), net(o.nodes, o.latency, o.seed), failures_(o.failures)
{
    if (o.nodes == 0)
        fail(Errc::InvalidArgument, "cluster needs at least one node");
    validate_leaf(LeafConfig{o.leaf_size});
    if (!(o.cost.msg_us > 0) || o.cost.op_us < 0 || o.cost.unit_us < 0)
        fail(Errc::InvalidArgument, "message cost must be positive and compute costs non-negative");
    for (const auto& f : failures_)
        if (f.node < 0 || f.node >= static_cast<int>(o.nodes))
            fail(Errc::InvalidArgument, "failure injection names node " + std::to_string(f.node));
    std::stable_sort(failures_.begin(), failures_.end(),
        [](const FailurePlan& a, const FailurePlan& b) { return a.time > b.time; });
    for (std::size_t i = 0; i < o.nodes; ++i)
        nodes.push_back(std::make_unique<Node>(*this, static_cast<int>(i)));
    // the root starts with the whole job and every other node's id
    Node& root = *nodes[0];
    for (std::size_t i = 1; i < o.nodes; ++i) {
        root.held.push_back(FreeEntry{static_cast<int>(i), 0});
        nodes[i]->listed = true;
    }
    root.inject_job(job);
}

void Cluster::schedule(Node& n)
{
    if (n.wake_pending || !n.has_work())
        return;
    n.wake_pending = true;
    std::uint64_t tie = opts.seed == 0 ? static_cast<std::uint64_t>(n.id)
                                       : net::mix64(opts.seed ^ (static_cast<std::uint64_t>(n.id) << 32) ^ ++wake_seq_);
    wakes_.emplace(std::max(n.clock, now), tie, n.id);
}

void Cluster::apply_failure(const FailurePlan& f)
{
    Node& x = *nodes[static_cast<std::size_t>(f.node)];
    if (!x.alive)
        return;
    if (f.node == 0)
        fail(Errc::RootFailureUnrecoverable, "root node failed");
    trace(f.node, f.crash ? "crash" : "suspect", PAD{}, kNoLevel, std::to_string(x.incarnation));
    auto& s = suspected[f.node];
    s = std::max(s, x.incarnation);
    if (f.crash) {
        x.crash();
        net.mark_failed(f.node);
    }
    for (auto& n : nodes)
        if (n->alive)
            net.send(Message{0, n->id, false, net::NodeFailurePayload{f.node, x.incarnation}}, now);
}

bool Cluster::finished() const
{
    if (!result)
        return false;
    const Node& root = *nodes[0];
    std::set<FreeEntry> at_root(root.held.begin(), root.held.end());
    for (const auto& n : nodes)
        if (n->alive && !at_root.count(FreeEntry{n->id, n->incarnation}))
            return false;
    return true;
}

namespace {

net::InFlight summarize(const Message& m)
{
    net::InFlight f;
    f.kind = m.kind();
    f.src = m.src;
    f.dst = m.dst;
    f.bounced = m.bounced;
    if (auto* p = std::get_if<net::FreeListPayload>(&m.payload))
        f.ids = p->ids;
    else if (auto* p = std::get_if<net::StateLevelPayload>(&m.payload))
        f.level = p->level;
    else if (auto* p = std::get_if<net::DropTaskPayload>(&m.payload))
        f.ticket = p->ticket;
    else if (auto* p = std::get_if<net::ResultPayload>(&m.payload))
        f.ticket = p->ticket;
    return f;
}

} // namespace

void Cluster::audit()
{
    ++out.audit.checks;
    std::vector<net::InFlight> wire = net.in_flight();
    for (const auto& n : nodes)
        if (n->alive)
            for (const auto& m : n->inbox)
                wire.push_back(summarize(m));

    // no double booking
    std::map<int, int> booked;
    auto count_entry = [&](const FreeEntry& e) {
        const Node& y = *nodes[static_cast<std::size_t>(e.id)];
        if (y.alive && e.incarnation == y.incarnation)
            ++booked[e.id];
    };
    for (const auto& n : nodes)
        if (n->alive)
            for (const auto& e : n->held)
                count_entry(e);
    std::set<std::uint64_t> wire_tickets;
    std::set<std::pair<int, int>> level_in_flight;
    for (const auto& w : wire) {
        if (w.kind == MsgKind::FreeList)
            for (const auto& e : w.ids)
                count_entry(e);
        if (w.kind == MsgKind::DropTask) {
            const Ticket& t = tickets.at(w.ticket);
            const Node& y = *nodes[static_cast<std::size_t>(w.dst)];
            if (y.alive && t.child_incarnation == y.incarnation)
                ++booked[w.dst];
        }
        if (w.kind == MsgKind::DropTask || w.kind == MsgKind::Result)
            wire_tickets.insert(w.ticket);
        if (w.kind == MsgKind::StateLevel)
            level_in_flight.emplace(w.src, w.dst);
    }
    for (const auto& [node, c] : booked)
        if (c > 1)
            violation("node " + std::to_string(node) + " booked " + std::to_string(c) + " times");

    // drop conservation
    std::set<std::uint64_t> in_terminals;
    for (const auto& n : nodes) {
        if (!n->alive)
            continue;
        for (const auto& [c, rec] : n->terminal)
            for (const auto& [ticket, ad] : rec.outstanding) {
                in_terminals.insert(ticket);
                const Ticket& t = tickets.at(ticket);
                if (t.state != TicketState::Outstanding || t.sender != n->id || t.child != c)
                    violation("terminal of " + std::to_string(n->id) + " holds settled ticket " + std::to_string(ticket));
            }
    }
    for (const auto& [ticket, t] : tickets) {
        if (t.state != TicketState::Outstanding)
            continue;
        const Node& s = *nodes[static_cast<std::size_t>(t.sender)];
        if (!s.alive)
            continue;
        if (!in_terminals.count(ticket))
            violation("outstanding ticket " + std::to_string(ticket) + " missing from terminal");
        const Node& c = *nodes[static_cast<std::size_t>(t.child)];
        if (!c.alive || wire_tickets.count(ticket))
            continue;
        auto sus = suspected.find(t.child);
        if (sus != suspected.end() && sus->second >= t.child_incarnation)
            continue;
        auto sus_p = suspected.find(t.sender);
        if (sus_p != suspected.end())
            continue;
        bool hosted = std::any_of(c.tasks.begin(), c.tasks.end(),
            [&](const auto& kv) { return kv.second.ticket == ticket && kv.second.parent == t.sender; });
        if (!hosted)
            violation("ticket " + std::to_string(ticket) + " is nowhere");
    }

    // level accuracy
    for (const auto& c : nodes) {
        if (!c->alive)
            continue;
        const Level lv = c->level();
        for (const auto& [p, count] : c->aerodrome) {
            if (!nodes[static_cast<std::size_t>(p)]->alive)
                continue;
            auto ls = c->last_sent.find(p);
            if (ls == c->last_sent.end() || ls->second != lv)
                violation("node " + std::to_string(c->id) + " did not report level " + to_string(lv) + " to " +
                    std::to_string(p));
            const Node& parent = *nodes[static_cast<std::size_t>(p)];
            auto rec = parent.terminal.find(c->id);
            if (rec == parent.terminal.end() || level_in_flight.count({c->id, p}) || ls == c->last_sent.end())
                continue;
            if (rec->second.level != ls->second)
                violation("node " + std::to_string(p) + " records level " + to_string(rec->second.level) +
                    " for child " + std::to_string(c->id) + ", child reported " + to_string(ls->second));
        }
    }
}

bool Node::quiescent() const
{
    return pine.empty() && tasks.empty() && terminal.empty() && !calc_ready();
}

void Cluster::final_audit()
{
    for (const auto& [ticket, t] : tickets) {
        const Node& s = *nodes[static_cast<std::size_t>(t.sender)];
        if (t.state == TicketState::Outstanding && s.alive)
            violation("ticket " + std::to_string(ticket) + " still outstanding at termination");
    }
    for (const auto& n : nodes) {
        if (!n->alive)
            continue;
        if (!n->quiescent())
            violation("node " + std::to_string(n->id) + " not quiescent at termination (pine " +
                std::to_string(n->pine.size()) + ", tasks " + std::to_string(n->tasks.size()) + ", terminal " +
                std::to_string(n->terminal.size()) + ")");
    }
}

bool Cluster::next_event()
{
    std::optional<double> tf;
    if (!failures_.empty())
        tf = failures_.back().time;
    std::optional<double> tm = net.next_time();
    std::optional<double> tw;
    if (!wakes_.empty())
        tw = std::get<0>(*wakes_.begin());
    if (!tf && !tm && !tw)
        return false;
    auto earliest = [](std::optional<double> a, std::optional<double> b) { return a && (!b || *a <= *b); };
    if (tf && earliest(tf, tm) && earliest(tf, tw)) {
        FailurePlan f = failures_.back();
        failures_.pop_back();
        now = std::max(now, f.time);
        apply_failure(f);
    } else if (tm && earliest(tm, tw)) {
        auto d = net.deliver_next();
        if (!d)
            return true;
        now = d->time;
        Node& n = *nodes[static_cast<std::size_t>(d->msg.dst)];
        if (n.alive) {
            n.inbox.push_back(std::move(d->msg));
            schedule(n);
        }
    } else {
        auto [t, tie, id] = *wakes_.begin();
        wakes_.erase(wakes_.begin());
        Node& n = *nodes[static_cast<std::size_t>(id)];
        n.wake_pending = false;
        if (!n.alive)
            return true;
        now = t;
        double cost = n.step(now);
        n.clock = now + cost;
        for (auto& m : n.outbox)
            net.send(m, n.clock);
        n.outbox.clear();
        schedule(n);
    }
    return true;
}

JobResult Cluster::run()
{
    schedule(*nodes[0]);
    std::uint64_t events = 0;
    while (!finished()) {
        if (++events > opts.max_events)
            fail(Errc::DeadlockDetected, "event budget exhausted at t=" + std::to_string(now) + recent_trace());
        if (!next_event())
            fail(Errc::DeadlockDetected, "no pending events at t=" + std::to_string(now) +
                    (result ? " (result ready, free list incomplete)" : "") + recent_trace());
        if (opts.audit)
            audit();
    }
    double done_at = now;
    std::vector<net::FreeEntry> final_held = nodes[0]->held;
    if (opts.audit) {
        // redundant copies of drops that a late result already settled keep
        // running; let them finish and be discarded before checking
        failures_.clear();
        while (++events <= opts.max_events && next_event())
            audit();
        final_audit();
    }
    out.stats.sim_time = done_at;
    for (const auto& e : final_held)
        out.stats.final_free_list.push_back(e.id);
    std::sort(out.stats.final_free_list.begin(), out.stats.final_free_list.end());
    for (auto& n : nodes)
        if (n->alive)
            net.send(Message{0, n->id, false, net::TerminatePayload{}}, now);
    while (net.next_time()) {
        auto d = net.deliver_next();
        if (d)
            nodes[static_cast<std::size_t>(d->msg.dst)]->terminated = true;
    }
    out.stats.net = net.stats();
    out.outputs = std::move(*result);
    return std::move(out);
}

} // namespace

JobResult submit(const JobHandle& job, const RuntimeOptions& options)
{
    Cluster cl(job, options);
    return cl.run();
}

} // namespace dap::rt
