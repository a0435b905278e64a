#include "mesh/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mesh/errors.hpp"

namespace mesh {

namespace {

constexpr std::uint64_t kTagFire = 0;
constexpr std::uint64_t kTagRetx = 1;

std::uint64_t make_tag(std::uint64_t kind, std::uint32_t gen, std::uint32_t packet_id) {
    return (kind << 62) | (static_cast<std::uint64_t>(gen & 0x3FFFFFFF) << 32) | packet_id;
}

bool contains(const std::vector<NodeId>& v, NodeId x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

} // namespace

std::vector<NodeId> select_forwarding_nodes(const RouteView& routes, NodeId sender,
                                            const std::vector<NodeId>& sp_route,
                                            NodeId dst, double etx_threshold) {
    if (etx_threshold < 1.0)
        throw std::invalid_argument("etx threshold must be >= 1");

    const double sender_etx = routes.route_etx(sender, dst);
    struct Cand {
        NodeId v;
        double etx_dst;
    };
    std::vector<Cand> cands;
    for (NodeId v : routes.neighbors(sender)) {
        if (routes.link_etx_between(sender, v) > etx_threshold)
            continue; // rule 1: good link from the sender
        bool near_sp = contains(sp_route, v);
        for (std::size_t i = 0; !near_sp && i < sp_route.size(); ++i)
            near_sp = routes.linked(v, sp_route[i]);
        if (!near_sp)
            continue; // rule 2: adjacent to the shortest path
        double ve = routes.route_etx(v, dst);
        if (!(ve < sender_etx))
            continue; // progress rule: strictly closer to dst
        cands.push_back({v, ve});
    }

    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.etx_dst != b.etx_dst)
            return a.etx_dst < b.etx_dst;
        return a.v < b.v;
    });

    // Rule 3: every surviving pair must be linked with ETX within threshold;
    // an unlinked pair counts as over-threshold. Greedy in the final ordering
    // keeps the member with smaller route ETX. Pairwise-linked candidates are
    // the reason a firing forwarder's announcement reaches the other
    // candidates at all.
    std::vector<NodeId> out;
    for (const auto& c : cands) {
        bool ok = true;
        for (NodeId a : out) {
            if (!routes.linked(a, c.v) || routes.link_etx_between(a, c.v) > etx_threshold) {
                ok = false;
                break;
            }
        }
        if (ok)
            out.push_back(c.v);
    }

    if (out.empty())
        throw NoForwarderError("no forwarding node from " + std::to_string(sender) +
                               " toward " + std::to_string(dst));
    return out;
}

double forwarding_timer(int i, int n, double etx_dest, double t_slot) {
    if (i < 1 || n < 1)
        throw std::invalid_argument("forwarding timer needs i >= 1 and n >= 1");
    if (etx_dest < 0.0 || t_slot < 0.0)
        throw std::invalid_argument("forwarding timer needs non-negative etx and slot");
    return (static_cast<double>(i) / (static_cast<double>(n) * static_cast<double>(n))) *
           etx_dest * t_slot;
}

void CormenNode::originate(const Packet& pkt, NodeEnv& env) {
    if (pkt.src == pkt.dst) {
        NativePacketDescriptor d;
        d.packet_id = pkt.id;
        d.src = pkt.src;
        d.dst = pkt.dst;
        d.created_at_ms = static_cast<std::uint32_t>(std::llround(env.now() * 1000.0));
        d.payload_len = static_cast<std::uint16_t>(pkt.payload->size());
        env.delivered(id(), d, *pkt.payload);
        return;
    }

    if (static_cast<int>(own_ready_.size() + forward_queue_.size()) >= params_.max_queue) {
        env.dropped(id(), pkt.id, "queue-full");
        return;
    }

    NativePacketDescriptor d;
    d.packet_id = pkt.id;
    d.src = pkt.src;
    d.dst = pkt.dst;
    d.created_at_ms = static_cast<std::uint32_t>(std::llround(env.now() * 1000.0));
    d.payload_len = static_cast<std::uint16_t>(pkt.payload->size());
    d.traversed = {id()};
    pool_put(pkt.id, pkt.payload, d, env.now());

    retx_[pkt.id] = RetxState{pkt, 0, false, false};
    emit_native(pkt, env);
    env.schedule(id(), make_tag(kTagRetx, 0, pkt.id), env.now() + params_.ack_timeout_s);
}

void CormenNode::emit_native(const Packet& pkt, NodeEnv& env) {
    NativePacketDescriptor d;
    d.packet_id = pkt.id;
    d.src = pkt.src;
    d.dst = pkt.dst;
    d.payload_len = static_cast<std::uint16_t>(pkt.payload->size());
    d.traversed = {id()};
    auto pooled = pool_.find(pkt.id);
    d.created_at_ms = pooled != pool_.end()
                          ? pooled->second.desc.created_at_ms
                          : static_cast<std::uint32_t>(std::llround(env.now() * 1000.0));
    try {
        d.sp_route = env.routes().path(id(), pkt.dst);
        d.forwarding_set = select_forwarding_nodes(env.routes(), id(), d.sp_route, pkt.dst,
                                                   params_.etx_threshold);
    } catch (const NoRouteError&) {
        env.dropped(id(), pkt.id, "no-route");
        auto it = retx_.find(pkt.id);
        if (it != retx_.end())
            it->second.done = true;
        return;
    } catch (const NoForwarderError&) {
        env.dropped(id(), pkt.id, "no-forwarder");
        auto it = retx_.find(pkt.id);
        if (it != retx_.end())
            it->second.done = true;
        return;
    }

    DataFrame f;
    f.recipients = d.forwarding_set;
    f.components = {d};
    f.xor_payload = *pkt.payload;
    own_ready_.push_back({Frame{std::move(f)}, {0}, {}});
    env.notify_tx_ready(id());
}

void CormenNode::receive(const Frame& frame, NodeId mac_sender, std::uint64_t tx_id,
                         const std::vector<std::uint32_t>& /*report*/, NodeEnv& env) {
    if (const auto* f = std::get_if<DataFrame>(&frame)) {
        handle_data(*f, mac_sender, tx_id, env);
    } else if (const auto* a = std::get_if<AnnounceFrame>(&frame)) {
        handle_announce(*a, env);
    } else if (const auto* k = std::get_if<AckFrame>(&frame)) {
        if (process_ack(*k, mac_sender, env) == AckRole::kConsume) {
            auto it = retx_.find(k->packet_id);
            if (it != retx_.end())
                it->second.acked = true;
            // Pool payload stays around as decode aid for frames still in
            // flight; only the retransmission schedule is retired.
        }
    }
    // ETX probes are consumed by the engine's measurement log.
}

PayloadPtr CormenNode::find_payload(std::uint32_t packet_id, double now) const {
    for (const auto& e : forward_queue_)
        if (e.desc.packet_id == packet_id)
            return e.payload;
    auto it = pool_.find(packet_id);
    if (it != pool_.end() && it->second.expires_at >= now)
        return it->second.payload;
    return nullptr;
}

PayloadPtr CormenNode::recover_component(const DataFrame& f, std::size_t index,
                                         double now) const {
    const auto& target = f.components[index];
    if (PayloadPtr held = find_payload(target.packet_id, now))
        return held; // already known, nothing to decode
    if (f.components.size() == 1) {
        auto p = std::make_shared<std::vector<std::uint8_t>>(f.xor_payload);
        p->resize(target.payload_len);
        return p;
    }
    std::vector<std::vector<std::uint8_t>> known;
    known.reserve(f.components.size() - 1);
    for (std::size_t j = 0; j < f.components.size(); ++j) {
        if (j == index)
            continue;
        PayloadPtr q = find_payload(f.components[j].packet_id, now);
        if (!q)
            return nullptr;
        known.push_back(*q);
    }
    return std::make_shared<std::vector<std::uint8_t>>(
        xor_decode(f.xor_payload, known, target.payload_len));
}

void CormenNode::handle_data(const DataFrame& f, NodeId /*mac_sender*/, std::uint64_t tx_id,
                             NodeEnv& env) {
    const double now = env.now();
    const bool addressed = contains(f.recipients, id());

    // Promiscuous harvest: keep every component payload this node can
    // actually reconstruct. Overheard packets are what the O sets certify.
    for (std::size_t i = 0; i < f.components.size(); ++i) {
        const auto& c = f.components[i];
        if (queue_has(c.packet_id) || pool_has(c.packet_id, now))
            continue;
        if (PayloadPtr p = recover_component(f, i, now))
            pool_put(c.packet_id, std::move(p), c, now);
    }

    if (!addressed)
        return; // overhearing only, no further action

    for (std::size_t i = 0; i < f.components.size(); ++i) {
        const auto& c = f.components[i];
        if (!contains(c.forwarding_set, id()))
            continue; // some other recipient's component

        PayloadPtr payload = recover_component(f, i, now);
        if (!payload) {
            env.decode_failed(id(), c.packet_id);
            continue;
        }

        if (c.dst == id()) {
            if (!delivered_.count(c.packet_id)) {
                delivered_.insert(c.packet_id);
                env.delivered(id(), c, *payload);
            }
            // Re-ACK duplicates: the earlier ACK may have been lost.
            push_frame({Frame{AckFrame{c.packet_id, id(), c.src}}, {}, {}});
            env.notify_tx_ready(id());
            continue;
        }

        if (queue_has(c.packet_id))
            continue; // already pending here
        enqueue_forward(c, std::move(payload), tx_id, env);
    }
}

void CormenNode::enqueue_forward(const NativePacketDescriptor& arriving, PayloadPtr payload,
                                 std::uint64_t tx_id, NodeEnv& env) {
    const double now = env.now();
    if (static_cast<int>(own_ready_.size() + forward_queue_.size()) >= params_.max_queue) {
        env.dropped(id(), arriving.packet_id, "queue-full");
        return;
    }

    NativePacketDescriptor d = arriving;
    // The previous sender's forwarding set becomes overhearing knowledge.
    for (NodeId o : arriving.forwarding_set)
        if (!contains(d.overheard, o))
            d.overheard.push_back(o);
    std::sort(d.overheard.begin(), d.overheard.end());
    if (!contains(d.traversed, id()))
        d.traversed.push_back(id());

    try {
        d.sp_route = env.routes().path(id(), d.dst);
        d.forwarding_set = select_forwarding_nodes(env.routes(), id(), d.sp_route, d.dst,
                                                   params_.etx_threshold);
    } catch (const NoRouteError&) {
        env.dropped(id(), d.packet_id, "no-route");
        return;
    } catch (const NoForwarderError&) {
        env.dropped(id(), d.packet_id, "no-forwarder");
        return;
    }

    auto rank_it = std::find(arriving.forwarding_set.begin(), arriving.forwarding_set.end(),
                             id());
    int rank = static_cast<int>(rank_it - arriving.forwarding_set.begin()) + 1;

    ForwardEntry e;
    e.desc = std::move(d);
    e.payload = std::move(payload);
    e.upstream_tx = tx_id;
    e.timer.packet_id = arriving.packet_id;
    e.timer.i = rank;
    e.timer.n = 0; // computed by refresh_timers below
    e.timer.etx_dest = env.routes().route_etx(id(), arriving.dst);
    e.timer.enqueue_time = now;
    e.timer.fire_at = std::numeric_limits<double>::infinity();
    forward_queue_.push_back(std::move(e));

    refresh_timers(env);
}

// Recompute every pending entry's codable count n and shorten its timer
// accordingly. fire_at never lengthens; a formula value already in the past
// fires immediately.
void CormenNode::refresh_timers(NodeEnv& env) {
    const double now = env.now();
    for (auto& e : forward_queue_) {
        if (e.eligible)
            continue;
        int n = plan_size(e.desc);
        if (n <= e.timer.n)
            continue;
        e.timer.n = n;
        double formula = e.timer.enqueue_time + forwarding_timer(e.timer.i, e.timer.n,
                                                                 e.timer.etx_dest,
                                                                 params_.t_slot_s);
        if (formula < e.timer.fire_at) {
            e.timer.fire_at = formula;
            ++e.timer_gen;
            env.schedule(id(), make_tag(kTagFire, e.timer_gen, e.timer.packet_id),
                         std::max(formula, now));
        }
    }
}

std::vector<NativePacketDescriptor> CormenNode::queue_descriptors() const {
    std::vector<NativePacketDescriptor> out;
    out.reserve(forward_queue_.size());
    for (const auto& e : forward_queue_)
        out.push_back(e.desc);
    return out;
}

int CormenNode::plan_size(const NativePacketDescriptor& trigger) const {
    return static_cast<int>(build_coding_plan(id(), trigger, queue_descriptors(),
                                              static_cast<std::size_t>(params_.max_coded))
                                .components.size());
}

void CormenNode::handle_announce(const AnnounceFrame& a, NodeEnv& env) {
    const double now = env.now();
    for (std::uint32_t pid : a.packet_ids) {
        auto it = std::find_if(forward_queue_.begin(), forward_queue_.end(),
                               [&](const ForwardEntry& e) { return e.desc.packet_id == pid; });
        if (it == forward_queue_.end())
            continue; // unknown id, or our own timer already fired: no-op
        PayloadPtr payload = it->payload;
        NativePacketDescriptor desc = it->desc;
        forward_queue_.erase(it);
        eligible_.erase(std::remove(eligible_.begin(), eligible_.end(), pid),
                        eligible_.end());
        pool_put(pid, std::move(payload), desc, now);
        env.trace(id(), "suppress id=" + std::to_string(pid));
    }
}

void CormenNode::timer(std::uint64_t tag, NodeEnv& env) {
    const std::uint64_t kind = tag >> 62;
    const std::uint32_t gen = static_cast<std::uint32_t>((tag >> 32) & 0x3FFFFFFF);
    const std::uint32_t pid = static_cast<std::uint32_t>(tag);

    if (kind == kTagFire) {
        auto it = std::find_if(forward_queue_.begin(), forward_queue_.end(),
                               [&](const ForwardEntry& e) { return e.desc.packet_id == pid; });
        if (it == forward_queue_.end() || it->timer_gen != gen || it->eligible)
            return; // cancelled, rescheduled or already fired
        it->eligible = true;
        eligible_.push_back(pid);
        env.notify_tx_ready(id());
        return;
    }

    // Retransmission check.
    auto it = retx_.find(pid);
    if (it == retx_.end())
        return;
    RetxState& st = it->second;
    if (st.acked || st.done)
        return;
    // A copy still waiting in the send queue means the packet has not even
    // left this node yet; look again later.
    for (const auto& of : own_ready_) {
        if (const auto* df = std::get_if<DataFrame>(&of.frame)) {
            for (const auto& c : df->components) {
                if (c.packet_id == pid && c.src == id()) {
                    env.schedule(id(), make_tag(kTagRetx, 0, pid),
                                 env.now() + params_.ack_timeout_s);
                    return;
                }
            }
        }
    }
    if (st.attempts >= params_.max_retx) {
        st.done = true;
        return;
    }
    ++st.attempts;
    env.trace(id(), "retx id=" + std::to_string(pid) + " attempt=" +
                        std::to_string(st.attempts));
    emit_native(st.pkt, env);
    env.schedule(id(), make_tag(kTagRetx, 0, pid), env.now() + params_.ack_timeout_s);
}

std::optional<OutgoingFrame> CormenNode::next_frame(NodeEnv& env) {
    if (!ready_.empty()) {
        OutgoingFrame f = std::move(ready_.front());
        ready_.pop_front();
        if (f.component_upstream.size() == 1 && f.component_upstream[0] == 0 &&
            std::holds_alternative<DataFrame>(f.frame))
            --own_pending_; // an own-origin packet left the buffer
        return f;
    }

    while (!eligible_.empty()) {
        std::uint32_t pid = eligible_.front();
        auto trig = std::find_if(forward_queue_.begin(), forward_queue_.end(),
                                 [&](const ForwardEntry& e) { return e.desc.packet_id == pid; });
        if (trig == forward_queue_.end()) {
            eligible_.pop_front();
            continue;
        }

        // The coding plan is built now, when the medium actually grants a
        // transmission, so everything codable that queued up while waiting
        // rides along.
        CodingPlan plan = build_coding_plan(id(), trig->desc, queue_descriptors(),
                                            static_cast<std::size_t>(params_.max_coded));

        AnnounceFrame announce;
        announce.sender = id();
        DataFrame data;
        data.components = plan.components;
        data.recipients = plan.all_recipients();

        std::vector<std::vector<std::uint8_t>> payloads;
        std::vector<std::uint64_t> upstreams;
        const double now = env.now();
        for (const auto& comp : plan.components) {
            announce.packet_ids.push_back(comp.packet_id);
            auto qit = std::find_if(forward_queue_.begin(), forward_queue_.end(),
                                    [&](const ForwardEntry& e) {
                                        return e.desc.packet_id == comp.packet_id;
                                    });
            if (qit == forward_queue_.end())
                throw ConsistencyError("coding plan includes a packet not in the queue");
            PayloadPtr payload = qit->payload;
            payloads.push_back(*payload);
            upstreams.push_back(qit->upstream_tx);
            forward_queue_.erase(qit);
            eligible_.erase(std::remove(eligible_.begin(), eligible_.end(), comp.packet_id),
                            eligible_.end());
            pool_put(comp.packet_id, std::move(payload), comp, now);
        }
        data.xor_payload = xor_encode(payloads);

        push_frame({Frame{std::move(data)}, std::move(upstreams), {}});
        return OutgoingFrame{Frame{std::move(announce)}, {}, {}};
    }
    return std::nullopt;
}

bool CormenNode::tx_pending() const {
    return !ready_.empty() || !eligible_.empty();
}

const TimerRecord* CormenNode::timer_for(std::uint32_t packet_id) const {
    for (const auto& e : forward_queue_)
        if (e.desc.packet_id == packet_id)
            return &e.timer;
    return nullptr;
}

bool CormenNode::pool_has(std::uint32_t packet_id, double now) const {
    auto it = pool_.find(packet_id);
    return it != pool_.end() && it->second.expires_at >= now;
}

bool CormenNode::queue_has(std::uint32_t packet_id) const {
    for (const auto& e : forward_queue_)
        if (e.desc.packet_id == packet_id)
            return true;
    return false;
}

void CormenNode::pool_put(std::uint32_t pid, PayloadPtr payload,
                          const NativePacketDescriptor& desc, double now) {
    pool_[pid] = PoolEntry{std::move(payload), desc, now + params_.pool_ttl_s};
}

} // namespace mesh
