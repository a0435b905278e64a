#include "mesh/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "mesh/coding.hpp"
#include "mesh/errors.hpp"

namespace mesh {

namespace {

constexpr std::uint64_t kTagRetx = 1;

std::uint64_t retx_tag(std::uint32_t packet_id) {
    return (kTagRetx << 62) | packet_id;
}

bool contains(const std::vector<NodeId>& v, NodeId x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

} // namespace

void FixedRouteNode::originate(const Packet& pkt, NodeEnv& env) {
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
    const auto created_ms = static_cast<std::uint32_t>(std::llround(env.now() * 1000.0));
    retx_[pkt.id] = RetxState{pkt, created_ms, 0, false, false};
    pool_put(pkt.id, pkt.payload, env.now());
    emit_own(pkt, created_ms, env);
    env.schedule(id(), retx_tag(pkt.id), env.now() + params_.ack_timeout_s);
}

void FixedRouteNode::emit_own(const Packet& pkt, std::uint32_t created_at_ms, NodeEnv& env) {
    if (static_cast<int>(output_queue_.size()) >= params_.max_queue) {
        env.dropped(id(), pkt.id, "queue-full");
        return;
    }
    QueueEntry e;
    e.desc.packet_id = pkt.id;
    e.desc.src = pkt.src;
    e.desc.dst = pkt.dst;
    e.desc.created_at_ms = created_at_ms;
    e.desc.payload_len = static_cast<std::uint16_t>(pkt.payload->size());
    e.desc.traversed = {id()};
    try {
        e.desc.sp_route = env.routes().path(id(), pkt.dst);
    } catch (const NoRouteError&) {
        env.dropped(id(), pkt.id, "no-route");
        auto it = retx_.find(pkt.id);
        if (it != retx_.end())
            it->second.done = true;
        return;
    }
    e.next_hop = e.desc.sp_route[1];
    e.desc.forwarding_set = {e.next_hop};
    e.payload = pkt.payload;
    e.upstream_tx = 0;
    output_queue_.push_back(std::move(e));
    env.notify_tx_ready(id());
}

void FixedRouteNode::receive(const Frame& frame, NodeId mac_sender, std::uint64_t tx_id,
                             const std::vector<std::uint32_t>& report, NodeEnv& env) {
    const double now = env.now();
    if (const auto* k = std::get_if<AckFrame>(&frame)) {
        if (process_ack(*k, mac_sender, env) == AckRole::kConsume) {
            auto it = retx_.find(k->packet_id);
            if (it != retx_.end())
                it->second.acked = true;
        }
        return;
    }
    const auto* f = std::get_if<DataFrame>(&frame);
    if (!f)
        return; // announces and probes carry nothing for these protocols

    observe(*f, mac_sender, report, env);

    // Promiscuous harvest of whatever is reconstructible.
    for (std::size_t i = 0; i < f->components.size(); ++i) {
        const auto& c = f->components[i];
        if (queue_has(c.packet_id))
            continue;
        auto it = pool_.find(c.packet_id);
        if (it != pool_.end() && it->second.expires_at >= now)
            continue;
        if (PayloadPtr p = recover_component(*f, i, now))
            pool_put(c.packet_id, std::move(p), now);
    }

    if (!contains(f->recipients, id()))
        return;

    for (std::size_t i = 0; i < f->components.size(); ++i) {
        const auto& c = f->components[i];
        if (!contains(c.forwarding_set, id()))
            continue;

        PayloadPtr payload = recover_component(*f, i, now);
        if (!payload) {
            env.decode_failed(id(), c.packet_id);
            continue;
        }

        if (c.dst == id()) {
            if (!delivered_.count(c.packet_id)) {
                delivered_.insert(c.packet_id);
                env.delivered(id(), c, *payload);
            }
            push_frame({Frame{AckFrame{c.packet_id, id(), c.src}}, {}, {}});
            env.notify_tx_ready(id());
            continue;
        }

        if (queue_has(c.packet_id))
            continue;
        if (static_cast<int>(output_queue_.size()) >= params_.max_queue) {
            env.dropped(id(), c.packet_id, "queue-full");
            continue;
        }

        // Advance along the fixed route.
        auto pos = std::find(c.sp_route.begin(), c.sp_route.end(), id());
        if (pos == c.sp_route.end() || pos + 1 == c.sp_route.end()) {
            env.dropped(id(), c.packet_id, "off-route");
            continue;
        }
        QueueEntry e;
        e.desc = c;
        if (!contains(e.desc.traversed, id()))
            e.desc.traversed.push_back(id());
        e.next_hop = *(pos + 1);
        e.desc.forwarding_set = {e.next_hop};
        e.payload = std::move(payload);
        e.upstream_tx = tx_id;
        output_queue_.push_back(std::move(e));
        env.notify_tx_ready(id());
    }
}

void FixedRouteNode::observe(const DataFrame&, NodeId, const std::vector<std::uint32_t>&,
                             NodeEnv&) {}

void FixedRouteNode::timer(std::uint64_t tag, NodeEnv& env) {
    const std::uint32_t pid = static_cast<std::uint32_t>(tag);
    auto it = retx_.find(pid);
    if (it == retx_.end())
        return;
    RetxState& st = it->second;
    if (st.acked || st.done)
        return;
    if (queue_has(pid)) { // still waiting for the medium
        env.schedule(id(), retx_tag(pid), env.now() + params_.ack_timeout_s);
        return;
    }
    if (st.attempts >= params_.max_retx) {
        st.done = true;
        return;
    }
    ++st.attempts;
    env.trace(id(), "retx id=" + std::to_string(pid) + " attempt=" +
                        std::to_string(st.attempts));
    emit_own(st.pkt, st.created_at_ms, env);
    env.schedule(id(), retx_tag(pid), env.now() + params_.ack_timeout_s);
}

std::optional<OutgoingFrame> FixedRouteNode::next_frame(NodeEnv& env) {
    if (!ready_.empty()) {
        OutgoingFrame f = std::move(ready_.front());
        ready_.pop_front();
        return f;
    }
    return forward(env);
}

bool FixedRouteNode::tx_pending() const {
    return !ready_.empty() || !output_queue_.empty();
}

void FixedRouteNode::pool_put(std::uint32_t pid, PayloadPtr payload, double now) {
    if (!pool_.count(pid)) {
        pool_recent_.push_back(pid);
        if (pool_recent_.size() > 64)
            pool_recent_.erase(pool_recent_.begin());
    }
    pool_[pid] = PoolEntry{std::move(payload), now + params_.pool_ttl_s};
}

PayloadPtr FixedRouteNode::find_payload(std::uint32_t packet_id, double now) const {
    for (const auto& e : output_queue_)
        if (e.desc.packet_id == packet_id)
            return e.payload;
    auto it = pool_.find(packet_id);
    if (it != pool_.end() && it->second.expires_at >= now)
        return it->second.payload;
    return nullptr;
}

PayloadPtr FixedRouteNode::recover_component(const DataFrame& f, std::size_t index,
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

bool FixedRouteNode::queue_has(std::uint32_t packet_id) const {
    for (const auto& e : output_queue_)
        if (e.desc.packet_id == packet_id)
            return true;
    return false;
}

bool CopeNode::neighbor_knows(NodeId neighbor, std::uint32_t packet_id, double now) const {
    auto it = neighbor_knowledge_.find(neighbor);
    if (it == neighbor_knowledge_.end())
        return false;
    auto jt = it->second.find(packet_id);
    return jt != it->second.end() && jt->second + params_.pool_ttl_s >= now;
}

void CopeNode::observe(const DataFrame& f, NodeId mac_sender,
                       const std::vector<std::uint32_t>& report, NodeEnv& env) {
    const double now = env.now();
    auto& known = neighbor_knowledge_[mac_sender];
    for (const auto& c : f.components)
        known[c.packet_id] = now; // the sender provably holds what it sent
    for (std::uint32_t pid : report)
        known[pid] = now;
}

std::optional<OutgoingFrame> CopeNode::forward(NodeEnv& env) {
    if (output_queue_.empty())
        return std::nullopt;
    const double now = env.now();

    // Head of line goes out. Coding partners come from the heads of the
    // per-next-hop virtual queues only, one packet per distinct next hop and
    // never two packets toward the same hop; each addition must leave every
    // next hop knowing every other component. Never delays a packet to wait
    // for a coding partner.
    std::vector<std::size_t> picked{0};
    std::vector<NodeId> hops_taken{output_queue_[0].next_hop};
    for (std::size_t qi = 1;
         qi < output_queue_.size() && picked.size() < static_cast<std::size_t>(params_.max_coded);
         ++qi) {
        NodeId hop = output_queue_[qi].next_hop;
        if (std::find(hops_taken.begin(), hops_taken.end(), hop) != hops_taken.end())
            continue; // not the head of this virtual queue (or same-hop pair)
        hops_taken.push_back(hop);

        std::vector<std::size_t> candidate = picked;
        candidate.push_back(qi);
        bool ok = true;
        for (std::size_t a : candidate) {
            const auto& pa = output_queue_[a];
            for (std::size_t b : candidate) {
                if (a == b)
                    continue;
                if (!neighbor_knows(pa.next_hop, output_queue_[b].desc.packet_id, now)) {
                    ok = false;
                    break;
                }
            }
            if (!ok)
                break;
        }
        if (ok)
            picked = std::move(candidate);
    }

    DataFrame data;
    std::vector<std::vector<std::uint8_t>> payloads;
    std::vector<std::uint64_t> upstreams;
    for (std::size_t qi : picked) {
        const auto& e = output_queue_[qi];
        data.components.push_back(e.desc);
        data.recipients.push_back(e.next_hop);
        payloads.push_back(*e.payload);
        upstreams.push_back(e.upstream_tx);
    }
    std::sort(data.recipients.begin(), data.recipients.end());
    data.recipients.erase(std::unique(data.recipients.begin(), data.recipients.end()),
                          data.recipients.end());
    data.xor_payload = xor_encode(payloads);

    // Remove picked entries back-to-front, then pool them.
    for (auto it = picked.rbegin(); it != picked.rend(); ++it) {
        auto& e = output_queue_[*it];
        pool_put(e.desc.packet_id, e.payload, now);
        output_queue_.erase(output_queue_.begin() + static_cast<std::ptrdiff_t>(*it));
    }

    // Piggybacked reception report: the most recent pool ids.
    std::vector<std::uint32_t> report;
    for (auto it = pool_recent_.rbegin(); it != pool_recent_.rend() &&
                                          report.size() < kReportCap;
         ++it)
        report.push_back(*it);

    return OutgoingFrame{Frame{std::move(data)}, std::move(upstreams), std::move(report)};
}

std::optional<OutgoingFrame> PlainNode::forward(NodeEnv& env) {
    if (output_queue_.empty())
        return std::nullopt;
    const double now = env.now();
    QueueEntry e = std::move(output_queue_.front());
    output_queue_.pop_front();

    DataFrame data;
    data.recipients = {e.next_hop};
    data.components = {e.desc};
    data.xor_payload = *e.payload;
    pool_put(e.desc.packet_id, e.payload, now);
    return OutgoingFrame{Frame{std::move(data)}, {e.upstream_tx}, {}};
}

} // namespace mesh
