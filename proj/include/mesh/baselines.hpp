#ifndef MESH_BASELINES_HPP
#define MESH_BASELINES_HPP

#include <cstdint>
#include <map>
#include <set>

#include "mesh/node.hpp"
#include "mesh/protocol.hpp"

namespace mesh {

/// Common machinery for the fixed-route baselines: a single output FIFO over
/// the precomputed ETX shortest path, a packet pool, and the same end-to-end
/// ACK / retransmission scheme the opportunistic protocol uses.
class FixedRouteNode : public Node {
public:
    FixedRouteNode(NodeId id, ProtocolParams params) : Node(id), params_(params) {}

    void originate(const Packet& pkt, NodeEnv& env) override;
    void receive(const Frame& frame, NodeId mac_sender, std::uint64_t tx_id,
                 const std::vector<std::uint32_t>& report, NodeEnv& env) override;
    void timer(std::uint64_t tag, NodeEnv& env) override;
    std::optional<OutgoingFrame> next_frame(NodeEnv& env) override;
    bool tx_pending() const override;

    std::size_t queue_size() const { return output_queue_.size(); }

protected:
    struct QueueEntry {
        NativePacketDescriptor desc; // sp_route fixed at origination
        PayloadPtr payload;
        NodeId next_hop = 0;
        std::uint64_t upstream_tx = 0;
    };

    struct PoolEntry {
        PayloadPtr payload;
        double expires_at = 0.0;
    };

    struct RetxState {
        Packet pkt;
        std::uint32_t created_at_ms = 0;
        int attempts = 0;
        bool acked = false;
        bool done = false;
    };

    // Protocol-specific transmit: dequeue the head and whatever can ride with
    // it, or nothing when the queue is empty.
    virtual std::optional<OutgoingFrame> forward(NodeEnv& env) = 0;

    // Hook for knowledge updates on every physically received frame.
    virtual void observe(const DataFrame& f, NodeId mac_sender,
                         const std::vector<std::uint32_t>& report, NodeEnv& env);

    void emit_own(const Packet& pkt, std::uint32_t created_at_ms, NodeEnv& env);
    void pool_put(std::uint32_t pid, PayloadPtr payload, double now);
    PayloadPtr find_payload(std::uint32_t packet_id, double now) const;
    PayloadPtr recover_component(const DataFrame& f, std::size_t index, double now) const;
    bool queue_has(std::uint32_t packet_id) const;

    ProtocolParams params_;
    std::deque<QueueEntry> output_queue_;
    std::map<std::uint32_t, PoolEntry> pool_;
    std::vector<std::uint32_t> pool_recent_; // newest-last pool insertions
    std::map<std::uint32_t, RetxState> retx_;
    std::set<std::uint32_t> delivered_;
};

/// COPE-style baseline: fixed ETX routes, opportunistic XOR of queued packets
/// whose next hops provably know the companions, knowledge learned from
/// overheard transmissions and piggybacked reception reports.
class CopeNode : public FixedRouteNode {
public:
    using FixedRouteNode::FixedRouteNode;

    static constexpr std::size_t kReportCap = 8;

    bool neighbor_knows(NodeId neighbor, std::uint32_t packet_id, double now) const;

protected:
    std::optional<OutgoingFrame> forward(NodeEnv& env) override;
    void observe(const DataFrame& f, NodeId mac_sender,
                 const std::vector<std::uint32_t>& report, NodeEnv& env) override;

private:
    // neighbor -> packet id -> time learned. Entries age out with the pool.
    std::map<NodeId, std::map<std::uint32_t, double>> neighbor_knowledge_;
};

/// Plain ETX store-and-forward: one native frame per hop, no coding at all.
class PlainNode : public FixedRouteNode {
public:
    using FixedRouteNode::FixedRouteNode;

protected:
    std::optional<OutgoingFrame> forward(NodeEnv& env) override;
};

} // namespace mesh

#endif
