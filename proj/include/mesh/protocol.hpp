#ifndef MESH_PROTOCOL_HPP
#define MESH_PROTOCOL_HPP

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "mesh/coding.hpp"
#include "mesh/node.hpp"

namespace mesh {

// Protocol constants. All of these are scenario config keys.
struct ProtocolParams {
    double t_slot_s = 0.005;      // forwarding-timer time scale
    double etx_threshold = 2.0;   // forwarding-node link quality limit
    double pool_ttl_s = 5.0;      // packet pool retention
    double ack_timeout_s = 2.0;   // retransmission check interval
    int max_retx = 3;
    int max_coded = 8;            // components per coded frame, both protocols
    int max_queue = 64;           // data packets buffered per node; excess drops
};

// Forwarding-node selection. A neighbor qualifies when (1) its link from the
// sender has ETX <= threshold, (2) it lies on or is linked to the shortest
// path, and (3) it makes strict route-ETX progress toward dst. Candidates are
// then thinned so every surviving pair is linked with ETX <= threshold —
// an unlinked pair counts as infinite ETX and loses its worse member —
// which is what lets a firing forwarder's announcement reach every other
// candidate. Result ordered by route-ETX to dst, ties by id. Throws
// NoForwarderError when nothing qualifies.
std::vector<NodeId> select_forwarding_nodes(const RouteView& routes, NodeId sender,
                                            const std::vector<NodeId>& sp_route,
                                            NodeId dst, double etx_threshold);

// t_f = (i / n^2) * ETX_dst, scaled by t_slot. i is the node's 1-based rank in
// the sender's forwarding set, n the number of packets codable together at
// this node right now.
double forwarding_timer(int i, int n, double etx_dest, double t_slot);

// Pending forwarding timer for one queued packet. fire_at always equals
// enqueue_time + forwarding_timer(i, n, etx_dest, t_slot) for the current n;
// n only grows and fire_at only shrinks.
struct TimerRecord {
    std::uint32_t packet_id = 0;
    int i = 1;
    int n = 1;
    double etx_dest = 0.0;
    double enqueue_time = 0.0;
    double fire_at = 0.0;
};

/// CORMEN node: opportunistic forwarding sets, per-packet coding timers,
/// announce-based duplicate suppression, packet pool, end-to-end ACKs with
/// source retransmission.
class CormenNode : public Node {
public:
    CormenNode(NodeId id, ProtocolParams params) : Node(id), params_(params) {}

    void originate(const Packet& pkt, NodeEnv& env) override;
    void receive(const Frame& frame, NodeId mac_sender, std::uint64_t tx_id,
                 const std::vector<std::uint32_t>& report, NodeEnv& env) override;
    void timer(std::uint64_t tag, NodeEnv& env) override;
    std::optional<OutgoingFrame> next_frame(NodeEnv& env) override;
    bool tx_pending() const override;

    // Introspection for tests and the consistency validator.
    const TimerRecord* timer_for(std::uint32_t packet_id) const;
    std::size_t forward_queue_size() const { return forward_queue_.size(); }
    bool pool_has(std::uint32_t packet_id, double now) const;
    bool queue_has(std::uint32_t packet_id) const;

private:
    struct ForwardEntry {
        NativePacketDescriptor desc;
        PayloadPtr payload;
        std::uint64_t upstream_tx = 0;
        std::uint32_t timer_gen = 0;
        TimerRecord timer;
        bool eligible = false;
    };

    struct PoolEntry {
        PayloadPtr payload;
        NativePacketDescriptor desc;
        double expires_at = 0.0;
    };

    struct RetxState {
        Packet pkt;
        int attempts = 0;
        bool acked = false;
        bool done = false;
    };

    void handle_data(const DataFrame& f, NodeId mac_sender, std::uint64_t tx_id,
                     NodeEnv& env);
    void handle_announce(const AnnounceFrame& a, NodeEnv& env);
    void enqueue_forward(const NativePacketDescriptor& arriving, PayloadPtr payload,
                         std::uint64_t tx_id, NodeEnv& env);
    void refresh_timers(NodeEnv& env);
    void emit_native(const Packet& pkt, NodeEnv& env);
    PayloadPtr find_payload(std::uint32_t packet_id, double now) const;
    PayloadPtr recover_component(const DataFrame& f, std::size_t index, double now) const;
    void pool_put(std::uint32_t id, PayloadPtr payload, const NativePacketDescriptor& desc,
                  double now);
    std::vector<NativePacketDescriptor> queue_descriptors() const;
    int plan_size(const NativePacketDescriptor& trigger) const;

    // Build and emit the coding plan for the oldest eligible trigger: the
    // announcement is returned, the data frame waits as the burst follower.
    std::optional<OutgoingFrame> service_eligible(NodeEnv& env);

    ProtocolParams params_;
    std::vector<ForwardEntry> forward_queue_;      // arrival order
    std::deque<std::uint32_t> eligible_;           // fired triggers awaiting MAC
    std::deque<OutgoingFrame> own_ready_;          // own-origin frames awaiting MAC
    std::optional<OutgoingFrame> pending_burst_;   // data frame riding behind announce
    bool own_turn_ = true;                         // round-robin own vs forwarded
    std::map<std::uint32_t, PoolEntry> pool_;
    std::map<std::uint32_t, RetxState> retx_;
    std::set<std::uint32_t> delivered_;
};

} // namespace mesh

#endif
