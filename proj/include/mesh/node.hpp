#ifndef MESH_NODE_HPP
#define MESH_NODE_HPP

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mesh/frames.hpp"
#include "mesh/routeview.hpp"

namespace mesh {

using PayloadPtr = std::shared_ptr<const std::vector<std::uint8_t>>;

// A locally originated data packet handed to a node by the traffic generator.
struct Packet {
    std::uint32_t id = 0;
    NodeId src = 0;
    NodeId dst = 0;
    PayloadPtr payload;
};

// A frame a node wants on the air, plus bookkeeping the medium carries along:
// per-component upstream transmission ids (0 = originated here) for duplicate
// accounting, and COPE's piggybacked reception report (charged to airtime).
struct OutgoingFrame {
    Frame frame;
    std::vector<std::uint64_t> component_upstream;
    std::vector<std::uint32_t> report_ids;
};

/// Engine services available to protocol handlers. One logical timeline:
/// handlers are never reentered.
class NodeEnv {
public:
    virtual ~NodeEnv() = default;
    virtual double now() const = 0;
    virtual const RouteView& routes() const = 0;
    virtual void schedule(NodeId node, std::uint64_t tag, double at) = 0;
    virtual void notify_tx_ready(NodeId node) = 0;
    virtual void delivered(NodeId at, const NativePacketDescriptor& d,
                           const std::vector<std::uint8_t>& payload) = 0;
    virtual void dropped(NodeId node, std::uint32_t packet_id, const std::string& reason) = 0;
    virtual void decode_failed(NodeId node, std::uint32_t packet_id) = 0;
    virtual void trace(NodeId node, const std::string& text) = 0;
};

/// Per-node protocol state machine. The engine owns the instance and drives
/// it from the event loop; frames ready to transmit wait in a FIFO that the
/// MAC drains one frame per granted transmission.
class Node {
public:
    explicit Node(NodeId id) : id_(id) {}
    virtual ~Node() = default;

    NodeId id() const { return id_; }

    virtual void originate(const Packet& pkt, NodeEnv& env) = 0;
    virtual void receive(const Frame& frame, NodeId mac_sender, std::uint64_t tx_id,
                         const std::vector<std::uint32_t>& report, NodeEnv& env) = 0;
    virtual void timer(std::uint64_t tag, NodeEnv& env) = 0;

    // MAC grant: produce the next frame to put on the air, or nothing if the
    // send intent evaporated (e.g. a suppression emptied the queue).
    virtual std::optional<OutgoingFrame> next_frame(NodeEnv& env);

    virtual bool tx_pending() const { return !ready_.empty(); }

    // Engine-injected control frames (ETX probes) share the ready queue.
    void inject_frame(OutgoingFrame f) { ready_.push_back(std::move(f)); }

protected:
    enum class AckRole { kConsume, kRelayed, kIgnored };

    void push_frame(OutgoingFrame f) { ready_.push_back(std::move(f)); }

    // Shared ACK forwarding: the packet source consumes the ACK (kConsume,
    // caller retires its retransmission state); the node that is the first
    // hop of the reverse shortest path from mac_sender re-emits it; everyone
    // else ignores it.
    AckRole process_ack(const AckFrame& ack, NodeId mac_sender, NodeEnv& env);

    std::deque<OutgoingFrame> ready_;

private:
    NodeId id_;
};

} // namespace mesh

#endif
