#include "mesh/node.hpp"

#include "mesh/errors.hpp"

namespace mesh {

std::optional<OutgoingFrame> Node::next_frame(NodeEnv&) {
    if (ready_.empty())
        return std::nullopt;
    OutgoingFrame f = std::move(ready_.front());
    ready_.pop_front();
    return f;
}

Node::AckRole Node::process_ack(const AckFrame& ack, NodeId mac_sender, NodeEnv& env) {
    if (id() == ack.src)
        return AckRole::kConsume;
    // The wire format carries no next-hop field; hop-by-hop unicast is
    // emulated by each receiver checking whether it is the first hop of the
    // sender's shortest path toward the ACK destination.
    try {
        const auto& from_sender = env.routes().path(mac_sender, ack.src);
        if (from_sender.size() < 2 || from_sender[1] != id())
            return AckRole::kIgnored;
    } catch (const NoRouteError&) {
        return AckRole::kIgnored;
    }
    try {
        env.routes().path(id(), ack.src); // next relay must exist
    } catch (const NoRouteError&) {
        env.dropped(id(), ack.packet_id, "ack-no-reverse-route");
        return AckRole::kIgnored;
    }
    push_frame({Frame{ack}, {}, {}});
    env.notify_tx_ready(id());
    return AckRole::kRelayed;
}

} // namespace mesh
