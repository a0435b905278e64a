#ifndef MESH_FRAMES_HPP
#define MESH_FRAMES_HPP

#include <cstdint>
#include <variant>
#include <vector>

#include "mesh/topology.hpp"

namespace mesh {

// Per-packet routing state carried in every DATA frame component. The set
// names follow the coding header: sp_route (SP), forwarding_set (FN),
// traversed (T), overheard (O).
struct NativePacketDescriptor {
    std::uint32_t packet_id = 0;
    NodeId src = 0;
    NodeId dst = 0;
    std::uint32_t created_at_ms = 0;
    std::uint16_t payload_len = 0;
    std::vector<NodeId> sp_route;
    std::vector<NodeId> forwarding_set;
    std::vector<NodeId> traversed;
    std::vector<NodeId> overheard;

    bool operator==(const NativePacketDescriptor&) const = default;
};

// The on-air data unit. nc == components.size(); nc == 1 is a native packet.
// Component headers travel in clear; only payloads are XORed together, each
// zero-padded to the longest (so xor_payload.size() == max payload_len).
struct DataFrame {
    std::vector<NodeId> recipients;
    std::vector<NativePacketDescriptor> components;
    std::vector<std::uint8_t> xor_payload;

    std::size_t nc() const { return components.size(); }
    bool operator==(const DataFrame&) const = default;
};

// Duplicate-suppression probe: broadcast by a forwarder right before its DATA
// frame so slower candidates cancel their timers.
struct AnnounceFrame {
    NodeId sender = 0;
    std::vector<std::uint32_t> packet_ids;

    bool operator==(const AnnounceFrame&) const = default;
};

struct AckFrame {
    std::uint32_t packet_id = 0;
    NodeId dst_reached = 0;
    NodeId src = 0; // ACK destination: the packet's source

    bool operator==(const AckFrame&) const = default;
};

// Link-measurement probe (1 Hz per node in measured-ETX mode).
struct ProbeFrame {
    NodeId sender = 0;
    std::uint32_t seq = 0;

    bool operator==(const ProbeFrame&) const = default;
};

using Frame = std::variant<DataFrame, AnnounceFrame, AckFrame, ProbeFrame>;

// Fixed per-frame MAC/PHY overhead charged to airtime, not to encoded bytes.
constexpr std::size_t kMacOverheadBytes = 34;

// Frame type tags on the wire.
enum class FrameType : std::uint8_t {
    kData = 1,
    kAnnounce = 2,
    kAck = 3,
    kEtxProbe = 4,
};

// Big-endian, byte-exact layout. Throws EncodeError when any list exceeds
// 255 entries or stated lengths are inconsistent.
std::vector<std::uint8_t> encode_frame(const Frame& frame);

// Exact inverse of encode_frame. Truncated input, unknown frame type and
// count/length mismatches raise DecodeError with distinct messages.
Frame decode_frame(const std::vector<std::uint8_t>& bytes);

std::size_t encoded_size(const Frame& frame);

// (encoded length + MAC overhead) * 8 / bitrate.
double frame_airtime(const Frame& frame, double bitrate_bps,
                     std::size_t extra_bytes = 0);

} // namespace mesh

#endif
