#ifndef MESH_CODING_HPP
#define MESH_CODING_HPP

#include <cstdint>
#include <vector>

#include "mesh/frames.hpp"

namespace mesh {

// Node r can decode packet p from a coded frame exactly when it already holds
// p's companions; it holds p itself when it originated, forwarded or overheard
// it. That is what the header sets certify.
bool knows_packet(NodeId r, const NativePacketDescriptor& p);

// Byte-wise XOR of all payloads, shorter ones zero-padded to the longest.
std::vector<std::uint8_t> xor_encode(const std::vector<std::vector<std::uint8_t>>& payloads);

// XOR of `coded` with every known payload (padded), truncated to target_len.
// Garbage in, garbage out: correctness is the caller's protocol invariant.
std::vector<std::uint8_t> xor_decode(const std::vector<std::uint8_t>& coded,
                                     const std::vector<std::vector<std::uint8_t>>& known,
                                     std::size_t target_len);

// The three pairwise coding conditions over F/T/O, evaluated verbatim:
//   1. exists a in T(c,p1) with a in F(c,p2), and b in T(c,p2) with b in F(c,p1)
//   2. exists a in O(c,p1) with a in F(c,p2), and b in O(c,p2) with b in F(c,p1)
//   3. exists a in O(c,p1) with a in T(c,p2), and b in O(c,p2) with b in T(c,p1)
// Symmetric in p1/p2. Note condition 3 never consults F; the transmit gate is
// build_coding_plan's recipient rule, not this predicate.
bool can_code_pair(NodeId c, const NativePacketDescriptor& p1,
                   const NativePacketDescriptor& p2);

// One XOR transmission: which components ride together and, per component,
// which of its forwarding nodes can decode it (knows all other components).
struct CodingPlan {
    std::vector<NativePacketDescriptor> components;
    std::vector<std::vector<NodeId>> recipients_per_component;

    // Union of per-component recipients, ascending, duplicate-free.
    std::vector<NodeId> all_recipients() const;
};

// Greedy plan construction at node c: start with the trigger, scan the queue
// in arrival order, and admit a packet only if every component of the
// augmented set keeps at least one forwarding node that knows all the others.
// Never empty: worst case the plan is just the trigger. max_components bounds
// the frame size (the wire format allows 255; practical plans stay small).
CodingPlan build_coding_plan(NodeId c, const NativePacketDescriptor& trigger,
                             const std::vector<NativePacketDescriptor>& queue,
                             std::size_t max_components = 255);

} // namespace mesh

#endif
