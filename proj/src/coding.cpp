#include "mesh/coding.hpp"

#include <algorithm>
#include <stdexcept>

namespace mesh {

namespace {

bool contains(const std::vector<NodeId>& v, NodeId x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

bool intersects(const std::vector<NodeId>& a, const std::vector<NodeId>& b) {
    for (NodeId x : a)
        if (contains(b, x))
            return true;
    return false;
}

// Recipients of p within its forwarding set that know every other component.
std::vector<NodeId> decodable_recipients(std::size_t p_index,
                                         const std::vector<NativePacketDescriptor>& set) {
    std::vector<NodeId> out;
    for (NodeId r : set[p_index].forwarding_set) {
        bool ok = true;
        for (std::size_t j = 0; j < set.size(); ++j) {
            if (j == p_index)
                continue;
            if (!knows_packet(r, set[j])) {
                ok = false;
                break;
            }
        }
        if (ok)
            out.push_back(r);
    }
    return out;
}

} // namespace

bool knows_packet(NodeId r, const NativePacketDescriptor& p) {
    return r == p.src || contains(p.traversed, r) || contains(p.overheard, r);
}

std::vector<std::uint8_t> xor_encode(const std::vector<std::vector<std::uint8_t>>& payloads) {
    if (payloads.empty())
        throw std::invalid_argument("xor_encode needs at least one payload");
    std::size_t len = 0;
    for (const auto& p : payloads)
        len = std::max(len, p.size());
    std::vector<std::uint8_t> out(len, 0);
    for (const auto& p : payloads)
        for (std::size_t i = 0; i < p.size(); ++i)
            out[i] ^= p[i];
    return out;
}

std::vector<std::uint8_t> xor_decode(const std::vector<std::uint8_t>& coded,
                                     const std::vector<std::vector<std::uint8_t>>& known,
                                     std::size_t target_len) {
    std::vector<std::uint8_t> out = coded;
    out.resize(std::max(out.size(), target_len), 0);
    for (const auto& p : known)
        for (std::size_t i = 0; i < p.size() && i < out.size(); ++i)
            out[i] ^= p[i];
    out.resize(target_len);
    return out;
}

bool can_code_pair(NodeId /*c*/, const NativePacketDescriptor& p1,
                   const NativePacketDescriptor& p2) {
    if (p1.packet_id == p2.packet_id)
        throw std::invalid_argument("can_code_pair needs two distinct packets");
    // Condition 1
    if (intersects(p1.traversed, p2.forwarding_set) &&
        intersects(p2.traversed, p1.forwarding_set))
        return true;
    // Condition 2
    if (intersects(p1.overheard, p2.forwarding_set) &&
        intersects(p2.overheard, p1.forwarding_set))
        return true;
    // Condition 3
    if (intersects(p1.overheard, p2.traversed) &&
        intersects(p2.overheard, p1.traversed))
        return true;
    return false;
}

std::vector<NodeId> CodingPlan::all_recipients() const {
    std::vector<NodeId> out;
    for (const auto& rs : recipients_per_component)
        out.insert(out.end(), rs.begin(), rs.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

CodingPlan build_coding_plan(NodeId c, const NativePacketDescriptor& trigger,
                             const std::vector<NativePacketDescriptor>& queue,
                             std::size_t max_components) {
    std::vector<NativePacketDescriptor> set{trigger};
    for (const auto& q : queue) {
        if (set.size() >= max_components)
            break;
        if (q.packet_id == trigger.packet_id)
            continue;
        std::vector<NativePacketDescriptor> candidate = set;
        candidate.push_back(q);
        bool ok = true;
        for (std::size_t i = 0; i < candidate.size() && ok; ++i)
            ok = !decodable_recipients(i, candidate).empty();
        if (ok)
            set = std::move(candidate);
    }

    CodingPlan plan;
    plan.components = std::move(set);
    plan.recipients_per_component.reserve(plan.components.size());
    for (std::size_t i = 0; i < plan.components.size(); ++i)
        plan.recipients_per_component.push_back(decodable_recipients(i, plan.components));
    (void)c;
    return plan;
}

} // namespace mesh
