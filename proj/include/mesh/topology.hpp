#ifndef MESH_TOPOLOGY_HPP
#define MESH_TOPOLOGY_HPP

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace mesh {

using NodeId = std::uint16_t;

struct Position {
    double x = 0.0; // meters
    double y = 0.0;
};

double distance(const Position& a, const Position& b);

// Directed link quality. Link (u,v) holds u->v delivery ratios; (v,u) holds
// the reverse. etx is 1/(d_f*d_r), or +infinity when the product is zero.
struct LinkState {
    double d_f = 1.0;
    double d_r = 1.0;
    double etx = 1.0;
};

// ETX of a link from its delivery ratios. Ratios outside [0,1] are rejected;
// a zero product yields the +infinity sentinel (dead link, kept in the map).
double link_etx(double d_f, double d_r);

/// Static node placement plus per-link quality. Immutable once built: the
/// simulation and any number of readers share one instance.
struct Topology {
    std::vector<Position> nodes;
    std::map<std::pair<NodeId, NodeId>, LinkState> links; // key (u,v), u!=v
    double radio_range = 250.0;
    double carrier_sense_range = 550.0;

    std::size_t node_count() const { return nodes.size(); }
    bool has_link(NodeId u, NodeId v) const { return links.count({u, v}) != 0; }
    const LinkState& link(NodeId u, NodeId v) const;

    // Neighbors of u in ascending id order.
    std::vector<NodeId> neighbors(NodeId u) const;
};

// rows x cols lattice, row-major ids, node (r,c) at (c*spacing, r*spacing).
// Links are created between every pair within radio_range, each direction
// carrying the given delivery ratios.
Topology build_grid(int rows, int cols, double spacing, double d_f, double d_r,
                    double radio_range = 250.0, double carrier_sense_range = 550.0);

// Sum of per-link ETX along a path; 0 for a single node. Throws NoRouteError
// naming the hop when consecutive nodes are not linked.
double route_etx(const Topology& topo, const std::vector<NodeId>& path);

// Minimum route-ETX path from src to dst. Ties broken by fewer hops, then by
// lexicographically smallest node-id sequence, so repeated calls are
// identical. Links with infinite ETX are not traversable.
std::vector<NodeId> shortest_path(const Topology& topo, NodeId src, NodeId dst);

// Route ETX from every node to dst (same metric and tie-breaks as
// shortest_path). Unreachable nodes get +infinity.
std::vector<double> route_etx_to(const Topology& topo, NodeId dst);

// One received probe: node `at` heard the probe `from` broadcast at time t.
struct ProbeReception {
    double t = 0.0;
    NodeId from = 0;
    NodeId at = 0;
};

// Probe-count ETX estimation: probes are emitted at 1 Hz, so the expected
// count over `window` seconds is `window`. d_f/d_r are receptions/expected
// (clamped to 1); directions with zero receptions yield the infinity
// sentinel. Returns estimates for every ordered pair seen in the log.
std::map<std::pair<NodeId, NodeId>, LinkState>
estimate_etx_from_probes(const std::vector<ProbeReception>& log, double window_s,
                         double now);

} // namespace mesh

#endif
