#ifndef MESH_ROUTEVIEW_HPP
#define MESH_ROUTEVIEW_HPP

#include <map>
#include <utility>
#include <vector>

#include "mesh/topology.hpp"

namespace mesh {

/// Routing state shared by every node in a run. In oracle mode it reads the
/// configured link states directly; in measured mode the engine swaps in
/// probe-based estimates as they refresh. Lookups are cached per destination.
class RouteView {
public:
    explicit RouteView(const Topology& topo);

    // Replace every link's quality with the given estimates; links absent
    // from the map become infinite-ETX (dead). Adjacency never changes.
    void update_links(const std::map<std::pair<NodeId, NodeId>, LinkState>& estimates);

    const Topology& topo() const { return view_; }
    bool linked(NodeId u, NodeId v) const { return view_.has_link(u, v); }
    double link_etx_between(NodeId u, NodeId v) const;
    double route_etx(NodeId from, NodeId to) const;
    const std::vector<NodeId>& path(NodeId from, NodeId to) const;
    std::vector<NodeId> neighbors(NodeId u) const { return view_.neighbors(u); }

private:
    Topology view_;
    mutable std::map<NodeId, std::vector<double>> etx_to_;        // dst -> per-node etx
    mutable std::map<std::pair<NodeId, NodeId>, std::vector<NodeId>> paths_;
};

} // namespace mesh

#endif
