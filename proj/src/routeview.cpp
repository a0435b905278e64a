#include "mesh/routeview.hpp"

#include <limits>

namespace mesh {

RouteView::RouteView(const Topology& topo) : view_(topo) {}

void RouteView::update_links(
    const std::map<std::pair<NodeId, NodeId>, LinkState>& estimates) {
    for (auto& [key, state] : view_.links) {
        auto it = estimates.find(key);
        if (it != estimates.end())
            state = it->second;
        else
            state = {0.0, 0.0, std::numeric_limits<double>::infinity()};
    }
    etx_to_.clear();
    paths_.clear();
}

double RouteView::link_etx_between(NodeId u, NodeId v) const {
    auto it = view_.links.find({u, v});
    if (it == view_.links.end())
        return std::numeric_limits<double>::infinity();
    return it->second.etx;
}

double RouteView::route_etx(NodeId from, NodeId to) const {
    auto it = etx_to_.find(to);
    if (it == etx_to_.end())
        it = etx_to_.emplace(to, route_etx_to(view_, to)).first;
    return it->second[from];
}

const std::vector<NodeId>& RouteView::path(NodeId from, NodeId to) const {
    auto key = std::make_pair(from, to);
    auto it = paths_.find(key);
    if (it == paths_.end())
        it = paths_.emplace(key, shortest_path(view_, from, to)).first;
    return it->second;
}

} // namespace mesh
