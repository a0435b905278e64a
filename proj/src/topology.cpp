#include "mesh/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>

#include "mesh/errors.hpp"

namespace mesh {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double distance(const Position& a, const Position& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

double link_etx(double d_f, double d_r) {
    if (d_f < 0.0 || d_f > 1.0 || d_r < 0.0 || d_r > 1.0)
        throw std::invalid_argument("delivery ratio outside [0,1]");
    double p = d_f * d_r;
    if (p <= 0.0)
        return kInf;
    return 1.0 / p;
}

const LinkState& Topology::link(NodeId u, NodeId v) const {
    auto it = links.find({u, v});
    if (it == links.end())
        throw NoRouteError("no link between node " + std::to_string(u) + " and node " +
                           std::to_string(v));
    return it->second;
}

std::vector<NodeId> Topology::neighbors(NodeId u) const {
    std::vector<NodeId> out;
    auto it = links.lower_bound({u, 0});
    for (; it != links.end() && it->first.first == u; ++it)
        out.push_back(it->first.second);
    return out;
}

Topology build_grid(int rows, int cols, double spacing, double d_f, double d_r,
                    double radio_range, double carrier_sense_range) {
    if (rows < 1 || cols < 1)
        throw std::invalid_argument("grid dimensions must be >= 1");
    if (spacing <= 0.0)
        throw std::invalid_argument("grid spacing must be > 0");
    if (d_f <= 0.0 || d_f > 1.0 || d_r <= 0.0 || d_r > 1.0)
        throw std::invalid_argument("default delivery ratios must be in (0,1]");
    if (carrier_sense_range < radio_range)
        throw std::invalid_argument("carrier-sense range must be >= radio range");

    Topology topo;
    topo.radio_range = radio_range;
    topo.carrier_sense_range = carrier_sense_range;
    topo.nodes.reserve(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            topo.nodes.push_back({c * spacing, r * spacing});

    const auto n = static_cast<NodeId>(topo.nodes.size());
    for (NodeId u = 0; u < n; ++u) {
        for (NodeId v = 0; v < n; ++v) {
            if (u == v)
                continue;
            if (distance(topo.nodes[u], topo.nodes[v]) <= radio_range)
                topo.links[{u, v}] = {d_f, d_r, link_etx(d_f, d_r)};
        }
    }
    return topo;
}

double route_etx(const Topology& topo, const std::vector<NodeId>& path) {
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        auto it = topo.links.find({path[i], path[i + 1]});
        if (it == topo.links.end())
            throw NoRouteError("path broken: no link " + std::to_string(path[i]) + " -> " +
                               std::to_string(path[i + 1]));
        sum += it->second.etx;
    }
    return sum;
}

namespace {

// Dijkstra label: cost, then hop count, then the full id sequence. The path
// itself is the final tie-break, which keeps results independent of queue
// internals. Paths are short at this scale, so carrying them is cheap.
struct Label {
    double etx;
    std::size_t hops;
    std::vector<NodeId> path;

    bool operator>(const Label& o) const {
        if (etx != o.etx)
            return etx > o.etx;
        if (hops != o.hops)
            return hops > o.hops;
        return path > o.path;
    }
};

} // namespace

std::vector<NodeId> shortest_path(const Topology& topo, NodeId src, NodeId dst) {
    if (src >= topo.node_count() || dst >= topo.node_count())
        throw std::invalid_argument("node id out of range");
    if (src == dst)
        return {src};

    std::priority_queue<Label, std::vector<Label>, std::greater<Label>> open;
    std::vector<char> done(topo.node_count(), 0);
    open.push({0.0, 0, {src}});
    while (!open.empty()) {
        Label cur = open.top();
        open.pop();
        NodeId u = cur.path.back();
        if (done[u])
            continue;
        done[u] = 1;
        if (u == dst)
            return cur.path;
        auto it = topo.links.lower_bound({u, 0});
        for (; it != topo.links.end() && it->first.first == u; ++it) {
            NodeId v = it->first.second;
            if (done[v] || !std::isfinite(it->second.etx))
                continue;
            Label next{cur.etx + it->second.etx, cur.hops + 1, cur.path};
            next.path.push_back(v);
            open.push(std::move(next));
        }
    }
    throw NoRouteError("no route from node " + std::to_string(src) + " to node " +
                       std::to_string(dst));
}

std::vector<double> route_etx_to(const Topology& topo, NodeId dst) {
    // Link ETX is symmetric in its ratios, so Dijkstra from dst over reverse
    // links gives every node's route ETX to dst.
    std::vector<double> dist(topo.node_count(), kInf);
    if (dst >= topo.node_count())
        throw std::invalid_argument("node id out of range");
    using Item = std::pair<double, NodeId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> open;
    dist[dst] = 0.0;
    open.push({0.0, dst});
    while (!open.empty()) {
        auto [d, u] = open.top();
        open.pop();
        if (d > dist[u])
            continue;
        auto it = topo.links.lower_bound({u, 0});
        for (; it != topo.links.end() && it->first.first == u; ++it) {
            NodeId v = it->first.second;
            auto rev = topo.links.find({v, u});
            if (rev == topo.links.end() || !std::isfinite(rev->second.etx))
                continue;
            double nd = d + rev->second.etx;
            if (nd < dist[v]) {
                dist[v] = nd;
                open.push({nd, v});
            }
        }
    }
    return dist;
}

std::map<std::pair<NodeId, NodeId>, LinkState>
estimate_etx_from_probes(const std::vector<ProbeReception>& log, double window_s,
                         double now) {
    if (window_s <= 0.0)
        throw std::invalid_argument("probe window must be > 0");

    std::map<std::pair<NodeId, NodeId>, int> counts; // (from, at) -> receptions
    for (const auto& rec : log) {
        if (rec.t > now - window_s && rec.t <= now)
            ++counts[{rec.from, rec.at}];
    }

    std::map<std::pair<NodeId, NodeId>, LinkState> out;
    for (const auto& [key, fwd_count] : counts) {
        auto [u, v] = key;
        double d_f = std::min(1.0, fwd_count / window_s);
        auto rev = counts.find({v, u});
        double d_r = rev == counts.end() ? 0.0 : std::min(1.0, rev->second / window_s);
        out[{u, v}] = {d_f, d_r, link_etx(d_f, d_r)};
    }
    return out;
}

} // namespace mesh
