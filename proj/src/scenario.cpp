#include "mesh/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mesh/errors.hpp"
#include "mesh/rng.hpp"

namespace mesh {

const char* protocol_name(ProtocolKind kind) {
    switch (kind) {
    case ProtocolKind::kCormen:
        return "cormen";
    case ProtocolKind::kCope:
        return "cope";
    case ProtocolKind::kPlain:
        return "plain";
    }
    return "?";
}

ProtocolKind protocol_from_name(const std::string& name) {
    if (name == "cormen")
        return ProtocolKind::kCormen;
    if (name == "cope")
        return ProtocolKind::kCope;
    if (name == "plain")
        return ProtocolKind::kPlain;
    throw ConfigError("unknown protocol '" + name + "' (valid: cormen, cope, plain)");
}

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& v, int line) {
    try {
        std::size_t used = 0;
        double d = std::stod(v, &used);
        if (used != v.size())
            throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("malformed number '" + v + "'", line);
    }
}

long parse_int(const std::string& v, int line) {
    try {
        std::size_t used = 0;
        long n = std::stol(v, &used);
        if (used != v.size())
            throw std::invalid_argument(v);
        return n;
    } catch (const std::exception&) {
        throw ConfigError("malformed integer '" + v + "'", line);
    }
}

bool parse_bool(const std::string& v, int line) {
    if (v == "on" || v == "true" || v == "1")
        return true;
    if (v == "off" || v == "false" || v == "0")
        return false;
    throw ConfigError("malformed flag '" + v + "' (use on/off)", line);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok)
        out.push_back(tok);
    return out;
}

} // namespace

ScenarioConfig parse_scenario(const std::string& text) {
    ScenarioConfig cfg;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;

    while (std::getline(in, raw)) {
        ++line_no;
        auto hash = raw.find('#');
        if (hash != std::string::npos)
            raw.erase(hash);
        std::string line = trim(raw);
        if (line.empty())
            continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("malformed section header '" + line + "'", line_no);
            section = trim(line.substr(1, line.size() - 2));
            if (section != "topology" && section != "protocol" && section != "flows" &&
                section != "sim")
                throw ConfigError("unknown section [" + section + "]", line_no);
            continue;
        }
        if (section.empty())
            throw ConfigError("directive before any [section] header", line_no);

        // Directive lines without '=': link overrides and flow definitions.
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            auto tok = split_ws(line);
            if (section == "topology" && tok.size() == 5 && tok[0] == "link") {
                TopologySection::LinkOverride o;
                o.u = static_cast<NodeId>(parse_int(tok[1], line_no));
                o.v = static_cast<NodeId>(parse_int(tok[2], line_no));
                o.d_f = parse_double(tok[3], line_no);
                o.d_r = parse_double(tok[4], line_no);
                if (o.d_f < 0.0 || o.d_f > 1.0 || o.d_r < 0.0 || o.d_r > 1.0)
                    throw ConfigError("link override ratios must be in [0,1]", line_no);
                cfg.topology.link_overrides.push_back(o);
                continue;
            }
            if (section == "flows" && !tok.empty() && tok[0] == "flow") {
                if (tok.size() < 3 || tok.size() > 7)
                    throw ConfigError(
                        "flow line wants: flow <src> <dst> [payload] [interval] [start] [stop]",
                        line_no);
                FlowSpec f;
                f.src = static_cast<NodeId>(parse_int(tok[1], line_no));
                f.dst = static_cast<NodeId>(parse_int(tok[2], line_no));
                if (tok.size() > 3 && tok[3] != "-")
                    f.payload_bytes = static_cast<int>(parse_int(tok[3], line_no));
                if (tok.size() > 4 && tok[4] != "-")
                    f.interval_s = parse_double(tok[4], line_no);
                if (tok.size() > 5 && tok[5] != "-")
                    f.start_s = parse_double(tok[5], line_no);
                if (tok.size() > 6 && tok[6] != "-")
                    f.stop_s = parse_double(tok[6], line_no);
                cfg.flows.explicit_flows.push_back(f);
                continue;
            }
            if (section == "flows" && tok.size() == 4 && tok[0] == "auto" &&
                tok[2] == "seed") {
                cfg.flows.auto_count = static_cast<int>(parse_int(tok[1], line_no));
                cfg.flows.auto_seed = static_cast<std::uint64_t>(parse_int(tok[3], line_no));
                if (cfg.flows.auto_count < 1)
                    throw ConfigError("auto flow count must be >= 1", line_no);
                continue;
            }
            throw ConfigError("malformed line '" + line + "'", line_no);
        }

        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("malformed key = value line", line_no);

        if (section == "topology") {
            if (key == "rows")
                cfg.topology.rows = static_cast<int>(parse_int(value, line_no));
            else if (key == "cols")
                cfg.topology.cols = static_cast<int>(parse_int(value, line_no));
            else if (key == "spacing")
                cfg.topology.spacing = parse_double(value, line_no);
            else if (key == "radio_range")
                cfg.topology.radio_range = parse_double(value, line_no);
            else if (key == "carrier_sense_range")
                cfg.topology.carrier_sense_range = parse_double(value, line_no);
            else if (key == "d_f")
                cfg.topology.d_f = parse_double(value, line_no);
            else if (key == "d_r")
                cfg.topology.d_r = parse_double(value, line_no);
            else
                throw ConfigError("unknown key '" + key + "' in [topology]", line_no);
        } else if (section == "protocol") {
            if (key == "protocol") {
                try {
                    cfg.protocol = protocol_from_name(value);
                } catch (const ConfigError& e) {
                    throw ConfigError(e.what(), line_no);
                }
            } else if (key == "t_slot_ms")
                cfg.params.t_slot_s = parse_double(value, line_no) / 1000.0;
            else if (key == "etx_threshold")
                cfg.params.etx_threshold = parse_double(value, line_no);
            else if (key == "pool_ttl_s")
                cfg.params.pool_ttl_s = parse_double(value, line_no);
            else if (key == "ack_timeout_s")
                cfg.params.ack_timeout_s = parse_double(value, line_no);
            else if (key == "max_retx")
                cfg.params.max_retx = static_cast<int>(parse_int(value, line_no));
            else if (key == "max_coded")
                cfg.params.max_coded = static_cast<int>(parse_int(value, line_no));
            else if (key == "max_queue")
                cfg.params.max_queue = static_cast<int>(parse_int(value, line_no));
            else
                throw ConfigError("unknown key '" + key + "' in [protocol]", line_no);
        } else if (section == "flows") {
            throw ConfigError("unknown key '" + key + "' in [flows]", line_no);
        } else { // sim
            if (key == "duration_s")
                cfg.sim.duration_s = parse_double(value, line_no);
            else if (key == "seed")
                cfg.sim.seed = static_cast<std::uint64_t>(parse_int(value, line_no));
            else if (key == "trace")
                cfg.sim.trace = parse_bool(value, line_no);
            else if (key == "etx") {
                if (value == "oracle")
                    cfg.sim.etx = EtxMode::kOracle;
                else if (value == "measured")
                    cfg.sim.etx = EtxMode::kMeasured;
                else
                    throw ConfigError("unknown etx mode '" + value +
                                          "' (valid: oracle, measured)",
                                      line_no);
            } else if (key == "bitrate_bps")
                cfg.sim.bitrate_bps = parse_double(value, line_no);
            else if (key == "backoff_slot_us")
                cfg.sim.backoff_slot_s = parse_double(value, line_no) * 1e-6;
            else if (key == "backoff_window")
                cfg.sim.backoff_window = static_cast<int>(parse_int(value, line_no));
            else
                throw ConfigError("unknown key '" + key + "' in [sim]", line_no);
        }
    }
    return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open scenario file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    ScenarioConfig cfg = parse_scenario(buf.str());
    auto slash = path.find_last_of("/\\");
    std::string stem = slash == std::string::npos ? path : path.substr(slash + 1);
    auto dot = stem.rfind('.');
    if (dot != std::string::npos)
        stem.erase(dot);
    cfg.name = stem;
    return cfg;
}

void validate_scenario(const ScenarioConfig& cfg) {
    const auto& t = cfg.topology;
    if (t.rows < 1 || t.cols < 1)
        throw ConfigError("grid dimensions must be >= 1");
    long nodes = static_cast<long>(t.rows) * t.cols;
    if (nodes < 2)
        throw ConfigError("a 1x1 grid has nothing to route; need at least 2 nodes");
    if (t.spacing <= 0.0)
        throw ConfigError("grid spacing must be > 0");
    if (t.d_f <= 0.0 || t.d_f > 1.0 || t.d_r <= 0.0 || t.d_r > 1.0)
        throw ConfigError("default delivery ratios must be in (0,1]");
    if (t.carrier_sense_range < t.radio_range)
        throw ConfigError("carrier-sense range must be >= radio range");

    for (const auto& o : t.link_overrides) {
        if (o.u >= nodes || o.v >= nodes)
            throw ConfigError("link override names node beyond the grid");
        if (o.u == o.v)
            throw ConfigError("link override needs two distinct nodes");
    }

    if (cfg.params.etx_threshold < 1.0)
        throw ConfigError("etx_threshold must be >= 1");
    if (cfg.params.t_slot_s < 0.0 || cfg.params.pool_ttl_s <= 0.0 ||
        cfg.params.ack_timeout_s <= 0.0 || cfg.params.max_retx < 0)
        throw ConfigError("protocol constants must be positive");
    if (cfg.params.max_coded < 1 || cfg.params.max_coded > 255)
        throw ConfigError("max_coded must be in [1, 255]");
    if (cfg.params.max_queue < 1)
        throw ConfigError("max_queue must be >= 1");

    if (cfg.flows.auto_count > 0 && !cfg.flows.explicit_flows.empty())
        throw ConfigError("[flows] wants either explicit flow lines or one auto line, not both");
    for (const auto& f : cfg.flows.explicit_flows) {
        if (f.src >= nodes || f.dst >= nodes)
            throw ConfigError("flow endpoint beyond the grid");
        if (f.src == f.dst)
            throw ConfigError("flow needs distinct src and dst");
        if (f.payload_bytes < 1 || f.payload_bytes > 60000)
            throw ConfigError("flow payload must be in [1, 60000] bytes");
        if (f.interval_s <= 0.0)
            throw ConfigError("flow interval must be > 0");
        if (f.stop_s >= 0.0 && f.start_s >= 0.0 && f.stop_s <= f.start_s)
            throw ConfigError("flow stop must be after start");
    }

    if (cfg.sim.bitrate_bps <= 0.0)
        throw ConfigError("bitrate must be > 0");
    if (cfg.sim.backoff_slot_s <= 0.0 || cfg.sim.backoff_window < 1)
        throw ConfigError("backoff constants must be positive");
}

Topology build_topology(const TopologySection& t) {
    Topology topo = build_grid(t.rows, t.cols, t.spacing, t.d_f, t.d_r, t.radio_range,
                               t.carrier_sense_range);
    for (const auto& o : t.link_overrides) {
        auto fwd = topo.links.find({o.u, o.v});
        auto rev = topo.links.find({o.v, o.u});
        if (fwd == topo.links.end() || rev == topo.links.end())
            throw ConfigError("link override " + std::to_string(o.u) + " " +
                              std::to_string(o.v) + " names nodes beyond radio range");
        fwd->second = {o.d_f, o.d_r, link_etx(o.d_f, o.d_r)};
        rev->second = {o.d_r, o.d_f, link_etx(o.d_r, o.d_f)};
    }
    return topo;
}

namespace {

int hop_distance(const Topology& topo, NodeId a, NodeId b) {
    try {
        return static_cast<int>(shortest_path(topo, a, b).size()) - 1;
    } catch (const NoRouteError&) {
        return -1;
    }
}

} // namespace

std::vector<FlowSpec> materialize_flows(const ScenarioConfig& cfg, const Topology& topo) {
    std::vector<FlowSpec> flows;

    if (cfg.flows.auto_count > 0) {
        RngStream rng = derive_stream(cfg.flows.auto_seed, 0xF10D, 0);
        const auto n = static_cast<NodeId>(topo.node_count());
        std::vector<std::pair<NodeId, NodeId>> used;
        auto unused = [&](NodeId s, NodeId d) {
            return std::find(used.begin(), used.end(), std::make_pair(s, d)) == used.end();
        };
        for (int k = 0; k < cfg.flows.auto_count; ++k) {
            FlowSpec f;
            if (k % 2 == 1) {
                // Reverse pair of the previous flow: guaranteed coding traffic.
                f.src = flows.back().dst;
                f.dst = flows.back().src;
                if (!unused(f.src, f.dst))
                    throw ConfigError("auto flow generator produced a duplicate pair");
            } else {
                bool found = false;
                for (int attempt = 0; attempt < 10000 && !found; ++attempt) {
                    NodeId s = static_cast<NodeId>(rng.next_below(n));
                    NodeId d = static_cast<NodeId>(rng.next_below(n));
                    if (s == d || !unused(s, d) || !unused(d, s))
                        continue;
                    if (hop_distance(topo, s, d) < 2)
                        continue;
                    f.src = s;
                    f.dst = d;
                    found = true;
                }
                if (!found)
                    throw ConfigError(
                        "auto flow generator needs node pairs at hop distance >= 2");
            }
            used.emplace_back(f.src, f.dst);
            flows.push_back(f);
        }
    } else {
        flows = cfg.flows.explicit_flows;
    }

    // Schedule defaults: flow k starts at 30 s + 20 s * k.
    for (std::size_t k = 0; k < flows.size(); ++k) {
        if (flows[k].start_s < 0.0)
            flows[k].start_s = 30.0 + 20.0 * static_cast<double>(k);
    }
    return flows;
}

double effective_duration(const ScenarioConfig& cfg, const std::vector<FlowSpec>& flows) {
    if (cfg.sim.duration_s >= 0.0)
        return cfg.sim.duration_s;
    double last_start = 0.0;
    for (const auto& f : flows)
        last_start = std::max(last_start, f.start_s);
    return last_start + 60.0;
}

} // namespace mesh
