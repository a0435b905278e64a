#ifndef MESH_SCENARIO_HPP
#define MESH_SCENARIO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mesh/protocol.hpp"
#include "mesh/topology.hpp"

namespace mesh {

enum class ProtocolKind { kCormen, kCope, kPlain };

const char* protocol_name(ProtocolKind kind);
ProtocolKind protocol_from_name(const std::string& name); // throws ConfigError

enum class EtxMode { kOracle, kMeasured };

// CBR flow: payload_bytes every interval_s from start_s until stop_s.
// Negative start/stop mean "per schedule" (30 s + 20 s per flow) and
// "until the end of the run".
struct FlowSpec {
    NodeId src = 0;
    NodeId dst = 0;
    int payload_bytes = 1000;
    double interval_s = 0.05;
    double start_s = -1.0;
    double stop_s = -1.0;
};

struct TopologySection {
    int rows = 3;
    int cols = 3;
    double spacing = 200.0;
    double radio_range = 250.0;
    double carrier_sense_range = 550.0;
    double d_f = 1.0;
    double d_r = 1.0;
    struct LinkOverride {
        NodeId u = 0;
        NodeId v = 0;
        double d_f = 1.0;
        double d_r = 1.0;
    };
    std::vector<LinkOverride> link_overrides;
};

struct FlowsSection {
    std::vector<FlowSpec> explicit_flows;
    int auto_count = 0;          // > 0 selects the generator
    std::uint64_t auto_seed = 1; // generator stream, independent of run seed
};

struct SimSection {
    double duration_s = -1.0; // negative: last flow start + 60 s
    std::uint64_t seed = 1;
    bool trace = false;
    EtxMode etx = EtxMode::kOracle;
    double bitrate_bps = 1e6;
    double backoff_slot_s = 20e-6;
    int backoff_window = 32;
};

struct ScenarioConfig {
    std::string name = "scenario";
    TopologySection topology;
    ProtocolKind protocol = ProtocolKind::kCormen;
    ProtocolParams params;
    FlowsSection flows;
    SimSection sim;
};

// Line-oriented `key = value` format with [section] headers and # comments.
// Unknown keys, malformed values and unknown sections raise ConfigError with
// the offending line number. Parsing is permissive about order; validation
// happens separately so every problem is reported against its source line
// where possible.
ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig load_scenario(const std::string& path); // parse + name from stem

// Semantic checks that need the whole config: grid size, flow endpoints,
// link overrides against adjacency.
void validate_scenario(const ScenarioConfig& cfg);

Topology build_topology(const TopologySection& section);

// Resolve explicit flows (filling schedule defaults) or run the seeded
// generator: random distinct pairs at hop distance >= 2, every odd flow the
// reverse of its predecessor so coding opportunities exist by construction.
std::vector<FlowSpec> materialize_flows(const ScenarioConfig& cfg, const Topology& topo);

// Run length: explicit duration, or last flow start + 60 s.
double effective_duration(const ScenarioConfig& cfg, const std::vector<FlowSpec>& flows);

} // namespace mesh

#endif
