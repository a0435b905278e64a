#ifndef MESH_ENGINE_HPP
#define MESH_ENGINE_HPP

#include <iosfwd>
#include <vector>

#include "mesh/metrics.hpp"
#include "mesh/scenario.hpp"

namespace mesh {

struct RunResult {
    MetricsReport report;                 // state at sim_end
    std::vector<CheckpointRow> checkpoints; // one per flow-start epoch + final
    double duration_s = 0.0;
    std::vector<FlowSpec> flows;
};

// Deterministic discrete-event run: identical (config, seed) inputs produce
// identical results and identical trace bytes. Throws ConfigError for bad
// configs and ConsistencyError when an internal invariant breaks.
RunResult run_scenario(const ScenarioConfig& cfg, std::ostream* trace_out = nullptr);

// The deterministic payload pattern of a generated packet; the delivery
// validator regenerates it to check end-to-end payload integrity.
std::vector<std::uint8_t> packet_payload(std::uint32_t packet_id, std::size_t len);

} // namespace mesh

#endif
