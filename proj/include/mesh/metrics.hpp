#ifndef MESH_METRICS_HPP
#define MESH_METRICS_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace mesh {

struct Counters {
    std::uint64_t tx_data_frames = 0;
    std::uint64_t tx_coded_frames = 0;
    std::uint64_t coded_components_total = 0;
    std::uint64_t tx_announce = 0;
    std::uint64_t tx_ack = 0;
    std::uint64_t duplicate_forwards = 0;
    std::uint64_t decode_failures = 0;
    std::uint64_t drops = 0;
};

struct MetricsReport {
    double pdr = 1.0;
    double avg_delay_s = 0.0;
    double avg_throughput_bps = 0.0;
    std::uint64_t generated = 0;
    std::uint64_t delivered = 0;
    Counters counters;
};

// One CSV row: cumulative metrics captured at a flow-start epoch or at the
// end of the run.
struct CheckpointRow {
    double t_s = 0.0;
    int flows_active = 0;
    MetricsReport report;
};

// delivered/generated; 1.0 when nothing was generated. delivered > generated
// is an internal-consistency panic, never a result.
double compute_pdr(std::uint64_t delivered, std::uint64_t generated);

// Mean of (arrived - sent); 0 for no deliveries. Negative differences panic.
double compute_avg_delay(const std::vector<std::pair<double, double>>& deliveries);

// Per-flow goodput over each flow's active duration, averaged across flows
// that have been active for a positive duration. No active flows: 0.
struct FlowGoodput {
    double payload_bits = 0.0;
    double active_s = 0.0;
};
double compute_avg_throughput(const std::vector<FlowGoodput>& flows);

} // namespace mesh

#endif
