#include "mesh/metrics.hpp"

#include "mesh/errors.hpp"

namespace mesh {

double compute_pdr(std::uint64_t delivered, std::uint64_t generated) {
    if (delivered > generated)
        throw ConsistencyError("delivered " + std::to_string(delivered) +
                               " exceeds generated " + std::to_string(generated));
    if (generated == 0)
        return 1.0;
    return static_cast<double>(delivered) / static_cast<double>(generated);
}

double compute_avg_delay(const std::vector<std::pair<double, double>>& deliveries) {
    if (deliveries.empty())
        return 0.0;
    double sum = 0.0;
    for (const auto& [sent, arrived] : deliveries) {
        if (arrived < sent)
            throw ConsistencyError("delivery arrived before it was sent");
        sum += arrived - sent;
    }
    return sum / static_cast<double>(deliveries.size());
}

double compute_avg_throughput(const std::vector<FlowGoodput>& flows) {
    double sum = 0.0;
    int active = 0;
    for (const auto& f : flows) {
        if (f.active_s <= 0.0)
            continue;
        sum += f.payload_bits / f.active_s;
        ++active;
    }
    return active == 0 ? 0.0 : sum / active;
}

} // namespace mesh
