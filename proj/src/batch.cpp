#include "mesh/batch.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "mesh/errors.hpp"

namespace mesh {

const char* const kCsvHeader =
    "scenario,protocol,seed,t_s,flows_active,pdr,avg_delay_s,avg_throughput_bps,"
    "tx_data_frames,tx_coded_frames,coded_components_total,duplicate_forwards,"
    "decode_failures,drops";

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

} // namespace

std::string csv_rows(const std::string& scenario, ProtocolKind protocol,
                     std::uint64_t seed, const RunResult& result) {
    std::string out;
    for (const auto& row : result.checkpoints) {
        const auto& r = row.report;
        out += scenario;
        out += ',';
        out += protocol_name(protocol);
        out += ',';
        out += std::to_string(seed);
        out += ',';
        out += fmt_double(row.t_s);
        out += ',';
        out += std::to_string(row.flows_active);
        out += ',';
        out += fmt_double(r.pdr);
        out += ',';
        out += fmt_double(r.avg_delay_s);
        out += ',';
        out += fmt_double(r.avg_throughput_bps);
        out += ',';
        out += std::to_string(r.counters.tx_data_frames);
        out += ',';
        out += std::to_string(r.counters.tx_coded_frames);
        out += ',';
        out += std::to_string(r.counters.coded_components_total);
        out += ',';
        out += std::to_string(r.counters.duplicate_forwards);
        out += ',';
        out += std::to_string(r.counters.decode_failures);
        out += ',';
        out += std::to_string(r.counters.drops);
        out += '\n';
    }
    return out;
}

std::string run_batch(const std::vector<std::string>& scenario_paths,
                      const std::vector<ProtocolKind>& protocols,
                      const std::vector<std::uint64_t>& seeds) {
    struct Job {
        std::string path;
        std::string name;
    };
    std::vector<Job> jobs;
    for (const auto& p : scenario_paths) {
        ScenarioConfig probe = load_scenario(p); // parse errors surface early
        jobs.push_back({p, probe.name});
    }
    std::sort(jobs.begin(), jobs.end(),
              [](const Job& a, const Job& b) { return a.name < b.name; });

    // Row order is part of the output contract: scenario, protocol name,
    // seed, then checkpoint time.
    std::vector<ProtocolKind> ordered_protocols = protocols;
    std::sort(ordered_protocols.begin(), ordered_protocols.end(),
              [](ProtocolKind a, ProtocolKind b) {
                  return std::string(protocol_name(a)) < protocol_name(b);
              });
    ordered_protocols.erase(std::unique(ordered_protocols.begin(), ordered_protocols.end()),
                            ordered_protocols.end());
    std::vector<std::uint64_t> ordered_seeds = seeds;
    std::sort(ordered_seeds.begin(), ordered_seeds.end());
    ordered_seeds.erase(std::unique(ordered_seeds.begin(), ordered_seeds.end()),
                        ordered_seeds.end());

    std::string out = std::string(kCsvHeader) + "\n";
    for (const auto& job : jobs) {
        for (ProtocolKind protocol : ordered_protocols) {
            for (std::uint64_t seed : ordered_seeds) {
                ScenarioConfig cfg = load_scenario(job.path);
                cfg.protocol = protocol;
                cfg.sim.seed = seed;
                try {
                    RunResult result = run_scenario(cfg);
                    out += csv_rows(job.name, protocol, seed, result);
                } catch (const ConsistencyError& e) {
                    throw ConsistencyError("batch run failed for scenario '" + job.name +
                                           "' (protocol " + protocol_name(protocol) +
                                           ", seed " + std::to_string(seed) +
                                           "): " + e.what());
                } catch (const std::exception& e) {
                    throw std::runtime_error("batch run failed for scenario '" + job.name +
                                             "' (protocol " + protocol_name(protocol) +
                                             ", seed " + std::to_string(seed) +
                                             "): " + e.what());
                }
            }
        }
    }
    return out;
}

} // namespace mesh
