#ifndef MESH_BATCH_HPP
#define MESH_BATCH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mesh/engine.hpp"

namespace mesh {

// Fixed column order; run_batch and the run subcommand both emit it.
extern const char* const kCsvHeader;

std::string csv_rows(const std::string& scenario, ProtocolKind protocol,
                     std::uint64_t seed, const RunResult& result);

// Every (scenario, protocol, seed) combination, rows ordered by
// (scenario, protocol, seed, t_s). A failing run aborts the batch with the
// offending scenario named. Returns the full CSV text including the header.
std::string run_batch(const std::vector<std::string>& scenario_paths,
                      const std::vector<ProtocolKind>& protocols,
                      const std::vector<std::uint64_t>& seeds);

} // namespace mesh

#endif
