#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mesh/batch.hpp"
#include "mesh/engine.hpp"
#include "mesh/errors.hpp"
#include "mesh/scenario.hpp"

namespace {

std::vector<mesh::ProtocolKind> parse_protocols(const std::string& arg) {
    std::vector<mesh::ProtocolKind> out;
    std::string item;
    std::istringstream is(arg);
    while (std::getline(is, item, ','))
        out.push_back(mesh::protocol_from_name(item));
    if (out.empty())
        throw mesh::ConfigError("no protocols given");
    return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& arg) {
    // "1..5" or "1,2,3".
    std::vector<std::uint64_t> out;
    auto dots = arg.find("..");
    if (dots != std::string::npos) {
        std::uint64_t lo = std::stoull(arg.substr(0, dots));
        std::uint64_t hi = std::stoull(arg.substr(dots + 2));
        if (hi < lo)
            throw mesh::ConfigError("seed range is backwards");
        for (std::uint64_t s = lo; s <= hi; ++s)
            out.push_back(s);
    } else {
        std::string item;
        std::istringstream is(arg);
        while (std::getline(is, item, ','))
            out.push_back(std::stoull(item));
    }
    if (out.empty())
        throw mesh::ConfigError("no seeds given");
    return out;
}

void print_report(const mesh::RunResult& result, const mesh::ScenarioConfig& cfg) {
    const auto& r = result.report;
    std::printf("scenario   %s  protocol=%s seed=%llu duration=%.3fs flows=%zu\n",
                cfg.name.c_str(), mesh::protocol_name(cfg.protocol),
                static_cast<unsigned long long>(cfg.sim.seed), result.duration_s,
                result.flows.size());
    std::printf("pdr        %.6f  (%llu/%llu packets)\n", r.pdr,
                static_cast<unsigned long long>(r.delivered),
                static_cast<unsigned long long>(r.generated));
    std::printf("delay      %.6f s\n", r.avg_delay_s);
    std::printf("throughput %.1f bps (mean per-flow goodput)\n", r.avg_throughput_bps);
    std::printf("frames     data=%llu coded=%llu components=%llu announce=%llu ack=%llu\n",
                static_cast<unsigned long long>(r.counters.tx_data_frames),
                static_cast<unsigned long long>(r.counters.tx_coded_frames),
                static_cast<unsigned long long>(r.counters.coded_components_total),
                static_cast<unsigned long long>(r.counters.tx_announce),
                static_cast<unsigned long long>(r.counters.tx_ack));
    std::printf("anomalies  duplicates=%llu decode_failures=%llu drops=%llu\n",
                static_cast<unsigned long long>(r.counters.duplicate_forwards),
                static_cast<unsigned long long>(r.counters.decode_failures),
                static_cast<unsigned long long>(r.counters.drops));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wireless mesh simulator: XOR network coding over opportunistic and "
                 "fixed ETX routing"};
    app.require_subcommand(1);

    // run
    std::string run_scn;
    std::string run_protocol;
    std::uint64_t run_seed = 0;
    bool run_seed_set = false;
    std::string run_trace;
    std::string run_out;
    auto* run_cmd = app.add_subcommand("run", "Run one scenario and print its metrics");
    run_cmd->add_option("scenario", run_scn, "Scenario file (.scn)")->required();
    run_cmd->add_option("--protocol", run_protocol, "Override protocol (cormen|cope|plain)");
    run_cmd->add_option("--seed", run_seed, "Override run seed")
        ->each([&](const std::string&) { run_seed_set = true; });
    run_cmd->add_option("--trace", run_trace, "Write per-event trace to FILE");
    run_cmd->add_option("--out", run_out, "Write checkpoint rows as CSV to FILE");

    // batch
    std::string batch_dir;
    std::string batch_protocols = "cormen,cope,plain";
    std::string batch_seeds = "1";
    std::string batch_out;
    auto* batch_cmd = app.add_subcommand("batch", "Run every scenario in a directory "
                                                  "across protocols and seeds");
    batch_cmd->add_option("dir", batch_dir, "Directory containing .scn files")->required();
    batch_cmd->add_option("--protocols", batch_protocols, "Comma list (default all)");
    batch_cmd->add_option("--seeds", batch_seeds, "Comma list or lo..hi range");
    batch_cmd->add_option("--out", batch_out, "CSV output file (default stdout)");

    // validate
    std::string validate_scn;
    auto* validate_cmd = app.add_subcommand("validate", "Parse and validate a scenario");
    validate_cmd->add_option("scenario", validate_scn, "Scenario file (.scn)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            mesh::ScenarioConfig cfg = mesh::load_scenario(run_scn);
            if (!run_protocol.empty())
                cfg.protocol = mesh::protocol_from_name(run_protocol);
            if (run_seed_set)
                cfg.sim.seed = run_seed;
            std::ofstream trace_file;
            std::ostream* trace = nullptr;
            if (!run_trace.empty()) {
                trace_file.open(run_trace);
                if (!trace_file)
                    throw mesh::ConfigError("cannot open trace file '" + run_trace + "'");
                trace = &trace_file;
            }
            mesh::RunResult result = mesh::run_scenario(cfg, trace);
            print_report(result, cfg);
            if (!run_out.empty()) {
                std::ofstream out(run_out);
                if (!out)
                    throw mesh::ConfigError("cannot open output file '" + run_out + "'");
                out << mesh::kCsvHeader << '\n'
                    << mesh::csv_rows(cfg.name, cfg.protocol, cfg.sim.seed, result);
            }
            if (result.report.counters.decode_failures > 0) {
                std::fprintf(stderr, "error: run finished with %llu decode failure(s)\n",
                             static_cast<unsigned long long>(
                                 result.report.counters.decode_failures));
                return 2;
            }
            return 0;
        }

        if (*batch_cmd) {
            std::vector<std::string> paths;
            for (const auto& entry : std::filesystem::directory_iterator(batch_dir)) {
                if (entry.is_regular_file() && entry.path().extension() == ".scn")
                    paths.push_back(entry.path().string());
            }
            if (paths.empty())
                throw mesh::ConfigError("no .scn files in '" + batch_dir + "'");
            std::string csv = mesh::run_batch(paths, parse_protocols(batch_protocols),
                                              parse_seeds(batch_seeds));
            if (batch_out.empty()) {
                std::cout << csv;
            } else {
                std::ofstream out(batch_out);
                if (!out)
                    throw mesh::ConfigError("cannot open output file '" + batch_out + "'");
                out << csv;
            }
            return 0;
        }

        // validate
        mesh::ScenarioConfig cfg = mesh::load_scenario(validate_scn);
        mesh::validate_scenario(cfg);
        mesh::Topology topo = mesh::build_topology(cfg.topology);
        auto flows = mesh::materialize_flows(cfg, topo);
        std::printf("OK %s: %d x %d grid (%zu nodes), protocol=%s, %zu flows, "
                    "duration=%.1fs\n",
                    cfg.name.c_str(), cfg.topology.rows, cfg.topology.cols,
                    topo.node_count(), mesh::protocol_name(cfg.protocol), flows.size(),
                    mesh::effective_duration(cfg, flows));
        return 0;
    } catch (const mesh::ConsistencyError& e) {
        std::fprintf(stderr, "invariant violation: %s\n", e.what());
        return 2;
    } catch (const mesh::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
