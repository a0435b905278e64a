#include "mesh/engine.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>

#include "mesh/baselines.hpp"
#include "mesh/errors.hpp"
#include "mesh/protocol.hpp"
#include "mesh/rng.hpp"

namespace mesh {

std::vector<std::uint8_t> packet_payload(std::uint32_t packet_id, std::size_t len) {
    std::vector<std::uint8_t> p(len);
    for (std::size_t block = 0; block * 8 < len; ++block) {
        std::uint64_t v = splitmix64((static_cast<std::uint64_t>(packet_id) << 20) ^ block);
        for (std::size_t j = 0; j < 8 && block * 8 + j < len; ++j)
            p[block * 8 + j] = static_cast<std::uint8_t>(v >> (8 * j));
    }
    return p;
}

namespace {

enum class EventKind {
    kTxStart,   // backoff expired: try to put a frame on the air
    kTxEnd,     // transmission finished: evaluate receptions
    kDelivery,  // one receiver gets the frame
    kTimer,     // protocol timer (a = node, b = tag)
    kTraffic,   // CBR packet generation (a = flow index)
    kProbeTick, // ETX probe emission (a = node)
    kEstimate,  // measured-mode link estimate refresh
    kCheckpoint,
    kMacWake,   // medium went idle for a waiting node (a = node)
    kSimEnd,
};

struct Event {
    double at = 0.0;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::kSimEnd;
    std::uint64_t a = 0;
    std::uint64_t b = 0;

    bool operator>(const Event& o) const {
        if (at != o.at)
            return at > o.at;
        return seq > o.seq;
    }
};

enum class MacState { kIdle, kWaiting, kBackoff, kTx };

struct Transmission {
    std::uint64_t id = 0;
    NodeId sender = 0;
    double start = 0.0;
    double end = 0.0;
    Frame frame;
    std::vector<std::uint64_t> upstream;
    std::vector<std::uint32_t> report;
    int pending_deliveries = 0;
};

struct FlowRuntime {
    FlowSpec spec;
    double stop_at = 0.0; // resolved stop
    std::uint64_t generated = 0;
    std::uint64_t delivered = 0;
    double delivered_payload_bits = 0.0;
};

class Engine final : public NodeEnv {
public:
    Engine(const ScenarioConfig& cfg, Topology topo, std::vector<FlowSpec> flows,
           double duration, std::ostream* trace_out)
        : cfg_(cfg),
          topo_(std::move(topo)),
          routes_(topo_),
          duration_(duration),
          trace_out_(trace_out),
          medium_rng_(derive_stream(cfg.sim.seed, 0x4D4D, 0)) {
        for (const auto& f : flows) {
            FlowRuntime rt;
            rt.spec = f;
            rt.stop_at = f.stop_s >= 0.0 ? std::min(f.stop_s, duration_) : duration_;
            flows_.push_back(rt);
        }
        const auto n = static_cast<NodeId>(topo_.node_count());
        for (NodeId i = 0; i < n; ++i) {
            switch (cfg.protocol) {
            case ProtocolKind::kCormen:
                nodes_.push_back(std::make_unique<CormenNode>(i, cfg.params));
                break;
            case ProtocolKind::kCope:
                nodes_.push_back(std::make_unique<CopeNode>(i, cfg.params));
                break;
            case ProtocolKind::kPlain:
                nodes_.push_back(std::make_unique<PlainNode>(i, cfg.params));
                break;
            }
            mac_.push_back({MacState::kIdle});
            backoff_rng_.push_back(derive_stream(cfg.sim.seed, 0xB0FF, i));
            probe_seq_.push_back(0);
        }
        if (cfg.sim.etx == EtxMode::kMeasured)
            routes_.update_links({}); // nothing measured yet: all links dark
    }

    RunResult run() {
        schedule(duration_, EventKind::kSimEnd);

        std::set<double> epochs;
        for (const auto& f : flows_)
            if (f.spec.start_s < duration_)
                epochs.insert(f.spec.start_s);
        for (double t : epochs)
            schedule(t, EventKind::kCheckpoint);
        for (std::size_t i = 0; i < flows_.size(); ++i)
            if (flows_[i].spec.start_s < duration_)
                schedule(flows_[i].spec.start_s, EventKind::kTraffic, i);

        if (cfg_.sim.etx == EtxMode::kMeasured) {
            const double stagger = 1.0 / static_cast<double>(topo_.node_count());
            for (NodeId i = 0; i < topo_.node_count(); ++i)
                schedule(i * stagger, EventKind::kProbeTick, i);
            schedule(0.5, EventKind::kEstimate);
        }

        while (!queue_.empty()) {
            Event ev = queue_.top();
            queue_.pop();
            now_ = ev.at;
            if (ev.kind == EventKind::kSimEnd) {
                capture_checkpoint();
                break;
            }
            dispatch(ev);
        }

        RunResult result;
        result.checkpoints = checkpoints_;
        result.report = checkpoints_.empty() ? make_report() : checkpoints_.back().report;
        result.duration_s = duration_;
        for (const auto& f : flows_)
            result.flows.push_back(f.spec);
        return result;
    }

    // --- NodeEnv ---------------------------------------------------------

    double now() const override { return now_; }
    const RouteView& routes() const override { return routes_; }

    void schedule(NodeId node, std::uint64_t tag, double at) override {
        schedule(std::max(at, now_), EventKind::kTimer, node, tag);
    }

    void notify_tx_ready(NodeId node) override { kick(node); }

    void delivered(NodeId at, const NativePacketDescriptor& d,
                   const std::vector<std::uint8_t>& payload) override {
        if (at != d.dst)
            throw ConsistencyError("delivery at a node that is not the destination");
        if (!delivered_ids_.insert(d.packet_id).second)
            throw ConsistencyError("packet " + std::to_string(d.packet_id) +
                                   " delivered twice");
        if (payload != packet_payload(d.packet_id, d.payload_len))
            throw ConsistencyError("payload of packet " + std::to_string(d.packet_id) +
                                   " corrupted in flight");
        auto it = flow_of_packet_.find(d.packet_id);
        if (it != flow_of_packet_.end()) {
            FlowRuntime& fl = flows_[it->second];
            ++fl.delivered;
            fl.delivered_payload_bits += 8.0 * static_cast<double>(d.payload_len);
        }
        ++delivered_count_;
        double sent = static_cast<double>(d.created_at_ms) / 1000.0;
        delay_sum_ += std::max(0.0, now_ - sent); // clamp covers ms rounding of sent
        if (tracing())
            trace(at, "deliver id=" + std::to_string(d.packet_id) + " src=" +
                          std::to_string(d.src));
    }

    void dropped(NodeId node, std::uint32_t packet_id, const std::string& reason) override {
        ++counters_.drops;
        trace(node, "drop id=" + std::to_string(packet_id) + " reason=" + reason);
    }

    void decode_failed(NodeId node, std::uint32_t packet_id) override {
        ++counters_.decode_failures;
        trace(node, "decode_fail id=" + std::to_string(packet_id));
    }

    void trace(NodeId node, const std::string& text) override {
        if (!trace_out_)
            return;
        char head[64];
        std::snprintf(head, sizeof head, "t=%.9f node=%u ", now_, node);
        (*trace_out_) << head << text << '\n';
    }

private:
    // --- scheduling ------------------------------------------------------

    void schedule(double at, EventKind kind, std::uint64_t a = 0, std::uint64_t b = 0) {
        queue_.push(Event{at, next_seq_++, kind, a, b});
    }

    void dispatch(const Event& ev) {
        switch (ev.kind) {
        case EventKind::kTxStart:
            on_tx_start(static_cast<NodeId>(ev.a));
            break;
        case EventKind::kTxEnd:
            on_tx_end(ev.a);
            break;
        case EventKind::kDelivery:
            on_delivery(ev.a, static_cast<NodeId>(ev.b));
            break;
        case EventKind::kTimer:
            nodes_[ev.a]->timer(ev.b, *this);
            kick(static_cast<NodeId>(ev.a));
            break;
        case EventKind::kTraffic:
            on_traffic(ev.a);
            break;
        case EventKind::kProbeTick:
            on_probe_tick(static_cast<NodeId>(ev.a));
            break;
        case EventKind::kEstimate:
            on_estimate();
            break;
        case EventKind::kCheckpoint:
            capture_checkpoint();
            break;
        case EventKind::kMacWake:
            if (mac_[ev.a].state == MacState::kWaiting) {
                mac_[ev.a].state = MacState::kIdle;
                kick(static_cast<NodeId>(ev.a));
            }
            break;
        case EventKind::kSimEnd:
            break; // handled in run()
        }
    }

    // --- medium ----------------------------------------------------------

    double node_distance(NodeId a, NodeId b) const {
        return distance(topo_.nodes[a], topo_.nodes[b]);
    }

    // Transmissions this node currently senses.
    double busy_until(NodeId node) const {
        double until = 0.0;
        for (const auto& [id, t] : txs_) {
            if (t.start <= now_ && t.end > now_ &&
                node_distance(t.sender, node) <= topo_.carrier_sense_range)
                until = std::max(until, t.end);
        }
        return until;
    }

    void kick(NodeId node) {
        auto& m = mac_[node];
        if (m.state != MacState::kIdle || !nodes_[node]->tx_pending())
            return;
        double busy = busy_until(node);
        if (busy > now_) {
            m.state = MacState::kWaiting;
            schedule(busy, EventKind::kMacWake, node);
            return;
        }
        // Medium idle: uniform backoff before transmitting.
        std::uint64_t slots = backoff_rng_[node].next_below(
            static_cast<std::uint64_t>(cfg_.sim.backoff_window));
        m.state = MacState::kBackoff;
        schedule(now_ + static_cast<double>(slots) * cfg_.sim.backoff_slot_s,
                 EventKind::kTxStart, node);
    }

    void on_tx_start(NodeId node) {
        auto& m = mac_[node];
        m.state = MacState::kIdle;
        if (!nodes_[node]->tx_pending())
            return;
        if (busy_until(node) > now_) {
            kick(node); // someone grabbed the medium during our backoff
            return;
        }
        auto of = nodes_[node]->next_frame(*this);
        if (!of)
            return;
        begin_transmission(node, std::move(*of));
    }

    void begin_transmission(NodeId node, OutgoingFrame of) {
        Transmission t;
        t.id = next_tx_id_++;
        t.sender = node;
        t.start = now_;
        std::size_t extra = of.report_ids.empty() ? 0 : 1 + 4 * of.report_ids.size();
        t.end = now_ + frame_airtime(of.frame, cfg_.sim.bitrate_bps, extra);
        t.frame = std::move(of.frame);
        t.upstream = std::move(of.component_upstream);
        t.report = std::move(of.report_ids);

        account_transmission(node, t);
        mac_[node].state = MacState::kTx;
        std::uint64_t id = t.id;
        double end = t.end;
        txs_.emplace(id, std::move(t));
        schedule(end, EventKind::kTxEnd, id);
    }

    bool tracing() const { return trace_out_ != nullptr; }

    void account_transmission(NodeId node, const Transmission& t) {
        if (const auto* f = std::get_if<DataFrame>(&t.frame)) {
            ++counters_.tx_data_frames;
            if (f->nc() >= 2) {
                ++counters_.tx_coded_frames;
                counters_.coded_components_total += f->nc();
            }
            if (t.upstream.size() != f->components.size())
                throw ConsistencyError("transmission upstream bookkeeping out of step");
            for (std::size_t i = 0; i < f->components.size(); ++i) {
                const auto& c = f->components[i];
                if (t.upstream[i] != 0) {
                    auto key = std::make_pair(c.packet_id, t.upstream[i]);
                    if (++forward_instances_[key] > 1) {
                        ++counters_.duplicate_forwards;
                        trace(node, "duplicate_forward id=" + std::to_string(c.packet_id));
                    }
                }
            }
            if (tracing()) {
                std::string ids;
                for (std::size_t i = 0; i < f->components.size(); ++i)
                    ids += (i ? "," : "") + std::to_string(f->components[i].packet_id);
                trace(node, "tx DATA nc=" + std::to_string(f->nc()) + " ids=[" + ids + "]");
            }
        } else if (const auto* a = std::get_if<AnnounceFrame>(&t.frame)) {
            ++counters_.tx_announce;
            if (tracing()) {
                std::string ids;
                for (std::size_t i = 0; i < a->packet_ids.size(); ++i)
                    ids += (i ? "," : "") + std::to_string(a->packet_ids[i]);
                trace(node, "tx ANNOUNCE ids=[" + ids + "]");
            }
        } else if (const auto* k = std::get_if<AckFrame>(&t.frame)) {
            ++counters_.tx_ack;
            if (tracing())
                trace(node, "tx ACK id=" + std::to_string(k->packet_id));
        } else if (tracing()) {
            trace(node, "tx PROBE seq=" +
                            std::to_string(std::get<ProbeFrame>(t.frame).seq));
        }
    }

    void on_tx_end(std::uint64_t tx_id) {
        auto& t = txs_.at(tx_id);
        mac_[t.sender].state = MacState::kIdle;
        const bool was_announce = std::holds_alternative<AnnounceFrame>(t.frame);
        const NodeId sender = t.sender;

        for (NodeId r = 0; r < topo_.node_count(); ++r) {
            if (r == t.sender || node_distance(t.sender, r) > topo_.radio_range)
                continue;
            bool destroyed = false;
            for (const auto& [oid, o] : txs_) {
                if (oid == tx_id)
                    continue;
                if (o.start < t.end && o.end > t.start &&
                    node_distance(o.sender, r) <= topo_.carrier_sense_range) {
                    destroyed = true;
                    break;
                }
            }
            if (destroyed) {
                if (tracing())
                    trace(r, "collision from=" + std::to_string(t.sender));
                continue;
            }
            double d_f = 1.0;
            auto link = topo_.links.find({t.sender, r});
            if (link != topo_.links.end())
                d_f = link->second.d_f;
            if (!medium_rng_.bernoulli(d_f)) {
                if (tracing())
                    trace(r, "loss from=" + std::to_string(t.sender));
                continue;
            }
            ++t.pending_deliveries;
            schedule(now_, EventKind::kDelivery, tx_id, r);
        }

        // An announcement and its data frame ride one medium acquisition:
        // the data frame follows back-to-back with no fresh contention.
        if (was_announce && nodes_[sender]->tx_pending() && busy_until(sender) <= now_) {
            if (auto of = nodes_[sender]->next_frame(*this)) {
                begin_transmission(sender, std::move(*of));
            }
        } else {
            kick(sender);
        }

        // Forget transmissions old enough that nothing can overlap them.
        // Airtimes are bounded well below the retention window.
        for (auto it = txs_.begin(); it != txs_.end();) {
            if (it->second.end < now_ - 0.05 && it->second.pending_deliveries == 0)
                it = txs_.erase(it);
            else
                ++it;
        }
    }

    void on_delivery(std::uint64_t tx_id, NodeId r) {
        auto& t = txs_.at(tx_id);
        --t.pending_deliveries;
        if (const auto* p = std::get_if<ProbeFrame>(&t.frame)) {
            (void)p;
            probe_log_.push_back({now_, t.sender, r});
            return;
        }
        nodes_[r]->receive(t.frame, t.sender, tx_id, t.report, *this);
        kick(r);
    }

    // --- traffic & probes --------------------------------------------------

    void on_traffic(std::uint64_t flow_idx) {
        FlowRuntime& fl = flows_[flow_idx];
        if (now_ >= fl.stop_at)
            return;
        Packet pkt;
        pkt.id = next_packet_id_++;
        pkt.src = fl.spec.src;
        pkt.dst = fl.spec.dst;
        pkt.payload = std::make_shared<const std::vector<std::uint8_t>>(
            packet_payload(pkt.id, static_cast<std::size_t>(fl.spec.payload_bytes)));
        flow_of_packet_[pkt.id] = flow_idx;
        ++fl.generated;
        ++generated_count_;
        if (tracing())
            trace(pkt.src, "gen id=" + std::to_string(pkt.id) + " dst=" +
                               std::to_string(pkt.dst));
        nodes_[pkt.src]->originate(pkt, *this);
        kick(pkt.src);

        double next = now_ + fl.spec.interval_s;
        if (next < fl.stop_at)
            schedule(next, EventKind::kTraffic, flow_idx);
    }

    void on_probe_tick(NodeId node) {
        nodes_[node]->inject_frame({Frame{ProbeFrame{node, probe_seq_[node]++}}, {}, {}});
        kick(node);
        double next = now_ + 1.0;
        if (next < duration_)
            schedule(next, EventKind::kProbeTick, node);
    }

    void on_estimate() {
        routes_.update_links(estimate_etx_from_probes(probe_log_, 10.0, now_));
        double next = now_ + 1.0;
        if (next < duration_)
            schedule(next, EventKind::kEstimate);
        // The log only ever needs the last 10 seconds.
        while (!probe_log_.empty() && probe_log_.front().t < now_ - 11.0)
            probe_log_.erase(probe_log_.begin());
    }

    // --- metrics -----------------------------------------------------------

    MetricsReport make_report() const {
        MetricsReport r;
        r.generated = generated_count_;
        r.delivered = delivered_count_;
        r.pdr = compute_pdr(delivered_count_, generated_count_);
        r.avg_delay_s = delivered_count_ == 0
                            ? 0.0
                            : delay_sum_ / static_cast<double>(delivered_count_);
        std::vector<FlowGoodput> goodput;
        for (const auto& f : flows_) {
            double active = std::min(now_, f.stop_at) - f.spec.start_s;
            goodput.push_back({f.delivered_payload_bits, active});
        }
        r.avg_throughput_bps = compute_avg_throughput(goodput);
        r.counters = counters_;
        return r;
    }

    void capture_checkpoint() {
        CheckpointRow row;
        row.t_s = now_;
        for (const auto& f : flows_)
            if (f.spec.start_s <= now_)
                ++row.flows_active;
        row.report = make_report();
        checkpoints_.push_back(std::move(row));
    }

    // --- state -------------------------------------------------------------

    const ScenarioConfig& cfg_;
    Topology topo_;
    RouteView routes_;
    double duration_;
    std::ostream* trace_out_;

    std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue_;
    std::uint64_t next_seq_ = 0;
    double now_ = 0.0;

    std::vector<std::unique_ptr<Node>> nodes_;
    struct Mac {
        MacState state;
    };
    std::vector<Mac> mac_;
    std::vector<RngStream> backoff_rng_;
    std::vector<std::uint32_t> probe_seq_;

    std::map<std::uint64_t, Transmission> txs_;
    std::uint64_t next_tx_id_ = 1;
    RngStream medium_rng_;

    std::vector<FlowRuntime> flows_;
    std::map<std::uint32_t, std::size_t> flow_of_packet_;
    std::uint32_t next_packet_id_ = 1;

    Counters counters_;
    std::map<std::pair<std::uint32_t, std::uint64_t>, int> forward_instances_;
    std::set<std::uint32_t> delivered_ids_;
    std::uint64_t generated_count_ = 0;
    std::uint64_t delivered_count_ = 0;
    double delay_sum_ = 0.0;

    std::vector<ProbeReception> probe_log_;
    std::vector<CheckpointRow> checkpoints_;
};

} // namespace

RunResult run_scenario(const ScenarioConfig& cfg, std::ostream* trace_out) {
    validate_scenario(cfg);
    Topology topo = build_topology(cfg.topology);
    std::vector<FlowSpec> flows = materialize_flows(cfg, topo);
    double duration = effective_duration(cfg, flows);
    Engine engine(cfg, std::move(topo), std::move(flows), duration, trace_out);
    return engine.run();
}

} // namespace mesh
