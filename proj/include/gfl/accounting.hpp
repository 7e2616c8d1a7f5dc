#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gfl/error.hpp"

namespace gfl {

// ---------------------------------------------------------------------------
// Per-node timelines. Every advance of a node's clock is recorded as one
// segment, so a timeline covers [0, end] without gaps.

enum class Phase : std::uint8_t { kInit, kLocal, kExchange, kAggregate, kInference };

inline const char* to_string(Phase p) {
    switch (p) {
        case Phase::kInit: return "init";
        case Phase::kLocal: return "local";
        case Phase::kExchange: return "exchange";
        case Phase::kAggregate: return "aggregate";
        case Phase::kInference: return "inference";
    }
    return "?";
}

inline constexpr std::uint32_t kSetupRound = std::numeric_limits<std::uint32_t>::max();

struct SegmentCause {
    std::uint32_t from = 0;   // sender of the message that ended the wait
    std::int64_t sent_ns = 0; // sender's clock when it was sent
};

struct Segment {
    Phase phase = Phase::kExchange;
    std::uint32_t round = kSetupRound;
    std::int64_t start_ns = 0;
    std::int64_t end_ns = 0;
    std::optional<SegmentCause> cause;

    std::int64_t duration_ns() const noexcept { return end_ns - start_ns; }
};

struct Timeline {
    std::uint32_t node = 0;
    std::vector<Segment> segments;

    std::int64_t end_ns() const noexcept { return segments.empty() ? 0 : segments.back().end_ns; }
};

inline double ns_to_s(std::int64_t ns) noexcept { return static_cast<double>(ns) / 1e9; }

inline std::int64_t s_to_ns(double s) {
    if (!(s >= 0) || !std::isfinite(s)) throw UsageError("durations must be finite and non-negative");
    return static_cast<std::int64_t>(std::llround(s * 1e9));
}

// ---------------------------------------------------------------------------
// Time ledger

struct NodeRoundTime {
    std::uint32_t node = 0;
    std::uint32_t round = 0;
    double loc = 0, exc = 0, agg = 0;
};

struct ServerRoundTime {
    std::uint32_t round = 0;
    double excs = 0, agg = 0;
};

struct PhaseTotals {
    double init = 0, loc = 0, exc = 0, agg = 0;

    double total() const noexcept { return init + loc + exc + agg; }
};

struct TimeLedger {
    double t_in = 0;                      // server model initialisation
    std::vector<NodeRoundTime> edge;      // per edge node, per round
    std::vector<ServerRoundTime> server;  // per round (centralised runs)
    // Durations along the run's critical path; their sum is the run's span.
    PhaseTotals critical;
    std::vector<double> t_req, t_res;     // request/response stamps

    void validate() const {
        auto bad = [](double v) { return !(v >= 0) || !std::isfinite(v); };
        if (bad(t_in) || bad(critical.init) || bad(critical.loc) || bad(critical.exc) || bad(critical.agg))
            throw ContractError("time ledger holds a negative or non-finite duration");
        for (const auto& e : edge)
            if (bad(e.loc) || bad(e.exc) || bad(e.agg)) throw ContractError("negative edge duration");
        for (const auto& s : server)
            if (bad(s.excs) || bad(s.agg)) throw ContractError("negative server duration");
        if (t_req.size() != t_res.size()) throw ContractError("unpaired request/response stamps");
        for (std::size_t i = 0; i < t_req.size(); ++i)
            if (t_res[i] < t_req[i]) throw ContractError("response stamp precedes request stamp");
    }
};

// Walks back from the node that finishes last. Compute segments on the path
// count toward their phase; when a wait was ended by a message, the path
// jumps to the sender at the send time and the in-flight time counts as
// exchange.
inline PhaseTotals critical_path(const std::vector<Timeline>& timelines) {
    PhaseTotals out;
    if (timelines.empty()) return out;
    std::map<std::uint32_t, const Timeline*> by_node;
    const Timeline* last = &timelines.front();
    for (const auto& t : timelines) {
        by_node[t.node] = &t;
        if (t.end_ns() > last->end_ns()) last = &t;
    }
    auto add = [&out](Phase p, std::int64_t ns) {
        const double s = ns_to_s(ns);
        switch (p) {
            case Phase::kInit: out.init += s; break;
            case Phase::kLocal:
            case Phase::kInference: out.loc += s; break;
            case Phase::kExchange: out.exc += s; break;
            case Phase::kAggregate: out.agg += s; break;
        }
    };
    const Timeline* cur = last;
    std::int64_t t = last->end_ns();
    // Bounded: every step strictly decreases t or hops once per segment.
    for (std::size_t guard = 0; t > 0 && guard < 100000000; ++guard) {
        const Segment* seg = nullptr;
        for (auto it = cur->segments.rbegin(); it != cur->segments.rend(); ++it)
            if (it->start_ns < t && t <= it->end_ns) {
                seg = &*it;
                break;
            }
        if (!seg) {
            // Idle before the first recorded segment.
            add(Phase::kExchange, t);
            break;
        }
        if (seg->phase == Phase::kExchange && seg->cause && seg->cause->sent_ns < t &&
            seg->cause->sent_ns >= seg->start_ns && by_node.count(seg->cause->from)) {
            add(Phase::kExchange, t - seg->cause->sent_ns);
            t = seg->cause->sent_ns;
            cur = by_node[seg->cause->from];
            continue;
        }
        add(seg->phase, t - seg->start_ns);
        t = seg->start_ns;
    }
    return out;
}

// Collapses raw timelines into the ledger. `server` is the coordinating node
// (its init segments give T_in); every other node is an edge node.
inline TimeLedger build_ledger(const std::vector<Timeline>& timelines, std::uint32_t server, bool server_rounds) {
    TimeLedger L;
    std::map<std::pair<std::uint32_t, std::uint32_t>, NodeRoundTime> edge;
    std::map<std::uint32_t, ServerRoundTime> srv;
    for (const auto& tl : timelines) {
        for (const auto& s : tl.segments) {
            const double d = ns_to_s(s.duration_ns());
            if (tl.node == server) {
                if (s.phase == Phase::kInit) {
                    L.t_in += d;
                } else if (server_rounds && s.round != kSetupRound) {
                    auto& e = srv[s.round];
                    e.round = s.round;
                    if (s.phase == Phase::kAggregate) e.agg += d;
                    else if (s.phase == Phase::kExchange) e.excs += d;
                }
                continue;
            }
            if (s.round == kSetupRound) continue;
            auto& e = edge[{tl.node, s.round}];
            e.node = tl.node;
            e.round = s.round;
            switch (s.phase) {
                case Phase::kLocal: e.loc += d; break;
                case Phase::kExchange: e.exc += d; break;
                case Phase::kAggregate: e.agg += d; break;
                default: break;
            }
        }
    }
    for (auto& [k, v] : edge) L.edge.push_back(v);
    for (auto& [k, v] : srv) L.server.push_back(v);
    L.critical = critical_path(timelines);
    return L;
}

// T_FL = T_in + T_loc + T_exc + T_agg, with the last three taken along the
// critical path so that T_FL equals the elapsed time of the run.
inline double total_fl_time(const TimeLedger& ledger) {
    return ledger.t_in + ledger.critical.loc + ledger.critical.exc + ledger.critical.agg;
}

// ---------------------------------------------------------------------------
// Energy

struct PowerRates {
    double e_edge = 5.0;   // W per edge node
    double e_cloud = 50.0; // W for the cloud server

    void validate() const {
        if (!(e_edge > 0) || !(e_cloud > 0)) throw UsageError("power rates must be positive");
    }
};

enum class Protocol { kCentralized, kDecentralized };

struct EnergyReport {
    Protocol protocol = Protocol::kCentralized;
    double e_edge = 0;   // J
    double e_cloud = 0;  // J
    std::optional<double> e_cfl, e_dfl;

    double total() const noexcept { return e_cfl ? *e_cfl : e_dfl.value_or(0.0); }
};

// E_edge = sum_k sum_r (T_loc + T_exc) e_edge
// E_cloud = T_in e_cloud + sum_r (T_excs + T_agg) e_cloud
// E_CFL = E_edge + E_cloud
inline EnergyReport energy_cfl(const TimeLedger& ledger, const PowerRates& rates) {
    ledger.validate();
    rates.validate();
    EnergyReport r;
    r.protocol = Protocol::kCentralized;
    for (const auto& e : ledger.edge) r.e_edge += (e.loc + e.exc) * rates.e_edge;
    r.e_cloud = ledger.t_in * rates.e_cloud;
    for (const auto& s : ledger.server) r.e_cloud += (s.excs + s.agg) * rates.e_cloud;
    r.e_cfl = r.e_edge + r.e_cloud;
    return r;
}

// E_DFL = T_in e_cloud + sum_k sum_r (T_loc + T_exc + T_agg) e_edge
inline EnergyReport energy_dfl(const TimeLedger& ledger, const PowerRates& rates) {
    ledger.validate();
    rates.validate();
    EnergyReport r;
    r.protocol = Protocol::kDecentralized;
    for (const auto& e : ledger.edge) r.e_edge += (e.loc + e.exc + e.agg) * rates.e_edge;
    r.e_cloud = ledger.t_in * rates.e_cloud;
    r.e_dfl = r.e_cloud + r.e_edge;
    return r;
}

inline double response_time(double t_req, double t_res) {
    if (t_res < t_req) throw ContractError("response timestamp precedes request timestamp");
    return t_res - t_req;
}

// ---------------------------------------------------------------------------
// Operation counters

struct ComplexityCounters {
    std::uint64_t gan_ops = 0;          // (|G| + |D|) per GAN batch step
    std::uint64_t local_train_ops = 0;  // |w| per local SGD step
    std::uint64_t transmit_units = 0;   // weight scalars sent in round traffic
    std::uint64_t aggregate_ops = 0;    // |w| per update folded into an average
    std::uint64_t setup_transmit_units = 0;  // initial model distribution

    ComplexityCounters& operator+=(const ComplexityCounters& o) noexcept {
        gan_ops += o.gan_ops;
        local_train_ops += o.local_train_ops;
        transmit_units += o.transmit_units;
        aggregate_ops += o.aggregate_ops;
        setup_transmit_units += o.setup_transmit_units;
        return *this;
    }

    friend bool operator==(const ComplexityCounters&, const ComplexityCounters&) = default;
};

struct ComplexityInputs {
    Protocol protocol = Protocol::kCentralized;
    std::uint64_t model_params = 0;       // |w_k| (= |w_s|)
    std::uint64_t rounds = 0;             // R
    std::uint64_t epochs = 0;             // xi
    std::vector<std::uint64_t> batches;   // beta per edge node
    std::uint64_t participants = 0;       // |C_r| per CFL round
    std::vector<std::uint64_t> neighbors; // N_k per DFL node
    // GAN
    std::uint64_t gan_epochs = 0, gan_rows = 0, gan_batch = 1, generator_params = 0, discriminator_params = 0;
};

// Closed-form operation counts:
//   gan       = eta1 * ceil(|D| / B1) * (|w_G| + |w_D|)
//   local     = |w_k| * beta * xi * R            (summed over training nodes)
//   CFL send  = (K |w_k| + |w_s|) * R,  CFL agg = |w_k| * R * K
//   DFL send  = N_k |w_k| R per node,   DFL agg = |w_k| R N_k per node
inline ComplexityCounters predict_complexity(const ComplexityInputs& in) {
    ComplexityCounters c;
    if (in.gan_batch == 0) throw UsageError("GAN batch size must be positive");
    c.gan_ops = in.gan_epochs * ((in.gan_rows + in.gan_batch - 1) / in.gan_batch) *
                (in.generator_params + in.discriminator_params);
    const std::uint64_t w = in.model_params, R = in.rounds;
    std::uint64_t beta_sum = 0;
    for (auto b : in.batches) beta_sum += b;
    if (in.protocol == Protocol::kCentralized) {
        const std::uint64_t K = in.participants;
        const std::uint64_t nodes = std::max<std::uint64_t>(in.batches.size(), 1);
        // With partial participation each node trains in K/nodes of the rounds on average.
        c.local_train_ops = w * in.epochs * R * beta_sum * K / nodes;
        c.transmit_units = (K * w + w) * R;
        c.aggregate_ops = w * R * K;
    } else {
        c.local_train_ops = w * in.epochs * R * beta_sum;
        for (auto n : in.neighbors) {
            c.transmit_units += n * w * R;
            c.aggregate_ops += w * R * n;
        }
    }
    return c;
}

inline void write_energy_csv(std::ostream& out, const EnergyReport& e, double t_fl) {
    out << "protocol,t_fl_s,e_edge_j,e_cloud_j,e_total_j\n";
    out << (e.protocol == Protocol::kCentralized ? "cfl" : "dfl") << ',' << t_fl << ',' << e.e_edge << ','
        << e.e_cloud << ',' << e.total() << '\n';
}

}  // namespace gfl
