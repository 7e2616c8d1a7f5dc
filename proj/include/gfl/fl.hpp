#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <thread>
#include <vector>

#include "gfl/accounting.hpp"
#include "gfl/data.hpp"
#include "gfl/error.hpp"
#include "gfl/gan.hpp"
#include "gfl/metrics.hpp"
#include "gfl/nn.hpp"
#include "gfl/random.hpp"
#include "gfl/round_log.hpp"
#include "gfl/tensor.hpp"
#include "gfl/transport.hpp"
#include "gfl/wire.hpp"

namespace gfl {

// Virtual compute costs charged by the simulated backend.
struct CostModel {
    double ns_per_param_sample = 2.0;  // one parameter touched by one training sample
    double ns_per_agg_element = 1.0;   // one parameter of one update folded into an average
    double ns_per_init_param = 1.0;    // initial model construction
    double ns_per_inference = 0.0;     // one prediction

    static std::int64_t ns(double v) { return static_cast<std::int64_t>(std::llround(std::max(0.0, v))); }
};

inline constexpr NodeId kServerId = 0;

struct FlConfig {
    std::size_t clients = 4;      // K
    std::size_t rounds = 5;       // R
    std::size_t epochs = 50;      // xi
    double learning_rate = 0.2;   // phi
    std::size_t batch_size = 8;   // B
    double participation = 1.0;   // alpha
    // DFL neighbour lists keyed by node id (1..K); empty means full mesh.
    std::map<NodeId, std::vector<NodeId>> topology;
    bool self_include = false;  // DFL: average own weights with the neighbours'
    bool size_weighted = false;
    std::size_t hidden = 16;
    std::uint64_t seed = 0;
    double timeout_s = 600.0;
    CostModel cost;

    std::size_t participants() const {
        const double want = std::ceil(participation * static_cast<double>(clients) - 1e-9);
        return std::max<std::size_t>(static_cast<std::size_t>(want), 1);
    }

    std::vector<NodeId> neighbors(NodeId k) const {
        if (topology.empty()) {
            std::vector<NodeId> out;
            for (NodeId u = 1; u <= clients; ++u)
                if (u != k) out.push_back(u);
            return out;
        }
        auto it = topology.find(k);
        if (it == topology.end()) return {};
        auto out = it->second;
        std::sort(out.begin(), out.end());
        return out;
    }

    void validate(Protocol protocol) const {
        if (clients < 1) throw ConfigError("K must be >= 1");
        if (rounds < 1) throw ConfigError("R must be >= 1");
        if (!(learning_rate > 0)) throw ConfigError("learning rate must be positive");
        if (batch_size < 1) throw ConfigError("batch size must be >= 1");
        if (!(participation > 0) || participation > 1) throw ConfigError("participation must be in (0,1]");
        if (hidden < 1) throw ConfigError("hidden size must be >= 1");
        if (!(timeout_s > 0)) throw ConfigError("timeout must be positive");
        if (protocol == Protocol::kDecentralized) validate_topology();
    }

private:
    void validate_topology() const {
        const auto K = static_cast<NodeId>(clients);
        for (const auto& [k, ns] : topology) {
            if (k < 1 || k > K) throw ConfigError("topology names unknown node " + std::to_string(k));
            std::set<NodeId> seen;
            for (NodeId u : ns) {
                if (u < 1 || u > K) throw ConfigError("topology names unknown node " + std::to_string(u));
                if (u == k) throw ConfigError("node " + std::to_string(k) + " lists itself as a neighbour");
                if (!seen.insert(u).second) throw ConfigError("duplicate neighbour in topology");
            }
        }
        for (NodeId k = 1; k <= K; ++k)
            for (NodeId u : neighbors(k)) {
                auto back = neighbors(u);
                if (!std::binary_search(back.begin(), back.end(), k))
                    throw ConfigError("topology is not symmetric: " + std::to_string(k) + "->" + std::to_string(u));
            }
        std::vector<bool> reached(K + 1, false);
        std::vector<NodeId> stack{1};
        reached[1] = true;
        while (!stack.empty()) {
            const NodeId k = stack.back();
            stack.pop_back();
            for (NodeId u : neighbors(k))
                if (!reached[u]) {
                    reached[u] = true;
                    stack.push_back(u);
                }
        }
        for (NodeId k = 1; k <= K; ++k) {
            if (!reached[k]) throw ConfigError("topology is not connected");
            if (!self_include && neighbors(k).empty())
                throw ConfigError("node " + std::to_string(k) + " has no neighbours; enable self-inclusion");
        }
    }
};

// ---------------------------------------------------------------------------
// Aggregation

inline ModelWeights fedavg(std::span<const ModelWeights> updates) {
    if (updates.empty()) throw UsageError("fedavg needs at least one update");
    // Running mean, so that N copies of the same model average to exactly that model.
    ModelWeights out = updates[0];
    for (std::size_t i = 1; i < updates.size(); ++i) {
        require_congruent(out, updates[i], "fedavg");
        const double n = static_cast<double>(i + 1);
        zip_apply(out, updates[i], [n](double& m, double x) { m += (x - m) / n; });
    }
    return out;
}

// Mean weighted by `sizes` (e.g. shard row counts).
inline ModelWeights weighted_average(std::span<const ModelWeights> updates, std::span<const double> sizes) {
    if (updates.empty()) throw UsageError("weighted_average needs at least one update");
    if (sizes.size() != updates.size()) throw UsageError("one weight per update required");
    const double total = std::accumulate(sizes.begin(), sizes.end(), 0.0);
    if (!(total > 0)) throw UsageError("aggregation weights must have a positive sum");
    ModelWeights out = updates[0].zeros_like();
    for (std::size_t i = 0; i < updates.size(); ++i) {
        if (!(sizes[i] >= 0)) throw UsageError("aggregation weights must be non-negative");
        require_congruent(out, updates[i], "weighted_average");
        const double f = sizes[i] / total;
        zip_apply(out, updates[i], [f](double& a, double b) { a += f * b; });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Local training

struct LocalTrainResult {
    ModelWeights weights;
    std::vector<double> loss_curve;  // mean batch loss per epoch
    std::size_t batches = 0;         // beta per epoch
    std::uint64_t steps = 0;
};

// xi epochs of minibatch SGD over the shard, reshuffled each epoch with `rng`.
inline LocalTrainResult local_train(const ModelWeights& weights_in, const TabularDataset& shard, std::size_t epochs,
                                    std::size_t batch_size, double learning_rate, Rng& rng) {
    if (shard.empty()) throw UsageError("local_train needs a non-empty shard");
    if (batch_size < 1) throw UsageError("batch size must be >= 1");
    if (!(learning_rate > 0)) throw UsageError("learning rate must be positive");
    GruClassifier model = GruClassifier::from_weights(weights_in, shard.schema().feature_count());
    LocalTrainResult out;
    const std::size_t n = shard.size();
    out.batches = (n + batch_size - 1) / batch_size;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (std::size_t e = 0; e < epochs; ++e) {
        std::shuffle(order.begin(), order.end(), rng);
        double sum = 0;
        for (std::size_t start = 0; start < n; start += batch_size) {
            const std::size_t end = std::min(n, start + batch_size);
            rows.clear();
            labels.clear();
            for (std::size_t i = start; i < end; ++i) {
                rows.push_back(shard.row(order[i]));
                labels.push_back(shard.label(order[i]));
            }
            auto lg = model.backward(rows, labels);
            sgd_update(model.weights(), lg.gradient, learning_rate);
            sum += lg.loss;
            ++out.steps;
        }
        out.loss_curve.push_back(sum / static_cast<double>(out.batches));
    }
    out.weights = std::move(model.weights());
    return out;
}

inline ConfusionMatrix evaluate(const ModelWeights& weights, const TabularDataset& test) {
    if (test.empty()) throw UsageError("evaluate needs a non-empty test set");
    const GruClassifier model = GruClassifier::from_weights(weights, test.schema().feature_count());
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < test.size(); ++i) cm.add(test.label(i), classify(model.forward(test.row(i))));
    return cm;
}

inline ModelWeights initial_model(const FlConfig& cfg, std::size_t features) {
    Rng rng(derive_seed(cfg.seed, "init"));
    return GruClassifier::random(features, cfg.hidden, rng).weights();
}

// Train-on-synthetic, test-on-real: accuracy on `real` (unscaled) of a fresh
// classifier trained briefly on rows drawn from the GAN. Used to pick among
// GAN restarts, so `real` should be training data, never the test split.
struct SyntheticFitConfig {
    std::size_t rows = 2000;
    std::size_t epochs = 40;
};

inline double synthetic_fit_score(const GanState& gan, const TabularDataset& real, const FlConfig& cfg,
                                  const SyntheticFitConfig& fit = {}) {
    const Scaler scaler(real.schema());
    Rng rng(derive_seed(cfg.seed, "fit-score"));
    const auto synth = scaler.apply(generate(gan, fit.rows, real.schema(), rng));
    const auto trained = local_train(initial_model(cfg, synth.schema().feature_count()), synth, fit.epochs,
                                     cfg.batch_size, cfg.learning_rate, rng);
    return metrics_from(evaluate(trained.weights, scaler.apply(real))).accuracy;
}

// ---------------------------------------------------------------------------
// Protocol runs

struct FlRunResult {
    Protocol protocol = Protocol::kCentralized;
    ModelWeights initial;                     // omega_in
    ModelWeights global;                      // M_final (CFL) or M_g (DFL)
    std::vector<ModelWeights> round_globals;  // global after each round
    std::vector<ModelWeights> personalized;   // last locally trained weights, index k-1
    // trained[r][k-1]: node k's weights after local training in round r;
    // aggregated[r][k-1]: after its aggregation step (DFL only).
    std::vector<std::vector<ModelWeights>> trained, aggregated;
    std::vector<RoundLog> logs;
    std::vector<Timeline> timelines;
    TimeLedger ledger;
    ComplexityCounters counters;
};

class RoundAborted : public RuntimeFault {
public:
    RoundAborted(std::uint32_t round, const std::string& what, std::vector<RoundLog> partial)
        : RuntimeFault("round " + std::to_string(round) + " aborted: " + what), round_(round),
          logs_(std::move(partial)) {}

    std::uint32_t round() const noexcept { return round_; }
    const std::vector<RoundLog>& logs() const noexcept { return logs_; }

private:
    std::uint32_t round_;
    std::vector<RoundLog> logs_;
};

namespace detail {

struct NodeTask {
    std::unique_ptr<Endpoint> ep;
    std::function<void(Endpoint&)> body;
    std::exception_ptr error;
};

// One thread per node; an endpoint is closed as soon as its body returns or
// throws so that the remaining nodes can make progress.
inline void run_nodes(std::vector<NodeTask>& tasks) {
    std::vector<std::thread> threads;
    threads.reserve(tasks.size());
    for (auto& t : tasks)
        threads.emplace_back([&t] {
            try {
                t.body(*t.ep);
            } catch (...) {
                t.error = std::current_exception();
            }
            try {
                t.ep->close();
            } catch (...) {
                if (!t.error) t.error = std::current_exception();
            }
        });
    for (auto& th : threads) th.join();
}

inline WireMessage expect(Endpoint& ep, NodeId from, MessageKind kind, double timeout_s) {
    WireMessage m = ep.recv_from(from, timeout_s);
    if (m.kind != kind)
        throw TransportError(std::string("node ") + std::to_string(ep.id()) + " expected " + to_string(kind) +
                             " from node " + std::to_string(from) + ", got " + to_string(m.kind));
    return m;
}

inline std::int64_t train_cost(const FlConfig& cfg, std::size_t params, std::size_t rows) {
    return CostModel::ns(cfg.cost.ns_per_param_sample * static_cast<double>(params) *
                         static_cast<double>(rows) * static_cast<double>(cfg.epochs));
}

inline std::int64_t agg_cost(const FlConfig& cfg, std::size_t params, std::size_t updates) {
    return CostModel::ns(cfg.cost.ns_per_agg_element * static_cast<double>(params) * static_cast<double>(updates));
}

inline void check_shards(const FlConfig& cfg, const std::vector<TabularDataset>& shards) {
    if (shards.size() != cfg.clients)
        throw SetupError("expected " + std::to_string(cfg.clients) + " shards, got " + std::to_string(shards.size()));
    for (std::size_t k = 0; k < shards.size(); ++k) {
        if (shards[k].empty()) throw UsageError("shard " + std::to_string(k + 1) + " is empty");
        if (shards[k].schema().feature_count() != shards[0].schema().feature_count())
            throw SchemaError("shards disagree on the feature count");
    }
}

inline void fill_node_times(FlRunResult& res) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, const NodeRoundTime*> times;
    for (const auto& e : res.ledger.edge) times[{e.node, e.round}] = &e;
    std::map<std::uint32_t, double> server_agg;
    for (const auto& s : res.ledger.server) server_agg[s.round] = s.agg;
    for (auto& log : res.logs) {
        if (res.protocol == Protocol::kCentralized) log.t_agg = server_agg[log.round];
        for (auto& n : log.nodes)
            if (auto it = times.find({n.node, log.round}); it != times.end()) {
                n.t_loc = it->second->loc;
                n.t_exc = it->second->exc;
                n.t_agg = it->second->agg;
            }
    }
}

[[noreturn]] inline void rethrow_run_error(std::vector<NodeTask>& tasks, std::uint32_t round,
                                           const std::vector<RoundLog>& logs) {
    // The server's view decides; node errors are usually consequences of it.
    std::vector<std::exception_ptr> order;
    for (auto& t : tasks)
        if (t.error) order.push_back(t.error);
    for (auto& e : order) {
        try {
            std::rethrow_exception(e);
        } catch (const TimeoutError& te) {
            throw RoundAborted(round, te.what(), logs);
        } catch (...) {
        }
    }
    std::rethrow_exception(order.front());
}

}  // namespace detail

// Centralised FL. Node 0 is the server; clients are 1..K and own shards[k-1].
// `global_set`, when given, is the server's own holdout used to score the
// global model after every round.
inline FlRunResult run_cfl(const FlConfig& cfg, const std::vector<TabularDataset>& shards, Network& net,
                           const TabularDataset* global_set = nullptr) {
    cfg.validate(Protocol::kCentralized);
    detail::check_shards(cfg, shards);
    const std::size_t F = shards[0].schema().feature_count();
    const std::size_t P = GruClassifier::parameter_count(cfg.hidden);
    const auto K = static_cast<NodeId>(cfg.clients);
    const auto R = static_cast<std::uint32_t>(cfg.rounds);

    FlRunResult res;
    res.protocol = Protocol::kCentralized;
    res.personalized.resize(K);
    res.trained.assign(R, std::vector<ModelWeights>(K));
    res.logs.resize(R);
    std::vector<std::vector<NodeRoundStats>> stats(K, std::vector<NodeRoundStats>(R));
    std::vector<std::vector<bool>> took_part(K, std::vector<bool>(R, false));
    std::vector<ComplexityCounters> counters(K + 1);
    std::vector<double> sizes;
    for (const auto& s : shards) sizes.push_back(static_cast<double>(s.size()));
    std::uint32_t current_round = 0;

    std::vector<detail::NodeTask> tasks(K + 1);
    for (NodeId id = 0; id <= K; ++id) tasks[id].ep = net.open(id);

    tasks[0].body = [&](Endpoint& ep) {
        auto& ctr = counters[0];
        auto release = [&] {
            for (NodeId k = 1; k <= K; ++k) ep.send(k, WireMessage::control(MessageKind::kRelease, R, ep.id()));
        };
        for (NodeId k = 1; k <= K; ++k) {
            try {
                detail::expect(ep, k, MessageKind::kHello, cfg.timeout_s);
            } catch (const TimeoutError&) {
                release();
                throw SetupError("client " + std::to_string(k) + " did not connect");
            }
        }
        ModelWeights w = ep.compute(Phase::kInit, CostModel::ns(cfg.cost.ns_per_init_param * static_cast<double>(P)),
                                    [&] { return initial_model(cfg, F); });
        res.initial = w;
        for (NodeId k = 1; k <= K; ++k) {
            ep.send(k, WireMessage::with_weights(MessageKind::kInitModel, 0, ep.id(), w));
            ctr.setup_transmit_units += P;
        }
        Rng select_rng(derive_seed(cfg.seed, "select"));
        std::vector<NodeId> ids(K);
        std::iota(ids.begin(), ids.end(), 1);
        try {
            for (std::uint32_t r = 0; r < R; ++r) {
                current_round = r;
                ep.set_round(r);
                std::shuffle(ids.begin(), ids.end(), select_rng);
                std::vector<NodeId> chosen(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(cfg.participants()));
                std::sort(chosen.begin(), chosen.end());
                res.logs[r].round = r;
                res.logs[r].participants.assign(chosen.begin(), chosen.end());
                for (NodeId k : chosen) {
                    ep.send(k, WireMessage::with_weights(MessageKind::kGlobalModel, r, ep.id(), w));
                    (r == 0 ? ctr.setup_transmit_units : ctr.transmit_units) += P;
                }
                std::vector<ModelWeights> updates;
                std::vector<double> update_sizes;
                for (NodeId k : chosen) {
                    WireMessage m = detail::expect(ep, k, MessageKind::kClientUpdate, cfg.timeout_s);
                    if (m.round != r) throw TransportError("client update for the wrong round");
                    updates.push_back(m.weights());
                    update_sizes.push_back(sizes[k - 1]);
                }
                w = ep.compute(Phase::kAggregate, detail::agg_cost(cfg, P, updates.size()), [&] {
                    return cfg.size_weighted ? weighted_average(updates, update_sizes) : fedavg(updates);
                });
                ctr.aggregate_ops += P * updates.size();
                res.round_globals.push_back(w);
                res.logs[r].global_hash = weight_hash(w);
                if (global_set) res.logs[r].global_accuracy = metrics_from(evaluate(w, *global_set)).accuracy;
            }
        } catch (const TimeoutError&) {
            release();
            throw;
        }
        for (NodeId k = 1; k <= K; ++k) {
            ep.send(k, WireMessage::with_weights(MessageKind::kGlobalModel, R, ep.id(), w));
            ctr.transmit_units += P;
        }
        release();
        res.global = w;
    };

    for (NodeId k = 1; k <= K; ++k) {
        tasks[k].body = [&, k](Endpoint& ep) {
            auto& ctr = counters[k];
            const TabularDataset& shard = shards[k - 1];
            Rng rng(derive_seed(cfg.seed, "node", k));
            ep.send(kServerId, WireMessage::control(MessageKind::kHello, 0, ep.id()));
            while (true) {
                WireMessage m = ep.recv_from(kServerId, cfg.timeout_s);
                switch (m.kind) {
                    case MessageKind::kInitModel: break;  // the round-0 GLOBAL_MODEL carries the same weights
                    case MessageKind::kGlobalModel: {
                        if (m.round >= R) break;
                        const std::uint32_t r = m.round;
                        ep.set_round(r);
                        const ModelWeights w = m.weights();
                        auto out = ep.compute(Phase::kLocal, detail::train_cost(cfg, P, shard.size()), [&] {
                            return local_train(w, shard, cfg.epochs, cfg.batch_size, cfg.learning_rate, rng);
                        });
                        ctr.local_train_ops += P * out.steps;
                        stats[k - 1][r] = {k, out.loss_curve, out.batches, 0, 0, 0};
                        took_part[k - 1][r] = true;
                        res.trained[r][k - 1] = out.weights;
                        res.personalized[k - 1] = out.weights;
                        ep.send(kServerId, WireMessage::with_weights(MessageKind::kClientUpdate, r, ep.id(), out.weights));
                        ctr.transmit_units += P;
                        break;
                    }
                    case MessageKind::kRelease: return;
                    default: throw TransportError(std::string("client received unexpected ") + to_string(m.kind));
                }
            }
        };
    }

    detail::run_nodes(tasks);
    for (std::uint32_t r = 0; r < R; ++r)
        for (NodeId k = 1; k <= K; ++k)
            if (took_part[k - 1][r]) res.logs[r].nodes.push_back(stats[k - 1][r]);
    res.timelines = net.timelines();
    if (std::any_of(tasks.begin(), tasks.end(), [](const auto& t) { return static_cast<bool>(t.error); })) {
        std::vector<RoundLog> partial(res.logs.begin(), res.logs.begin() + current_round);
        detail::rethrow_run_error(tasks, current_round, partial);
    }
    for (NodeId k = 1; k <= K; ++k)
        if (res.personalized[k - 1].empty()) res.personalized[k - 1] = res.initial;
    res.ledger = build_ledger(res.timelines, kServerId, true);
    detail::fill_node_times(res);
    for (const auto& c : counters) res.counters += c;
    return res;
}

// Decentralised FL. Node 0 only hands out the initial model; nodes 1..K train,
// exchange with their neighbours and average every round.
inline FlRunResult run_dfl(const FlConfig& cfg, const std::vector<TabularDataset>& shards, Network& net) {
    cfg.validate(Protocol::kDecentralized);
    detail::check_shards(cfg, shards);
    const std::size_t F = shards[0].schema().feature_count();
    const std::size_t P = GruClassifier::parameter_count(cfg.hidden);
    const auto K = static_cast<NodeId>(cfg.clients);
    const auto R = static_cast<std::uint32_t>(cfg.rounds);

    FlRunResult res;
    res.protocol = Protocol::kDecentralized;
    res.personalized.resize(K);
    res.trained.assign(R, std::vector<ModelWeights>(K));
    res.aggregated.assign(R, std::vector<ModelWeights>(K));
    std::vector<std::vector<NodeRoundStats>> stats(K, std::vector<NodeRoundStats>(R));
    std::vector<std::uint32_t> reached(K + 1, 0);
    std::vector<ComplexityCounters> counters(K + 1);

    std::vector<detail::NodeTask> tasks(K + 1);
    for (NodeId id = 0; id <= K; ++id) tasks[id].ep = net.open(id);

    tasks[0].body = [&](Endpoint& ep) {
        for (NodeId k = 1; k <= K; ++k) {
            try {
                detail::expect(ep, k, MessageKind::kHello, cfg.timeout_s);
            } catch (const TimeoutError&) {
                throw SetupError("node " + std::to_string(k) + " did not connect");
            }
        }
        ModelWeights w = ep.compute(Phase::kInit, CostModel::ns(cfg.cost.ns_per_init_param * static_cast<double>(P)),
                                    [&] { return initial_model(cfg, F); });
        res.initial = w;
        for (NodeId k = 1; k <= K; ++k) {
            ep.send(k, WireMessage::with_weights(MessageKind::kInitModel, 0, ep.id(), w));
            counters[0].setup_transmit_units += P;
        }
    };

    for (NodeId k = 1; k <= K; ++k) {
        tasks[k].body = [&, k](Endpoint& ep) {
            auto& ctr = counters[k];
            const TabularDataset& shard = shards[k - 1];
            const auto nbrs = cfg.neighbors(k);
            Rng rng(derive_seed(cfg.seed, "node", k));
            ep.send(kServerId, WireMessage::control(MessageKind::kHello, 0, ep.id()));
            ModelWeights w = detail::expect(ep, kServerId, MessageKind::kInitModel, cfg.timeout_s).weights();
            for (std::uint32_t r = 0; r < R; ++r) {
                reached[k] = r;
                ep.set_round(r);
                auto out = ep.compute(Phase::kLocal, detail::train_cost(cfg, P, shard.size()), [&] {
                    return local_train(w, shard, cfg.epochs, cfg.batch_size, cfg.learning_rate, rng);
                });
                ctr.local_train_ops += P * out.steps;
                stats[k - 1][r] = {k, out.loss_curve, out.batches, 0, 0, 0};
                res.trained[r][k - 1] = out.weights;
                res.personalized[k - 1] = out.weights;
                for (NodeId u : nbrs) {
                    ep.send(u, WireMessage::with_weights(MessageKind::kNeighborUpdate, r, ep.id(), out.weights));
                    ctr.transmit_units += P;
                }
                std::vector<ModelWeights> received;
                std::vector<double> sizes;
                for (NodeId u : nbrs) {
                    WireMessage m = detail::expect(ep, u, MessageKind::kNeighborUpdate, cfg.timeout_s);
                    if (m.round != r) throw TransportError("neighbour update for the wrong round");
                    received.push_back(m.weights());
                    sizes.push_back(static_cast<double>(shards[u - 1].size()));
                }
                ctr.aggregate_ops += P * received.size();
                if (cfg.self_include) {
                    // Own weights enter as they were sent, so every node averages the same values.
                    received.push_back(quantize_f32(out.weights));
                    sizes.push_back(static_cast<double>(shard.size()));
                }
                w = ep.compute(Phase::kAggregate, detail::agg_cost(cfg, P, received.size()), [&] {
                    if (received.size() == 1 && cfg.self_include) return out.weights;
                    return cfg.size_weighted ? weighted_average(received, sizes) : fedavg(received);
                });
                res.aggregated[r][k - 1] = w;
            }
            reached[k] = R;
        };
    }

    detail::run_nodes(tasks);
    res.timelines = net.timelines();
    const std::uint32_t done = *std::min_element(reached.begin() + 1, reached.end());
    for (std::uint32_t r = 0; r < done; ++r) {
        RoundLog log;
        log.round = r;
        for (NodeId k = 1; k <= K; ++k) {
            log.participants.push_back(k);
            log.nodes.push_back(stats[k - 1][r]);
        }
        res.round_globals.push_back(fedavg(res.aggregated[r]));
        log.global_hash = weight_hash(res.round_globals.back());
        res.logs.push_back(std::move(log));
    }
    if (std::any_of(tasks.begin(), tasks.end(), [](const auto& t) { return static_cast<bool>(t.error); }))
        detail::rethrow_run_error(tasks, done, res.logs);
    res.global = res.round_globals.back();
    res.ledger = build_ledger(res.timelines, kServerId, false);
    detail::fill_node_times(res);
    for (const auto& c : counters) res.counters += c;
    return res;
}

// ---------------------------------------------------------------------------
// Request/response timing

enum class ResponseProfile { kEdge, kCloud };

inline constexpr NodeId kDeviceId = 1, kEdgeId = 2, kCloudId = 3;

// Link latencies for a request path whose round trip takes `rtt_s`: device and
// edge for the edge profile; device, edge and cloud for the cloud profile. The
// round trip is split over the hops in whole nanoseconds.
inline SimNetConfig response_links(ResponseProfile profile, double rtt_s) {
    const std::int64_t total = s_to_ns(rtt_s);
    std::vector<std::pair<NodeId, NodeId>> hops;
    if (profile == ResponseProfile::kEdge) hops = {{kDeviceId, kEdgeId}, {kEdgeId, kDeviceId}};
    else hops = {{kDeviceId, kEdgeId}, {kEdgeId, kCloudId}, {kCloudId, kEdgeId}, {kEdgeId, kDeviceId}};
    SimNetConfig cfg;
    const auto n = static_cast<std::int64_t>(hops.size());
    for (std::int64_t i = 0; i < n; ++i) {
        const std::int64_t leg = total / n + (i < total % n ? 1 : 0);
        cfg.set_link(hops[i].first, hops[i].second, LatencySpec::fixed(ns_to_s(leg)));
    }
    return cfg;
}

struct ResponseRecord {
    std::size_t request = 0;
    int prediction = 0;
    double probability = 0;
    std::int64_t t_req_ns = 0, t_res_ns = 0;

    double t_req() const { return ns_to_s(t_req_ns); }
    double t_res() const { return ns_to_s(t_res_ns); }
    double t_resp() const { return ns_to_s(t_res_ns - t_req_ns); }
};

// Sends each row from the device and times the prediction's return. The model
// lives on the edge node (edge profile) or behind it on the cloud node.
inline std::vector<ResponseRecord> respond(const ModelWeights& model, const std::vector<std::vector<double>>& rows,
                                           Network& net, ResponseProfile profile, const CostModel& cost = {},
                                           double timeout_s = 600.0) {
    if (rows.empty()) throw UsageError("respond needs at least one request row");
    const std::size_t F = rows[0].size();
    const GruClassifier clf = GruClassifier::from_weights(model, F);
    const NodeId host = profile == ResponseProfile::kEdge ? kEdgeId : kCloudId;
    const std::int64_t infer_ns = CostModel::ns(cost.ns_per_inference);
    std::vector<ResponseRecord> out(rows.size());

    auto to_tensor = [](const char* name, std::vector<double> v) {
        ModelWeights w;
        const std::size_t n = v.size();
        w.add(name, Tensor({n}, std::move(v)));
        return w;
    };

    std::vector<detail::NodeTask> tasks;
    tasks.push_back({net.open(kDeviceId), {}, {}});
    tasks.push_back({net.open(kEdgeId), {}, {}});
    if (profile == ResponseProfile::kCloud) tasks.push_back({net.open(kCloudId), {}, {}});

    tasks[0].body = [&](Endpoint& ep) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != F) throw SchemaError("request rows differ in length");
            out[i].request = i;
            out[i].t_req_ns = ep.now_ns();
            ep.send(kEdgeId, WireMessage::with_weights(MessageKind::kPredictRequest, static_cast<std::uint32_t>(i),
                                                       ep.id(), to_tensor("request", rows[i])));
            const auto result = detail::expect(ep, kEdgeId, MessageKind::kPredictResult, timeout_s).weights();
            out[i].t_res_ns = ep.now_ns();
            out[i].prediction = static_cast<int>(result[0].values()[0]);
            out[i].probability = result[0].values()[1];
        }
    };
    auto serve = [&](Endpoint& ep, NodeId client) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto req = detail::expect(ep, client, MessageKind::kPredictRequest, timeout_s);
            const ModelWeights request = req.weights();
            const auto row = request[0].values();
            const double p = ep.compute(Phase::kInference, infer_ns, [&] { return clf.forward(row); });
            ep.send(client, WireMessage::with_weights(MessageKind::kPredictResult, req.round, ep.id(),
                                                      to_tensor("result", {static_cast<double>(classify(p)), p})));
        }
    };
    if (host == kEdgeId) {
        tasks[1].body = [&](Endpoint& ep) { serve(ep, kDeviceId); };
    } else {
        tasks[1].body = [&](Endpoint& ep) {
            for (std::size_t i = 0; i < rows.size(); ++i) {
                auto req = detail::expect(ep, kDeviceId, MessageKind::kPredictRequest, timeout_s);
                req.sender = ep.id();
                ep.send(kCloudId, req);
                auto res = detail::expect(ep, kCloudId, MessageKind::kPredictResult, timeout_s);
                res.sender = ep.id();
                ep.send(kDeviceId, res);
            }
        };
        tasks[2].body = [&](Endpoint& ep) { serve(ep, kEdgeId); };
    }
    detail::run_nodes(tasks);
    for (auto& t : tasks)
        if (t.error) std::rethrow_exception(t.error);
    return out;
}

inline double mean_response_time(const std::vector<ResponseRecord>& records) {
    if (records.empty()) throw UsageError("no response records");
    std::int64_t total = 0;
    for (const auto& r : records) total += r.t_res_ns - r.t_req_ns;
    return static_cast<double>(total) / static_cast<double>(records.size()) / 1e9;
}

}  // namespace gfl
