#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "gfl/config.hpp"
#include "gfl/fl.hpp"
#include "gfl/gan.hpp"
#include "gfl/metrics.hpp"

namespace fs = std::filesystem;
using namespace gfl;

namespace {

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out, backend, run_id;
    std::optional<double> latency, e_edge, e_cloud;
    std::vector<std::string> sets;  // --set key=value
};

struct Run {
    RunConfig cfg;
    fs::path root;

    fs::path dir(const char* sub) const {
        fs::path p = root / sub;
        fs::create_directories(p);
        return p;
    }
};

std::string default_run_id(std::uint64_t seed) {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y%m%d-%H%M%S") << "-s" << seed;
    return s.str();
}

Run make_run(const Globals& g) {
    Run run;
    auto& c = run.cfg;
    if (!g.config_path.empty()) c.load_file(g.config_path);
    for (const auto& kv : g.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        c.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (g.seed) c.seed = *g.seed;
    if (g.out) c.out = *g.out;
    if (g.backend) c.backend = *g.backend;
    if (g.run_id) c.run_id = *g.run_id;
    if (g.latency) c.latency_s = *g.latency;
    if (g.e_edge) c.power.e_edge = *g.e_edge;
    if (g.e_cloud) c.power.e_cloud = *g.e_cloud;
    c.validate();
    c.apply_seeds();
    if (c.run_id.empty()) c.run_id = default_run_id(c.seed);
    run.root = c.out / c.run_id;
    return run;
}

void require_file(const fs::path& p, const char* what) {
    if (p.empty()) throw UsageError(std::string(what) + " is required");
    if (!fs::is_regular_file(p)) throw IoError(std::string(what) + " not found: " + p.string());
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot write " + p.string());
    return f;
}

std::unique_ptr<Network> make_network(const RunConfig& c) {
    if (c.backend == "tcp") {
        TcpConfig t;
        t.base_port = c.base_port;
        return std::make_unique<TcpNetwork>(t);
    }
    SimNetConfig s;
    s.latency = LatencySpec::fixed(c.latency_s);
    s.seed = c.module_seed("network");
    return std::make_unique<SimNetwork>(s);
}

std::vector<TabularDataset> load_shards(const fs::path& dir, const FeatureSchema& schema, std::size_t K) {
    std::vector<TabularDataset> out;
    for (std::size_t k = 1; k <= K; ++k) {
        const fs::path p = dir / ("shard_" + std::to_string(k) + ".csv");
        require_file(p, "shard");
        out.push_back(load_csv(p, schema));
    }
    return out;
}

void write_shards(const fs::path& dir, const std::vector<TabularDataset>& shards) {
    for (std::size_t k = 0; k < shards.size(); ++k) save_csv(dir / ("shard_" + std::to_string(k + 1) + ".csv"), shards[k]);
}

void write_counters(std::ostream& out, const ComplexityCounters& m, const ComplexityCounters& p) {
    out << "counter,measured,predicted\n"
        << "gan_ops," << m.gan_ops << ',' << p.gan_ops << '\n'
        << "local_train_ops," << m.local_train_ops << ',' << p.local_train_ops << '\n'
        << "transmit_units," << m.transmit_units << ',' << p.transmit_units << '\n'
        << "aggregate_ops," << m.aggregate_ops << ',' << p.aggregate_ops << '\n'
        << "setup_transmit_units," << m.setup_transmit_units << ",\n";
}

void write_time_csv(std::ostream& out, const TimeLedger& L) {
    out << "t_in_s,t_loc_s,t_exc_s,t_agg_s,t_fl_s\n"
        << format_double(L.t_in) << ',' << format_double(L.critical.loc) << ',' << format_double(L.critical.exc) << ','
        << format_double(L.critical.agg) << ',' << format_double(total_fl_time(L)) << '\n';
}

// ---------------------------------------------------------------------------

struct SynthOutput {
    TabularDataset synthetic;
    double fidelity;
    std::uint64_t gan_ops;
};

SynthOutput synthesize(const Run& run, const TabularDataset& real, std::size_t count) {
    const auto& c = run.cfg;
    auto trained = train_gan_best(real, c.gan, [&](const GanState& st) { return synthetic_fit_score(st, real, c.fl); });
    Rng rng(c.module_seed("generate"));
    auto synth = generate(trained.state, count, real.schema(), rng);
    const fs::path data = run.dir("data"), reports = run.dir("reports");
    save_csv(data / "synthetic.csv", synth);
    {
        auto f = open_out(reports / "summary_real.csv");
        write_summary_csv(f, summarize(real));
    }
    {
        auto f = open_out(reports / "summary_synthetic.csv");
        write_summary_csv(f, summarize(synth));
    }
    const auto fid = fidelity_report(real, synth, 20);
    {
        auto f = open_out(reports / "fidelity.csv");
        f << "column,intersection\n";
        for (const auto& col : fid) f << col.name << ',' << format_double(col.score) << '\n';
        f << "mean," << format_double(mean_fidelity(fid)) << '\n';
    }
    {
        auto f = open_out(reports / "gan_trace.csv");
        f << "epoch,batch,loss_d,loss_g\n";
        for (const auto& t : trained.trace)
            f << t.epoch << ',' << t.batch << ',' << format_double(t.loss_d) << ',' << format_double(t.loss_g) << '\n';
    }
    if (!trained.scores.empty()) {
        auto f = open_out(reports / "gan_restarts.csv");
        f << "restart,fit_score,selected\n";
        for (std::size_t i = 0; i < trained.scores.size(); ++i)
            f << i << ',' << format_double(trained.scores[i]) << ',' << (i == trained.restart ? 1 : 0) << '\n';
    }
    return {std::move(synth), mean_fidelity(fid), trained.ops};
}

int cmd_synth(const Globals& g, const std::string& real_path, std::optional<std::size_t> count) {
    Run run = make_run(g);
    require_file(real_path, "real CSV");
    const auto schema = run.cfg.schema();
    const auto real = load_csv(real_path, schema);
    const auto out = synthesize(run, real, count.value_or(run.cfg.synth_count));
    std::cout << "synthetic rows: " << out.synthetic.size() << " (label 1: " << out.synthetic.count_label(1)
              << ")\nmean histogram intersection: " << format_double(out.fidelity) << "\noutput: " << run.root.string()
              << '\n';
    return 0;
}

int cmd_partition(const Globals& g, const std::string& input) {
    Run run = make_run(g);
    require_file(input, "input CSV");
    const auto ds = load_csv(input, run.cfg.schema());
    const auto shards = partition(ds, run.cfg.partition);
    const fs::path dir = run.dir("data");
    write_shards(dir, shards);
    auto f = open_out(run.dir("reports") / "partition.csv");
    f << "client,rows,label0,label1\n";
    for (std::size_t k = 0; k < shards.size(); ++k)
        f << k + 1 << ',' << shards[k].size() << ',' << shards[k].count_label(0) << ',' << shards[k].count_label(1)
          << '\n';
    std::cout << "wrote " << shards.size() << " shards (" << to_string(run.cfg.partition.strategy) << ") to "
              << dir.string() << '\n';
    return 0;
}

struct FlInputs {
    std::string shards_dir, data, test, global;
};

FlRunResult run_protocol(Run& run, Protocol protocol, const FlInputs& in, const char* tag) {
    auto& c = run.cfg;
    const auto schema = c.schema();
    std::vector<TabularDataset> raw;
    if (!in.shards_dir.empty()) {
        raw = load_shards(in.shards_dir, schema, c.fl.clients);
    } else {
        require_file(in.data, "--data or --shards");
        c.partition.clients = c.fl.clients;
        raw = partition(load_csv(in.data, schema), c.partition);
        write_shards(run.dir("data"), raw);
    }
    const Scaler scaler(schema);
    std::vector<TabularDataset> shards;
    for (const auto& s : raw) shards.push_back(scaler.apply(s));
    std::optional<TabularDataset> test, global;
    if (!in.test.empty()) {
        require_file(in.test, "test CSV");
        test = scaler.apply(load_csv(in.test, schema));
    }
    if (!in.global.empty()) {
        require_file(in.global, "global CSV");
        global = scaler.apply(load_csv(in.global, schema));
    }

    auto net = make_network(c);
    FlRunResult res = protocol == Protocol::kCentralized ? run_cfl(c.fl, shards, *net, global ? &*global : nullptr)
                                                         : run_dfl(c.fl, shards, *net);

    const fs::path ck = run.dir("checkpoints"), logs = run.dir("logs"), reports = run.dir("reports");
    save_checkpoint(ck / (std::string(tag) + "_global.gflw"), res.global);
    for (std::size_t k = 0; k < res.personalized.size(); ++k)
        save_checkpoint(ck / (std::string(tag) + "_client_" + std::to_string(k + 1) + ".gflw"), res.personalized[k]);
    {
        auto f = open_out(logs / (std::string(tag) + "_rounds.csv"));
        write_round_log_csv(f, res.logs);
    }
    {
        auto f = open_out(logs / (std::string(tag) + "_loss_curve.csv"));
        write_loss_curve_csv(f, loss_curve(res.logs));
    }
    {
        auto f = open_out(reports / (std::string(tag) + "_metrics.csv"));
        write_metrics_header(f);
        for (std::size_t k = 0; k < shards.size(); ++k) {
            const std::string name = "client_" + std::to_string(k + 1);
            write_metrics_row(f, name, "train", evaluate(res.personalized[k], shards[k]));
            if (test) write_metrics_row(f, name, "test", evaluate(res.personalized[k], *test));
        }
        if (test) write_metrics_row(f, "global", "test", evaluate(res.global, *test));
        if (global) write_metrics_row(f, "global", "global", evaluate(res.global, *global));
    }
    const EnergyReport energy =
        protocol == Protocol::kCentralized ? energy_cfl(res.ledger, c.power) : energy_dfl(res.ledger, c.power);
    {
        auto f = open_out(reports / (std::string(tag) + "_energy.csv"));
        write_energy_csv(f, energy, total_fl_time(res.ledger));
    }
    {
        auto f = open_out(reports / (std::string(tag) + "_time.csv"));
        write_time_csv(f, res.ledger);
    }
    {
        ComplexityInputs ci;
        ci.protocol = protocol;
        ci.model_params = res.global.parameter_count();
        ci.rounds = c.fl.rounds;
        ci.epochs = c.fl.epochs;
        for (const auto& s : shards) ci.batches.push_back((s.size() + c.fl.batch_size - 1) / c.fl.batch_size);
        ci.participants = c.fl.participants();
        for (NodeId k = 1; k <= c.fl.clients; ++k) ci.neighbors.push_back(c.fl.neighbors(k).size());
        auto f = open_out(reports / (std::string(tag) + "_complexity.csv"));
        write_counters(f, res.counters, predict_complexity(ci));
    }
    std::cout << tag << ": " << res.logs.size() << " rounds, global " << weight_hash(res.global) << ", T_FL "
              << format_double(total_fl_time(res.ledger)) << " s, energy " << format_double(energy.total()) << " J";
    if (test) std::cout << ", test accuracy " << format_double(metrics_from(evaluate(res.global, *test)).accuracy);
    std::cout << "\noutput: " << run.root.string() << '\n';
    return res;
}

int cmd_fl(const Globals& g, Protocol protocol, const FlInputs& in) {
    Run run = make_run(g);
    run_protocol(run, protocol, in, protocol == Protocol::kCentralized ? "cfl" : "dfl");
    return 0;
}

int cmd_eval(const Globals& g, const std::vector<std::string>& models, const std::string& test_path,
             const std::string& baseline_path) {
    Run run = make_run(g);
    require_file(test_path, "test CSV");
    if (models.empty() && baseline_path.empty()) throw UsageError("eval needs --model or --baseline");
    const auto schema = run.cfg.schema();
    const Scaler scaler(schema);
    const auto test = scaler.apply(load_csv(test_path, schema));
    auto f = open_out(run.dir("reports") / "eval_metrics.csv");
    write_metrics_header(f);
    for (const auto& m : models) {
        require_file(m, "model checkpoint");
        const auto cm = evaluate(load_checkpoint(m), test);
        write_metrics_row(f, fs::path(m).stem().string(), fs::path(test_path).stem().string(), cm);
        std::cout << fs::path(m).stem().string() << ": accuracy " << format_double(metrics_from(cm).accuracy) << " (tp "
                  << cm.tp << ", fp " << cm.fp << ", fn " << cm.fn << ", tn " << cm.tn << ")\n";
    }
    if (!baseline_path.empty()) {
        require_file(baseline_path, "baseline training CSV");
        const auto train = scaler.apply(load_csv(baseline_path, schema));
        // Pooled, non-federated GRU with the same total epoch budget as the FL run.
        Rng rng(run.cfg.module_seed("baseline"));
        const auto out = local_train(initial_model(run.cfg.fl, schema.feature_count()), train,
                                     run.cfg.fl.epochs * run.cfg.fl.rounds, run.cfg.fl.batch_size,
                                     run.cfg.fl.learning_rate, rng);
        save_checkpoint(run.dir("checkpoints") / "baseline.gflw", out.weights);
        const auto cm = evaluate(out.weights, test);
        write_metrics_row(f, "baseline", fs::path(test_path).stem().string(), cm);
        std::cout << "baseline: accuracy " << format_double(metrics_from(cm).accuracy) << '\n';
    }
    return 0;
}

int cmd_respond(const Globals& g, const std::string& model_path, const std::string& requests,
                const std::string& profile_name, std::optional<std::size_t> limit) {
    Run run = make_run(g);
    require_file(model_path, "model checkpoint");
    require_file(requests, "requests CSV");
    ResponseProfile profile;
    if (profile_name == "edge") profile = ResponseProfile::kEdge;
    else if (profile_name == "cloud") profile = ResponseProfile::kCloud;
    else throw UsageError("profile must be edge or cloud");
    const auto schema = run.cfg.schema();
    const Scaler scaler(schema);
    const auto ds = scaler.apply(load_csv(requests, schema));
    if (ds.empty()) throw UsageError("requests CSV has no rows");
    std::vector<std::vector<double>> rows(ds.features().begin(),
                                          ds.features().begin() + static_cast<std::ptrdiff_t>(std::min(
                                                                      ds.size(), limit.value_or(ds.size()))));
    const auto model = load_checkpoint(model_path);
    std::unique_ptr<Network> net;
    if (run.cfg.backend == "tcp") net = std::make_unique<TcpNetwork>();
    else net = std::make_unique<SimNetwork>(response_links(profile, run.cfg.latency_s));
    const auto records = respond(model, rows, *net, profile, run.cfg.fl.cost, run.cfg.fl.timeout_s);
    auto f = open_out(run.dir("reports") / ("responses_" + profile_name + ".csv"));
    f << "request,prediction,probability,t_req_s,t_res_s,t_resp_s\n";
    for (const auto& r : records)
        f << r.request << ',' << r.prediction << ',' << format_double(r.probability) << ',' << format_double(r.t_req())
          << ',' << format_double(r.t_res()) << ',' << format_double(r.t_resp()) << '\n';
    std::cout << profile_name << ": " << records.size() << " requests, mean T_resp "
              << format_double(mean_response_time(records)) << " s\n";
    return 0;
}

// Real data -> holdouts -> GAN -> synthetic split -> CFL and DFL -> evaluation,
// pooled baseline, energy and response-time comparison.
int cmd_report(const Globals& g, const std::string& real_path, double edge_rtt, double cloud_rtt) {
    Run run = make_run(g);
    auto& c = run.cfg;
    require_file(real_path, "real CSV");
    const auto schema = c.schema();
    const auto real = load_csv(real_path, schema);
    auto split = holdout_split(real, c.test_rows, c.module_seed("holdout.test"));
    const auto global_raw = holdout_select(split.rest, std::min(c.global_rows, split.rest.size()),
                                           c.module_seed("holdout.global"));
    const fs::path data = run.dir("data");
    save_csv(data / "test.csv", split.selected);
    save_csv(data / "global.csv", global_raw);
    save_csv(data / "train_real.csv", split.rest);

    const auto syn = synthesize(run, split.rest, c.synth_count);
    const auto shards = partition(syn.synthetic, c.partition);
    write_shards(data, shards);

    FlInputs in{data.string(), "", (data / "test.csv").string(), (data / "global.csv").string()};
    const auto cfl = run_protocol(run, Protocol::kCentralized, in, "cfl");
    const auto dfl = run_protocol(run, Protocol::kDecentralized, in, "dfl");

    const Scaler scaler(schema);
    const auto test = scaler.apply(split.selected);
    Rng rng(c.module_seed("baseline"));
    const auto base = local_train(initial_model(c.fl, schema.feature_count()), scaler.apply(split.rest),
                                  c.fl.epochs * c.fl.rounds, c.fl.batch_size, c.fl.learning_rate, rng);
    save_checkpoint(run.dir("checkpoints") / "baseline.gflw", base.weights);

    std::vector<std::vector<double>> requests(test.features().begin(), test.features().begin() + std::min<std::ptrdiff_t>(50, static_cast<std::ptrdiff_t>(test.size())));
    SimNetwork edge_net(response_links(ResponseProfile::kEdge, edge_rtt));
    SimNetwork cloud_net(response_links(ResponseProfile::kCloud, cloud_rtt));
    const double t_edge = mean_response_time(respond(cfl.global, requests, edge_net, ResponseProfile::kEdge, c.fl.cost));
    const double t_cloud =
        mean_response_time(respond(cfl.global, requests, cloud_net, ResponseProfile::kCloud, c.fl.cost));

    auto pc = [](double v) { return format_double(std::round(v * 10000) / 100); };
    const auto m_cfl = metrics_from(evaluate(cfl.global, test));
    const auto m_dfl = metrics_from(evaluate(dfl.global, test));
    const auto m_base = metrics_from(evaluate(base.weights, test));
    std::vector<ConfusionMatrix> personal;
    for (std::size_t k = 0; k < cfl.personalized.size(); ++k)
        personal.push_back(evaluate(cfl.personalized[k],
                                    c.per_client_test ? resample(test, test.size(), derive_seed(c.module_seed("holdout.test"), "client", k + 1))
                                                      : test));

    auto f = open_out(run.dir("reports") / "report.md");
    f << "# Run " << c.run_id << "\n\n"
      << "seed " << c.seed << ", backend " << c.backend << ", K=" << c.fl.clients << ", R=" << c.fl.rounds
      << ", epochs/round=" << c.fl.epochs << "\n\n"
      << "## Data\n\n"
      << "real rows " << real.size() << " (test " << split.selected.size() << ", global " << global_raw.size()
      << ", GAN training " << split.rest.size() << ")\n"
      << "synthetic rows " << syn.synthetic.size() << ", label 1 share "
      << pc(static_cast<double>(syn.synthetic.count_label(1)) / static_cast<double>(syn.synthetic.size()))
      << "%, mean histogram intersection " << format_double(syn.fidelity) << "\n\n"
      << "## Accuracy on the test set\n\n"
      << "| model | accuracy | precision | recall | F-score |\n|---|---|---|---|---|\n";
    auto row = [&](const char* name, const MetricBundle& m) {
        f << "| " << name << " | " << format_double(m.accuracy) << " | " << format_metric(m.precision) << " | "
          << format_metric(m.recall) << " | " << format_metric(m.f_score) << " |\n";
    };
    row("CFL global", m_cfl);
    row("DFL global", m_dfl);
    row("pooled baseline (real data, no FL)", m_base);
    f << "\nmacro accuracy of personalized CFL models" << (c.per_client_test ? " (per-client test resamples)" : "")
      << ": " << format_double(macro_accuracy(personal)) << "\n\n"
      << "## Time and energy\n\n| protocol | T_FL (s) | E (J) |\n|---|---|---|\n"
      << "| CFL | " << format_double(total_fl_time(cfl.ledger)) << " | "
      << format_double(energy_cfl(cfl.ledger, c.power).total()) << " |\n"
      << "| DFL | " << format_double(total_fl_time(dfl.ledger)) << " | "
      << format_double(energy_dfl(dfl.ledger, c.power).total()) << " |\n\n"
      << "## Response time\n\nedge " << format_double(t_edge) << " s, cloud-only " << format_double(t_cloud)
      << " s, reduction " << pc(1.0 - t_edge / t_cloud) << "%\n";
    std::cout << "report: " << (run.root / "reports" / "report.md").string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generative federated learning toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "key = value configuration file");
    app.add_option("--seed", g.seed, "master seed");
    app.add_option("--out", g.out, "output root directory");
    app.add_option("--run-id", g.run_id, "run directory name under the output root");
    app.add_option("--backend", g.backend, "transport backend")->check(CLI::IsMember({"sim", "tcp"}));
    app.add_option("--latency", g.latency, "link latency in seconds (round trip for respond)");
    app.add_option("--e-edge", g.e_edge, "edge power in W");
    app.add_option("--e-cloud", g.e_cloud, "cloud power in W");
    app.add_option("--set", g.sets, "override a config key (key=value)");

    std::string real, input, model, requests, profile = "edge", test, baseline;
    std::vector<std::string> models;
    std::optional<std::size_t> count, limit;
    FlInputs cfl_in, dfl_in;
    double edge_rtt = 0.67, cloud_rtt = 2.5;

    auto* synth = app.add_subcommand("synth", "train the GAN and write a synthetic dataset");
    synth->add_option("--real", real, "real data CSV")->required();
    synth->add_option("--count", count, "rows to generate");

    auto* part = app.add_subcommand("partition", "split a dataset across clients");
    part->add_option("--input", input, "dataset CSV")->required();

    auto add_fl = [](CLI::App* sc, FlInputs& in) {
        sc->add_option("--shards", in.shards_dir, "directory holding shard_1.csv..shard_K.csv");
        sc->add_option("--data", in.data, "dataset to partition inline");
        sc->add_option("--test", in.test, "test CSV for metrics");
        sc->add_option("--global", in.global, "server-side global holdout CSV");
    };
    auto* cfl = app.add_subcommand("cfl", "run centralised federated learning");
    add_fl(cfl, cfl_in);
    auto* dfl = app.add_subcommand("dfl", "run decentralised federated learning");
    add_fl(dfl, dfl_in);

    auto* eval = app.add_subcommand("eval", "evaluate checkpoints or a pooled baseline");
    eval->add_option("--model", models, "checkpoint (.gflw); repeatable");
    eval->add_option("--test", test, "test CSV")->required();
    eval->add_option("--baseline", baseline, "train a pooled non-FL GRU on this CSV and evaluate it");

    auto* resp = app.add_subcommand("respond", "measure request/response times");
    resp->add_option("--model", model, "checkpoint (.gflw)")->required();
    resp->add_option("--requests", requests, "request rows CSV")->required();
    resp->add_option("--profile", profile, "edge or cloud");
    resp->add_option("--limit", limit, "use only the first N rows");

    auto* report = app.add_subcommand("report", "run the full experiment recipe");
    report->add_option("--real", real, "real data CSV")->required();
    report->add_option("--edge-rtt", edge_rtt, "edge profile round trip in seconds");
    report->add_option("--cloud-rtt", cloud_rtt, "cloud profile round trip in seconds");

    std::string stage = "gfl";
    try {
        app.parse(argc, argv);
        stage = app.get_subcommands().front()->get_name();
        if (synth->parsed()) return cmd_synth(g, real, count);
        if (part->parsed()) return cmd_partition(g, input);
        if (cfl->parsed()) return cmd_fl(g, Protocol::kCentralized, cfl_in);
        if (dfl->parsed()) return cmd_fl(g, Protocol::kDecentralized, dfl_in);
        if (eval->parsed()) return cmd_eval(g, models, test, baseline);
        if (resp->parsed()) return cmd_respond(g, model, requests, profile, limit);
        if (report->parsed()) return cmd_report(g, real, edge_rtt, cloud_rtt);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const ValidationError& e) {
        std::cerr << "gfl " << stage << ": error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "gfl " << stage << ": runtime error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
