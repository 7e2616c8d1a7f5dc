#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <string_view>

#include "gfl/accounting.hpp"
#include "gfl/data.hpp"
#include "gfl/error.hpp"
#include "gfl/fl.hpp"
#include "gfl/gan.hpp"
#include "gfl/random.hpp"

namespace gfl {

inline std::string to_string(PartitionStrategy s) {
    switch (s) {
        case PartitionStrategy::kLabelSkew: return "label-skew";
        case PartitionStrategy::kSizeSkew: return "size-skew";
        case PartitionStrategy::kIid: return "iid";
    }
    return "?";
}

inline PartitionStrategy parse_strategy(std::string_view s) {
    if (s == "label-skew") return PartitionStrategy::kLabelSkew;
    if (s == "size-skew") return PartitionStrategy::kSizeSkew;
    if (s == "iid") return PartitionStrategy::kIid;
    throw ConfigError("unknown partition strategy '" + std::string(s) + "'");
}

// "1:2,3;2:1;3:1" -> {1:[2,3], 2:[1], 3:[1]}
inline std::map<NodeId, std::vector<NodeId>> parse_topology(std::string_view text) {
    std::map<NodeId, std::vector<NodeId>> out;
    auto parse_id = [&](std::string_view s) {
        s = detail::trim(s);
        NodeId v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
            throw ConfigError("bad node id '" + std::string(s) + "' in topology");
        return v;
    };
    for (auto entry : detail::split(text, ';')) {
        if (detail::trim(entry).empty()) continue;
        const auto colon = entry.find(':');
        if (colon == std::string_view::npos) throw ConfigError("topology entry needs 'node:neighbours'");
        auto& list = out[parse_id(entry.substr(0, colon))];
        for (auto n : detail::split(entry.substr(colon + 1), ','))
            if (!detail::trim(n).empty()) list.push_back(parse_id(n));
    }
    return out;
}

struct RunConfig {
    std::uint64_t seed = 42;
    std::filesystem::path out = "out";
    std::string run_id;
    std::string backend = "sim";
    double latency_s = 0.0;  // FL runs: per link; respond: round trip
    std::uint16_t base_port = 0;
    PowerRates power;
    std::filesystem::path schema_path;  // empty: built-in heart schema
    GanConfig gan;
    std::size_t synth_count = 10000;
    FlConfig fl;
    PartitionPlan partition;
    std::size_t test_rows = 500;
    std::size_t global_rows = 400;
    // Evaluate each personalized model on its own resample of the test set.
    bool per_client_test = false;

    // Module seeds: derive_seed(master, module name).
    std::uint64_t module_seed(std::string_view module) const { return derive_seed(seed, module); }

    void apply_seeds() {
        gan.seed = module_seed("gan");
        fl.seed = module_seed("fl");
        partition.seed = module_seed("partition");
    }

    FeatureSchema schema() const { return schema_path.empty() ? heart_schema() : load_schema(schema_path); }

    void set(const std::string& key, const std::string& value) {
        const auto& table = setters();
        auto it = table.find(key);
        if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
        try {
            it->second(*this, value);
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError("config key '" + key + "': " + e.what());
        }
    }

    // Flat `key = value` lines; '#' starts a comment.
    void load_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file " + path.string());
        std::string line;
        for (std::size_t n = 1; std::getline(in, line); ++n) {
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            const std::string_view body = detail::trim(line);
            if (body.empty()) continue;
            const auto eq = body.find('=');
            if (eq == std::string_view::npos)
                throw ConfigError(path.string() + ":" + std::to_string(n) + ": expected key = value");
            set(std::string(detail::trim(body.substr(0, eq))), std::string(detail::trim(body.substr(eq + 1))));
        }
    }

    void validate() const {
        if (backend != "sim" && backend != "tcp") throw ConfigError("backend must be sim or tcp");
        if (!(latency_s >= 0)) throw ConfigError("latency must be >= 0");
        power.validate();
        gan.validate();
        if (synth_count < 1) throw ConfigError("synth count must be >= 1");
    }

    static std::vector<std::string> keys() {
        std::vector<std::string> out;
        for (const auto& [k, v] : setters()) out.push_back(k);
        return out;
    }

private:
    using Setter = std::function<void(RunConfig&, const std::string&)>;

    template <typename T>
    static T number(const std::string& s) {
        T v{};
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
            throw ConfigError("'" + s + "' is not a valid number");
        return v;
    }

    static bool boolean(const std::string& s) {
        if (s == "true" || s == "1" || s == "yes") return true;
        if (s == "false" || s == "0" || s == "no") return false;
        throw ConfigError("'" + s + "' is not a boolean");
    }

    static const std::map<std::string, Setter>& setters() {
        static const std::map<std::string, Setter> table = {
            {"seed", [](RunConfig& c, const std::string& v) { c.seed = number<std::uint64_t>(v); }},
            {"out", [](RunConfig& c, const std::string& v) { c.out = v; }},
            {"run_id", [](RunConfig& c, const std::string& v) { c.run_id = v; }},
            {"backend", [](RunConfig& c, const std::string& v) { c.backend = v; }},
            {"latency", [](RunConfig& c, const std::string& v) { c.latency_s = number<double>(v); }},
            {"base_port", [](RunConfig& c, const std::string& v) { c.base_port = number<std::uint16_t>(v); }},
            {"e_edge", [](RunConfig& c, const std::string& v) { c.power.e_edge = number<double>(v); }},
            {"e_cloud", [](RunConfig& c, const std::string& v) { c.power.e_cloud = number<double>(v); }},
            {"schema", [](RunConfig& c, const std::string& v) { c.schema_path = v; }},
            {"gan.latent_dim", [](RunConfig& c, const std::string& v) { c.gan.latent_dim = number<std::size_t>(v); }},
            {"gan.epochs", [](RunConfig& c, const std::string& v) { c.gan.epochs = number<std::size_t>(v); }},
            {"gan.batch_size", [](RunConfig& c, const std::string& v) { c.gan.batch_size = number<std::size_t>(v); }},
            {"gan.learning_rate", [](RunConfig& c, const std::string& v) { c.gan.learning_rate = number<double>(v); }},
            {"gan.restarts", [](RunConfig& c, const std::string& v) { c.gan.restarts = number<std::size_t>(v); }},
            {"gan.count", [](RunConfig& c, const std::string& v) { c.synth_count = number<std::size_t>(v); }},
            {"fl.clients",
             [](RunConfig& c, const std::string& v) { c.partition.clients = c.fl.clients = number<std::size_t>(v); }},
            {"fl.rounds", [](RunConfig& c, const std::string& v) { c.fl.rounds = number<std::size_t>(v); }},
            {"fl.epochs", [](RunConfig& c, const std::string& v) { c.fl.epochs = number<std::size_t>(v); }},
            {"fl.learning_rate", [](RunConfig& c, const std::string& v) { c.fl.learning_rate = number<double>(v); }},
            {"fl.batch_size", [](RunConfig& c, const std::string& v) { c.fl.batch_size = number<std::size_t>(v); }},
            {"fl.participation", [](RunConfig& c, const std::string& v) { c.fl.participation = number<double>(v); }},
            {"fl.hidden", [](RunConfig& c, const std::string& v) { c.fl.hidden = number<std::size_t>(v); }},
            {"fl.self_include", [](RunConfig& c, const std::string& v) { c.fl.self_include = boolean(v); }},
            {"fl.size_weighted", [](RunConfig& c, const std::string& v) { c.fl.size_weighted = boolean(v); }},
            {"fl.topology", [](RunConfig& c, const std::string& v) { c.fl.topology = parse_topology(v); }},
            {"fl.timeout", [](RunConfig& c, const std::string& v) { c.fl.timeout_s = number<double>(v); }},
            {"cost.ns_per_param_sample",
             [](RunConfig& c, const std::string& v) { c.fl.cost.ns_per_param_sample = number<double>(v); }},
            {"cost.ns_per_agg_element",
             [](RunConfig& c, const std::string& v) { c.fl.cost.ns_per_agg_element = number<double>(v); }},
            {"cost.ns_per_init_param",
             [](RunConfig& c, const std::string& v) { c.fl.cost.ns_per_init_param = number<double>(v); }},
            {"cost.ns_per_inference",
             [](RunConfig& c, const std::string& v) { c.fl.cost.ns_per_inference = number<double>(v); }},
            {"partition.strategy",
             [](RunConfig& c, const std::string& v) { c.partition.strategy = parse_strategy(v); }},
            {"partition.alpha", [](RunConfig& c, const std::string& v) { c.partition.dirichlet_alpha = number<double>(v); }},
            {"holdout.test", [](RunConfig& c, const std::string& v) { c.test_rows = number<std::size_t>(v); }},
            {"holdout.per_client", [](RunConfig& c, const std::string& v) { c.per_client_test = boolean(v); }},
            {"holdout.global", [](RunConfig& c, const std::string& v) { c.global_rows = number<std::size_t>(v); }},
        };
        return table;
    }
};

}  // namespace gfl
