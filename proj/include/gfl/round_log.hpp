#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gfl/data.hpp"
#include "gfl/error.hpp"

namespace gfl {

struct NodeRoundStats {
    std::uint32_t node = 0;
    std::vector<double> loss_curve;  // one mean training loss per epoch
    std::size_t batches = 0;         // beta = ceil(|D_k| / B)
    double t_loc = 0, t_exc = 0, t_agg = 0;
};

struct RoundLog {
    std::uint32_t round = 0;
    std::vector<std::uint32_t> participants;
    std::vector<NodeRoundStats> nodes;  // participants only
    double t_agg = 0;                   // server aggregation (centralised runs)
    std::string global_hash;
    std::optional<double> global_accuracy;  // on the server's global set, when one is given
};

// round,node,loss,T_loc,T_exc,T_agg,weight_hash; one line per (round, node),
// `loss` being the node's last-epoch loss.
inline void write_round_log_csv(std::ostream& out, const std::vector<RoundLog>& logs) {
    out << "round,node,loss,t_loc_s,t_exc_s,t_agg_s,weight_hash\n";
    for (const auto& log : logs)
        for (const auto& n : log.nodes)
            out << log.round << ',' << n.node << ','
                << (n.loss_curve.empty() ? std::string("") : format_double(n.loss_curve.back())) << ','
                << format_double(n.t_loc) << ',' << format_double(n.t_exc) << ','
                << format_double(n.t_agg + log.t_agg) << ',' << log.global_hash << '\n';
}

}  // namespace gfl
