#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gfl/data.hpp"
#include "gfl/error.hpp"
#include "gfl/round_log.hpp"

namespace gfl {

// Positive class is label 1.
struct ConfusionMatrix {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

    std::size_t total() const noexcept { return tp + fp + fn + tn; }

    void add(int truth, int predicted) noexcept {
        if (truth == 1) (predicted == 1 ? tp : fn) += 1;
        else (predicted == 1 ? fp : tn) += 1;
    }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// Ratios with a zero denominator are nullopt rather than 0.
struct MetricBundle {
    double accuracy = 0;
    std::optional<double> precision, recall, f_score;
};

inline MetricBundle metrics_from(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw UsageError("metrics need a non-empty confusion matrix");
    auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    MetricBundle m;
    m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    m.precision = ratio(cm.tp, cm.tp + cm.fp);
    m.recall = ratio(cm.tp, cm.tp + cm.fn);
    if (m.precision && m.recall && (*m.precision + *m.recall) > 0)
        m.f_score = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
    return m;
}

inline std::string format_metric(const std::optional<double>& v) { return v ? format_double(*v) : "undefined"; }

inline void write_metrics_header(std::ostream& out) {
    out << "model,dataset,tp,fp,fn,tn,accuracy,precision,recall,f_score\n";
}

inline void write_metrics_row(std::ostream& out, const std::string& model, const std::string& dataset,
                              const ConfusionMatrix& cm) {
    const auto m = metrics_from(cm);
    out << model << ',' << dataset << ',' << cm.tp << ',' << cm.fp << ',' << cm.fn << ',' << cm.tn << ','
        << format_double(m.accuracy) << ',' << format_metric(m.precision) << ',' << format_metric(m.recall) << ','
        << format_metric(m.f_score) << '\n';
}

// Unweighted mean of per-client accuracies.
inline double macro_accuracy(const std::vector<ConfusionMatrix>& per_client) {
    if (per_client.empty()) throw UsageError("macro average over zero clients");
    double s = 0;
    for (const auto& cm : per_client) s += metrics_from(cm).accuracy;
    return s / static_cast<double>(per_client.size());
}

// Mean last-epoch training loss over the nodes recorded in each round.
inline std::vector<double> loss_curve(const std::vector<RoundLog>& logs) {
    if (logs.empty()) throw UsageError("loss_curve needs at least one round log");
    std::vector<double> out;
    for (const auto& log : logs) {
        double s = 0;
        std::size_t n = 0;
        for (const auto& node : log.nodes)
            if (!node.loss_curve.empty()) {
                s += node.loss_curve.back();
                ++n;
            }
        out.push_back(n ? s / static_cast<double>(n) : 0.0);
    }
    return out;
}

inline void write_loss_curve_csv(std::ostream& out, const std::vector<double>& curve) {
    out << "round,loss\n";
    for (std::size_t r = 0; r < curve.size(); ++r) out << r << ',' << format_double(curve[r]) << '\n';
}

}  // namespace gfl
