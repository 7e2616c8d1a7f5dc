#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gfl/error.hpp"
#include "gfl/random.hpp"

namespace gfl {

class HeaderError : public SchemaError {
public:
    using SchemaError::SchemaError;
};

class CellParseError : public SchemaError {
public:
    using SchemaError::SchemaError;
};

class RangeError : public SchemaError {
public:
    using SchemaError::SchemaError;
};

enum class ColumnKind { kContinuous, kInteger };

struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::kContinuous;
    double min = 0.0;
    double max = 1.0;

    friend bool operator==(const Column&, const Column&) = default;
};

struct FeatureSchema {
    std::vector<Column> columns;
    std::string target = "target";

    std::size_t feature_count() const noexcept { return columns.size(); }

    std::optional<std::size_t> index_of(std::string_view name) const noexcept {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i].name == name) return i;
        return std::nullopt;
    }

    std::vector<std::string> header() const {
        std::vector<std::string> h;
        for (const auto& c : columns) h.push_back(c.name);
        h.push_back(target);
        return h;
    }

    void validate() const {
        if (columns.empty()) throw SchemaError("schema has no feature columns");
        if (target.empty()) throw SchemaError("schema has no target column");
        for (std::size_t i = 0; i < columns.size(); ++i) {
            const auto& c = columns[i];
            if (c.name.empty()) throw SchemaError("schema column " + std::to_string(i) + " has no name");
            if (c.name == target) throw SchemaError("column '" + c.name + "' collides with the target");
            for (std::size_t j = 0; j < i; ++j)
                if (columns[j].name == c.name) throw SchemaError("duplicate schema column '" + c.name + "'");
            if (!(c.min <= c.max) || (c.kind == ColumnKind::kContinuous && !(c.min < c.max)))
                throw SchemaError("column '" + c.name + "' has a degenerate range");
        }
    }

    friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;
};

// Heart-disease feature set in the column order of the public CSV, with legal
// ranges taken from the statistical summary of the generated data.
inline FeatureSchema heart_schema() {
    using K = ColumnKind;
    return FeatureSchema{{{"age", K::kContinuous, 32, 76},
                          {"sex", K::kInteger, 0, 1},
                          {"cp", K::kInteger, 0, 3},
                          {"trestbps", K::kContinuous, 98, 200},
                          {"chol", K::kContinuous, 126, 409},
                          {"fbs", K::kInteger, 0, 1},
                          {"restecg", K::kInteger, 0, 2},
                          {"thalach", K::kContinuous, 81, 199},
                          {"exang", K::kInteger, 0, 1},
                          {"oldpeak", K::kContinuous, 0, 4.4},
                          {"slope", K::kInteger, 0, 2},
                          {"ca", K::kInteger, 0, 4},
                          {"thal", K::kInteger, 0, 3}},
                         "target"};
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) { return split(line, ','); }

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) return std::nullopt;
    return v;
}

}  // namespace detail

// Shortest decimal text that parses back to exactly `v`.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

// Reads a column specification file: header "column,kind,min,max" followed by
// one line per feature (kind "continuous" or "integer") and exactly one line of
// kind "target".
inline FeatureSchema load_schema(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open schema file " + path.string());
    FeatureSchema schema;
    schema.target.clear();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (line_no == 1) continue;
        if (cells.size() != 4) throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": expected 4 cells");
        const std::string name(detail::trim(cells[0]));
        const auto kind = detail::trim(cells[1]);
        if (kind == "target") {
            schema.target = name;
            continue;
        }
        auto lo = detail::parse_double(cells[2]);
        auto hi = detail::parse_double(cells[3]);
        if (!lo || !hi) throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": bad range");
        ColumnKind k;
        if (kind == "continuous") k = ColumnKind::kContinuous;
        else if (kind == "integer") k = ColumnKind::kInteger;
        else throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": unknown kind '" + std::string(kind) + "'");
        schema.columns.push_back({name, k, *lo, *hi});
    }
    schema.validate();
    return schema;
}

class TabularDataset {
public:
    TabularDataset() = default;
    explicit TabularDataset(FeatureSchema schema) : schema_(std::move(schema)) { schema_.validate(); }

    const FeatureSchema& schema() const noexcept { return schema_; }
    std::size_t size() const noexcept { return labels_.size(); }
    bool empty() const noexcept { return labels_.empty(); }

    const std::vector<std::vector<double>>& features() const noexcept { return features_; }
    const std::vector<int>& labels() const noexcept { return labels_; }
    const std::vector<double>& row(std::size_t i) const { return features_[i]; }
    int label(std::size_t i) const { return labels_[i]; }

    // Validates against the schema; `context` prefixes error messages.
    void add_row(std::vector<double> features, int label, std::string_view context = {}) {
        check_row(schema_, features, label, context);
        features_.push_back(std::move(features));
        labels_.push_back(label);
    }

    TabularDataset subset(std::span<const std::size_t> indices) const {
        TabularDataset out;
        out.schema_ = schema_;
        out.features_.reserve(indices.size());
        out.labels_.reserve(indices.size());
        for (auto i : indices) {
            out.features_.push_back(features_.at(i));
            out.labels_.push_back(labels_.at(i));
        }
        return out;
    }

    std::size_t count_label(int label) const noexcept {
        return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
    }

    static void check_row(const FeatureSchema& schema, std::span<const double> features, int label,
                          std::string_view context = {}) {
        auto where = [&](const std::string& col) {
            std::string s(context);
            if (!s.empty()) s += ", ";
            return s + "column '" + col + "'";
        };
        if (features.size() != schema.feature_count())
            throw SchemaError(std::string(context) + ": expected " + std::to_string(schema.feature_count()) +
                              " features, got " + std::to_string(features.size()));
        for (std::size_t i = 0; i < features.size(); ++i) {
            const auto& c = schema.columns[i];
            const double v = features[i];
            if (!std::isfinite(v)) throw CellParseError(where(c.name) + ": non-finite value");
            if (v < c.min || v > c.max)
                throw RangeError(where(c.name) + ": value " + format_double(v) + " outside [" + format_double(c.min) +
                                 ", " + format_double(c.max) + "]");
            if (c.kind == ColumnKind::kInteger && v != std::round(v))
                throw RangeError(where(c.name) + ": value " + format_double(v) + " is not an integer code");
        }
        if (label != 0 && label != 1) throw RangeError(where(schema.target) + ": label must be 0 or 1");
    }

    // Builds a dataset without range checks, for transformed (e.g. normalised)
    // copies whose values live in a different space than the schema describes.
    static TabularDataset unchecked(FeatureSchema schema, std::vector<std::vector<double>> features,
                                    std::vector<int> labels) {
        TabularDataset out;
        out.schema_ = std::move(schema);
        out.features_ = std::move(features);
        out.labels_ = std::move(labels);
        return out;
    }

    friend bool operator==(const TabularDataset&, const TabularDataset&) = default;

private:
    FeatureSchema schema_;
    std::vector<std::vector<double>> features_;
    std::vector<int> labels_;
};

inline TabularDataset read_csv(std::istream& in, const FeatureSchema& schema, const std::string& source = "<stream>") {
    TabularDataset ds(schema);
    std::string line;
    if (!std::getline(in, line)) throw HeaderError(source + ": missing header row");
    const auto expected = schema.header();
    auto header_cells = detail::split_csv_line(line);
    bool header_ok = header_cells.size() == expected.size();
    for (std::size_t i = 0; header_ok && i < expected.size(); ++i)
        header_ok = detail::trim(header_cells[i]) == expected[i];
    if (!header_ok) throw HeaderError(source + ": header does not match schema columns");

    std::size_t row_no = 0;
    std::vector<double> values(schema.feature_count());
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        ++row_no;
        const std::string ctx = source + ": row " + std::to_string(row_no);
        auto cells = detail::split_csv_line(line);
        if (cells.size() != expected.size())
            throw CellParseError(ctx + ": expected " + std::to_string(expected.size()) + " cells, got " +
                                 std::to_string(cells.size()));
        for (std::size_t i = 0; i < schema.feature_count(); ++i) {
            auto v = detail::parse_double(cells[i]);
            if (!v) throw CellParseError(ctx + ", column '" + expected[i] + "': cannot parse '" +
                                         std::string(detail::trim(cells[i])) + "'");
            values[i] = *v;
        }
        auto lab = detail::parse_double(cells.back());
        if (!lab) throw CellParseError(ctx + ", column '" + schema.target + "': cannot parse label");
        if (*lab != 0.0 && *lab != 1.0) throw RangeError(ctx + ", column '" + schema.target + "': label must be 0 or 1");
        ds.add_row(values, static_cast<int>(*lab), ctx);
    }
    return ds;
}

inline TabularDataset load_csv(const std::filesystem::path& path, const FeatureSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_csv(in, schema, path.string());
}

inline void write_csv(std::ostream& out, const TabularDataset& ds) {
    const auto header = ds.schema().header();
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (std::size_t r = 0; r < ds.size(); ++r) {
        for (double v : ds.row(r)) out << format_double(v) << ',';
        out << ds.label(r) << '\n';
    }
}

inline void save_csv(const std::filesystem::path& path, const TabularDataset& ds) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    write_csv(out, ds);
}

// ---------------------------------------------------------------------------
// Statistics

struct ColumnSummary {
    std::string name;
    double min = 0, max = 0, mean = 0, sd = 0;
};

// Per-column min/max/mean/population SD; the target column is summarised last.
inline std::vector<ColumnSummary> summarize(const TabularDataset& ds) {
    if (ds.empty()) throw UsageError("cannot summarize an empty dataset");
    const auto& schema = ds.schema();
    std::vector<ColumnSummary> out;
    auto column_stats = [&](const std::string& name, auto value_at) {
        ColumnSummary s{name, value_at(0), value_at(0), 0.0, 0.0};
        // Welford.
        double mean = 0, m2 = 0;
        for (std::size_t r = 0; r < ds.size(); ++r) {
            const double v = value_at(r);
            s.min = std::min(s.min, v);
            s.max = std::max(s.max, v);
            const double delta = v - mean;
            mean += delta / static_cast<double>(r + 1);
            m2 += delta * (v - mean);
        }
        s.mean = std::clamp(mean, s.min, s.max);
        s.sd = std::sqrt(std::max(0.0, m2 / static_cast<double>(ds.size())));
        out.push_back(s);
    };
    for (std::size_t c = 0; c < schema.feature_count(); ++c)
        column_stats(schema.columns[c].name, [&](std::size_t r) { return ds.row(r)[c]; });
    column_stats(schema.target, [&](std::size_t r) { return static_cast<double>(ds.label(r)); });
    return out;
}

inline void write_summary_csv(std::ostream& out, const std::vector<ColumnSummary>& summary) {
    out << "column,min,max,mean,sd\n";
    for (const auto& s : summary)
        out << s.name << ',' << format_double(s.min) << ',' << format_double(s.max) << ',' << format_double(s.mean)
            << ',' << format_double(s.sd) << '\n';
}

struct HistogramBin {
    double lower = 0;
    std::size_t count = 0;
};

namespace detail {

struct ColumnAccess {
    double lo = 0, hi = 1;
    std::optional<std::size_t> feature;  // nullopt means the target column
};

inline ColumnAccess resolve_column(const FeatureSchema& schema, std::string_view column) {
    if (column == schema.target) return {0.0, 1.0, std::nullopt};
    auto idx = schema.index_of(column);
    if (!idx) throw UsageError("unknown column '" + std::string(column) + "'");
    return {schema.columns[*idx].min, schema.columns[*idx].max, idx};
}

}  // namespace detail

// Equal-width bins spanning the column's schema range; the top edge is closed.
inline std::vector<HistogramBin> histogram(const TabularDataset& ds, std::string_view column, std::size_t bins) {
    if (bins < 1) throw UsageError("histogram needs at least one bin");
    const auto col = detail::resolve_column(ds.schema(), column);
    const double width = (col.hi - col.lo) / static_cast<double>(bins);
    std::vector<HistogramBin> out(bins);
    for (std::size_t b = 0; b < bins; ++b) out[b].lower = col.lo + width * static_cast<double>(b);
    for (std::size_t r = 0; r < ds.size(); ++r) {
        const double v = col.feature ? ds.row(r)[*col.feature] : static_cast<double>(ds.label(r));
        std::size_t b = 0;
        if (width > 0) {
            const double pos = std::floor((v - col.lo) / width);
            b = pos <= 0 ? 0 : std::min(bins - 1, static_cast<std::size_t>(pos));
        }
        ++out[b].count;
    }
    return out;
}

struct ColumnFidelity {
    std::string name;
    double score = 0;
};

// Histogram intersection sum_i min(p_i, q_i) of the normalised histograms,
// per feature column.
inline std::vector<ColumnFidelity> fidelity_report(const TabularDataset& real, const TabularDataset& synth,
                                                   std::size_t bins = 20) {
    if (!(real.schema() == synth.schema())) throw UsageError("fidelity_report needs datasets with the same schema");
    if (real.empty() || synth.empty()) throw UsageError("fidelity_report needs non-empty datasets");
    std::vector<ColumnFidelity> out;
    for (const auto& col : real.schema().columns) {
        auto hr = histogram(real, col.name, bins);
        auto hs = histogram(synth, col.name, bins);
        double score = 0;
        for (std::size_t b = 0; b < bins; ++b)
            score += std::min(static_cast<double>(hr[b].count) / static_cast<double>(real.size()),
                              static_cast<double>(hs[b].count) / static_cast<double>(synth.size()));
        out.push_back({col.name, std::clamp(score, 0.0, 1.0)});
    }
    return out;
}

inline double mean_fidelity(const std::vector<ColumnFidelity>& f) {
    if (f.empty()) return 0.0;
    double s = 0;
    for (const auto& c : f) s += c.score;
    return s / static_cast<double>(f.size());
}

// ---------------------------------------------------------------------------
// Preprocessing

// Maps every feature into [0,1] using the schema's legal ranges, so that all
// shards of one schema scale identically. Continuous columns are min-max
// scaled; integer-coded columns are divided by their legal maximum.
class Scaler {
public:
    Scaler() = default;
    explicit Scaler(const FeatureSchema& schema) {
        for (const auto& c : schema.columns) {
            if (c.kind == ColumnKind::kContinuous) {
                offset_.push_back(c.min);
                scale_.push_back(c.max - c.min);
            } else {
                offset_.push_back(0.0);
                scale_.push_back(c.max > 0 ? c.max : 1.0);
            }
        }
    }

    std::size_t size() const noexcept { return offset_.size(); }

    std::vector<double> forward(std::span<const double> row) const {
        check(row);
        std::vector<double> out(row.size());
        for (std::size_t i = 0; i < row.size(); ++i) out[i] = (row[i] - offset_[i]) / scale_[i];
        return out;
    }

    std::vector<double> inverse(std::span<const double> row) const {
        check(row);
        std::vector<double> out(row.size());
        for (std::size_t i = 0; i < row.size(); ++i) out[i] = row[i] * scale_[i] + offset_[i];
        return out;
    }

    TabularDataset apply(const TabularDataset& ds) const {
        std::vector<std::vector<double>> rows;
        rows.reserve(ds.size());
        for (const auto& r : ds.features()) rows.push_back(forward(r));
        return TabularDataset::unchecked(ds.schema(), std::move(rows), ds.labels());
    }

private:
    void check(std::span<const double> row) const {
        if (row.size() != offset_.size()) throw SchemaError("row length does not match scaler");
    }

    std::vector<double> offset_, scale_;
};

struct Preprocessed {
    TabularDataset data;
    Scaler scaler;
};

inline Preprocessed preprocess(const TabularDataset& ds) {
    if (ds.empty()) throw UsageError("cannot preprocess an empty dataset");
    Scaler scaler(ds.schema());
    return {scaler.apply(ds), scaler};
}

// ---------------------------------------------------------------------------
// Partitioning and holdouts

enum class PartitionStrategy { kLabelSkew, kSizeSkew, kIid };

struct PartitionPlan {
    std::size_t clients = 4;
    PartitionStrategy strategy = PartitionStrategy::kLabelSkew;
    // proportions[c][k]: share of class-c rows given to client k. Left empty,
    // label-skew draws one Dirichlet(dirichlet_alpha) vector per class and
    // size-skew draws one shared vector for both classes.
    std::vector<std::vector<double>> proportions;
    double dirichlet_alpha = 0.5;
    std::uint64_t seed = 0;
};

namespace detail {

inline std::vector<double> dirichlet(std::size_t k, double alpha, Rng& rng) {
    std::gamma_distribution<double> gamma(alpha, 1.0);
    std::vector<double> v(k);
    double sum = 0;
    do {
        sum = 0;
        for (auto& x : v) sum += (x = gamma(rng));
    } while (!(sum > 0));
    for (auto& x : v) x /= sum;
    return v;
}

// Largest-remainder apportionment of n items by the given weights.
inline std::vector<std::size_t> apportion(std::size_t n, std::span<const double> weights) {
    std::vector<std::size_t> counts(weights.size());
    std::vector<std::pair<double, std::size_t>> rem;
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        const double exact = static_cast<double>(n) * weights[k];
        counts[k] = static_cast<std::size_t>(std::floor(exact));
        assigned += counts[k];
        rem.push_back({exact - std::floor(exact), k});
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++counts[rem[i % rem.size()].second];
    return counts;
}

inline std::vector<std::vector<std::size_t>> allocate_by_class(const TabularDataset& ds,
                                                               const std::vector<std::vector<double>>& prop,
                                                               Rng& rng) {
    const std::size_t K = prop[0].size();
    std::vector<std::vector<std::size_t>> shards(K);
    for (int cls = 0; cls < 2; ++cls) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ds.size(); ++i)
            if (ds.label(i) == cls) idx.push_back(i);
        std::shuffle(idx.begin(), idx.end(), rng);
        auto counts = apportion(idx.size(), prop[static_cast<std::size_t>(cls)]);
        std::size_t pos = 0;
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t j = 0; j < counts[k]; ++j) shards[k].push_back(idx[pos++]);
    }
    for (auto& s : shards) std::sort(s.begin(), s.end());
    return shards;
}

}  // namespace detail

inline std::vector<TabularDataset> partition(const TabularDataset& ds, const PartitionPlan& plan) {
    const std::size_t K = plan.clients;
    if (K < 1) throw PlanError("partition needs at least one client");
    if (ds.size() < K) throw PlanError("dataset has fewer rows than clients");
    Rng rng(plan.seed);

    std::vector<std::vector<std::size_t>> shards;
    if (plan.strategy == PartitionStrategy::kIid) {
        std::vector<std::size_t> idx(ds.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        shards.resize(K);
        for (std::size_t k = 0, pos = 0; k < K; ++k) {
            const std::size_t n = ds.size() / K + (k < ds.size() % K ? 1 : 0);
            shards[k].assign(idx.begin() + static_cast<std::ptrdiff_t>(pos),
                             idx.begin() + static_cast<std::ptrdiff_t>(pos + n));
            std::sort(shards[k].begin(), shards[k].end());
            pos += n;
        }
    } else if (!plan.proportions.empty()) {
        const auto& prop = plan.proportions;
        if (prop.size() != 2) throw PlanError("proportions need one row per class");
        for (const auto& row : prop) {
            if (row.size() != K) throw PlanError("proportions need one weight per client");
            double sum = 0;
            for (double w : row) {
                if (!(w >= 0)) throw PlanError("proportions must be non-negative");
                sum += w;
            }
            if (std::abs(sum - 1.0) > 1e-9) throw PlanError("proportions for a class must sum to 1");
        }
        shards = detail::allocate_by_class(ds, prop, rng);
    } else {
        // Redraw until no client ends up empty.
        for (int attempt = 0;; ++attempt) {
            if (attempt == 1000) throw PlanError("could not draw a partition with non-empty shards");
            std::vector<std::vector<double>> prop;
            if (plan.strategy == PartitionStrategy::kLabelSkew) {
                prop = {detail::dirichlet(K, plan.dirichlet_alpha, rng), detail::dirichlet(K, plan.dirichlet_alpha, rng)};
            } else {
                auto w = detail::dirichlet(K, plan.dirichlet_alpha, rng);
                prop = {w, w};
            }
            shards = detail::allocate_by_class(ds, prop, rng);
            if (std::none_of(shards.begin(), shards.end(), [](const auto& s) { return s.empty(); })) break;
        }
    }
    for (std::size_t k = 0; k < K; ++k)
        if (shards[k].empty()) throw PlanError("client " + std::to_string(k) + " would receive no rows");

    std::vector<TabularDataset> out;
    for (const auto& s : shards) out.push_back(ds.subset(s));
    return out;
}

struct HoldoutSplit {
    TabularDataset selected;
    TabularDataset rest;
};

// Uniform sample of n rows without replacement; `selected` keeps the sampled
// order, `rest` keeps original order.
inline HoldoutSplit holdout_split(const TabularDataset& ds, std::size_t n, std::uint64_t seed) {
    if (n > ds.size()) throw UsageError("holdout larger than dataset");
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::size_t> sel(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n));
    std::vector<std::size_t> rest(idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end());
    std::sort(rest.begin(), rest.end());
    return {ds.subset(sel), ds.subset(rest)};
}

inline TabularDataset holdout_select(const TabularDataset& ds, std::size_t n, std::uint64_t seed) {
    return holdout_split(ds, n, seed).selected;
}

// n rows drawn uniformly with replacement.
inline TabularDataset resample(const TabularDataset& ds, std::size_t n, std::uint64_t seed) {
    if (ds.empty()) throw UsageError("cannot resample an empty dataset");
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, ds.size() - 1);
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = pick(rng);
    return ds.subset(idx);
}

}  // namespace gfl
