#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "gfl/data.hpp"
#include "gfl/random.hpp"
#include "gfl/tensor.hpp"

namespace gfl::test {

inline ModelWeights random_weights(Rng& rng, std::size_t layers, std::size_t max_dim) {
    std::uniform_int_distribution<std::size_t> dim(1, max_dim);
    std::uniform_real_distribution<double> val(-2.0, 2.0);
    ModelWeights w;
    for (std::size_t l = 0; l < layers; ++l) {
        Shape shape = l % 2 ? Shape{dim(rng), dim(rng)} : Shape{dim(rng)};
        Tensor t(shape);
        for (double& v : t.values()) v = val(rng);
        w.add("layer" + std::to_string(l), std::move(t));
    }
    return w;
}

inline ModelWeights randomized_like(const ModelWeights& like, Rng& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> val(-scale, scale);
    ModelWeights w = like.zeros_like();
    for (std::size_t l = 0; l < w.layer_count(); ++l)
        for (double& v : w[l].values()) v = val(rng);
    return w;
}

// Schema-valid heart rows; the label follows chest-pain type.
inline TabularDataset heart_rows(std::size_t n, std::uint64_t seed) {
    const auto schema = heart_schema();
    Rng rng(seed);
    TabularDataset ds(schema);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(schema.feature_count());
        for (std::size_t j = 0; j < row.size(); ++j) {
            const auto& c = schema.columns[j];
            if (c.kind == ColumnKind::kInteger)
                row[j] = static_cast<double>(std::uniform_int_distribution<int>(static_cast<int>(c.min),
                                                                                static_cast<int>(c.max))(rng));
            else
                row[j] = std::round(std::uniform_real_distribution<double>(c.min, c.max)(rng));
        }
        ds.add_row(row, row[2] >= 2 ? 1 : 0);
    }
    return ds;
}

// Two-feature schema for GAN tests.
inline FeatureSchema toy_schema() {
    return FeatureSchema{{{"x", ColumnKind::kContinuous, -10, 10}, {"y", ColumnKind::kContinuous, -10, 10}}, "label"};
}

inline TabularDataset gaussian_toy(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> x(2.0, 0.5), y(-1.0, 0.5);
    TabularDataset ds(toy_schema());
    for (std::size_t i = 0; i < n; ++i) ds.add_row({x(rng), y(rng)}, static_cast<int>(i % 2));
    return ds;
}

// Linearly separable scaled shard: label = x0 > 0.5.
inline TabularDataset separable_shard(std::size_t n, std::size_t features, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    FeatureSchema schema;
    for (std::size_t j = 0; j < features; ++j) schema.columns.push_back({"f" + std::to_string(j), ColumnKind::kContinuous, 0, 1});
    TabularDataset ds(schema);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(features);
        for (auto& v : row) v = u(rng);
        ds.add_row(row, row[0] > 0.5 ? 1 : 0);
    }
    return ds;
}

}  // namespace gfl::test
