#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "gfl/data.hpp"
#include "gfl/error.hpp"
#include "gfl/nn.hpp"
#include "gfl/random.hpp"
#include "gfl/tensor.hpp"

namespace gfl {

struct GanConfig {
    std::size_t latent_dim = 16;
    std::size_t epochs = 300;
    std::size_t batch_size = 64;
    double learning_rate = 0.05;
    // Noise vectors per batch; 0 means "same as the real batch".
    std::size_t samples_per_batch = 0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> hidden = {64, 32};
    bool record_noise = false;
    // Independent trainings from derived seeds; the best-scoring one is kept.
    std::size_t restarts = 1;

    void validate() const {
        if (latent_dim < 1) throw UsageError("latent dimension must be >= 1");
        if (batch_size < 1) throw UsageError("GAN batch size must be >= 1");
        if (!(learning_rate > 0)) throw UsageError("GAN learning rate must be positive");
        if (samples_per_batch != 0 && samples_per_batch != batch_size)
            throw UsageError("samples per batch must equal the GAN batch size");
        if (hidden.empty()) throw UsageError("GAN networks need at least one hidden layer");
        if (restarts < 1) throw UsageError("GAN restarts must be >= 1");
    }
};

enum class GanPhase { kInitial, kTrained };

// Generator maps latent noise to (features..., label) in [-1,1] space; the
// discriminator scores such vectors as real (1) or generated (0).
struct GanState {
    ModelWeights generator;
    ModelWeights discriminator;
    GanPhase phase = GanPhase::kInitial;
    std::size_t latent_dim = 0;
    // Per-feature range of the real data used for the [-1,1] mapping.
    std::vector<double> lo, hi;

    std::size_t feature_count() const noexcept { return lo.size(); }
};

struct GanBatchTrace {
    std::size_t epoch = 0, batch = 0;
    std::vector<double> d_real, d_fake;
    double loss_d = 0, loss_g = 0;
    std::vector<std::vector<double>> noise;
};

struct GanTrainResult {
    GanState state;
    std::vector<GanBatchTrace> trace;
    std::uint64_t ops = 0;  // parameter touches, (|G| + |D|) per batch
    std::size_t restart = 0;
    std::vector<double> scores;  // one per restart, empty for a single training
};

using Matrix = std::vector<std::vector<double>>;

inline Matrix sample_noise(std::size_t count, std::size_t latent_dim, Rng& rng) {
    if (count < 1 || latent_dim < 1) throw UsageError("sample_noise needs count >= 1 and latent_dim >= 1");
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix out(count, std::vector<double>(latent_dim));
    for (auto& v : out)
        for (auto& x : v) x = normal(rng);
    return out;
}

inline double discriminator_loss(std::span<const double> d_real, std::span<const double> d_fake) {
    if (d_real.empty() || d_real.size() != d_fake.size())
        throw UsageError("discriminator_loss needs equal-length non-empty inputs");
    double s = 0;
    for (std::size_t j = 0; j < d_real.size(); ++j)
        s += std::log(clamp_prob(d_real[j])) + std::log(1.0 - clamp_prob(d_fake[j]));
    return -s / static_cast<double>(d_real.size());
}

inline double generator_loss(std::span<const double> d_fake) {
    if (d_fake.empty()) throw UsageError("generator_loss needs a non-empty input");
    double s = 0;
    for (double p : d_fake) s += std::log(clamp_prob(p));
    return -s / static_cast<double>(d_fake.size());
}

inline std::vector<double> discriminate(const ModelWeights& disc, const Matrix& rows) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(Mlp::forward(disc, r, OutputActivation::kSigmoid)[0]);
    return out;
}

inline Matrix generate_raw(const ModelWeights& gen, const Matrix& noise) {
    Matrix out;
    out.reserve(noise.size());
    for (const auto& n : noise) out.push_back(Mlp::forward(gen, n, OutputActivation::kTanh));
    return out;
}

// Gradient of discriminator_loss(D(real), D(fake)) w.r.t. the discriminator.
inline ModelWeights discriminator_gradient(const ModelWeights& disc, const Matrix& real, const Matrix& fake) {
    ModelWeights grad = disc.zeros_like();
    const double inv = 1.0 / static_cast<double>(real.size());
    Mlp::Trace trace;
    for (int pass = 0; pass < 2; ++pass) {
        const Matrix& rows = pass == 0 ? real : fake;
        for (const auto& r : rows) {
            const double p = Mlp::forward(disc, r, OutputActivation::kSigmoid, &trace)[0];
            // d/dlogit of -log(p) is p-1; of -log(1-p) is p.
            const double d = (pass == 0 ? p - 1.0 : p) * inv;
            Mlp::backward(disc, trace, std::span<const double>(&d, 1), &grad, nullptr);
        }
    }
    return grad;
}

// Gradient of generator_loss(D(G(noise))) w.r.t. the generator, D held fixed.
inline ModelWeights generator_gradient(const ModelWeights& gen, const ModelWeights& disc, const Matrix& noise) {
    ModelWeights grad = gen.zeros_like();
    const double inv = 1.0 / static_cast<double>(noise.size());
    Mlp::Trace gtrace, dtrace;
    std::vector<double> d_x;
    for (const auto& n : noise) {
        const auto x = Mlp::forward(gen, n, OutputActivation::kTanh, &gtrace);
        const double p = Mlp::forward(disc, x, OutputActivation::kSigmoid, &dtrace)[0];
        const double d = (p - 1.0) * inv;
        Mlp::backward(disc, dtrace, std::span<const double>(&d, 1), nullptr, &d_x);
        for (std::size_t i = 0; i < x.size(); ++i) d_x[i] *= 1.0 - x[i] * x[i];
        Mlp::backward(gen, gtrace, d_x, &grad, nullptr);
    }
    return grad;
}

inline GanState init_gan(std::size_t features, const GanConfig& cfg, Rng& rng) {
    cfg.validate();
    const std::size_t width = features + 1;
    std::vector<std::size_t> gsizes{cfg.latent_dim};
    gsizes.insert(gsizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    gsizes.push_back(width);
    std::vector<std::size_t> dsizes{width};
    dsizes.insert(dsizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    dsizes.push_back(1);
    GanState s;
    s.generator = Mlp::init("gen", gsizes, rng);
    s.discriminator = Mlp::init("disc", dsizes, rng);
    s.latent_dim = cfg.latent_dim;
    s.lo.assign(features, 0.0);
    s.hi.assign(features, 1.0);
    return s;
}

// Real rows mapped into the generator's [-1,1] space; the label is the last entry.
inline Matrix to_gan_space(const TabularDataset& ds, std::span<const double> lo, std::span<const double> hi) {
    Matrix out;
    out.reserve(ds.size());
    for (std::size_t r = 0; r < ds.size(); ++r) {
        std::vector<double> v(lo.size() + 1);
        for (std::size_t j = 0; j < lo.size(); ++j) {
            const double span = hi[j] - lo[j];
            v[j] = span > 0 ? 2.0 * (ds.row(r)[j] - lo[j]) / span - 1.0 : 0.0;
        }
        v.back() = ds.label(r) == 1 ? 1.0 : -1.0;
        out.push_back(std::move(v));
    }
    return out;
}

// Alternating discriminator / generator SGD over shuffled batches of the real data.
inline GanTrainResult train_gan(const TabularDataset& real, const GanConfig& cfg) {
    cfg.validate();
    if (real.size() < 2 * cfg.batch_size)
        throw UsageError("GAN training needs at least 2 x batch size rows, got " + std::to_string(real.size()));
    Rng rng(cfg.seed);
    const std::size_t d = real.schema().feature_count();
    GanTrainResult res;
    res.state = init_gan(d, cfg, rng);
    auto& st = res.state;
    for (std::size_t j = 0; j < d; ++j) {
        double lo = real.row(0)[j], hi = lo;
        for (const auto& r : real.features()) {
            lo = std::min(lo, r[j]);
            hi = std::max(hi, r[j]);
        }
        st.lo[j] = lo;
        st.hi[j] = hi;
    }
    const Matrix data = to_gan_space(real, st.lo, st.hi);
    const std::uint64_t ops_per_batch = st.generator.parameter_count() + st.discriminator.parameter_count();

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0, b = 0; start < order.size(); start += cfg.batch_size, ++b) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            Matrix batch;
            for (std::size_t i = start; i < end; ++i) batch.push_back(data[order[i]]);

            GanBatchTrace t{epoch, b, {}, {}, 0, 0, {}};
            auto noise = sample_noise(batch.size(), cfg.latent_dim, rng);
            const Matrix fake = generate_raw(st.generator, noise);
            t.d_real = discriminate(st.discriminator, batch);
            t.d_fake = discriminate(st.discriminator, fake);
            t.loss_d = discriminator_loss(t.d_real, t.d_fake);
            sgd_update(st.discriminator, discriminator_gradient(st.discriminator, batch, fake), cfg.learning_rate);
            if (cfg.record_noise) t.noise = std::move(noise);

            auto noise2 = sample_noise(batch.size(), cfg.latent_dim, rng);
            t.loss_g = generator_loss(discriminate(st.discriminator, generate_raw(st.generator, noise2)));
            sgd_update(st.generator, generator_gradient(st.generator, st.discriminator, noise2), cfg.learning_rate);

            res.ops += ops_per_batch;
            res.trace.push_back(std::move(t));
        }
    }
    st.phase = GanPhase::kTrained;
    return res;
}

// Restart 0 keeps the configured seed so that restarts = 1 is plain train_gan.
inline GanConfig restart_config(const GanConfig& cfg, std::size_t restart) {
    GanConfig c = cfg;
    c.restarts = 1;
    if (restart > 0) c.seed = derive_seed(cfg.seed, "restart", restart);
    return c;
}

// Trains cfg.restarts GANs and keeps the one with the highest score(state).
// Ties go to the earliest restart; ops accumulates over all of them.
template <class Score>
GanTrainResult train_gan_best(const TabularDataset& real, const GanConfig& cfg, Score&& score) {
    cfg.validate();
    if (cfg.restarts == 1) return train_gan(real, cfg);
    GanTrainResult best;
    std::vector<double> scores;
    std::uint64_t ops = 0;
    for (std::size_t i = 0; i < cfg.restarts; ++i) {
        auto res = train_gan(real, restart_config(cfg, i));
        ops += res.ops;
        scores.push_back(score(static_cast<const GanState&>(res.state)));
        if (i == 0 || scores.back() > scores[best.restart]) {
            best = std::move(res);
            best.restart = i;
        }
    }
    best.ops = ops;
    best.scores = std::move(scores);
    return best;
}

// Draws `count` synthetic rows from a trained generator. Features are mapped
// back into the real data's range, integer-coded columns are rounded, every
// value is clamped into the schema range, and the label is the sign of the
// generator's last output.
inline TabularDataset generate(const GanState& state, std::size_t count, const FeatureSchema& schema, Rng& rng) {
    if (state.phase != GanPhase::kTrained) throw StateError("generate needs a trained GAN");
    if (count < 1) throw UsageError("generate needs count >= 1");
    if (schema.feature_count() != state.feature_count())
        throw SchemaError("schema does not match the GAN's feature count");
    TabularDataset out(schema);
    const auto noise = sample_noise(count, state.latent_dim, rng);
    for (const auto& n : noise) {
        const auto x = Mlp::forward(state.generator, n, OutputActivation::kTanh);
        std::vector<double> row(schema.feature_count());
        for (std::size_t j = 0; j < row.size(); ++j) {
            const auto& col = schema.columns[j];
            double v = state.lo[j] + (x[j] + 1.0) * 0.5 * (state.hi[j] - state.lo[j]);
            if (col.kind == ColumnKind::kInteger) v = std::round(v);
            row[j] = std::clamp(v, col.min, col.max);
        }
        out.add_row(std::move(row), x.back() >= 0.0 ? 1 : 0, "generated row");
    }
    return out;
}

}  // namespace gfl
