#include <gtest/gtest.h>

#include <cmath>

#include "gfl/gan.hpp"
#include "helpers.hpp"

using namespace gfl;

namespace {

// Direct summation, written independently of the library.
double brute_d_loss(const std::vector<double>& r, const std::vector<double>& f) {
    double s = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double a = std::min(std::max(r[i], 1e-7), 1 - 1e-7);
        const double b = std::min(std::max(f[i], 1e-7), 1 - 1e-7);
        s -= std::log(a) + std::log(1 - b);
    }
    return s / r.size();
}

double brute_g_loss(const std::vector<double>& f) {
    double s = 0;
    for (double v : f) s -= std::log(std::min(std::max(v, 1e-7), 1 - 1e-7));
    return s / f.size();
}

}  // namespace

TEST(Noise, DeterministicPerSeed) {
    Rng a(0), b(0);
    EXPECT_EQ(sample_noise(3, 2, a), sample_noise(3, 2, b));
}

TEST(Noise, StandardNormalMoments) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        Rng rng(seed);
        auto n = sample_noise(1000, 4, rng);
        for (std::size_t c = 0; c < 4; ++c) {
            double m = 0, v = 0;
            for (auto& row : n) m += row[c];
            m /= 1000;
            for (auto& row : n) v += (row[c] - m) * (row[c] - m);
            EXPECT_NEAR(m, 0.0, 0.15);
            EXPECT_NEAR(std::sqrt(v / 999), 1.0, 0.15);
        }
    }
}

TEST(Noise, ZeroCountIsUsageError) {
    Rng rng(0);
    EXPECT_THROW(sample_noise(0, 2, rng), UsageError);
    EXPECT_THROW(sample_noise(2, 0, rng), UsageError);
}

TEST(GanLoss, Examples) {
    const double eps = kProbEpsilon;
    EXPECT_NEAR(discriminator_loss(std::vector{0.5}, std::vector{0.5}), 2 * std::log(2.0), 1e-9);
    EXPECT_NEAR(discriminator_loss(std::vector{0.9, 0.8}, std::vector{0.1, 0.2}), 0.328504, 1e-6);
    EXPECT_NEAR(discriminator_loss(std::vector{0.9, 0.8}, std::vector{0.1, 0.2}),
                -(std::log(0.9) + std::log(0.8)), 1e-12);
    EXPECT_NEAR(discriminator_loss(std::vector{1 - eps}, std::vector{eps}), 0.0, 1e-6);
    EXPECT_NEAR(generator_loss(std::vector{1 - eps}), 0.0, 1e-6);
    EXPECT_NEAR(generator_loss(std::vector{0.5, 0.5}), std::log(2.0), 1e-12);
    EXPECT_NEAR(generator_loss(std::vector{0.25}), std::log(4.0), 1e-12);
}

TEST(GanLoss, ContractErrors) {
    EXPECT_THROW(discriminator_loss(std::vector{0.5}, std::vector{0.5, 0.5}), UsageError);
    EXPECT_THROW(discriminator_loss(std::vector<double>{}, std::vector<double>{}), UsageError);
    EXPECT_THROW(generator_loss(std::vector<double>{}), UsageError);
}

TEST(GanLoss, MatchesBruteForceOnRandomInputs) {
    Rng rng(17);
    std::uniform_real_distribution<double> u(-0.1, 1.1);  // includes values needing clamping
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + trial % 40;
        std::vector<double> r(n), f(n);
        for (auto& v : r) v = u(rng);
        for (auto& v : f) v = u(rng);
        EXPECT_NEAR(discriminator_loss(r, f), brute_d_loss(r, f), 1e-12);
        EXPECT_NEAR(generator_loss(f), brute_g_loss(f), 1e-12);
    }
}

TEST(GanTrain, ZeroEpochsReturnsInitialState) {
    auto real = test::gaussian_toy(200, 1);
    GanConfig cfg;
    cfg.epochs = 0;
    cfg.seed = 4;
    auto res = train_gan(real, cfg);
    Rng rng(4);
    auto init = init_gan(2, cfg, rng);
    EXPECT_EQ(res.state.generator, init.generator);
    EXPECT_EQ(res.state.discriminator, init.discriminator);
    EXPECT_TRUE(res.trace.empty());
}

TEST(GanTrain, TraceHasOneEntryPerBatch) {
    auto real = test::gaussian_toy(130, 1);
    GanConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 32;
    auto res = train_gan(real, cfg);
    ASSERT_EQ(res.trace.size(), 3u * 5u);  // ceil(130 / 32) = 5
    EXPECT_EQ(res.trace.back().d_real.size(), 130u - 4 * 32);
    for (const auto& t : res.trace) {
        EXPECT_EQ(t.d_real.size(), t.d_fake.size());
        EXPECT_TRUE(std::isfinite(t.loss_d));
        EXPECT_TRUE(std::isfinite(t.loss_g));
    }
}

TEST(GanTrain, TooSmallDatasetIsUsageError) {
    auto real = test::gaussian_toy(100, 1);
    GanConfig cfg;
    cfg.batch_size = 64;
    EXPECT_THROW(train_gan(real, cfg), UsageError);
}

TEST(GanTrain, DeterministicForSeed) {
    auto real = test::gaussian_toy(200, 2);
    GanConfig cfg;
    cfg.epochs = 5;
    cfg.seed = 77;
    auto a = train_gan(real, cfg), b = train_gan(real, cfg);
    EXPECT_EQ(a.state.generator, b.state.generator);
    Rng ra(1), rb(1);
    EXPECT_EQ(generate(a.state, 50, real.schema(), ra).features(), generate(b.state, 50, real.schema(), rb).features());
}

TEST(GanRestarts, SingleRestartIsPlainTraining) {
    auto real = test::gaussian_toy(200, 2);
    GanConfig cfg;
    cfg.epochs = 3;
    cfg.seed = 12;
    int calls = 0;
    auto best = train_gan_best(real, cfg, [&](const GanState&) { return ++calls; });
    EXPECT_EQ(calls, 0);
    EXPECT_TRUE(best.scores.empty());
    EXPECT_EQ(best.state.generator, train_gan(real, cfg).state.generator);
}

TEST(GanRestarts, KeepsHighestScoreAndSumsOps) {
    auto real = test::gaussian_toy(200, 2);
    GanConfig cfg;
    cfg.epochs = 2;
    cfg.seed = 12;
    cfg.restarts = 4;
    // Score each restart by a value only its own seed determines, then check
    // the winner against an independent replay of that restart.
    const std::vector<double> planted = {0.2, 0.9, 0.9, 0.1};
    std::size_t call = 0;
    auto best = train_gan_best(real, cfg, [&](const GanState&) { return planted[call++]; });
    ASSERT_EQ(best.scores, planted);
    EXPECT_EQ(best.restart, 1u);  // first of the tied maxima
    const auto replay = train_gan(real, restart_config(cfg, 1));
    EXPECT_EQ(best.state.generator, replay.state.generator);
    EXPECT_EQ(best.ops, 4 * replay.ops);
    EXPECT_EQ(best.trace.size(), replay.trace.size());
}

TEST(GanRestarts, DerivedSeedsDifferAndZeroIsRejected) {
    GanConfig cfg;
    cfg.seed = 3;
    EXPECT_EQ(restart_config(cfg, 0).seed, 3u);
    EXPECT_NE(restart_config(cfg, 1).seed, restart_config(cfg, 2).seed);
    EXPECT_NE(restart_config(cfg, 1).seed, 3u);
    cfg.restarts = 0;
    EXPECT_THROW(cfg.validate(), UsageError);
}

TEST(GanTrain, ToyMomentsMatchWithinHalfSd) {
    auto real = test::gaussian_toy(1000, 3);
    GanConfig cfg;
    cfg.epochs = 200;
    cfg.seed = 5;
    auto res = train_gan(real, cfg);
    Rng rng(6);
    auto fake = generate(res.state, 5000, real.schema(), rng);
    auto rs = summarize(real), fs = summarize(fake);
    for (std::size_t c = 0; c < 2; ++c) EXPECT_LT(std::abs(rs[c].mean - fs[c].mean), 0.5 * rs[c].sd) << rs[c].name;
}

TEST(GanStep, DiscriminatorStepDescendsOnItsBatch) {
    Rng rng(8);
    GanConfig cfg;
    for (int trial = 0; trial < 10; ++trial) {
        auto st = init_gan(3, cfg, rng);
        auto real = sample_noise(16, 4, rng);
        for (auto& r : real) r.resize(4), std::transform(r.begin(), r.end(), r.begin(), [](double v) { return std::tanh(v); });
        const auto fake = generate_raw(st.generator, sample_noise(16, cfg.latent_dim, rng));
        const double before = discriminator_loss(discriminate(st.discriminator, real), discriminate(st.discriminator, fake));
        auto d2 = sgd_step(st.discriminator, discriminator_gradient(st.discriminator, real, fake), 1e-3);
        const double after = discriminator_loss(discriminate(d2, real), discriminate(d2, fake));
        EXPECT_LE(after, before);
    }
}

TEST(GanStep, GeneratorStepDescendsOnItsNoise) {
    Rng rng(9);
    GanConfig cfg;
    for (int trial = 0; trial < 10; ++trial) {
        auto st = init_gan(3, cfg, rng);
        const auto noise = sample_noise(16, cfg.latent_dim, rng);
        const double before = generator_loss(discriminate(st.discriminator, generate_raw(st.generator, noise)));
        auto g2 = sgd_step(st.generator, generator_gradient(st.generator, st.discriminator, noise), 1e-3);
        const double after = generator_loss(discriminate(st.discriminator, generate_raw(g2, noise)));
        EXPECT_LE(after, before);
    }
}

TEST(GanStep, GeneratorGradientMatchesFiniteDifferences) {
    Rng rng(10);
    GanConfig cfg;
    cfg.latent_dim = 3;
    cfg.hidden = {5, 4};
    auto st = init_gan(2, cfg, rng);
    const auto noise = sample_noise(4, 3, rng);
    auto loss = [&](const ModelWeights& g) { return generator_loss(discriminate(st.discriminator, generate_raw(g, noise))); };
    const auto grad = generator_gradient(st.generator, st.discriminator, noise);
    const double h = 1e-6;
    for (std::size_t l = 0; l < grad.layer_count(); ++l)
        for (std::size_t i = 0; i < grad[l].size(); ++i) {
            ModelWeights p = st.generator, m = st.generator;
            p[l].values()[i] += h;
            m[l].values()[i] -= h;
            EXPECT_NEAR(grad[l].values()[i], (loss(p) - loss(m)) / (2 * h), 1e-6);
        }
}

TEST(GanGenerate, UntrainedStateIsStateError) {
    GanConfig cfg;
    Rng rng(1);
    auto st = init_gan(13, cfg, rng);
    EXPECT_THROW(generate(st, 10, heart_schema(), rng), StateError);
}

TEST(GanGenerate, HeartOutputIsSchemaClosed) {
    auto real = test::heart_rows(300, 4);
    GanConfig cfg;
    cfg.epochs = 5;
    auto res = train_gan(real, cfg);
    const auto schema = heart_schema();
    for (std::size_t count : {1u, 2000u}) {
        Rng rng(12);
        auto fake = generate(res.state, count, schema, rng);
        ASSERT_EQ(fake.size(), count);
        for (std::size_t r = 0; r < fake.size(); ++r) {
            EXPECT_NO_THROW(TabularDataset::check_row(schema, fake.row(r), fake.label(r), "generated"));
            EXPECT_GE(fake.row(r)[0], 32);
            EXPECT_LE(fake.row(r)[0], 76);
            EXPECT_TRUE(fake.row(r)[1] == 0 || fake.row(r)[1] == 1);
            EXPECT_GE(fake.row(r)[2], 0);
            EXPECT_LE(fake.row(r)[2], 3);
        }
    }
    Rng rng(12);
    EXPECT_THROW(generate(res.state, 0, schema, rng), UsageError);
}
