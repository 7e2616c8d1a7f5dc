#include <gtest/gtest.h>

#include <sstream>

#include "gfl/metrics.hpp"
#include "gfl/random.hpp"

using namespace gfl;

TEST(Metrics, PerfectClassifier) {
    auto m = metrics_from({5, 0, 0, 5});
    EXPECT_EQ(m.accuracy, 1.0);
    EXPECT_EQ(*m.precision, 1.0);
    EXPECT_EQ(*m.recall, 1.0);
    EXPECT_EQ(*m.f_score, 1.0);
}

TEST(Metrics, AllOnes) {
    auto m = metrics_from({1, 1, 1, 1});
    EXPECT_EQ(m.accuracy, 0.5);
    EXPECT_EQ(*m.precision, 0.5);
    EXPECT_EQ(*m.recall, 0.5);
    EXPECT_EQ(*m.f_score, 0.5);
}

TEST(Metrics, UndefinedRatiosAreFlagged) {
    auto m = metrics_from({0, 0, 3, 7});
    EXPECT_EQ(m.accuracy, 0.7);
    EXPECT_FALSE(m.precision.has_value());
    EXPECT_EQ(*m.recall, 0.0);
    EXPECT_FALSE(m.f_score.has_value());
    EXPECT_EQ(format_metric(m.precision), "undefined");

    auto none_positive = metrics_from({0, 2, 0, 2});
    EXPECT_FALSE(none_positive.recall.has_value());
    EXPECT_EQ(*none_positive.precision, 0.0);
    EXPECT_THROW(metrics_from({}), UsageError);
}

TEST(Metrics, BoundsAndConsistency) {
    Rng rng(1);
    std::uniform_int_distribution<int> label(0, 1);
    for (int trial = 0; trial < 500; ++trial) {
        ConfusionMatrix cm;
        std::size_t correct = 0, n = 1 + trial % 50;
        for (std::size_t i = 0; i < n; ++i) {
            const int t = label(rng), p = label(rng);
            cm.add(t, p);
            correct += t == p;
        }
        auto m = metrics_from(cm);
        EXPECT_EQ(m.accuracy, static_cast<double>(correct) / static_cast<double>(n));
        for (const auto& v : {std::optional<double>(m.accuracy), m.precision, m.recall, m.f_score})
            if (v) {
                EXPECT_GE(*v, 0.0);
                EXPECT_LE(*v, 1.0);
            }
    }
}

TEST(Metrics, CsvRow) {
    std::ostringstream out;
    write_metrics_header(out);
    write_metrics_row(out, "global", "test", {0, 0, 1, 1});
    EXPECT_EQ(out.str(),
              "model,dataset,tp,fp,fn,tn,accuracy,precision,recall,f_score\n"
              "global,test,0,0,1,1,0.5,undefined,0,undefined\n");
}

TEST(Metrics, MacroAccuracy) {
    EXPECT_EQ(macro_accuracy({{1, 0, 0, 1}, {0, 1, 1, 0}}), 0.5);
    EXPECT_THROW(macro_accuracy({}), UsageError);
}

TEST(LossCurve, Examples) {
    RoundLog one;
    one.nodes.push_back({1, {0.9, 0.2}, 1, 0, 0, 0});
    EXPECT_EQ(loss_curve({one}), std::vector<double>{0.2});

    RoundLog two;
    two.nodes.push_back({1, {0.1}, 1, 0, 0, 0});
    two.nodes.push_back({2, {0.3}, 1, 0, 0, 0});
    ASSERT_EQ(loss_curve({two}).size(), 1u);
    EXPECT_DOUBLE_EQ(loss_curve({two})[0], 0.2);
    EXPECT_THROW(loss_curve({}), UsageError);

    std::ostringstream out;
    write_loss_curve_csv(out, {0.5, 0.25});
    EXPECT_EQ(out.str(), "round,loss\n0,0.5\n1,0.25\n");
}
