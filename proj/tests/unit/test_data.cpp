#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "gfl/data.hpp"
#include "helpers.hpp"

using namespace gfl;

namespace {

FeatureSchema one_column(double lo, double hi, ColumnKind kind = ColumnKind::kContinuous) {
    return FeatureSchema{{{"v", kind, lo, hi}}, "target"};
}

TabularDataset column_of(const std::vector<double>& values, double lo, double hi) {
    TabularDataset ds(one_column(lo, hi));
    for (double v : values) ds.add_row({v}, 0);
    return ds;
}

TabularDataset parse(const std::string& text, const FeatureSchema& schema = heart_schema()) {
    std::istringstream in(text);
    return read_csv(in, schema, "fixture.csv");
}

const char* kHeader = "age,sex,cp,trestbps,chol,fbs,restecg,thalach,exang,oldpeak,slope,ca,thal,target\n";

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("gfl_test_" + std::to_string(::getpid()) + "_" + name);
}

}  // namespace

TEST(Schema, HeartHasThirteenFeatures) {
    const auto s = heart_schema();
    EXPECT_EQ(s.feature_count(), 13u);
    EXPECT_EQ(s.target, "target");
    EXPECT_NO_THROW(s.validate());
    EXPECT_EQ(s.columns[0].min, 32);
    EXPECT_EQ(s.columns[0].max, 76);
}

TEST(Schema, RejectsDegenerateAndDuplicates) {
    EXPECT_THROW(TabularDataset(one_column(1, 1)), SchemaError);
    EXPECT_THROW(TabularDataset(FeatureSchema{{{"a", ColumnKind::kContinuous, 0, 1}, {"a", ColumnKind::kContinuous, 0, 1}}}),
                 SchemaError);
    EXPECT_THROW(TabularDataset(FeatureSchema{{{"target", ColumnKind::kContinuous, 0, 1}}}), SchemaError);
}

TEST(Csv, ThreeRowFixtureRoundTripsBitIdentically) {
    const std::string text = std::string(kHeader) +
                             "63,1,3,145,233,1,0,150,0,2.3,0,0,1,1\n"
                             "37,1,2,130,250,0,1,187,0,3.5,0,0,2,1\n"
                             "41,0,1,130,204,0,0,172,0,1.4,2,0,2,0\n";
    auto ds = parse(text);
    ASSERT_EQ(ds.size(), 3u);
    EXPECT_EQ(ds.row(1)[9], 3.5);
    EXPECT_EQ(ds.label(2), 0);
    std::ostringstream out;
    write_csv(out, ds);
    EXPECT_EQ(out.str(), text);
    EXPECT_EQ(parse(out.str()), ds);
}

TEST(Csv, FileRoundTrip) {
    auto ds = test::heart_rows(50, 3);
    const auto path = temp_path("rt.csv");
    save_csv(path, ds);
    EXPECT_EQ(load_csv(path, heart_schema()), ds);
    std::filesystem::remove(path);
}

TEST(Csv, RandomContinuousValuesRoundTripExactly) {
    Rng rng(5);
    std::uniform_real_distribution<double> u(-10, 10);
    TabularDataset ds(test::toy_schema());
    for (int i = 0; i < 200; ++i) ds.add_row({u(rng), u(rng)}, i % 2);
    std::ostringstream out;
    write_csv(out, ds);
    EXPECT_EQ(parse(out.str(), test::toy_schema()), ds);
}

TEST(Csv, RangeViolationNamesRowAndColumn) {
    const std::string text = std::string(kHeader) + "63,1,3,145,233,1,0,150,0,2.3,0,0,1,1\n" +
                             "999,1,3,145,233,1,0,150,0,2.3,0,0,1,1\n";
    try {
        parse(text);
        FAIL() << "expected RangeError";
    } catch (const RangeError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
        EXPECT_NE(msg.find("'age'"), std::string::npos) << msg;
    }
}

TEST(Csv, ErrorKindsAreDistinct) {
    EXPECT_THROW(parse(""), HeaderError);
    EXPECT_THROW(parse("age,sex\n1,0\n"), HeaderError);
    EXPECT_THROW(parse(std::string(kHeader) + "63,1,3,x,233,1,0,150,0,2.3,0,0,1,1\n"), CellParseError);
    EXPECT_THROW(parse(std::string(kHeader) + "63,1,3,145,233\n"), CellParseError);
    EXPECT_THROW(parse(std::string(kHeader) + "63,1,3,145,233,1,0,150,0,2.3,0,0,1,2\n"), RangeError);
    EXPECT_THROW(parse(std::string(kHeader) + "63,1,2.5,145,233,1,0,150,0,2.3,0,0,1,1\n"), RangeError);
    EXPECT_THROW(load_csv(temp_path("does_not_exist.csv"), heart_schema()), IoError);
}

TEST(Csv, ShippedSurrogateLoads) {
    auto ds = load_csv(std::filesystem::path(GFL_SOURCE_DIR) / "data" / "heart_surrogate.csv", heart_schema());
    EXPECT_EQ(ds.size(), 1000u);
}

TEST(SchemaFile, LoadsColumnSpec) {
    const auto path = temp_path("schema.csv");
    {
        std::ofstream f(path);
        f << "column,kind,min,max\nx,continuous,-1,1\nn,integer,0,3\ny,target,,\n";
    }
    auto s = load_schema(path);
    ASSERT_EQ(s.feature_count(), 2u);
    EXPECT_EQ(s.target, "y");
    EXPECT_EQ(s.columns[1].kind, ColumnKind::kInteger);
    std::filesystem::remove(path);
}

TEST(Summarize, Examples) {
    auto a = summarize(column_of({2, 2, 2}, 0, 5))[0];
    EXPECT_EQ(a.min, 2);
    EXPECT_EQ(a.max, 2);
    EXPECT_EQ(a.mean, 2);
    EXPECT_EQ(a.sd, 0);
    auto b = summarize(column_of({1, 3}, 0, 5))[0];
    EXPECT_DOUBLE_EQ(b.mean, 2);
    EXPECT_DOUBLE_EQ(b.sd, 1);
    EXPECT_THROW(summarize(TabularDataset(one_column(0, 1))), UsageError);
}

TEST(Summarize, MatchesTwoPassReference) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto ds = test::heart_rows(1 + seed * 37, seed);
        auto got = summarize(ds);
        ASSERT_EQ(got.size(), 14u);
        for (std::size_t c = 0; c < 14; ++c) {
            auto value = [&](std::size_t r) { return c < 13 ? ds.row(r)[c] : static_cast<double>(ds.label(r)); };
            double sum = 0, lo = value(0), hi = value(0);
            for (std::size_t r = 0; r < ds.size(); ++r) {
                sum += value(r);
                lo = std::min(lo, value(r));
                hi = std::max(hi, value(r));
            }
            const double mean = sum / ds.size();
            double ss = 0;
            for (std::size_t r = 0; r < ds.size(); ++r) ss += (value(r) - mean) * (value(r) - mean);
            EXPECT_NEAR(got[c].mean, mean, 1e-9);
            EXPECT_NEAR(got[c].sd, std::sqrt(ss / ds.size()), 1e-9);
            EXPECT_EQ(got[c].min, lo);
            EXPECT_EQ(got[c].max, hi);
            EXPECT_LE(got[c].min, got[c].mean);
            EXPECT_LE(got[c].mean, got[c].max);
        }
    }
}

TEST(Histogram, Examples) {
    auto equal = histogram(column_of({1.5, 1.5, 1.5, 1.5}, 0, 5), "v", 10);
    std::size_t nonzero = 0;
    for (auto& b : equal) nonzero += b.count ? 1 : 0;
    EXPECT_EQ(nonzero, 1u);

    auto two = histogram(column_of({0, 1, 2, 3}, 0, 3), "v", 2);
    ASSERT_EQ(two.size(), 2u);
    EXPECT_EQ(two[0].count, 2u);
    EXPECT_EQ(two[1].count, 2u);
    EXPECT_EQ(two[0].lower, 0.0);
    EXPECT_EQ(two[1].lower, 1.5);

    EXPECT_THROW(histogram(column_of({1}, 0, 3), "nope", 2), UsageError);
    EXPECT_THROW(histogram(column_of({1}, 0, 3), "v", 0), UsageError);
}

TEST(Histogram, CountsAreConserved) {
    auto ds = test::heart_rows(321, 9);
    for (const auto& name : ds.schema().header())
        for (std::size_t bins : {1u, 3u, 20u}) {
            std::size_t total = 0;
            for (auto& b : histogram(ds, name, bins)) total += b.count;
            EXPECT_EQ(total, ds.size());
        }
}

TEST(Fidelity, Examples) {
    auto ds = test::heart_rows(100, 1);
    for (auto& c : fidelity_report(ds, ds, 20)) EXPECT_EQ(c.score, 1.0);

    EXPECT_EQ(fidelity_report(column_of({0.5, 0.7}, 0, 4), column_of({3.5}, 0, 4), 4)[0].score, 0.0);

    std::vector<double> real, synth;
    for (int v = 1; v <= 4; ++v)
        for (int i = 0; i < 100; ++i) real.push_back(v);
    for (int v = 1; v <= 2; ++v)
        for (int i = 0; i < 100; ++i) synth.push_back(v);
    EXPECT_DOUBLE_EQ(fidelity_report(column_of(real, 1, 5), column_of(synth, 1, 5), 4)[0].score, 0.5);
}

TEST(Fidelity, ScoresStayInUnitInterval) {
    for (std::uint64_t seed = 1; seed < 20; ++seed) {
        auto a = test::heart_rows(10 + seed, seed), b = test::heart_rows(30, seed + 100);
        for (auto& c : fidelity_report(a, b, 1 + seed % 25)) {
            EXPECT_GE(c.score, 0.0);
            EXPECT_LE(c.score, 1.0);
        }
    }
}

TEST(Scaler, SchemaRangeEndpoints) {
    Scaler s(heart_schema());
    std::vector<double> lo(13), hi(13);
    for (std::size_t i = 0; i < 13; ++i) {
        lo[i] = heart_schema().columns[i].min;
        hi[i] = heart_schema().columns[i].max;
    }
    lo[0] = 32;
    hi[0] = 76;
    EXPECT_EQ(s.forward(lo)[0], 0.0);
    EXPECT_EQ(s.forward(hi)[0], 1.0);
    EXPECT_EQ(s.forward(hi)[2], 1.0);  // cp / legal max 3
}

TEST(Scaler, InverseIsIdentity) {
    auto ds = test::heart_rows(200, 2);
    Scaler s(ds.schema());
    for (const auto& r : ds.features()) {
        auto back = s.inverse(s.forward(r));
        for (std::size_t i = 0; i < r.size(); ++i) EXPECT_NEAR(back[i], r[i], 1e-12);
    }
    EXPECT_THROW(s.forward(std::vector<double>(3)), SchemaError);
}

TEST(Scaler, ShardsScaleIdentically) {
    auto a = test::heart_rows(100, 1), b = test::heart_rows(5, 2);
    auto pa = preprocess(a), pb = preprocess(b);
    EXPECT_EQ(pa.scaler.forward(a.row(0)), pb.scaler.forward(a.row(0)));
}

TEST(Partition, ConservationAndDisjointnessForEveryStrategy) {
    Rng rng(3);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 20 + trial * 7;
        TabularDataset ds(one_column(0, 1e6));
        for (std::size_t i = 0; i < n; ++i) ds.add_row({static_cast<double>(i)}, rng() % 3 == 0);
        PartitionPlan plan;
        plan.clients = 1 + trial % 6;
        plan.strategy = static_cast<PartitionStrategy>(trial % 3);
        plan.seed = rng();
        std::vector<TabularDataset> shards;
        try {
            shards = partition(ds, plan);
        } catch (const PlanError&) {
            continue;  // a skewed draw can be infeasible for tiny sets
        }
        ASSERT_EQ(shards.size(), plan.clients);
        std::set<double> seen;
        std::size_t total = 0;
        for (const auto& s : shards) {
            EXPECT_FALSE(s.empty());
            total += s.size();
            for (std::size_t r = 0; r < s.size(); ++r) {
                EXPECT_TRUE(seen.insert(s.row(r)[0]).second);
                EXPECT_EQ(s.label(r), ds.label(static_cast<std::size_t>(s.row(r)[0])));
            }
        }
        EXPECT_EQ(total, n);
    }
}

TEST(Partition, IidTenThousandIntoFour) {
    auto ds = test::heart_rows(10000, 4);
    PartitionPlan plan;
    plan.strategy = PartitionStrategy::kIid;
    for (auto& s : partition(ds, plan)) EXPECT_EQ(s.size(), 2500u);
}

TEST(Partition, ExplicitLabelSkewIsExact) {
    auto ds = test::heart_rows(2000, 6);
    const auto positives = ds.count_label(1);
    PartitionPlan plan;
    plan.proportions = {{0.25, 0.25, 0.25, 0.25}, {0.9, 0.1 / 3, 0.1 / 3, 0.1 / 3}};
    auto shards = partition(ds, plan);
    const double expect = 0.9 * static_cast<double>(positives);
    EXPECT_LE(std::abs(static_cast<double>(shards[0].count_label(1)) - expect), 1.0);
}

TEST(Partition, SingleClientGetsEverything) {
    auto ds = test::heart_rows(77, 1);
    PartitionPlan plan;
    plan.clients = 1;
    auto shards = partition(ds, plan);
    ASSERT_EQ(shards.size(), 1u);
    EXPECT_EQ(shards[0], ds);
}

TEST(Partition, DeterministicUnderSeed) {
    auto ds = test::heart_rows(500, 1);
    PartitionPlan plan;
    plan.seed = 99;
    EXPECT_EQ(partition(ds, plan), partition(ds, plan));
}

TEST(Partition, InfeasiblePlansAreRejected) {
    auto ds = test::heart_rows(10, 1);
    PartitionPlan plan;
    plan.clients = 11;
    EXPECT_THROW(partition(ds, plan), PlanError);
    plan.clients = 2;
    plan.proportions = {{1.0, 0.0}, {1.0, 0.0}};
    EXPECT_THROW(partition(ds, plan), PlanError);
    plan.proportions = {{0.5, 0.6}, {0.5, 0.5}};
    EXPECT_THROW(partition(ds, plan), PlanError);
}

TEST(Holdout, Examples) {
    auto ds = test::heart_rows(1000, 8);
    auto sel = holdout_select(ds, 400, 1);
    EXPECT_EQ(sel.size(), 400u);
    EXPECT_EQ(sel, holdout_select(ds, 400, 1));

    auto split = holdout_split(ds, 400, 1);
    EXPECT_EQ(split.rest.size(), 600u);

    TabularDataset idx(one_column(0, 1e6));
    for (int i = 0; i < 50; ++i) idx.add_row({static_cast<double>(i)}, 0);
    auto all = holdout_select(idx, 50, 3);
    std::set<double> values;
    for (const auto& r : all.features()) values.insert(r[0]);
    EXPECT_EQ(values.size(), 50u);
    auto some = holdout_select(idx, 20, 3);
    values.clear();
    for (const auto& r : some.features()) values.insert(r[0]);
    EXPECT_EQ(values.size(), 20u);
    EXPECT_THROW(holdout_select(idx, 51, 3), UsageError);
}

TEST(Resample, DrawsFromSourceWithReplacement) {
    TabularDataset idx(one_column(0, 1e6));
    for (int i = 0; i < 20; ++i) idx.add_row({static_cast<double>(i)}, i % 2);
    const auto r = resample(idx, 200, 4);
    ASSERT_EQ(r.size(), 200u);
    EXPECT_EQ(r, resample(idx, 200, 4));
    EXPECT_NE(r, resample(idx, 200, 5));
    std::set<double> values;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double v = r.row(i)[0];
        values.insert(v);
        EXPECT_EQ(r.label(i), static_cast<int>(v) % 2);  // rows keep their labels
    }
    EXPECT_LT(values.size(), 21u);
    EXPECT_GT(values.size(), 10u);  // 200 draws from 20 values miss almost none
    EXPECT_THROW(resample(TabularDataset(one_column(0, 1)), 3, 1), UsageError);
}
