#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "gfl/wire.hpp"
#include "helpers.hpp"

using namespace gfl;

namespace {

Bytes bytes_of(std::initializer_list<int> v) {
    Bytes b;
    for (int x : v) b.push_back(static_cast<std::uint8_t>(x));
    return b;
}

}  // namespace

// Fixtures below are written out by hand from the documented layout.
TEST(WireGolden, EmptyModelIsSevenBytes) {
    EXPECT_EQ(encode_weights(ModelWeights{}), bytes_of({'G', 'F', 'L', '1', 1, 0, 0}));
}

TEST(WireGolden, SingleVector) {
    ModelWeights w;
    w.add("a", Tensor({2}, std::vector<double>{1.0, -2.5}));
    EXPECT_EQ(encode_weights(w), bytes_of({'G', 'F', 'L', '1', 1, 1, 0,  // header, 1 layer
                                           1, 'a', 1, 2, 0, 0, 0,        // name, rank 1, dim 2
                                           0x00, 0x00, 0x80, 0x3F,       // 1.0f
                                           0x00, 0x00, 0x20, 0xC0}));    // -2.5f
}

TEST(WireGolden, TwoLayersRankTwo) {
    ModelWeights w;
    w.add("w", Tensor({1, 2}, std::vector<double>{0.5, 0.0}));
    w.add("bb", Tensor({1}, std::vector<double>{-1.0}));
    EXPECT_EQ(encode_weights(w), bytes_of({'G', 'F', 'L', '1', 1, 2, 0,
                                           1, 'w', 2, 1, 0, 0, 0, 2, 0, 0, 0,
                                           0x00, 0x00, 0x00, 0x3F, 0x00, 0x00, 0x00, 0x00,
                                           2, 'b', 'b', 1, 1, 0, 0, 0,
                                           0x00, 0x00, 0x80, 0xBF}));
}

TEST(WireGolden, MessageFrame) {
    auto m = WireMessage::control(MessageKind::kRelease, 3, 258);
    EXPECT_EQ(encode_message(m), bytes_of({6, 3, 0, 0, 0, 2, 1, 0, 0, 0, 0, 0, 0}));
}

TEST(Wire, RoundTripWithinF32Ulp) {
    Rng rng(1234);
    for (int trial = 0; trial < 1000; ++trial) {
        auto w = test::random_weights(rng, 1 + trial % 6, 12);
        auto back = decode_weights(encode_weights(w));
        ASSERT_TRUE(congruent(w, back));
        for (std::size_t l = 0; l < w.layer_count(); ++l)
            for (std::size_t i = 0; i < w[l].size(); ++i) {
                const double v = w[l].values()[i];
                const float f = static_cast<float>(v);
                const double ulp = std::nextafter(std::abs(f), INFINITY) - std::abs(f);
                EXPECT_LE(std::abs(back[l].values()[i] - v), ulp);
            }
        EXPECT_EQ(back, quantize_f32(w));
        EXPECT_EQ(encode_weights(back), encode_weights(w));
    }
}

TEST(Wire, CorruptMagicNamesOffsetZero) {
    auto b = encode_weights(ModelWeights{});
    b[1] = 'X';
    try {
        decode_weights(b);
        FAIL();
    } catch (const DecodeError& e) {
        EXPECT_EQ(e.offset(), 0u);
    }
}

TEST(Wire, DecodeErrorsCarryOffsets) {
    ModelWeights w;
    w.add("a", Tensor({2}, std::vector<double>{1.0, 2.0}));
    const auto good = encode_weights(w);

    auto truncated = good;
    truncated.pop_back();
    EXPECT_THROW(decode_weights(truncated), DecodeError);

    auto version = good;
    version[4] = 9;
    try {
        decode_weights(version);
        FAIL();
    } catch (const DecodeError& e) {
        EXPECT_EQ(e.offset(), 4u);
    }

    auto rank = good;
    rank[9] = 9;
    try {
        decode_weights(rank);
        FAIL();
    } catch (const DecodeError& e) {
        EXPECT_EQ(e.offset(), 9u);
    }

    auto trailing = good;
    trailing.push_back(0);
    EXPECT_THROW(decode_weights(trailing), DecodeError);

    auto nan = good;
    nan[14] = 0x00, nan[15] = 0x00, nan[16] = 0xC0, nan[17] = 0x7F;
    EXPECT_THROW(decode_weights(nan), DecodeError);
}

TEST(Wire, EncodeRejectsLongNamesAndHighRank) {
    ModelWeights long_name;
    long_name.add(std::string(256, 'n'), Tensor({1}));
    EXPECT_THROW(encode_weights(long_name), EncodeError);
    ModelWeights ok_name;
    ok_name.add(std::string(255, 'n'), Tensor({1}));
    EXPECT_NO_THROW(encode_weights(ok_name));

    ModelWeights rank9;
    rank9.add("r", Tensor(Shape(9, 1)));
    EXPECT_THROW(encode_weights(rank9), EncodeError);
    ModelWeights rank8;
    rank8.add("r", Tensor(Shape(8, 1)));
    EXPECT_NO_THROW(decode_weights(encode_weights(rank8)));

    ModelWeights inf;
    inf.add("x", Tensor({1}, std::vector<double>{INFINITY}));
    EXPECT_THROW(encode_weights(inf), EncodeError);
}

TEST(Wire, EncodeIsPure) {
    Rng rng(3);
    auto w = test::random_weights(rng, 4, 8);
    EXPECT_EQ(encode_weights(w), encode_weights(w));
    EXPECT_EQ(weight_hash(w), weight_hash(w));
    EXPECT_EQ(weight_hash(w).size(), 16u);
}

TEST(Message, RoundTripAndKindConsistency) {
    Rng rng(8);
    auto w = test::random_weights(rng, 3, 5);
    for (auto kind : {MessageKind::kInitModel, MessageKind::kClientUpdate, MessageKind::kGlobalModel,
                      MessageKind::kNeighborUpdate}) {
        auto m = WireMessage::with_weights(kind, 7, 2, w);
        auto back = decode_message(encode_message(m));
        EXPECT_EQ(back.kind, kind);
        EXPECT_EQ(back.round, 7u);
        EXPECT_EQ(back.sender, 2u);
        EXPECT_EQ(back.weights(), quantize_f32(w));
    }
    WireMessage bad{MessageKind::kHello, 0, 1, encode_weights(w)};
    EXPECT_THROW(encode_message(bad), UsageError);
    WireMessage empty{MessageKind::kClientUpdate, 0, 1, {}};
    EXPECT_THROW(encode_message(empty), UsageError);

    auto frame = encode_message(WireMessage::control(MessageKind::kHello, 0, 1));
    frame[0] = 42;
    EXPECT_THROW(decode_message(frame), DecodeError);
}

TEST(Message, PayloadErrorsReportFrameOffsets) {
    auto m = WireMessage::with_weights(MessageKind::kGlobalModel, 0, 0, ModelWeights{});
    m.payload[0] = 'X';
    try {
        m.weights();
        FAIL();
    } catch (const DecodeError& e) {
        EXPECT_EQ(e.offset(), WireMessage::kMessageHeaderSize);
    }
}

TEST(Checkpoint, FileRoundTripAndCorruption) {
    Rng rng(4);
    auto w = test::random_weights(rng, 3, 6);
    const auto path = std::filesystem::temp_directory_path() / "gfl_test_ckpt.gflw";
    save_checkpoint(path, w);
    EXPECT_EQ(load_checkpoint(path), quantize_f32(w));
    {
        std::ofstream f(path, std::ios::binary);
        f << "GFX1";
    }
    EXPECT_THROW(load_checkpoint(path), DecodeError);
    std::filesystem::remove(path);
    EXPECT_THROW(load_checkpoint(path), IoError);
}
