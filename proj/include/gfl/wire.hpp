#pragma once

#include <array>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <iomanip>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "gfl/error.hpp"
#include "gfl/random.hpp"
#include "gfl/tensor.hpp"

namespace gfl {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::array<std::uint8_t, 4> kWeightsMagic{'G', 'F', 'L', '1'};
inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kMaxRank = 8;

namespace wire {

inline void put_u8(Bytes& out, std::uint8_t v) { out.push_back(v); }

inline void put_u16(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(Bytes& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_f32(Bytes& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

inline void store_u32(std::uint8_t* p, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

inline std::uint32_t load_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

// Bounds-checked little-endian reader; errors carry the absolute offset.
class Reader {
public:
    Reader(std::span<const std::uint8_t> bytes, std::size_t base = 0) : bytes_(bytes), base_(base) {}

    std::size_t offset() const noexcept { return base_ + pos_; }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

    void need(std::size_t n, const char* what) const {
        if (remaining() < n) throw DecodeError(offset(), std::string("truncated ") + what);
    }

    std::uint8_t u8(const char* what) {
        need(1, what);
        return bytes_[pos_++];
    }

    std::uint16_t u16(const char* what) {
        need(2, what);
        std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = load_u32(bytes_.data() + pos_);
        pos_ += 4;
        return v;
    }

    std::span<const std::uint8_t> take(std::size_t n, const char* what) {
        need(n, what);
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t base_;
    std::size_t pos_ = 0;
};

}  // namespace wire

// Layout: "GFL1" | version u8 | layer count u16 LE | per layer:
// name length u8, name bytes, rank u8, dims u32 LE..., values f32 LE row-major.
inline Bytes encode_weights(const ModelWeights& w) {
    if (w.layer_count() > 0xFFFF) throw EncodeError("too many layers for the wire format");
    Bytes out(kWeightsMagic.begin(), kWeightsMagic.end());
    wire::put_u8(out, kWireVersion);
    wire::put_u16(out, static_cast<std::uint16_t>(w.layer_count()));
    for (const auto& layer : w.layers()) {
        if (layer.name.empty() || layer.name.size() > 255)
            throw EncodeError("layer name '" + layer.name.substr(0, 32) + "' must be 1..255 bytes");
        const auto& shape = layer.tensor.shape();
        if (shape.size() > kMaxRank) throw EncodeError("layer '" + layer.name + "' has rank > 8");
        wire::put_u8(out, static_cast<std::uint8_t>(layer.name.size()));
        out.insert(out.end(), layer.name.begin(), layer.name.end());
        wire::put_u8(out, static_cast<std::uint8_t>(shape.size()));
        for (auto d : shape) {
            if (d > 0xFFFFFFFFu) throw EncodeError("dimension too large");
            wire::put_u32(out, static_cast<std::uint32_t>(d));
        }
        for (double v : layer.tensor.values()) {
            if (!std::isfinite(v)) throw EncodeError("layer '" + layer.name + "' holds a non-finite value");
            wire::put_f32(out, static_cast<float>(v));
        }
    }
    return out;
}

// `base_offset` is added to reported error offsets when the body is embedded
// in a larger buffer.
inline ModelWeights decode_weights(std::span<const std::uint8_t> bytes, std::size_t base_offset = 0) {
    wire::Reader rd(bytes, base_offset);
    auto magic = rd.take(4, "magic");
    if (!std::equal(magic.begin(), magic.end(), kWeightsMagic.begin()))
        throw DecodeError(base_offset, "bad magic, expected \"GFL1\"");
    const std::size_t version_at = rd.offset();
    if (rd.u8("version") != kWireVersion) throw DecodeError(version_at, "unsupported format version");
    const std::uint16_t count = rd.u16("layer count");
    ModelWeights w;
    for (std::uint16_t l = 0; l < count; ++l) {
        const std::size_t name_at = rd.offset();
        const std::uint8_t name_len = rd.u8("name length");
        if (name_len == 0) throw DecodeError(name_at, "empty layer name");
        auto name_bytes = rd.take(name_len, "layer name");
        std::string name(name_bytes.begin(), name_bytes.end());
        const std::size_t rank_at = rd.offset();
        const std::uint8_t rank = rd.u8("rank");
        if (rank == 0 || rank > kMaxRank) throw DecodeError(rank_at, "rank must be 1..8");
        Shape shape;
        std::uint64_t n = 1;
        for (std::uint8_t i = 0; i < rank; ++i) {
            const std::size_t dim_at = rd.offset();
            const std::uint32_t d = rd.u32("dimension");
            if (d == 0) throw DecodeError(dim_at, "zero dimension");
            shape.push_back(d);
            n *= d;
            if (n > rd.remaining()) throw DecodeError(dim_at, "tensor larger than remaining payload");
        }
        const std::size_t values_at = rd.offset();
        auto raw = rd.take(static_cast<std::size_t>(n) * 4, "tensor values");
        std::vector<double> values(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < values.size(); ++i) {
            const float f = std::bit_cast<float>(wire::load_u32(raw.data() + 4 * i));
            if (!std::isfinite(f)) throw DecodeError(values_at + 4 * i, "non-finite value");
            values[i] = f;
        }
        if (w.find(name)) throw DecodeError(name_at, "duplicate layer name '" + name + "'");
        w.add(std::move(name), Tensor(std::move(shape), std::move(values)));
    }
    if (rd.remaining() != 0) throw DecodeError(rd.offset(), "trailing bytes after weights");
    return w;
}

// Weights as they look after a trip over the wire.
inline ModelWeights quantize_f32(const ModelWeights& w) {
    ModelWeights out = w;
    for (std::size_t i = 0; i < out.layer_count(); ++i)
        for (double& v : out[i].values()) v = static_cast<double>(static_cast<float>(v));
    return out;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

inline std::uint64_t hash_bytes(std::span<const std::uint8_t> bytes) {
    return fnv1a64(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

// FNV-1a over the wire encoding, as 16 hex digits.
inline std::string weight_hash(const ModelWeights& w) { return hex64(hash_bytes(encode_weights(w))); }

// Checkpoints (.gflw) hold exactly the encode_weights body.
inline void save_checkpoint(const std::filesystem::path& path, const ModelWeights& w) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const Bytes b = encode_weights(w);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

inline ModelWeights load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    Bytes b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_weights(b);
}

// ---------------------------------------------------------------------------
// Protocol messages

enum class MessageKind : std::uint8_t {
    kHello = 1,
    kInitModel = 2,
    kClientUpdate = 3,
    kGlobalModel = 4,
    kNeighborUpdate = 5,
    kRelease = 6,
    // Inference traffic for response-time measurement.
    kPredictRequest = 7,
    kPredictResult = 8,
};

inline const char* to_string(MessageKind k) {
    switch (k) {
        case MessageKind::kHello: return "HELLO";
        case MessageKind::kInitModel: return "INIT_MODEL";
        case MessageKind::kClientUpdate: return "CLIENT_UPDATE";
        case MessageKind::kGlobalModel: return "GLOBAL_MODEL";
        case MessageKind::kNeighborUpdate: return "NEIGHBOR_UPDATE";
        case MessageKind::kRelease: return "RELEASE";
        case MessageKind::kPredictRequest: return "PREDICT_REQUEST";
        case MessageKind::kPredictResult: return "PREDICT_RESULT";
    }
    return "?";
}

inline bool carries_weights(MessageKind k) noexcept { return k != MessageKind::kHello && k != MessageKind::kRelease; }

using NodeId = std::uint32_t;

struct WireMessage {
    MessageKind kind = MessageKind::kHello;
    std::uint32_t round = 0;
    NodeId sender = 0;
    Bytes payload;  // encode_weights body, or empty

    static WireMessage control(MessageKind kind, std::uint32_t round, NodeId sender) {
        return WireMessage{kind, round, sender, {}};
    }

    static WireMessage with_weights(MessageKind kind, std::uint32_t round, NodeId sender, const ModelWeights& w) {
        return WireMessage{kind, round, sender, encode_weights(w)};
    }

    ModelWeights weights() const { return decode_weights(payload, kMessageHeaderSize); }

    void validate() const {
        if (carries_weights(kind) == payload.empty())
            throw UsageError(std::string(to_string(kind)) + (payload.empty() ? " requires" : " must not carry") +
                             " a weights payload");
    }

    static constexpr std::size_t kMessageHeaderSize = 1 + 4 + 4 + 4;
};

// kind u8 | round u32 LE | sender u32 LE | payload length u32 LE | payload.
inline Bytes encode_message(const WireMessage& m) {
    m.validate();
    Bytes out;
    out.reserve(WireMessage::kMessageHeaderSize + m.payload.size());
    wire::put_u8(out, static_cast<std::uint8_t>(m.kind));
    wire::put_u32(out, m.round);
    wire::put_u32(out, m.sender);
    wire::put_u32(out, static_cast<std::uint32_t>(m.payload.size()));
    out.insert(out.end(), m.payload.begin(), m.payload.end());
    return out;
}

inline WireMessage decode_message(std::span<const std::uint8_t> bytes) {
    wire::Reader rd(bytes);
    WireMessage m;
    const std::uint8_t kind = rd.u8("message kind");
    if (kind < 1 || kind > 8) throw DecodeError(0, "unknown message kind");
    m.kind = static_cast<MessageKind>(kind);
    m.round = rd.u32("round");
    m.sender = rd.u32("sender");
    const std::size_t len_at = rd.offset();
    const std::uint32_t len = rd.u32("payload length");
    if (len != rd.remaining()) throw DecodeError(len_at, "payload length does not match frame");
    auto p = rd.take(len, "payload");
    m.payload.assign(p.begin(), p.end());
    if (carries_weights(m.kind) == m.payload.empty())
        throw DecodeError(len_at, std::string(to_string(m.kind)) + " has inconsistent payload");
    return m;
}

}  // namespace gfl
