#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gfl/error.hpp"
#include "gfl/random.hpp"
#include "gfl/tensor.hpp"

namespace gfl {

inline constexpr double kProbEpsilon = 1e-7;

inline double sigmoid(double x) noexcept {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double clamp_prob(double p) noexcept { return std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon); }

// Binary cross-entropy of one prediction, probabilities clamped to [eps, 1-eps].
inline double loss_bce(double pred, int label) {
    if (label != 0 && label != 1) throw UsageError("label must be 0 or 1");
    const double p = clamp_prob(pred);
    return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

// p >= 0.5 is class 1, ties included.
inline int classify(double p) noexcept { return p >= 0.5 ? 1 : 0; }

struct SgdConfig {
    double learning_rate = 0.01;
    std::size_t batch_size = 32;
    std::size_t epochs = 1;

    void validate() const {
        if (!(learning_rate > 0)) throw UsageError("learning rate must be positive");
        if (batch_size < 1) throw UsageError("batch size must be >= 1");
        if (epochs < 1) throw UsageError("epochs must be >= 1");
    }
};

// In-place w -= lr * g.
inline void sgd_update(ModelWeights& weights, const ModelWeights& gradient, double lr) {
    require_congruent(weights, gradient, "sgd_step");
    zip_apply(weights, gradient, [lr](double& w, double g) { w -= lr * g; });
}

inline ModelWeights sgd_step(const ModelWeights& weights, const ModelWeights& gradient, double lr) {
    if (!(lr > 0)) throw UsageError("learning rate must be positive");
    ModelWeights out = weights;
    sgd_update(out, gradient, lr);
    return out;
}

struct LossAndGradient {
    double loss = 0.0;
    ModelWeights gradient;
};

// Single-layer GRU over the feature row read as a sequence of scalars, followed
// by a dense sigmoid readout on the last hidden state.
//
//   z = sig(w_z x + U_z h + b_z)       update gate
//   r = sig(w_r x + U_r h + b_r)       reset gate
//   n = tanh(w_n x + U_n (r*h) + b_n)  candidate
//   h' = (1 - z) * n + z * h
//   p = sig(w_o . h_T + b_o)
class GruClassifier {
public:
    // Layer order is fixed; the index constants below refer to it.
    enum Layer : std::size_t { kWz, kUz, kBz, kWr, kUr, kBr, kWn, kUn, kBn, kWo, kBo, kLayerCount };

    static constexpr const char* kLayerNames[kLayerCount] = {
        "gru.w_z", "gru.u_z", "gru.b_z", "gru.w_r", "gru.u_r", "gru.b_r",
        "gru.w_n", "gru.u_n", "gru.b_n", "out.w",   "out.b"};

    static std::size_t parameter_count(std::size_t hidden) noexcept {
        return 3 * (hidden + hidden * hidden + hidden) + hidden + 1;
    }

    // Weights drawn uniform(-scale, scale).
    static GruClassifier random(std::size_t input_size, std::size_t hidden, Rng& rng, double scale = 0.1) {
        GruClassifier m = zeros(input_size, hidden);
        std::uniform_real_distribution<double> dist(-scale, scale);
        for (std::size_t i = 0; i < kLayerCount; ++i)
            for (double& v : m.weights_[i].values()) v = dist(rng);
        return m;
    }

    static GruClassifier zeros(std::size_t input_size, std::size_t hidden) {
        if (input_size == 0 || hidden == 0) throw UsageError("GRU input and hidden size must be positive");
        ModelWeights w;
        const std::size_t h = hidden;
        for (int gate = 0; gate < 3; ++gate) {
            w.add(kLayerNames[gate * 3 + 0], Tensor({h, 1}));
            w.add(kLayerNames[gate * 3 + 1], Tensor({h, h}));
            w.add(kLayerNames[gate * 3 + 2], Tensor({h}));
        }
        w.add(kLayerNames[kWo], Tensor({1, h}));
        w.add(kLayerNames[kBo], Tensor({1}));
        return GruClassifier(std::move(w), input_size, hidden);
    }

    // Rebuilds a classifier around existing weights (e.g. a decoded checkpoint).
    static GruClassifier from_weights(ModelWeights weights, std::size_t input_size) {
        const Tensor* uz = weights.find(kLayerNames[kUz]);
        if (!uz || uz->rank() != 2) throw SchemaError("weights do not describe a GRU classifier");
        GruClassifier ref = zeros(input_size, uz->shape()[0]);
        if (!congruent(ref.weights_, weights)) throw SchemaError("weights do not describe a GRU classifier");
        ref.weights_ = std::move(weights);
        return ref;
    }

    const ModelWeights& weights() const noexcept { return weights_; }
    ModelWeights& weights() noexcept { return weights_; }
    void set_weights(ModelWeights w) {
        require_congruent(weights_, w, "GruClassifier::set_weights");
        weights_ = std::move(w);
    }

    std::size_t input_size() const noexcept { return input_size_; }
    std::size_t hidden_size() const noexcept { return hidden_; }

    double forward(std::span<const double> row) const {
        check_row(row);
        Cache cache(input_size_, hidden_);
        return run_forward(row, cache);
    }

    // Adds the gradient of loss_bce(forward(row), label) into `grad` and
    // returns the loss. `grad` must be congruent with weights().
    double accumulate_gradient(std::span<const double> row, int label, ModelWeights& grad) const {
        check_row(row);
        Cache cache(input_size_, hidden_);
        const double p = run_forward(row, cache);
        run_backward(row, cache, p - static_cast<double>(label), grad);
        return loss_bce(p, label);
    }

    // Mean loss and mean per-sample gradient over a non-empty batch.
    LossAndGradient backward(std::span<const std::vector<double>> rows, std::span<const int> labels) const {
        if (rows.empty()) throw UsageError("backward needs a non-empty batch");
        if (rows.size() != labels.size()) throw UsageError("rows and labels differ in length");
        LossAndGradient out{0.0, weights_.zeros_like()};
        for (std::size_t i = 0; i < rows.size(); ++i) out.loss += accumulate_gradient(rows[i], labels[i], out.gradient);
        const double inv = 1.0 / static_cast<double>(rows.size());
        out.loss *= inv;
        for (std::size_t i = 0; i < out.gradient.layer_count(); ++i)
            for (double& g : out.gradient[i].values()) g *= inv;
        return out;
    }

private:
    GruClassifier(ModelWeights w, std::size_t input_size, std::size_t hidden)
        : weights_(std::move(w)), input_size_(input_size), hidden_(hidden) {}

    struct Cache {
        Cache(std::size_t steps, std::size_t h)
            : h(steps + 1, std::vector<double>(h, 0.0)), z(steps, std::vector<double>(h)),
              r(steps, std::vector<double>(h)), n(steps, std::vector<double>(h)),
              rh(steps, std::vector<double>(h)) {}
        std::vector<std::vector<double>> h, z, r, n, rh;
    };

    void check_row(std::span<const double> row) const {
        if (row.size() != input_size_)
            throw SchemaError("row has " + std::to_string(row.size()) + " features, model expects " +
                              std::to_string(input_size_));
    }

    const double* p(Layer l) const noexcept { return weights_[l].values().data(); }

    double run_forward(std::span<const double> row, Cache& c) const {
        const std::size_t H = hidden_;
        const double *wz = p(kWz), *uz = p(kUz), *bz = p(kBz);
        const double *wr = p(kWr), *ur = p(kUr), *br = p(kBr);
        const double *wn = p(kWn), *un = p(kUn), *bn = p(kBn);
        for (std::size_t t = 0; t < input_size_; ++t) {
            const double x = row[t];
            const double* hp = c.h[t].data();
            double* z = c.z[t].data();
            double* r = c.r[t].data();
            double* n = c.n[t].data();
            double* rh = c.rh[t].data();
            double* hn = c.h[t + 1].data();
            for (std::size_t i = 0; i < H; ++i) {
                double az = wz[i] * x + bz[i];
                double ar = wr[i] * x + br[i];
                const double* uzi = uz + i * H;
                const double* uri = ur + i * H;
                for (std::size_t j = 0; j < H; ++j) {
                    az += uzi[j] * hp[j];
                    ar += uri[j] * hp[j];
                }
                z[i] = sigmoid(az);
                r[i] = sigmoid(ar);
            }
            for (std::size_t j = 0; j < H; ++j) rh[j] = r[j] * hp[j];
            for (std::size_t i = 0; i < H; ++i) {
                double an = wn[i] * x + bn[i];
                const double* uni = un + i * H;
                for (std::size_t j = 0; j < H; ++j) an += uni[j] * rh[j];
                n[i] = std::tanh(an);
                hn[i] = (1.0 - z[i]) * n[i] + z[i] * hp[i];
            }
        }
        const double* wo = p(kWo);
        double logit = p(kBo)[0];
        const double* hT = c.h[input_size_].data();
        for (std::size_t i = 0; i < H; ++i) logit += wo[i] * hT[i];
        return sigmoid(logit);
    }

    void run_backward(std::span<const double> row, const Cache& c, double dlogit, ModelWeights& grad) const {
        const std::size_t H = hidden_;
        auto g = [&grad](Layer l) { return grad[l].values().data(); };
        double *gwz = g(kWz), *guz = g(kUz), *gbz = g(kBz);
        double *gwr = g(kWr), *gur = g(kUr), *gbr = g(kBr);
        double *gwn = g(kWn), *gun = g(kUn), *gbn = g(kBn);
        double *gwo = g(kWo), *gbo = g(kBo);
        const double *uz = p(kUz), *ur = p(kUr), *un = p(kUn), *wo = p(kWo);

        std::vector<double> dh(H), dprev(H), daz(H), dar(H), dan(H), drh(H);
        const double* hT = c.h[input_size_].data();
        gbo[0] += dlogit;
        for (std::size_t i = 0; i < H; ++i) {
            gwo[i] += dlogit * hT[i];
            dh[i] = dlogit * wo[i];
        }
        for (std::size_t t = input_size_; t-- > 0;) {
            const double x = row[t];
            const double* hp = c.h[t].data();
            const double* z = c.z[t].data();
            const double* r = c.r[t].data();
            const double* n = c.n[t].data();
            const double* rh = c.rh[t].data();
            for (std::size_t i = 0; i < H; ++i) {
                dan[i] = dh[i] * (1.0 - z[i]) * (1.0 - n[i] * n[i]);
                daz[i] = dh[i] * (hp[i] - n[i]) * z[i] * (1.0 - z[i]);
                dprev[i] = dh[i] * z[i];
                drh[i] = 0.0;
            }
            for (std::size_t i = 0; i < H; ++i) {
                gwn[i] += dan[i] * x;
                gbn[i] += dan[i];
                double* guni = gun + i * H;
                const double* uni = un + i * H;
                for (std::size_t j = 0; j < H; ++j) {
                    guni[j] += dan[i] * rh[j];
                    drh[j] += uni[j] * dan[i];
                }
            }
            for (std::size_t j = 0; j < H; ++j) {
                dar[j] = drh[j] * hp[j] * r[j] * (1.0 - r[j]);
                dprev[j] += drh[j] * r[j];
            }
            for (std::size_t i = 0; i < H; ++i) {
                gwz[i] += daz[i] * x;
                gbz[i] += daz[i];
                gwr[i] += dar[i] * x;
                gbr[i] += dar[i];
                double* guzi = guz + i * H;
                double* guri = gur + i * H;
                const double* uzi = uz + i * H;
                const double* uri = ur + i * H;
                for (std::size_t j = 0; j < H; ++j) {
                    guzi[j] += daz[i] * hp[j];
                    guri[j] += dar[i] * hp[j];
                    dprev[j] += uzi[j] * daz[i] + uri[j] * dar[i];
                }
            }
            dh.swap(dprev);
        }
    }

    ModelWeights weights_;
    std::size_t input_size_ = 0;
    std::size_t hidden_ = 0;
};

enum class OutputActivation { kTanh, kSigmoid };

// Fully connected network with ReLU hidden layers. Layers are named
// "<prefix>.l<i>.w" ([out, in]) and "<prefix>.l<i>.b" ([out]).
class Mlp {
public:
    struct Trace {
        // acts[0] is the input; acts[i] is the output of layer i after its activation.
        std::vector<std::vector<double>> acts;
    };

    static ModelWeights init(const std::string& prefix, std::span<const std::size_t> sizes, Rng& rng) {
        if (sizes.size() < 2) throw UsageError("an MLP needs at least input and output sizes");
        ModelWeights w;
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            const std::size_t in = sizes[l], out = sizes[l + 1];
            const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
            std::uniform_real_distribution<double> dist(-limit, limit);
            Tensor wt({out, in});
            for (double& v : wt.values()) v = dist(rng);
            w.add(prefix + ".l" + std::to_string(l) + ".w", std::move(wt));
            w.add(prefix + ".l" + std::to_string(l) + ".b", Tensor({out}));
        }
        return w;
    }

    static std::size_t layer_count(const ModelWeights& w) noexcept { return w.layer_count() / 2; }
    static std::size_t input_size(const ModelWeights& w) { return w[0].shape()[1]; }
    static std::size_t output_size(const ModelWeights& w) { return w[w.layer_count() - 2].shape()[0]; }

    // Returns the activated output. For kSigmoid, `logits` receives the pre-activation.
    static std::vector<double> forward(const ModelWeights& w, std::span<const double> input, OutputActivation act,
                                       Trace* trace = nullptr, std::vector<double>* logits = nullptr) {
        const std::size_t layers = layer_count(w);
        if (input.size() != input_size(w)) throw SchemaError("MLP input has wrong length");
        std::vector<double> cur(input.begin(), input.end());
        if (trace) {
            trace->acts.clear();
            trace->acts.push_back(cur);
        }
        for (std::size_t l = 0; l < layers; ++l) {
            const Tensor& wt = w[2 * l];
            const Tensor& bt = w[2 * l + 1];
            const std::size_t out = wt.shape()[0], in = wt.shape()[1];
            std::vector<double> next(out);
            for (std::size_t i = 0; i < out; ++i) {
                double a = bt[i];
                const double* row = wt.values().data() + i * in;
                for (std::size_t j = 0; j < in; ++j) a += row[j] * cur[j];
                next[i] = a;
            }
            const bool last = l + 1 == layers;
            if (!last) {
                for (double& v : next) v = v > 0 ? v : 0.0;
            } else {
                if (logits) *logits = next;
                for (double& v : next) v = act == OutputActivation::kTanh ? std::tanh(v) : sigmoid(v);
            }
            cur = std::move(next);
            if (trace) trace->acts.push_back(cur);
        }
        return cur;
    }

    // Back-propagates `d_pre_out` (gradient w.r.t. the last layer's
    // pre-activation) through the traced pass. Parameter gradients are added
    // into `grad` when non-null; the input gradient is written to `d_input`
    // when non-null.
    static void backward(const ModelWeights& w, const Trace& trace, std::span<const double> d_pre_out,
                         ModelWeights* grad, std::vector<double>* d_input) {
        const std::size_t layers = layer_count(w);
        std::vector<double> delta(d_pre_out.begin(), d_pre_out.end());
        for (std::size_t l = layers; l-- > 0;) {
            const Tensor& wt = w[2 * l];
            const std::size_t out = wt.shape()[0], in = wt.shape()[1];
            const std::vector<double>& a_in = trace.acts[l];
            if (grad) {
                double* gw = (*grad)[2 * l].values().data();
                double* gb = (*grad)[2 * l + 1].values().data();
                for (std::size_t i = 0; i < out; ++i) {
                    gb[i] += delta[i];
                    double* grow = gw + i * in;
                    for (std::size_t j = 0; j < in; ++j) grow[j] += delta[i] * a_in[j];
                }
            }
            if (l == 0 && !d_input) break;
            std::vector<double> prev(in, 0.0);
            for (std::size_t i = 0; i < out; ++i) {
                const double* row = wt.values().data() + i * in;
                for (std::size_t j = 0; j < in; ++j) prev[j] += row[j] * delta[i];
            }
            if (l == 0) {
                *d_input = std::move(prev);
                break;
            }
            // ReLU derivative of the hidden layer feeding this one.
            for (std::size_t j = 0; j < in; ++j)
                if (a_in[j] <= 0) prev[j] = 0.0;
            delta = std::move(prev);
        }
    }
};

}  // namespace gfl
