#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lbc/binio.hpp"
#include "lbc/common.hpp"
#include "lbc/matrix.hpp"
#include "lbc/rng.hpp"

namespace lbc::nn {

enum class Activation : std::uint8_t { relu = 0, tanh = 1 };

inline Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    throw UsageError("unknown activation '" + name + "' (expected relu or tanh)");
}

inline const char* activation_name(Activation a) {
    return a == Activation::relu ? "relu" : "tanh";
}

// Dense feed-forward classifier: trunk of hidden layers, then K independent
// sigmoid output heads sharing the final trunk features.
struct NetworkSpec {
    std::uint32_t input_dim = 0;
    std::vector<std::uint32_t> hidden;
    std::uint32_t output_heads = 1;  // K; single-task uses 1
    Activation activation = Activation::relu;
    std::uint64_t init_seed = 1;
    // Head layer starts at zero so an untrained model outputs exactly 0.5
    // everywhere; trunk layers use uniform +-1/sqrt(fan_in).
    bool zero_init_heads = true;

    void validate() const {
        if (input_dim == 0) throw UsageError("NetworkSpec: input_dim must be positive");
        if (output_heads == 0) throw UsageError("NetworkSpec: need at least one output head");
        for (auto h : hidden)
            if (h == 0) throw UsageError("NetworkSpec: hidden widths must be positive");
    }

    std::vector<std::uint32_t> layer_dims() const {
        std::vector<std::uint32_t> dims;
        dims.push_back(input_dim);
        dims.insert(dims.end(), hidden.begin(), hidden.end());
        dims.push_back(output_heads);
        return dims;
    }
};

// Weights and biases per layer; also reused for gradients and Adam moments.
struct ParamSet {
    std::vector<Matrix> w;                   // w[l]: dims[l] x dims[l+1]
    std::vector<std::vector<double>> b;      // b[l]: dims[l+1]

    static ParamSet zeros(const std::vector<std::uint32_t>& dims) {
        ParamSet p;
        for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
            p.w.emplace_back(dims[l], dims[l + 1]);
            p.b.emplace_back(dims[l + 1], 0.0);
        }
        return p;
    }

    static ParamSet zeros_like(const ParamSet& other) {
        ParamSet p;
        for (const auto& m : other.w) p.w.emplace_back(m.rows, m.cols);
        for (const auto& v : other.b) p.b.emplace_back(v.size(), 0.0);
        return p;
    }

    std::size_t layers() const { return w.size(); }
};

struct ModelState {
    NetworkSpec spec;
    ParamSet params;
    std::uint64_t step = 0;
};

inline ModelState init_model(const NetworkSpec& spec) {
    spec.validate();
    ModelState model;
    model.spec = spec;
    const auto dims = spec.layer_dims();
    model.params = ParamSet::zeros(dims);
    Rng rng(spec.init_seed);
    const std::size_t last = model.params.layers() - 1;
    for (std::size_t l = 0; l < model.params.layers(); ++l) {
        if (l == last && spec.zero_init_heads) continue;
        const double limit = 1.0 / std::sqrt(static_cast<double>(dims[l]));
        for (double& x : model.params.w[l].a) x = rng.next_uniform(-limit, limit);
        // biases stay zero
    }
    return model;
}

// --- numerically safe pieces -----------------------------------------------

// log(1 + e^x) without overflow.
inline double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Sigmoid of the logit clamped to +-36, so reported probabilities stay
// strictly inside (0, 1) in double precision.
inline double sigmoid_clamped(double x) {
    if (x > 36.0) x = 36.0;
    if (x < -36.0) x = -36.0;
    return sigmoid(x);
}

// --- forward / backward -----------------------------------------------------

struct ForwardCache {
    std::vector<Matrix> acts;  // acts[0] = input, acts[l] = trunk activation l
};

inline Matrix forward_logits(const ModelState& model, const Matrix& batch,
                             ForwardCache* cache = nullptr) {
    if (batch.cols != model.spec.input_dim)
        throw UsageError("forward: batch has " + std::to_string(batch.cols) +
                         " columns, model expects " + std::to_string(model.spec.input_dim));
    if (cache) {
        cache->acts.clear();
        cache->acts.push_back(batch);
    }
    Matrix cur = batch;
    Matrix next;
    const std::size_t layers = model.params.layers();
    for (std::size_t l = 0; l < layers; ++l) {
        matmul(cur, model.params.w[l], next);
        add_row_vector(next, model.params.b[l]);
        if (l + 1 < layers) {
            if (model.spec.activation == Activation::relu) {
                for (double& x : next.a) x = x > 0.0 ? x : 0.0;
            } else {
                for (double& x : next.a) x = std::tanh(x);
            }
            if (cache) cache->acts.push_back(next);
        }
        cur = std::move(next);
        next = Matrix();
    }
    return cur;  // B x K logits
}

// Head probabilities p_k(>|x), every entry strictly in (0, 1).
inline Matrix forward(const ModelState& model, const Matrix& batch) {
    Matrix logits = forward_logits(model, batch);
    for (double& x : logits.a) x = sigmoid_clamped(x);
    return logits;
}

// Reverse-mode gradients of a scalar loss given d(loss)/d(logits).
inline ParamSet backward(const ModelState& model, const ForwardCache& cache,
                         const Matrix& logit_grad) {
    const std::size_t layers = model.params.layers();
    if (cache.acts.size() != layers)
        throw UsageError("backward: cache does not match model depth");
    if (logit_grad.rows != cache.acts[0].rows || logit_grad.cols != model.spec.output_heads)
        throw UsageError("backward: logit gradient has wrong shape");

    ParamSet grads = ParamSet::zeros_like(model.params);
    Matrix g = logit_grad;
    Matrix g_prev;
    for (std::size_t l = layers; l-- > 0;) {
        matmul_tn_acc(cache.acts[l], g, grads.w[l]);
        column_sums(g, grads.b[l]);
        if (l == 0) break;
        matmul_nt(g, model.params.w[l], g_prev);
        const Matrix& act = cache.acts[l];
        if (model.spec.activation == Activation::relu) {
            for (std::size_t i = 0; i < g_prev.a.size(); ++i)
                if (act.a[i] <= 0.0) g_prev.a[i] = 0.0;
        } else {
            for (std::size_t i = 0; i < g_prev.a.size(); ++i)
                g_prev.a[i] *= 1.0 - act.a[i] * act.a[i];
        }
        g = std::move(g_prev);
        g_prev = Matrix();
    }
    return grads;
}

// --- Adam --------------------------------------------------------------------

struct AdamState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    ParamSet m;  // first moments, lazily shaped on the first step
    ParamSet v;  // second moments

    void validate() const {
        if (!(learning_rate > 0.0)) throw UsageError("AdamState: learning rate must be positive");
        if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
            throw UsageError("AdamState: betas must lie in [0, 1)");
        if (!(epsilon > 0.0)) throw UsageError("AdamState: epsilon must be positive");
    }
};

namespace detail {
inline void adam_update(std::span<double> p, std::span<const double> g, std::span<double> m,
                        std::span<double> v, const AdamState& s, double bc1, double bc2) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= s.learning_rate * mhat / (std::sqrt(vhat) + s.epsilon);
    }
}
}  // namespace detail

// Standard Adam with bias correction; increments the model's step counter.
inline void adam_step(ModelState& model, const ParamSet& grads, AdamState& adam) {
    adam.validate();
    if (adam.m.layers() == 0) {
        adam.m = ParamSet::zeros_like(model.params);
        adam.v = ParamSet::zeros_like(model.params);
    }
    if (grads.layers() != model.params.layers())
        throw UsageError("adam_step: gradient layer count mismatch");
    const auto t = static_cast<double>(++model.step);
    const double bc1 = 1.0 - std::pow(adam.beta1, t);
    const double bc2 = 1.0 - std::pow(adam.beta2, t);
    for (std::size_t l = 0; l < model.params.layers(); ++l) {
        if (!model.params.w[l].same_shape(grads.w[l]))
            throw UsageError("adam_step: gradient shape mismatch at layer " + std::to_string(l));
        detail::adam_update(model.params.w[l].a, grads.w[l].a, adam.m.w[l].a, adam.v.w[l].a,
                            adam, bc1, bc2);
        detail::adam_update(model.params.b[l], grads.b[l], adam.m.b[l], adam.v.b[l], adam, bc1,
                            bc2);
    }
}

// --- checkpointing ------------------------------------------------------------
//
// LBCM v1 (little-endian):
//   magic "LBCM" | u16 version | u32 input_dim | u32 n_hidden | u32 hidden[] |
//   u32 heads | u8 activation | u8 zero_init_heads | u64 init_seed | u64 step |
//   u8 has_adam | [f64 lr, beta1, beta2, epsilon] |
//   per layer: f64 weights (row-major), f64 biases |
//   if has_adam: first moments then second moments in the same layout
// Doubles are stored bit-exactly, so save/load round-trips are identity.

namespace detail {
inline void write_params(BinaryWriter& w, const ParamSet& p) {
    for (std::size_t l = 0; l < p.layers(); ++l) {
        w.f64_array(p.w[l].a);
        w.f64_array(p.b[l]);
    }
}
inline void read_params(BinaryReader& r, ParamSet& p) {
    for (std::size_t l = 0; l < p.layers(); ++l) {
        r.f64_array(p.w[l].a);
        r.f64_array(p.b[l]);
    }
}
}  // namespace detail

inline void save_checkpoint(const ModelState& model, const AdamState* adam,
                            const std::string& path) {
    BinaryWriter w(path);
    w.bytes("LBCM", 4);
    w.u16(1);
    w.u32(model.spec.input_dim);
    w.u32(static_cast<std::uint32_t>(model.spec.hidden.size()));
    for (auto h : model.spec.hidden) w.u32(h);
    w.u32(model.spec.output_heads);
    w.u8(static_cast<std::uint8_t>(model.spec.activation));
    w.u8(model.spec.zero_init_heads ? 1 : 0);
    w.u64(model.spec.init_seed);
    w.u64(model.step);
    const bool has_adam = adam != nullptr && adam->m.layers() > 0;
    w.u8(has_adam ? 1 : 0);
    if (has_adam) {
        w.f64(adam->learning_rate);
        w.f64(adam->beta1);
        w.f64(adam->beta2);
        w.f64(adam->epsilon);
    }
    detail::write_params(w, model.params);
    if (has_adam) {
        detail::write_params(w, adam->m);
        detail::write_params(w, adam->v);
    }
    w.close();
}

inline std::pair<ModelState, AdamState> load_checkpoint(const std::string& path) {
    BinaryReader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::string(magic, 4) != "LBCM")
        throw DataFormatError(path + ": bad magic, not an LBCM checkpoint");
    if (r.u16() != 1) throw DataFormatError(path + ": unsupported checkpoint version");
    NetworkSpec spec;
    spec.input_dim = r.u32();
    spec.hidden.resize(r.u32());
    for (auto& h : spec.hidden) h = r.u32();
    spec.output_heads = r.u32();
    spec.activation = static_cast<Activation>(r.u8());
    spec.zero_init_heads = r.u8() != 0;
    spec.init_seed = r.u64();
    spec.validate();

    ModelState model;
    model.spec = spec;
    model.step = r.u64();
    model.params = ParamSet::zeros(spec.layer_dims());
    AdamState adam;
    const bool has_adam = r.u8() != 0;
    if (has_adam) {
        adam.learning_rate = r.f64();
        adam.beta1 = r.f64();
        adam.beta2 = r.f64();
        adam.epsilon = r.f64();
    }
    detail::read_params(r, model.params);
    if (has_adam) {
        adam.m = ParamSet::zeros(spec.layer_dims());
        adam.v = ParamSet::zeros(spec.layer_dims());
        detail::read_params(r, adam.m);
        detail::read_params(r, adam.v);
    }
    if (!r.at_eof()) throw DataFormatError(path + ": trailing bytes after checkpoint data");
    return {std::move(model), std::move(adam)};
}

}  // namespace lbc::nn
