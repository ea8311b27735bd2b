#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lattag/kernels.hpp"
#include "lattag/rng.hpp"
#include "lattag/tensor.hpp"

namespace lattag {

enum class RunMode { train, infer };

// Trainable tensor with its gradient and RMSprop accumulator.
template <typename T>
struct Parameter {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> rms_acc;

    void allocate(std::string param_name, std::vector<std::size_t> shape) {
        name = std::move(param_name);
        value = Tensor<T>(shape);
        grad = Tensor<T>(shape);
        rms_acc = Tensor<T>(std::move(shape));
    }

    void zero_grad() { grad.fill(T(0)); }
};

template <typename T>
void glorot_init(Tensor<T>& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = static_cast<T>(rng.uniform(-limit, limit));
    }
}

// ---------------------------------------------------------------- affine ---

// y = x*W + b with x [batch x in], W [in x out], b [out].
template <typename T>
Tensor<T> affine(const Tensor<T>& x, const Parameter<T>& w, const Parameter<T>& b) {
    if (x.rank() != 2 || w.value.rank() != 2 || x.cols() != w.value.rows() ||
        b.value.size() != w.value.cols()) {
        throw ShapeMismatch("affine: x " + x.shape_string() + " W " + w.value.shape_string());
    }
    const std::size_t batch = x.rows(), in = x.cols(), out = w.value.cols();
    Tensor<T> y({batch, out});
    matmul(x.data(), w.value.data(), y.data(), batch, in, out);
    add_bias(y.data(), b.value.data(), batch, out);
    return y;
}

// Accumulates dW, db; returns dx.
template <typename T>
Tensor<T> affine_backward(const Tensor<T>& x, Parameter<T>& w, Parameter<T>& b,
                          const Tensor<T>& dy) {
    const std::size_t batch = x.rows(), in = x.cols(), out = w.value.cols();
    if (dy.rows() != batch || dy.cols() != out) {
        throw ShapeMismatch("affine_backward: dy " + dy.shape_string());
    }
    matmul_tn(x.data(), dy.data(), w.grad.data(), batch, in, out, /*accumulate=*/true);
    add_colsum(dy.data(), b.grad.data(), batch, out);
    Tensor<T> dx({batch, in});
    matmul_nt(dy.data(), w.value.data(), dx.data(), batch, out, in);
    return dx;
}

// --------------------------------------------------------------- softmax ---

// Row-wise stable softmax over the last dimension of a [batch x K] tensor.
template <typename T>
Tensor<T> softmax(const Tensor<T>& z) {
    const std::size_t batch = z.rows(), k = z.cols();
    Tensor<T> p({batch, k});
    const bool big = batch * k >= kernel_detail::kParallelThreshold;
#pragma omp parallel for schedule(static) if (big)
    for (long long bb = 0; bb < static_cast<long long>(batch); ++bb) {
        const T* zb = z.row(static_cast<std::size_t>(bb));
        T* pb = p.row(static_cast<std::size_t>(bb));
        T zmax = zb[0];
        for (std::size_t j = 1; j < k; ++j) zmax = std::max(zmax, zb[j]);
        T sum = T(0);
        for (std::size_t j = 0; j < k; ++j) {
            pb[j] = std::exp(zb[j] - zmax);
            sum += pb[j];
        }
        for (std::size_t j = 0; j < k; ++j) pb[j] /= sum;
    }
    return p;
}

// Mean negative log-likelihood of the target entries of a row-stochastic p.
template <typename T>
double cross_entropy(const Tensor<T>& p, const std::vector<int>& targets) {
    const std::size_t batch = p.rows();
    if (targets.size() != batch) {
        throw ShapeMismatch("cross_entropy: target count mismatch");
    }
    double total = 0.0;
    for (std::size_t bidx = 0; bidx < batch; ++bidx) {
        total -= std::log(static_cast<double>(p(bidx, static_cast<std::size_t>(targets[bidx]))));
    }
    return total / static_cast<double>(batch);
}

// Gradient of scale * sum_b(-log p[b, target_b]) w.r.t. pre-softmax logits:
// scale * (p - onehot). Accumulates into dz.
template <typename T>
void softmax_xent_backward(const Tensor<T>& p, const std::vector<int>& targets, T scale,
                           Tensor<T>& dz) {
    const std::size_t batch = p.rows(), k = p.cols();
    const bool big = batch * k >= kernel_detail::kParallelThreshold;
#pragma omp parallel for schedule(static) if (big)
    for (long long bb = 0; bb < static_cast<long long>(batch); ++bb) {
        const std::size_t bidx = static_cast<std::size_t>(bb);
        const T* pb = p.row(bidx);
        T* db = dz.row(bidx);
        for (std::size_t j = 0; j < k; ++j) db[j] += scale * pb[j];
        db[static_cast<std::size_t>(targets[bidx])] -= scale;
    }
}

// ------------------------------------------------------------------ relu ---

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
    Tensor<T> y(x.shape());
    const bool big = x.size() >= kernel_detail::kParallelThreshold;
#pragma omp parallel for schedule(static) if (big)
    for (long long i = 0; i < static_cast<long long>(x.size()); ++i) {
        y[static_cast<std::size_t>(i)] = std::max(T(0), x[static_cast<std::size_t>(i)]);
    }
    return y;
}

// Subgradient at 0 is 0: mask = indicator(x > 0).
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& dy) {
    Tensor<T> dx(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        dx[i] = x[i] > T(0) ? dy[i] : T(0);
    }
    return dx;
}

// --------------------------------------------------------------- dropout ---

// Inverted dropout: survivors are scaled by 1/(1-p) at train time so infer
// mode is the exact identity. The mask (0 or the scale factor) is returned
// through mask_out when the caller needs it for the backward pass.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, RunMode mode, std::uint64_t seed,
                  Tensor<T>* mask_out = nullptr) {
    if (mode == RunMode::infer || p == 0.0) {
        if (mask_out) {
            *mask_out = Tensor<T>(x.shape());
            mask_out->fill(T(1));
        }
        return x;
    }
    Rng rng(seed);
    const T scale = static_cast<T>(1.0 / (1.0 - p));
    Tensor<T> y(x.shape());
    Tensor<T> mask(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const T m = rng.next_double() < p ? T(0) : scale;
        mask[i] = m;
        y[i] = x[i] * m;
    }
    if (mask_out) *mask_out = std::move(mask);
    return y;
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& mask, const Tensor<T>& dy) {
    Tensor<T> dx(dy.shape());
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * mask[i];
    return dx;
}

// ------------------------------------------------------------------ LSTM ---

// Standard cell, no peepholes. Gate order: input, forget, output, candidate.
// W_g is [hidden x in], U_g is [hidden x hidden], b_g is [hidden].
template <typename T>
struct LstmCellParams {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    Parameter<T> w_i, u_i, b_i;
    Parameter<T> w_f, u_f, b_f;
    Parameter<T> w_o, u_o, b_o;
    Parameter<T> w_g, u_g, b_g;

    void allocate(const std::string& prefix, std::size_t in, std::size_t hidden) {
        input_dim = in;
        hidden_dim = hidden;
        const char* gate_names[4] = {"i", "f", "o", "g"};
        Parameter<T>* ws[4] = {&w_i, &w_f, &w_o, &w_g};
        Parameter<T>* us[4] = {&u_i, &u_f, &u_o, &u_g};
        Parameter<T>* bs[4] = {&b_i, &b_f, &b_o, &b_g};
        for (int g = 0; g < 4; ++g) {
            ws[g]->allocate(prefix + ".w_" + gate_names[g], {hidden, in});
            us[g]->allocate(prefix + ".u_" + gate_names[g], {hidden, hidden});
            bs[g]->allocate(prefix + ".b_" + gate_names[g], {hidden});
        }
    }

    // Glorot weights, zero biases except the forget gate bias at 1.
    void init_weights(Rng& rng) {
        Parameter<T>* ws[4] = {&w_i, &w_f, &w_o, &w_g};
        Parameter<T>* us[4] = {&u_i, &u_f, &u_o, &u_g};
        for (int g = 0; g < 4; ++g) {
            glorot_init(ws[g]->value, input_dim, hidden_dim, rng);
            glorot_init(us[g]->value, hidden_dim, hidden_dim, rng);
        }
        b_f.value.fill(T(1));
    }

    template <typename Fn>
    void for_each_parameter(Fn&& fn) {
        Parameter<T>* all[12] = {&w_i, &u_i, &b_i, &w_f, &u_f, &b_f,
                                 &w_o, &u_o, &b_o, &w_g, &u_g, &b_g};
        for (Parameter<T>* p : all) fn(*p);
    }
};

// Per-timestep activations kept for backpropagation through time.
template <typename T>
struct LstmStepState {
    Tensor<T> i, f, o, g, c, h, tanh_c;
};

namespace nn_detail {

// z = x*W^T + h_prev*U^T + b
template <typename T>
Tensor<T> gate_preact(const Tensor<T>& x, const Tensor<T>& h_prev, const Parameter<T>& w,
                      const Parameter<T>& u, const Parameter<T>& b) {
    const std::size_t batch = x.rows();
    const std::size_t hidden = w.value.rows();
    Tensor<T> z({batch, hidden});
    matmul_nt(x.data(), w.value.data(), z.data(), batch, x.cols(), hidden);
    matmul_nt(h_prev.data(), u.value.data(), z.data(), batch, hidden, hidden,
              /*accumulate=*/true);
    add_bias(z.data(), b.value.data(), batch, hidden);
    return z;
}

} // namespace nn_detail

template <typename T>
void lstm_step_cached(const Tensor<T>& x, const Tensor<T>& h_prev, const Tensor<T>& c_prev,
                      const LstmCellParams<T>& p, LstmStepState<T>& out) {
    if (x.cols() != p.input_dim || h_prev.cols() != p.hidden_dim ||
        c_prev.cols() != p.hidden_dim || x.rows() != h_prev.rows() ||
        x.rows() != c_prev.rows()) {
        throw ShapeMismatch("lstm_step: x " + x.shape_string() + " h " + h_prev.shape_string());
    }
    const std::size_t batch = x.rows(), hidden = p.hidden_dim;
    Tensor<T> zi = nn_detail::gate_preact(x, h_prev, p.w_i, p.u_i, p.b_i);
    Tensor<T> zf = nn_detail::gate_preact(x, h_prev, p.w_f, p.u_f, p.b_f);
    Tensor<T> zo = nn_detail::gate_preact(x, h_prev, p.w_o, p.u_o, p.b_o);
    Tensor<T> zg = nn_detail::gate_preact(x, h_prev, p.w_g, p.u_g, p.b_g);
    out.i = Tensor<T>({batch, hidden});
    out.f = Tensor<T>({batch, hidden});
    out.o = Tensor<T>({batch, hidden});
    out.g = Tensor<T>({batch, hidden});
    out.c = Tensor<T>({batch, hidden});
    out.h = Tensor<T>({batch, hidden});
    out.tanh_c = Tensor<T>({batch, hidden});
    map_sigmoid(zi.data(), out.i.data(), zi.size());
    map_sigmoid(zf.data(), out.f.data(), zf.size());
    map_sigmoid(zo.data(), out.o.data(), zo.size());
    map_tanh(zg.data(), out.g.data(), zg.size());
    for (std::size_t n = 0; n < out.c.size(); ++n) {
        out.c[n] = out.f[n] * c_prev[n] + out.i[n] * out.g[n];
    }
    map_tanh(out.c.data(), out.tanh_c.data(), out.c.size());
    for (std::size_t n = 0; n < out.h.size(); ++n) {
        out.h[n] = out.o[n] * out.tanh_c[n];
    }
}

// Single step, as exposed to callers that do not need the training cache.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> lstm_step(const Tensor<T>& x, const Tensor<T>& h_prev,
                                          const Tensor<T>& c_prev, const LstmCellParams<T>& p) {
    LstmStepState<T> state;
    lstm_step_cached(x, h_prev, c_prev, p, state);
    return {std::move(state.h), std::move(state.c)};
}

// Backward through one step. dh/dc are the incoming gradients on h_t/c_t;
// fills dx, dh_prev and overwrites dc with dc_prev. Parameter grads accumulate.
template <typename T>
void lstm_step_backward(const Tensor<T>& x, const Tensor<T>& h_prev, const Tensor<T>& c_prev,
                        LstmCellParams<T>& p, const LstmStepState<T>& s, const Tensor<T>& dh,
                        Tensor<T>& dc, Tensor<T>& dx, Tensor<T>& dh_prev) {
    const std::size_t batch = x.rows(), hidden = p.hidden_dim, in = p.input_dim;
    Tensor<T> dzi({batch, hidden}), dzf({batch, hidden}), dzo({batch, hidden}),
        dzg({batch, hidden});
    for (std::size_t n = 0; n < dzi.size(); ++n) {
        const T dho = dh[n];
        const T dcn = dc[n] + dho * s.o[n] * (T(1) - s.tanh_c[n] * s.tanh_c[n]);
        dzo[n] = dho * s.tanh_c[n] * s.o[n] * (T(1) - s.o[n]);
        dzi[n] = dcn * s.g[n] * s.i[n] * (T(1) - s.i[n]);
        dzf[n] = dcn * c_prev[n] * s.f[n] * (T(1) - s.f[n]);
        dzg[n] = dcn * s.i[n] * (T(1) - s.g[n] * s.g[n]);
        dc[n] = dcn * s.f[n]; // becomes dc_prev
    }
    dx = Tensor<T>({batch, in});
    dh_prev = Tensor<T>({batch, hidden});
    const Tensor<T>* dzs[4] = {&dzi, &dzf, &dzo, &dzg};
    Parameter<T>* ws[4] = {&p.w_i, &p.w_f, &p.w_o, &p.w_g};
    Parameter<T>* us[4] = {&p.u_i, &p.u_f, &p.u_o, &p.u_g};
    Parameter<T>* bs[4] = {&p.b_i, &p.b_f, &p.b_o, &p.b_g};
    for (int g = 0; g < 4; ++g) {
        // dW += dz^T * x ; dU += dz^T * h_prev ; db += colsum(dz)
        matmul_tn(dzs[g]->data(), x.data(), ws[g]->grad.data(), batch, hidden, in,
                  /*accumulate=*/true);
        matmul_tn(dzs[g]->data(), h_prev.data(), us[g]->grad.data(), batch, hidden, hidden,
                  /*accumulate=*/true);
        add_colsum(dzs[g]->data(), bs[g]->grad.data(), batch, hidden);
        // dx += dz * W ; dh_prev += dz * U
        matmul(dzs[g]->data(), ws[g]->value.data(), dx.data(), batch, hidden, in,
               /*accumulate=*/true);
        matmul(dzs[g]->data(), us[g]->value.data(), dh_prev.data(), batch, hidden, hidden,
               /*accumulate=*/true);
    }
}

// ------------------------------------------------------- LSTM sequences ---

template <typename T>
struct LstmLayerCache {
    std::vector<LstmStepState<T>> steps;
    std::size_t batch = 0;
};

// Runs one layer over xs (one [batch x in] tensor per timestep), h0 = c0 = 0.
template <typename T>
void lstm_layer_forward(const std::vector<Tensor<T>>& xs, const LstmCellParams<T>& p,
                        LstmLayerCache<T>& cache) {
    const std::size_t batch = xs.front().rows();
    cache.batch = batch;
    cache.steps.assign(xs.size(), LstmStepState<T>{});
    Tensor<T> zero({batch, p.hidden_dim});
    for (std::size_t t = 0; t < xs.size(); ++t) {
        const Tensor<T>& h_prev = t == 0 ? zero : cache.steps[t - 1].h;
        const Tensor<T>& c_prev = t == 0 ? zero : cache.steps[t - 1].c;
        lstm_step_cached(xs[t], h_prev, c_prev, p, cache.steps[t]);
    }
}

// Full backpropagation through time for one layer. dh_out[t] is the external
// gradient on h_t (zeros where unused). Returns per-timestep dx.
template <typename T>
std::vector<Tensor<T>> lstm_layer_backward(const std::vector<Tensor<T>>& xs,
                                           LstmCellParams<T>& p, const LstmLayerCache<T>& cache,
                                           const std::vector<Tensor<T>>& dh_out) {
    const std::size_t batch = cache.batch;
    const std::size_t len = xs.size();
    Tensor<T> zero({batch, p.hidden_dim});
    Tensor<T> dc({batch, p.hidden_dim});
    Tensor<T> dh_next; // gradient flowing from step t+1 into h_t
    std::vector<Tensor<T>> dxs(len);
    for (std::size_t ti = len; ti-- > 0;) {
        Tensor<T> dh = dh_out[ti];
        if (ti + 1 < len) {
            for (std::size_t n = 0; n < dh.size(); ++n) dh[n] += dh_next[n];
        }
        const Tensor<T>& h_prev = ti == 0 ? zero : cache.steps[ti - 1].h;
        const Tensor<T>& c_prev = ti == 0 ? zero : cache.steps[ti - 1].c;
        lstm_step_backward(xs[ti], h_prev, c_prev, p, cache.steps[ti], dh, dc, dxs[ti], dh_next);
    }
    return dxs;
}

template <typename T>
struct LstmStackCache {
    LstmLayerCache<T> layer1;
    LstmLayerCache<T> layer2;
    std::vector<Tensor<T>> layer1_h; // layer 2 input sequence
};

// Two stacked layers; top-layer hidden states end up in cache.layer2.steps.
template <typename T>
void run_lstm_stack_forward(const std::vector<Tensor<T>>& xs, const LstmCellParams<T>& l1,
                            const LstmCellParams<T>& l2, LstmStackCache<T>& cache) {
    lstm_layer_forward(xs, l1, cache.layer1);
    cache.layer1_h.clear();
    cache.layer1_h.reserve(xs.size());
    for (const auto& step : cache.layer1.steps) cache.layer1_h.push_back(step.h);
    lstm_layer_forward(cache.layer1_h, l2, cache.layer2);
}

// Returns dx per timestep of the stack input.
template <typename T>
std::vector<Tensor<T>> run_lstm_stack_backward(const std::vector<Tensor<T>>& xs,
                                               LstmCellParams<T>& l1, LstmCellParams<T>& l2,
                                               const LstmStackCache<T>& cache,
                                               const std::vector<Tensor<T>>& dh_top) {
    std::vector<Tensor<T>> dh1 = lstm_layer_backward(cache.layer1_h, l2, cache.layer2, dh_top);
    return lstm_layer_backward(xs, l1, cache.layer1, dh1);
}

// Convenience wrapper: final h of the top layer for a 2-layer stack.
template <typename T>
Tensor<T> run_lstm_stack(const std::vector<Tensor<T>>& xs, const LstmCellParams<T>& l1,
                         const LstmCellParams<T>& l2) {
    LstmStackCache<T> cache;
    run_lstm_stack_forward(xs, l1, l2, cache);
    return cache.layer2.steps.back().h;
}

} // namespace lattag
