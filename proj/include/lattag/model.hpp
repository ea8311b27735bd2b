#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lattag/encoding.hpp"
#include "lattag/nn.hpp"

namespace lattag {

struct Hyperparameters {
    std::size_t recurrent_dim = 150;
    std::size_t dense_dim = 150;
    std::size_t encoder_out_dim = 450;
    std::size_t embedding_dim = 100;
    std::size_t context_projection_dim = 150;
    double dropout_p = 0.5;
    bool lemma_head = true;
    bool pos_head = true;
    double lemma_weight = 1.0;
    double pos_weight = 1.0;

    std::size_t hidden_dim() const { return encoder_out_dim + context_projection_dim; }
};

// All trainable tensors plus the vocabulary/hyperparameter snapshots needed
// to rebuild every shape. Heads that are switched off own no parameters.
template <typename T>
struct ModelParameters {
    Vocabularies vocab;
    Hyperparameters hp;

    Parameter<T> embedding; // [lexicon x embedding_dim], fine-tuned in training
    LstmCellParams<T> enc1, enc2;
    Parameter<T> ctx_w, ctx_b; // 4 embeddings concatenated -> projection, tanh

    LstmCellParams<T> dec1, dec2;  // lemma head
    Parameter<T> lemma_w, lemma_b; // shared across character slots

    Parameter<T> pos1_w, pos1_b, pos2_w, pos2_b, pos_out_w, pos_out_b;

    template <typename Fn>
    void for_each_parameter(Fn&& fn) {
        fn(embedding);
        enc1.for_each_parameter(fn);
        enc2.for_each_parameter(fn);
        fn(ctx_w);
        fn(ctx_b);
        if (hp.lemma_head) {
            dec1.for_each_parameter(fn);
            dec2.for_each_parameter(fn);
            fn(lemma_w);
            fn(lemma_b);
        }
        if (hp.pos_head) {
            fn(pos1_w);
            fn(pos1_b);
            fn(pos2_w);
            fn(pos2_b);
            fn(pos_out_w);
            fn(pos_out_b);
        }
    }

    std::size_t parameter_count() {
        std::size_t n = 0;
        for_each_parameter([&n](Parameter<T>&) { ++n; });
        return n;
    }

    void zero_grads() {
        for_each_parameter([](Parameter<T>& p) { p.zero_grad(); });
    }
};

template <typename T>
struct ForwardOutputs {
    Tensor<T> lemma_probs; // [batch x max_lemma_len x lemma_alphabet_size]
    Tensor<T> pos_probs;   // [batch x |tagset|]
    Tensor<T> hidden;      // [batch x (encoder_out + context_projection)]
};

template <typename T>
struct ForwardCache {
    std::vector<Tensor<T>> char_seq; // encoder input, one [batch x alphabet] per position
    LstmStackCache<T> enc;
    Tensor<T> ctx_in;   // gathered embedding rows [batch x 4*embedding_dim]
    Tensor<T> ctx_proj; // post-tanh projection [batch x projection_dim]
    Tensor<T> hidden;
    std::vector<Tensor<T>> dec_in; // hidden repeated per lemma slot
    LstmStackCache<T> dec;
    Tensor<T> pos_a1, pos_r1, pos_m1, pos_d1;
    Tensor<T> pos_a2, pos_r2, pos_m2, pos_d2;
    ForwardOutputs<T> outputs;
};

template <typename T>
ModelParameters<T> init_model(const Vocabularies& vocab, const Hyperparameters& hp,
                              const Tensor<T>* pretrained_embeddings, std::uint64_t seed) {
    if (!hp.lemma_head && !hp.pos_head) {
        throw ShapeMismatch("model needs at least one head");
    }
    ModelParameters<T> m;
    m.vocab = vocab;
    m.hp = hp;

    const std::size_t lexicon = static_cast<std::size_t>(vocab.lexicon_size());
    const std::size_t alphabet = vocab.char_alphabet.size();
    const std::size_t lemma_k = static_cast<std::size_t>(vocab.lemma_alphabet_size());
    const std::size_t tags = vocab.tagset.size();

    m.embedding.allocate("embedding", {lexicon, hp.embedding_dim});
    m.enc1.allocate("enc1", alphabet, hp.recurrent_dim);
    m.enc2.allocate("enc2", hp.recurrent_dim, hp.encoder_out_dim);
    m.ctx_w.allocate("ctx.w", {4 * hp.embedding_dim, hp.context_projection_dim});
    m.ctx_b.allocate("ctx.b", {hp.context_projection_dim});
    if (hp.lemma_head) {
        m.dec1.allocate("dec1", hp.hidden_dim(), hp.recurrent_dim);
        m.dec2.allocate("dec2", hp.recurrent_dim, hp.recurrent_dim);
        m.lemma_w.allocate("lemma.w", {hp.recurrent_dim, lemma_k});
        m.lemma_b.allocate("lemma.b", {lemma_k});
    }
    if (hp.pos_head) {
        m.pos1_w.allocate("pos1.w", {hp.hidden_dim(), hp.dense_dim});
        m.pos1_b.allocate("pos1.b", {hp.dense_dim});
        m.pos2_w.allocate("pos2.w", {hp.dense_dim, hp.dense_dim});
        m.pos2_b.allocate("pos2.b", {hp.dense_dim});
        m.pos_out_w.allocate("pos_out.w", {hp.dense_dim, tags});
        m.pos_out_b.allocate("pos_out.b", {tags});
    }

    Rng rng(seed);
    if (pretrained_embeddings) {
        if (pretrained_embeddings->shape() != m.embedding.value.shape()) {
            throw ShapeMismatch("pretrained embeddings " +
                                pretrained_embeddings->shape_string() + ", expected " +
                                m.embedding.value.shape_string());
        }
        m.embedding.value = *pretrained_embeddings;
    } else {
        const double span = 0.5 / static_cast<double>(hp.embedding_dim);
        for (std::size_t i = 0; i < m.embedding.value.size(); ++i) {
            m.embedding.value[i] = static_cast<T>(rng.uniform(-span, span));
        }
    }
    m.enc1.init_weights(rng);
    m.enc2.init_weights(rng);
    glorot_init(m.ctx_w.value, 4 * hp.embedding_dim, hp.context_projection_dim, rng);
    if (hp.lemma_head) {
        m.dec1.init_weights(rng);
        m.dec2.init_weights(rng);
        glorot_init(m.lemma_w.value, hp.recurrent_dim, lemma_k, rng);
    }
    if (hp.pos_head) {
        glorot_init(m.pos1_w.value, hp.hidden_dim(), hp.dense_dim, rng);
        glorot_init(m.pos2_w.value, hp.dense_dim, hp.dense_dim, rng);
        glorot_init(m.pos_out_w.value, hp.dense_dim, tags, rng);
    }
    return m;
}

namespace model_detail {

template <typename T>
void gather_inputs(const ModelParameters<T>& m, const Batch& batch, ForwardCache<T>& cache) {
    const std::size_t bsz = batch.size();
    const std::size_t alphabet = m.vocab.char_alphabet.size();
    const std::size_t len = static_cast<std::size_t>(m.vocab.max_token_len);
    const std::size_t emb = m.hp.embedding_dim;

    cache.char_seq.assign(len, Tensor<T>({bsz, alphabet}));
    for (std::size_t b = 0; b < bsz; ++b) {
        const CharMatrix& cm = batch.instances[b].char_input;
        if (cm.hot.size() != len || cm.n_rows != static_cast<int>(alphabet)) {
            throw ShapeMismatch("instance char matrix does not match the model vocabulary");
        }
        for (std::size_t t = 0; t < len; ++t) {
            const std::int32_t row = cm.hot[t];
            if (row >= 0) cache.char_seq[t](b, static_cast<std::size_t>(row)) = T(1);
        }
    }

    cache.ctx_in = Tensor<T>({bsz, 4 * emb});
    for (std::size_t b = 0; b < bsz; ++b) {
        for (std::size_t s = 0; s < 4; ++s) {
            const auto idx = static_cast<std::size_t>(batch.instances[b].context[s]);
            const T* row = m.embedding.value.row(idx);
            T* dst = cache.ctx_in.row(b) + s * emb;
            for (std::size_t e = 0; e < emb; ++e) dst[e] = row[e];
        }
    }
}

} // namespace model_detail

// Runs the whole network on a batch. Dropout is active only in train mode
// and only inside the PoS head's dense stack, never in recurrent layers.
template <typename T>
ForwardOutputs<T> forward(const ModelParameters<T>& m, const Batch& batch, RunMode mode,
                          std::uint64_t seed, ForwardCache<T>* cache_out = nullptr) {
    if (batch.size() == 0) throw ShapeMismatch("forward: empty batch");
    ForwardCache<T> local;
    ForwardCache<T>& cache = cache_out ? *cache_out : local;
    const std::size_t bsz = batch.size();

    model_detail::gather_inputs(m, batch, cache);

    // Character encoder: final top-layer state summarizes the token.
    run_lstm_stack_forward(cache.char_seq, m.enc1, m.enc2, cache.enc);
    const Tensor<T>& enc_h = cache.enc.layer2.steps.back().h;

    // Context encoder: concatenated embeddings through a tanh projection.
    {
        Tensor<T> pre({bsz, m.hp.context_projection_dim});
        matmul(cache.ctx_in.data(), m.ctx_w.value.data(), pre.data(), bsz,
               cache.ctx_in.cols(), m.hp.context_projection_dim);
        add_bias(pre.data(), m.ctx_b.value.data(), bsz, m.hp.context_projection_dim);
        cache.ctx_proj = Tensor<T>(pre.shape());
        map_tanh(pre.data(), cache.ctx_proj.data(), pre.size());
    }

    // Joint hidden representation.
    cache.hidden = Tensor<T>({bsz, m.hp.hidden_dim()});
    for (std::size_t b = 0; b < bsz; ++b) {
        T* dst = cache.hidden.row(b);
        const T* eh = enc_h.row(b);
        const T* cp = cache.ctx_proj.row(b);
        for (std::size_t j = 0; j < m.hp.encoder_out_dim; ++j) dst[j] = eh[j];
        for (std::size_t j = 0; j < m.hp.context_projection_dim; ++j)
            dst[m.hp.encoder_out_dim + j] = cp[j];
    }
    cache.outputs.hidden = cache.hidden;

    if (m.hp.lemma_head) {
        const std::size_t slots = static_cast<std::size_t>(m.vocab.max_lemma_len);
        const std::size_t lemma_k = static_cast<std::size_t>(m.vocab.lemma_alphabet_size());
        cache.dec_in.assign(slots, cache.hidden);
        run_lstm_stack_forward(cache.dec_in, m.dec1, m.dec2, cache.dec);
        cache.outputs.lemma_probs = Tensor<T>({bsz, slots, lemma_k});
        for (std::size_t t = 0; t < slots; ++t) {
            Tensor<T> logits = affine(cache.dec.layer2.steps[t].h, m.lemma_w, m.lemma_b);
            Tensor<T> probs = softmax(logits);
            for (std::size_t b = 0; b < bsz; ++b) {
                for (std::size_t k = 0; k < lemma_k; ++k) {
                    cache.outputs.lemma_probs(b, t, k) = probs(b, k);
                }
            }
        }
    }

    if (m.hp.pos_head) {
        cache.pos_a1 = affine(cache.hidden, m.pos1_w, m.pos1_b);
        cache.pos_r1 = relu(cache.pos_a1);
        cache.pos_d1 = dropout(cache.pos_r1, m.hp.dropout_p, mode, mix_seed(seed, 1),
                               &cache.pos_m1);
        cache.pos_a2 = affine(cache.pos_d1, m.pos2_w, m.pos2_b);
        cache.pos_r2 = relu(cache.pos_a2);
        cache.pos_d2 = dropout(cache.pos_r2, m.hp.dropout_p, mode, mix_seed(seed, 2),
                               &cache.pos_m2);
        Tensor<T> logits = affine(cache.pos_d2, m.pos_out_w, m.pos_out_b);
        cache.outputs.pos_probs = softmax(logits);
    }

    return cache.outputs;
}

// Multi-task loss: per-head cross-entropy (lemma averaged over all character
// slots and instances, PAD slots included), combined with the head weights.
template <typename T>
double compute_loss(const ForwardOutputs<T>& outputs, const Batch& batch,
                    const Hyperparameters& hp) {
    const std::size_t bsz = batch.size();
    double total = 0.0;
    if (hp.lemma_head) {
        const std::size_t slots = outputs.lemma_probs.dim(1);
        double lemma_loss = 0.0;
        for (std::size_t b = 0; b < bsz; ++b) {
            const CharMatrix& target = batch.instances[b].lemma_target;
            for (std::size_t t = 0; t < slots; ++t) {
                const auto k = static_cast<std::size_t>(target.hot[t]);
                lemma_loss -= std::log(static_cast<double>(outputs.lemma_probs(b, t, k)));
            }
        }
        total += hp.lemma_weight * lemma_loss / static_cast<double>(bsz * slots);
    }
    if (hp.pos_head) {
        double pos_loss = 0.0;
        for (std::size_t b = 0; b < bsz; ++b) {
            const auto k = static_cast<std::size_t>(batch.instances[b].pos_target);
            pos_loss -= std::log(static_cast<double>(outputs.pos_probs(b, k)));
        }
        total += hp.pos_weight * pos_loss / static_cast<double>(bsz);
    }
    return total;
}

// Train-mode forward plus exact analytic gradients of compute_loss for every
// parameter, including only the embedding rows the batch touches.
template <typename T>
double backward(ModelParameters<T>& m, const Batch& batch, std::uint64_t seed) {
    m.zero_grads();
    ForwardCache<T> cache;
    forward(m, batch, RunMode::train, seed, &cache);
    const double loss = compute_loss(cache.outputs, batch, m.hp);

    const std::size_t bsz = batch.size();
    Tensor<T> dhidden({bsz, m.hp.hidden_dim()});

    if (m.hp.lemma_head && m.hp.lemma_weight != 0.0) {
        const std::size_t slots = static_cast<std::size_t>(m.vocab.max_lemma_len);
        const std::size_t lemma_k = static_cast<std::size_t>(m.vocab.lemma_alphabet_size());
        const T scale = static_cast<T>(m.hp.lemma_weight / static_cast<double>(bsz * slots));
        std::vector<Tensor<T>> dh_top(slots);
        for (std::size_t t = 0; t < slots; ++t) {
            Tensor<T> probs({bsz, lemma_k});
            std::vector<int> targets(bsz);
            for (std::size_t b = 0; b < bsz; ++b) {
                for (std::size_t k = 0; k < lemma_k; ++k) {
                    probs(b, k) = cache.outputs.lemma_probs(b, t, k);
                }
                targets[b] = batch.instances[b].lemma_target.hot[t];
            }
            Tensor<T> dlogits({bsz, lemma_k});
            softmax_xent_backward(probs, targets, scale, dlogits);
            dh_top[t] = affine_backward(cache.dec.layer2.steps[t].h, m.lemma_w, m.lemma_b,
                                        dlogits);
        }
        std::vector<Tensor<T>> ddec_in =
            run_lstm_stack_backward(cache.dec_in, m.dec1, m.dec2, cache.dec, dh_top);
        for (const Tensor<T>& dx : ddec_in) {
            for (std::size_t n = 0; n < dhidden.size(); ++n) dhidden[n] += dx[n];
        }
    }

    if (m.hp.pos_head && m.hp.pos_weight != 0.0) {
        const std::size_t tags = m.vocab.tagset.size();
        const T scale = static_cast<T>(m.hp.pos_weight / static_cast<double>(bsz));
        std::vector<int> targets(bsz);
        for (std::size_t b = 0; b < bsz; ++b) targets[b] = batch.instances[b].pos_target;
        Tensor<T> dlogits({bsz, tags});
        softmax_xent_backward(cache.outputs.pos_probs, targets, scale, dlogits);
        Tensor<T> dd2 = affine_backward(cache.pos_d2, m.pos_out_w, m.pos_out_b, dlogits);
        Tensor<T> dr2 = dropout_backward(cache.pos_m2, dd2);
        Tensor<T> da2 = relu_backward(cache.pos_a2, dr2);
        Tensor<T> dd1 = affine_backward(cache.pos_d1, m.pos2_w, m.pos2_b, da2);
        Tensor<T> dr1 = dropout_backward(cache.pos_m1, dd1);
        Tensor<T> da1 = relu_backward(cache.pos_a1, dr1);
        Tensor<T> dh = affine_backward(cache.hidden, m.pos1_w, m.pos1_b, da1);
        for (std::size_t n = 0; n < dhidden.size(); ++n) dhidden[n] += dh[n];
    }

    // Split the joint gradient back into the two encoders.
    Tensor<T> denc_h({bsz, m.hp.encoder_out_dim});
    Tensor<T> dctx_proj({bsz, m.hp.context_projection_dim});
    for (std::size_t b = 0; b < bsz; ++b) {
        const T* src = dhidden.row(b);
        T* de = denc_h.row(b);
        T* dc = dctx_proj.row(b);
        for (std::size_t j = 0; j < m.hp.encoder_out_dim; ++j) de[j] = src[j];
        for (std::size_t j = 0; j < m.hp.context_projection_dim; ++j)
            dc[j] = src[m.hp.encoder_out_dim + j];
    }

    // Character encoder: gradient arrives only at the final state.
    {
        const std::size_t len = cache.char_seq.size();
        std::vector<Tensor<T>> dh_top(len, Tensor<T>({bsz, m.hp.encoder_out_dim}));
        dh_top[len - 1] = denc_h;
        run_lstm_stack_backward(cache.char_seq, m.enc1, m.enc2, cache.enc, dh_top);
    }

    // Context projection and the embedding rows in the batch windows.
    {
        Tensor<T> dpre(dctx_proj.shape());
        for (std::size_t n = 0; n < dpre.size(); ++n) {
            const T y = cache.ctx_proj[n];
            dpre[n] = dctx_proj[n] * (T(1) - y * y);
        }
        matmul_tn(cache.ctx_in.data(), dpre.data(), m.ctx_w.grad.data(), bsz,
                  cache.ctx_in.cols(), m.hp.context_projection_dim, /*accumulate=*/true);
        add_colsum(dpre.data(), m.ctx_b.grad.data(), bsz, m.hp.context_projection_dim);
        Tensor<T> dctx_in({bsz, cache.ctx_in.cols()});
        matmul_nt(dpre.data(), m.ctx_w.value.data(), dctx_in.data(), bsz,
                  m.hp.context_projection_dim, cache.ctx_in.cols());
        const std::size_t emb = m.hp.embedding_dim;
        for (std::size_t b = 0; b < bsz; ++b) {
            for (std::size_t s = 0; s < 4; ++s) {
                const auto idx = static_cast<std::size_t>(batch.instances[b].context[s]);
                T* gr = m.embedding.grad.row(idx);
                const T* src = dctx_in.row(b) + s * emb;
                for (std::size_t e = 0; e < emb; ++e) gr[e] += src[e];
            }
        }
    }

    return loss;
}

struct Prediction {
    std::optional<std::string> lemma;
    std::optional<std::string> pos;
};

// Infer-mode tagging of one sentence; unseen tokens and characters follow the
// encoding rules (UNK context index, all-zero character columns).
template <typename T>
std::vector<Prediction> predict(const ModelParameters<T>& m, const Sentence& sentence) {
    if (sentence.empty()) return {};
    Batch batch;
    batch.instances.reserve(sentence.size());
    for (std::size_t t = 0; t < sentence.size(); ++t) {
        TrainingInstance inst;
        inst.char_input = encode_token_chars(sentence[t].lowered, m.vocab);
        inst.context = encode_context(sentence, t, m.vocab);
        batch.instances.push_back(std::move(inst));
    }
    ForwardOutputs<T> out = forward(m, batch, RunMode::infer, /*seed=*/0);

    std::vector<Prediction> preds(sentence.size());
    const std::size_t slots = static_cast<std::size_t>(m.vocab.max_lemma_len);
    const std::size_t lemma_k = static_cast<std::size_t>(m.vocab.lemma_alphabet_size());
    for (std::size_t b = 0; b < sentence.size(); ++b) {
        if (m.hp.lemma_head) {
            Tensor<T> slot_probs({slots, lemma_k});
            for (std::size_t t = 0; t < slots; ++t) {
                for (std::size_t k = 0; k < lemma_k; ++k) {
                    slot_probs(t, k) = out.lemma_probs(b, t, k);
                }
            }
            preds[b].lemma = decode_lemma(slot_probs, m.vocab);
        }
        if (m.hp.pos_head) {
            std::size_t best = 0;
            for (std::size_t k = 1; k < m.vocab.tagset.size(); ++k) {
                if (out.pos_probs(b, k) > out.pos_probs(b, best)) best = k;
            }
            preds[b].pos = m.vocab.tagset[best];
        }
    }
    return preds;
}

} // namespace lattag
