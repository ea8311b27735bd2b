#include <doctest.h>

#include <cmath>

#include "lattag/gradcheck.hpp"
#include "lattag/model.hpp"
#include "testutil.hpp"

using namespace lattag;

namespace {

// Toy setup: alphabet 5, lexicon 6 (+2 reserved), token length 3, lemma
// length 3, small dims everywhere.
struct ToyWorld {
    Corpus corpus;
    Vocabularies vocab;
    Hyperparameters hp;

    ToyWorld() {
        corpus = testutil::make_corpus({
            {{"ab", "ba", "N"}, {"cde", "ed", "V"}, {"ace", "cab", "N"}},
            {{"bed", "dab", "A"}, {"dac", "be", "V"}, {"ebc", "ace", "N"}},
        });
        vocab = build_vocabularies(corpus);
        hp.recurrent_dim = 4;
        hp.dense_dim = 4;
        hp.encoder_out_dim = 4;
        hp.embedding_dim = 4;
        hp.context_projection_dim = 4;
        hp.dropout_p = 0.5;
    }

    Batch batch(std::size_t sentence_index) const {
        Batch b;
        const Sentence& s = corpus.sentences[sentence_index];
        for (std::size_t t = 0; t < s.size(); ++t) {
            TrainingInstance inst;
            inst.char_input = encode_token_chars(s[t].lowered, vocab);
            inst.context = encode_context(s, t, vocab);
            inst.lemma_target = encode_lemma_target(s[t].lemma, vocab);
            inst.pos_target = vocab.lookup_tag(s[t].pos);
            b.instances.push_back(std::move(inst));
        }
        return b;
    }

    Batch two_instance_batch() const {
        Batch b = batch(0);
        b.instances.resize(2);
        return b;
    }
};

template <typename T>
std::vector<Parameter<T>*> all_parameters(ModelParameters<T>& m) {
    std::vector<Parameter<T>*> out;
    m.for_each_parameter([&out](Parameter<T>& p) { out.push_back(&p); });
    return out;
}

// Moves the model off the symmetric init point (zero biases put pre-ReLU
// activations exactly on the kink, where central differences are undefined).
template <typename T>
void jitter_parameters(ModelParameters<T>& m, std::uint64_t seed) {
    Rng rng(seed);
    m.for_each_parameter([&rng](Parameter<T>& p) {
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            p.value[i] += static_cast<T>(rng.uniform(-0.2, 0.2));
        }
    });
}

} // namespace

TEST_CASE("init_model produces the documented shapes") {
    const Corpus corpus = testutil::synthetic_corpus(300, 25, 10, 4, 8, 21);
    const Vocabularies vocab = build_vocabularies(corpus);
    Hyperparameters hp; // stock configuration
    ModelParameters<float> m = init_model<float>(vocab, hp, nullptr, 1);

    CHECK(m.enc2.hidden_dim == 450);
    CHECK(m.enc1.hidden_dim == 150);
    CHECK(m.hp.hidden_dim() == 600);
    CHECK(m.embedding.value.shape() ==
          std::vector<std::size_t>{static_cast<std::size_t>(vocab.lexicon_size()), 100});
    CHECK(m.ctx_w.value.shape() == std::vector<std::size_t>{400, 150});
    CHECK(m.dec1.input_dim == 600);
    CHECK(m.lemma_w.value.shape() ==
          std::vector<std::size_t>{150, static_cast<std::size_t>(vocab.lemma_alphabet_size())});
    CHECK(m.pos1_w.value.shape() == std::vector<std::size_t>{600, 150});

    // Same seed, bit-identical parameters.
    ModelParameters<float> m2 = init_model<float>(vocab, hp, nullptr, 1);
    bool identical = true;
    m.for_each_parameter([&](Parameter<float>& p) {
        ModelParameters<float>* other = &m2;
        other->for_each_parameter([&](Parameter<float>& q) {
            if (q.name == p.name && !(q.value == p.value)) identical = false;
        });
    });
    CHECK(identical);

    // Pretrained embeddings must match the lexicon shape.
    Tensor<float> wrong({3, 100});
    CHECK_THROWS_AS(init_model<float>(vocab, hp, &wrong, 1), ShapeMismatch);
}

TEST_CASE("heads absent from the configuration own no parameters") {
    ToyWorld world;
    Hyperparameters lemma_only = world.hp;
    lemma_only.pos_head = false;
    ModelParameters<double> m = init_model<double>(world.vocab, lemma_only, nullptr, 3);
    std::size_t pos_params = 0;
    m.for_each_parameter([&pos_params](Parameter<double>& p) {
        if (p.name.rfind("pos", 0) == 0) ++pos_params;
    });
    CHECK(pos_params == 0);
    CHECK(m.parameter_count() == 1 + 12 + 12 + 2 + 12 + 12 + 2);
}

TEST_CASE("forward yields normalized distributions of the declared shapes") {
    ToyWorld world;
    ModelParameters<double> m = init_model<double>(world.vocab, world.hp, nullptr, 42);
    const Batch batch = world.batch(0);

    const ForwardOutputs<double> out = forward(m, batch, RunMode::infer, 0);
    REQUIRE(out.lemma_probs.shape() ==
            std::vector<std::size_t>{3, static_cast<std::size_t>(world.vocab.max_lemma_len),
                                     static_cast<std::size_t>(world.vocab.lemma_alphabet_size())});
    REQUIRE(out.pos_probs.shape() ==
            std::vector<std::size_t>{3, world.vocab.tagset.size()});
    REQUIRE(out.hidden.shape() == std::vector<std::size_t>{3, 8});

    for (std::size_t b = 0; b < 3; ++b) {
        double sum = 0.0;
        for (std::size_t k = 0; k < world.vocab.tagset.size(); ++k) sum += out.pos_probs(b, k);
        CHECK(std::abs(sum - 1.0) < 1e-6);
        for (std::size_t t = 0; t < out.lemma_probs.dim(1); ++t) {
            double slot = 0.0;
            for (std::size_t k = 0; k < out.lemma_probs.dim(2); ++k) {
                slot += out.lemma_probs(b, t, k);
            }
            CHECK(std::abs(slot - 1.0) < 1e-6);
        }
    }

    Batch empty;
    CHECK_THROWS_AS(forward(m, empty, RunMode::infer, 0), ShapeMismatch);
}

TEST_CASE("infer mode has no cross-instance coupling") {
    ToyWorld world;
    ModelParameters<double> m = init_model<double>(world.vocab, world.hp, nullptr, 9);
    const Batch batch = world.batch(1);

    const ForwardOutputs<double> joint = forward(m, batch, RunMode::infer, 0);
    for (std::size_t b = 0; b < batch.size(); ++b) {
        Batch single;
        single.instances.push_back(batch.instances[b]);
        const ForwardOutputs<double> alone = forward(m, single, RunMode::infer, 0);
        for (std::size_t t = 0; t < joint.lemma_probs.dim(1); ++t) {
            for (std::size_t k = 0; k < joint.lemma_probs.dim(2); ++k) {
                CHECK(std::abs(joint.lemma_probs(b, t, k) - alone.lemma_probs(0, t, k)) < 1e-6);
            }
        }
        for (std::size_t k = 0; k < world.vocab.tagset.size(); ++k) {
            CHECK(std::abs(joint.pos_probs(b, k) - alone.pos_probs(0, k)) < 1e-6);
        }
    }
}

TEST_CASE("loss fixtures: perfection, uniformity, ignored heads") {
    ToyWorld world;
    const Batch batch = world.batch(0);

    // Zero parameters give exactly uniform outputs.
    ModelParameters<double> zero;
    zero.vocab = world.vocab;
    zero.hp = world.hp;
    ModelParameters<double> init = init_model<double>(world.vocab, world.hp, nullptr, 5);
    init.for_each_parameter([](Parameter<double>& p) { p.value.fill(0.0); });
    const ForwardOutputs<double> out = forward(init, batch, RunMode::infer, 0);
    const double expected = std::log(static_cast<double>(world.vocab.lemma_alphabet_size())) +
                            std::log(static_cast<double>(world.vocab.tagset.size()));
    CHECK(compute_loss(out, batch, world.hp) == doctest::Approx(expected).epsilon(1e-9));

    // Perfect predictions: loss 0 (construct outputs from the targets).
    ForwardOutputs<double> perfect = out;
    perfect.lemma_probs.fill(0.0);
    perfect.pos_probs.fill(0.0);
    for (std::size_t b = 0; b < batch.size(); ++b) {
        for (std::size_t t = 0; t < perfect.lemma_probs.dim(1); ++t) {
            perfect.lemma_probs(
                b, t, static_cast<std::size_t>(batch.instances[b].lemma_target.hot[t])) = 1.0;
        }
        perfect.pos_probs(b, static_cast<std::size_t>(batch.instances[b].pos_target)) = 1.0;
    }
    CHECK(compute_loss(perfect, batch, world.hp) == doctest::Approx(0.0));

    // A lemma-only configuration ignores pos targets entirely.
    Hyperparameters lemma_only = world.hp;
    lemma_only.pos_head = false;
    Batch no_pos = batch;
    for (auto& inst : no_pos.instances) inst.pos_target = -1;
    ModelParameters<double> ml = init_model<double>(world.vocab, lemma_only, nullptr, 6);
    const ForwardOutputs<double> out_l = forward(ml, no_pos, RunMode::infer, 0);
    CHECK(std::isfinite(compute_loss(out_l, no_pos, lemma_only)));
}

TEST_CASE("whole-model gradients match central differences") {
    ToyWorld world;
    ModelParameters<double> m = init_model<double>(world.vocab, world.hp, nullptr, 123);
    jitter_parameters(m, 999);
    const Batch batch = world.two_instance_batch();

    const std::uint64_t seed = 77; // fixed dropout masks make the loss deterministic
    backward(m, batch, seed);
    const auto loss = [&]() {
        const ForwardOutputs<double> out = forward(m, batch, RunMode::train, seed);
        return compute_loss(out, batch, m.hp);
    };
    const double err = grad_check(all_parameters(m), loss, 1e-5);
    CHECK(err < 1e-3);
}

TEST_CASE("whole-model gradients also hold without dropout") {
    ToyWorld world;
    Hyperparameters hp = world.hp;
    hp.dropout_p = 0.0;
    ModelParameters<double> m = init_model<double>(world.vocab, hp, nullptr, 321);
    const Batch batch = world.two_instance_batch();

    backward(m, batch, 5);
    const auto loss = [&]() {
        const ForwardOutputs<double> out = forward(m, batch, RunMode::train, 5);
        return compute_loss(out, batch, m.hp);
    };
    CHECK(grad_check(all_parameters(m), loss, 1e-5) < 1e-3);
}

TEST_CASE("head isolation and zero-weight head gradients") {
    ToyWorld world;
    const Batch batch = world.batch(0);

    Hyperparameters lemma_weighted = world.hp;
    lemma_weighted.lemma_weight = 1.0;
    lemma_weighted.pos_weight = 0.0;
    ModelParameters<double> m = init_model<double>(world.vocab, lemma_weighted, nullptr, 11);
    backward(m, batch, 3);
    m.for_each_parameter([](Parameter<double>& p) {
        if (p.name.rfind("pos", 0) == 0) {
            for (std::size_t i = 0; i < p.grad.size(); ++i) REQUIRE(p.grad[i] == 0.0);
        }
    });

    Hyperparameters pos_weighted = world.hp;
    pos_weighted.lemma_weight = 0.0;
    pos_weighted.pos_weight = 1.0;
    ModelParameters<double> m2 = init_model<double>(world.vocab, pos_weighted, nullptr, 11);
    backward(m2, batch, 3);
    m2.for_each_parameter([](Parameter<double>& p) {
        const bool lemma_exclusive =
            p.name.rfind("dec", 0) == 0 || p.name.rfind("lemma", 0) == 0;
        if (lemma_exclusive) {
            for (std::size_t i = 0; i < p.grad.size(); ++i) REQUIRE(p.grad[i] == 0.0);
        }
    });

    // Both weights zero: every gradient is exactly zero.
    Hyperparameters none = world.hp;
    none.lemma_weight = 0.0;
    none.pos_weight = 0.0;
    ModelParameters<double> m3 = init_model<double>(world.vocab, none, nullptr, 11);
    const double loss = backward(m3, batch, 3);
    CHECK(loss == 0.0);
    m3.for_each_parameter([](Parameter<double>& p) {
        for (std::size_t i = 0; i < p.grad.size(); ++i) REQUIRE(p.grad[i] == 0.0);
    });
}

TEST_CASE("embedding rows outside the batch windows get zero gradient") {
    ToyWorld world;
    ModelParameters<double> m = init_model<double>(world.vocab, world.hp, nullptr, 2);
    const Batch batch = world.two_instance_batch();
    backward(m, batch, 1);

    std::vector<bool> touched(static_cast<std::size_t>(world.vocab.lexicon_size()), false);
    for (const auto& inst : batch.instances) {
        for (int idx : inst.context) touched[static_cast<std::size_t>(idx)] = true;
    }
    bool any_nonzero_touched = false;
    for (std::size_t row = 0; row < touched.size(); ++row) {
        double norm = 0.0;
        for (std::size_t e = 0; e < m.hp.embedding_dim; ++e) {
            norm += std::abs(m.embedding.grad(row, e));
        }
        if (!touched[row]) {
            CHECK(norm == 0.0);
        } else if (norm > 0.0) {
            any_nonzero_touched = true;
        }
    }
    CHECK(any_nonzero_touched);
}

TEST_CASE("predict decodes per position and respects head configuration") {
    ToyWorld world;
    ModelParameters<float> m = init_model<float>(world.vocab, world.hp, nullptr, 8);

    CHECK(predict(m, Sentence{}).empty());

    const auto preds = predict(m, world.corpus.sentences[0]);
    REQUIRE(preds.size() == 3);
    for (const auto& p : preds) {
        REQUIRE(p.lemma.has_value());
        REQUIRE(p.pos.has_value());
        CHECK(world.vocab.lookup_tag(*p.pos) >= 0);
    }

    // Deterministic: infer mode has no randomness.
    const auto again = predict(m, world.corpus.sentences[0]);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        CHECK(*preds[i].lemma == *again[i].lemma);
        CHECK(*preds[i].pos == *again[i].pos);
    }

    Hyperparameters pos_only = world.hp;
    pos_only.lemma_head = false;
    ModelParameters<float> mp = init_model<float>(world.vocab, pos_only, nullptr, 8);
    const auto pos_preds = predict(mp, world.corpus.sentences[0]);
    for (const auto& p : pos_preds) {
        CHECK(!p.lemma.has_value());
        CHECK(p.pos.has_value());
    }
}
