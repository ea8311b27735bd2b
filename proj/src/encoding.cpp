#include "lattag/encoding.hpp"

#include <numeric>

#include "lattag/errors.hpp"
#include "lattag/rng.hpp"

namespace lattag {

CharMatrix encode_token_chars(const std::string& lowered, const Vocabularies& vocab) {
    CharMatrix m;
    m.n_rows = static_cast<int>(vocab.char_alphabet.size());
    m.hot.assign(static_cast<std::size_t>(vocab.max_token_len), -1);
    const std::size_t limit =
        std::min(lowered.size(), static_cast<std::size_t>(vocab.max_token_len));
    for (std::size_t c = 0; c < limit; ++c) {
        m.hot[c] = vocab.lookup_char(lowered[c]);
    }
    return m;
}

CharMatrix encode_lemma_target(const std::string& lemma, const Vocabularies& vocab) {
    CharMatrix m;
    m.n_rows = vocab.lemma_alphabet_size();
    m.hot.assign(static_cast<std::size_t>(vocab.max_lemma_len), vocab.pad_index());
    const std::size_t limit =
        std::min(lemma.size(), static_cast<std::size_t>(vocab.max_lemma_len));
    for (std::size_t c = 0; c < limit; ++c) {
        const int idx = vocab.lookup_lemma_char(lemma[c]);
        if (idx < 0) {
            throw UnknownLemmaChar("lemma character '" + std::string(1, lemma[c]) +
                                   "' not in lemma alphabet");
        }
        m.hot[c] = idx;
    }
    return m;
}

ContextIndices encode_context(const Sentence& sentence, std::size_t t,
                              const Vocabularies& vocab) {
    ContextIndices ctx{};
    const long long tt = static_cast<long long>(t);
    const long long len = static_cast<long long>(sentence.size());
    const long long offsets[4] = {-2, -1, 0, 1};
    for (int s = 0; s < 4; ++s) {
        const long long p = tt + offsets[s];
        if (p < 0 || p >= len) {
            ctx[static_cast<std::size_t>(s)] = vocab.boundary_index();
        } else {
            ctx[static_cast<std::size_t>(s)] =
                vocab.lookup_token(sentence[static_cast<std::size_t>(p)].lowered);
        }
    }
    return ctx;
}

std::vector<Batch> make_batches(const std::vector<TrainingInstance>& instances,
                                std::size_t batch_size, std::uint64_t seed, bool shuffle) {
    if (batch_size < 1) throw ShapeMismatch("batch_size must be >= 1");
    std::vector<std::size_t> order(instances.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (shuffle && order.size() > 1) {
        Rng rng(seed);
        for (std::size_t i = order.size() - 1; i > 0; --i) {
            std::swap(order[i], order[rng.below(i + 1)]);
        }
    }
    std::vector<Batch> batches;
    batches.reserve((instances.size() + batch_size - 1) / batch_size);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        Batch b;
        const std::size_t end = std::min(start + batch_size, order.size());
        b.instances.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) {
            b.instances.push_back(instances[order[i]]);
        }
        batches.push_back(std::move(b));
    }
    return batches;
}

std::vector<TrainingInstance> build_instances(const Corpus& corpus, const Vocabularies& vocab) {
    std::vector<TrainingInstance> out;
    out.reserve(corpus.token_count());
    for (const auto& sentence : corpus.sentences) {
        for (std::size_t t = 0; t < sentence.size(); ++t) {
            TrainingInstance inst;
            inst.char_input = encode_token_chars(sentence[t].lowered, vocab);
            inst.context = encode_context(sentence, t, vocab);
            inst.lemma_target = encode_lemma_target(sentence[t].lemma, vocab);
            inst.pos_target = vocab.lookup_tag(sentence[t].pos);
            inst.known = vocab.contains_token(sentence[t].lowered);
            out.push_back(std::move(inst));
        }
    }
    return out;
}

} // namespace lattag
