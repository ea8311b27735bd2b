#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lattag/corpus.hpp"
#include "lattag/tensor.hpp"

namespace lattag {

// Binary |alphabet| x L matrix with at most one 1 per column, stored as the
// hot row per column (-1 for an all-zero column). Column count is fixed by
// the vocabulary, not the encoded string.
struct CharMatrix {
    int n_rows = 0;
    std::vector<std::int32_t> hot; // hot[c] = row of the 1 in column c, or -1

    int cols() const { return static_cast<int>(hot.size()); }
    bool at(int row, int col) const { return hot[static_cast<std::size_t>(col)] == row; }

    bool operator==(const CharMatrix& other) const {
        return n_rows == other.n_rows && hot == other.hot;
    }
};

// Lexicon indices of the tokens at positions [t-2, t-1, t, t+1].
using ContextIndices = std::array<std::int32_t, 4>;

struct TrainingInstance {
    CharMatrix char_input;   // encoder input, all-zero padding
    ContextIndices context{};
    CharMatrix lemma_target; // decoder target, PAD-class padding
    std::int32_t pos_target = -1;
    bool known = true;
};

struct Batch {
    std::vector<TrainingInstance> instances;
    std::size_t size() const { return instances.size(); }
};

// One-hot character columns over char_alphabet; length fixed at
// max_token_len, longer strings truncated, unseen characters all-zero.
CharMatrix encode_token_chars(const std::string& lowered, const Vocabularies& vocab);

// One-hot columns over lemma_alphabet + PAD; positions past the lemma carry
// the PAD class. Throws UnknownLemmaChar on characters outside the alphabet.
CharMatrix encode_lemma_target(const std::string& lemma, const Vocabularies& vocab);

ContextIndices encode_context(const Sentence& sentence, std::size_t t,
                              const Vocabularies& vocab);

// Argmax per column, reading stops at the first PAD.
// slot_probs is [max_lemma_len x lemma_alphabet_size].
template <typename T>
std::string decode_lemma(const Tensor<T>& slot_probs, const Vocabularies& vocab) {
    std::string out;
    const std::size_t slots = slot_probs.rows();
    const std::size_t k = slot_probs.cols();
    for (std::size_t c = 0; c < slots; ++c) {
        std::size_t best = 0;
        for (std::size_t r = 1; r < k; ++r) {
            if (slot_probs(c, r) > slot_probs(c, best)) best = r;
        }
        if (static_cast<int>(best) == vocab.pad_index()) break;
        out.push_back(vocab.lemma_alphabet[best]);
    }
    return out;
}

// Deterministic batching: a seeded Fisher-Yates permutation when shuffling,
// input order otherwise; the last batch may be smaller.
std::vector<Batch> make_batches(const std::vector<TrainingInstance>& instances,
                                std::size_t batch_size, std::uint64_t seed, bool shuffle);

// Encodes every token of a gold-annotated corpus.
std::vector<TrainingInstance> build_instances(const Corpus& corpus, const Vocabularies& vocab);

} // namespace lattag
