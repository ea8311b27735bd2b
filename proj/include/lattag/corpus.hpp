#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lattag/errors.hpp"

namespace lattag {

enum class Split { train, dev, test, unlabeled };

struct AnnotatedToken {
    std::string surface;
    std::string lowered;
    std::string lemma;
    std::string pos;
};

using Sentence = std::vector<AnnotatedToken>;

struct Corpus {
    std::vector<Sentence> sentences;
    Split split = Split::unlabeled;

    std::size_t token_count() const {
        std::size_t n = 0;
        for (const auto& s : sentences) n += s.size();
        return n;
    }
    bool empty() const { return sentences.empty(); }
};

// Index maps over the training data. Observed items take dense indices in
// first-occurrence order; reserved symbols sit after them (UNK then BOUNDARY
// for the lexicon) or at the end (PAD for the lemma alphabet), so they can
// never collide with anything observed.
struct Vocabularies {
    std::vector<char> char_alphabet;
    std::vector<char> lemma_alphabet;
    std::vector<std::string> tokens;
    std::vector<std::uint32_t> token_counts;
    std::vector<std::string> tagset;
    int max_token_len = 0;
    int max_lemma_len = 0;

    std::unordered_map<char, int> char_index;
    std::unordered_map<char, int> lemma_char_index;
    std::unordered_map<std::string, int> token_index;
    std::unordered_map<std::string, int> tag_index;

    int unk_index() const { return static_cast<int>(tokens.size()); }
    int boundary_index() const { return static_cast<int>(tokens.size()) + 1; }
    int lexicon_size() const { return static_cast<int>(tokens.size()) + 2; }
    int pad_index() const { return static_cast<int>(lemma_alphabet.size()); }
    int lemma_alphabet_size() const { return static_cast<int>(lemma_alphabet.size()) + 1; }

    int lookup_char(char c) const {
        auto it = char_index.find(c);
        return it == char_index.end() ? -1 : it->second;
    }
    int lookup_lemma_char(char c) const {
        auto it = lemma_char_index.find(c);
        return it == lemma_char_index.end() ? -1 : it->second;
    }
    int lookup_token(const std::string& t) const {
        auto it = token_index.find(t);
        return it == token_index.end() ? unk_index() : it->second;
    }
    bool contains_token(const std::string& t) const { return token_index.count(t) != 0; }
    int lookup_tag(const std::string& t) const {
        auto it = tag_index.find(t);
        return it == tag_index.end() ? -1 : it->second;
    }

    // Regenerates the hash maps from the vectors (after deserialization).
    void rebuild_indices();

    bool operator==(const Vocabularies& other) const {
        return char_alphabet == other.char_alphabet && lemma_alphabet == other.lemma_alphabet &&
               tokens == other.tokens && token_counts == other.token_counts &&
               tagset == other.tagset && max_token_len == other.max_token_len &&
               max_lemma_len == other.max_lemma_len;
    }
};

struct CorpusStats {
    std::size_t tokens = 0;
    std::size_t unique_tokens = 0;
    std::size_t unique_lemmas = 0;
    std::optional<double> proportion_unseen; // percentage, only with a vocabulary
};

std::string lowercase_ascii(const std::string& s);

// Reads a 3-column TSV (TOKEN\tLEMMA\tPOS, LF line endings, blank line ends a
// sentence, '#'-prefixed lines are comments). With require_gold = false,
// 1-column lines (token only) are accepted, for tagging plain text.
Corpus load_corpus(const std::string& path, Split split, bool require_gold = true);

// Splits at a sentence boundary so that the train part holds the largest
// sentence prefix with at most (1 - dev_fraction) of the tokens.
std::pair<Corpus, Corpus> split_train_dev(const Corpus& corpus, double dev_fraction = 0.10);

Vocabularies build_vocabularies(const Corpus& train);

// True per token iff its lowered surface form never occurred in training.
std::vector<std::vector<bool>> mark_unknown(const Vocabularies& vocab, const Corpus& eval);

CorpusStats corpus_stats(const Corpus& corpus, const Vocabularies* vocab = nullptr);

} // namespace lattag
