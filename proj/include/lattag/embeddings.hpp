#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lattag/corpus.hpp"
#include "lattag/tensor.hpp"

namespace lattag {

// Rows follow the token lexicon (observed tokens, then UNK, then BOUNDARY).
using EmbeddingMatrix = Tensor<float>;

struct SkipgramConfig {
    std::size_t dim = 100;
    std::size_t window = 5;       // symmetric; per-center width drawn in [1, window]
    std::size_t negatives = 5;    // noise samples per positive pair
    std::size_t sweeps = 5;       // passes over the corpus
    double lr_initial = 0.025;
    double lr_min = 1e-4;         // linear decay floor
    double noise_power = 0.75;    // unigram^0.75 noise distribution
    std::size_t min_count = 1;
};

struct SkipgramResult {
    EmbeddingMatrix matrix;
    std::vector<double> sweep_loss; // mean logistic loss per sweep
};

// Skipgram with negative sampling over the training sentences. Deterministic
// given the seed (single-threaded by contract); the UNK and BOUNDARY rows
// keep their random initialization since they never occur in text.
SkipgramResult pretrain_skipgram(const Corpus& train, const Vocabularies& vocab,
                                 const SkipgramConfig& config, std::uint64_t seed);

// k nearest tokens by cosine similarity, query excluded, descending order.
std::vector<std::pair<std::string, double>> nearest_neighbors(const EmbeddingMatrix& matrix,
                                                              const Vocabularies& vocab,
                                                              const std::string& token,
                                                              std::size_t k);

// Text export: first line "<rows> <cols>", then one observed token per line
// followed by its values. Reserved rows are not exported.
void save_embeddings(const EmbeddingMatrix& matrix, const Vocabularies& vocab,
                     const std::string& path);

// Loads exported vectors back into a matrix shaped for `vocab`; tokens
// missing from the file keep the values already present in `matrix`.
void load_embeddings_into(EmbeddingMatrix& matrix, const Vocabularies& vocab,
                          const std::string& path);

// Standalone load of the export format: (tokens in file order, row-major values).
std::pair<std::vector<std::string>, Tensor<float>> load_embedding_file(const std::string& path);

} // namespace lattag
