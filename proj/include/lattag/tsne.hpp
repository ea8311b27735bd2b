#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lattag/tensor.hpp"

namespace lattag {

struct TsneConfig {
    double perplexity = 30.0;
    std::size_t iterations = 1000;
    double learning_rate = 200.0;
    double early_exaggeration = 4.0;
    std::size_t exaggeration_iters = 100;
    double momentum_initial = 0.5;
    double momentum_final = 0.8;
    std::size_t momentum_switch_iter = 250;
    double init_stddev = 1e-4;
};

struct TsneDiagnostics {
    double kl_first = 0.0; // KL against the true P after the first update
    double kl_final = 0.0;
};

// Row-stochastic conditional affinities P(j|i); each row's Gaussian
// bandwidth is bisected until the row entropy matches log(perplexity).
Tensor<double> tsne_conditional_affinities(const Tensor<double>& data, double perplexity);

// Symmetrized joint P = (P(j|i) + P(i|j)) / (2n); sums to 1.
Tensor<double> tsne_affinities(const Tensor<double>& data, double perplexity);

// KL(P || Q) with the Student-t Q induced by the 2-D coordinates.
double tsne_kl(const Tensor<double>& p, const Tensor<double>& coords);

// Exact O(n^2) t-SNE to 2 dimensions; n is capped at 5000.
Tensor<double> tsne_project(const Tensor<double>& data, const TsneConfig& config,
                            std::uint64_t seed, TsneDiagnostics* diag = nullptr);

// Scatter TSV: token, x, y and an optional pos column for colour keys.
void emit_scatter(const Tensor<double>& coords, const std::vector<std::string>& tokens,
                  const std::unordered_map<std::string, std::string>* pos_of,
                  const std::string& path);

} // namespace lattag
