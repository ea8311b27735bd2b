#include "lattag/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lattag/rng.hpp"

namespace lattag {

namespace {

double dot(const float* a, const float* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(a[i]) * b[i];
    return acc;
}

double cosine(const float* a, const float* b, std::size_t n) {
    const double na = std::sqrt(dot(a, a, n));
    const double nb = std::sqrt(dot(b, b, n));
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b, n) / (na * nb);
}

// Cumulative unigram^power table; sampling is a binary search over it.
struct NoiseTable {
    std::vector<double> cumulative;

    explicit NoiseTable(const std::vector<std::uint32_t>& counts, double power) {
        cumulative.resize(counts.size());
        double total = 0.0;
        for (std::size_t i = 0; i < counts.size(); ++i) {
            total += std::pow(static_cast<double>(counts[i]), power);
            cumulative[i] = total;
        }
    }

    std::size_t sample(Rng& rng) const {
        const double u = rng.next_double() * cumulative.back();
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        return std::min(static_cast<std::size_t>(it - cumulative.begin()),
                        cumulative.size() - 1);
    }
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

SkipgramResult pretrain_skipgram(const Corpus& train, const Vocabularies& vocab,
                                 const SkipgramConfig& config, std::uint64_t seed) {
    if (train.empty()) throw EmptyCorpus("skipgram pretraining needs a non-empty corpus");

    const std::size_t rows = static_cast<std::size_t>(vocab.lexicon_size());
    const std::size_t observed = vocab.tokens.size();
    const std::size_t dim = config.dim;

    SkipgramResult result;
    result.matrix = EmbeddingMatrix({rows, dim});
    Tensor<float> context_weights({rows, dim}); // stays zero-initialized

    Rng rng(seed);
    const double span = 0.5 / static_cast<double>(dim);
    for (std::size_t i = 0; i < result.matrix.size(); ++i) {
        result.matrix[i] = static_cast<float>(rng.uniform(-span, span));
    }

    // Sentences as index sequences; tokens under min_count are dropped.
    std::vector<std::vector<std::size_t>> stream;
    std::size_t total_positions = 0;
    for (const auto& sentence : train.sentences) {
        std::vector<std::size_t> ids;
        ids.reserve(sentence.size());
        for (const auto& tok : sentence) {
            const int idx = vocab.lookup_token(tok.lowered);
            if (idx >= 0 && static_cast<std::size_t>(idx) < observed &&
                vocab.token_counts[static_cast<std::size_t>(idx)] >= config.min_count) {
                ids.push_back(static_cast<std::size_t>(idx));
            }
        }
        if (!ids.empty()) {
            total_positions += ids.size();
            stream.push_back(std::move(ids));
        }
    }
    if (total_positions == 0) throw EmptyCorpus("no usable tokens for skipgram pretraining");

    NoiseTable noise(vocab.token_counts, config.noise_power);

    const double total_steps =
        static_cast<double>(total_positions) * static_cast<double>(config.sweeps);
    std::size_t step = 0;
    std::vector<double> grad_center(dim);

    for (std::size_t sweep = 0; sweep < config.sweeps; ++sweep) {
        double sweep_loss = 0.0;
        std::size_t sweep_pairs = 0;
        for (const auto& ids : stream) {
            for (std::size_t pos = 0; pos < ids.size(); ++pos) {
                const double progress = static_cast<double>(step) / total_steps;
                const double lr = std::max(config.lr_min,
                                           config.lr_initial * (1.0 - progress));
                ++step;

                const std::size_t center = ids[pos];
                const std::size_t width = 1 + rng.below(config.window);
                const std::size_t lo = pos >= width ? pos - width : 0;
                const std::size_t hi = std::min(ids.size() - 1, pos + width);
                for (std::size_t cpos = lo; cpos <= hi; ++cpos) {
                    if (cpos == pos) continue;
                    float* center_row = result.matrix.row(center);
                    std::fill(grad_center.begin(), grad_center.end(), 0.0);

                    for (std::size_t s = 0; s <= config.negatives; ++s) {
                        std::size_t target;
                        double label;
                        if (s == 0) {
                            target = ids[cpos];
                            label = 1.0;
                        } else {
                            target = noise.sample(rng);
                            if (target == ids[cpos]) continue;
                            label = 0.0;
                        }
                        float* ctx_row = context_weights.row(target);
                        const double score = sigmoid(dot(center_row, ctx_row, dim));
                        sweep_loss -= label > 0.5 ? std::log(std::max(score, 1e-12))
                                                  : std::log(std::max(1.0 - score, 1e-12));
                        ++sweep_pairs;
                        const double g = (label - score) * lr;
                        for (std::size_t d = 0; d < dim; ++d) {
                            grad_center[d] += g * ctx_row[d];
                            ctx_row[d] += static_cast<float>(g * center_row[d]);
                        }
                    }
                    for (std::size_t d = 0; d < dim; ++d) {
                        center_row[d] += static_cast<float>(grad_center[d]);
                    }
                }
            }
        }
        result.sweep_loss.push_back(sweep_pairs ? sweep_loss / static_cast<double>(sweep_pairs)
                                                : 0.0);
    }
    return result;
}

std::vector<std::pair<std::string, double>> nearest_neighbors(const EmbeddingMatrix& matrix,
                                                              const Vocabularies& vocab,
                                                              const std::string& token,
                                                              std::size_t k) {
    auto it = vocab.token_index.find(token);
    if (it == vocab.token_index.end()) {
        throw OutOfLexicon("token '" + token + "' not in lexicon");
    }
    const std::size_t query = static_cast<std::size_t>(it->second);
    const std::size_t dim = matrix.cols();
    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(vocab.tokens.size());
    for (std::size_t i = 0; i < vocab.tokens.size(); ++i) {
        if (i == query) continue;
        scored.emplace_back(vocab.tokens[i], cosine(matrix.row(query), matrix.row(i), dim));
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

void save_embeddings(const EmbeddingMatrix& matrix, const Vocabularies& vocab,
                     const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write embeddings: " + path);
    const std::size_t dim = matrix.cols();
    out << vocab.tokens.size() << ' ' << dim << '\n';
    char buf[64];
    for (std::size_t i = 0; i < vocab.tokens.size(); ++i) {
        out << vocab.tokens[i];
        const float* row = matrix.row(i);
        for (std::size_t d = 0; d < dim; ++d) {
            std::snprintf(buf, sizeof buf, " %.9g", static_cast<double>(row[d]));
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw IoError("failed writing embeddings: " + path);
}

std::pair<std::vector<std::string>, Tensor<float>> load_embedding_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open embeddings: " + path);
    std::string header;
    if (!std::getline(in, header)) throw FormatError("empty embeddings file: " + path);
    std::istringstream hs(header);
    std::size_t rows = 0, cols = 0;
    if (!(hs >> rows >> cols) || cols == 0) {
        throw FormatError("bad embeddings header: '" + header + "'");
    }
    std::vector<std::string> tokens;
    tokens.reserve(rows);
    Tensor<float> values({rows, cols});
    std::string line;
    for (std::size_t i = 0; i < rows; ++i) {
        if (!std::getline(in, line)) throw FormatError("embeddings file truncated: " + path);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        // Values are the last `cols` space-separated fields; the token is
        // everything before them (tokens may contain spaces).
        std::size_t end = line.size();
        for (std::size_t d = 0; d < cols; ++d) {
            const std::size_t space = line.rfind(' ', end == 0 ? 0 : end - 1);
            if (space == std::string::npos) {
                throw FormatError("too few values on embeddings line " + std::to_string(i + 2));
            }
            values(i, cols - 1 - d) =
                std::strtof(line.c_str() + space + 1, nullptr);
            end = space;
        }
        tokens.push_back(line.substr(0, end));
    }
    return {std::move(tokens), std::move(values)};
}

void load_embeddings_into(EmbeddingMatrix& matrix, const Vocabularies& vocab,
                          const std::string& path) {
    auto [tokens, values] = load_embedding_file(path);
    const std::size_t dim = matrix.cols();
    if (values.cols() != dim) {
        throw ShapeMismatch("embedding file has dimension " + std::to_string(values.cols()) +
                            ", model expects " + std::to_string(dim));
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        auto it = vocab.token_index.find(tokens[i]);
        if (it == vocab.token_index.end()) continue;
        float* dst = matrix.row(static_cast<std::size_t>(it->second));
        const float* src = values.row(i);
        for (std::size_t d = 0; d < dim; ++d) dst[d] = src[d];
    }
}

} // namespace lattag
