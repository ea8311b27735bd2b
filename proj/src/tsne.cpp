#include "lattag/tsne.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "lattag/errors.hpp"
#include "lattag/rng.hpp"

namespace lattag {

namespace {

constexpr double kProbFloor = 1e-12;
constexpr std::size_t kMaxPoints = 5000;
constexpr int kBisectionSteps = 50;
constexpr double kEntropyTolerance = 1e-5;

Tensor<double> squared_distances(const Tensor<double>& x) {
    const std::size_t n = x.rows(), d = x.cols();
    Tensor<double> dist({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double acc = 0.0;
            const double* xi = x.row(i);
            const double* xj = x.row(j);
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = xi[k] - xj[k];
                acc += diff * diff;
            }
            dist(i, j) = acc;
            dist(j, i) = acc;
        }
    }
    return dist;
}

void check_preconditions(std::size_t n, double perplexity) {
    if (n > kMaxPoints) {
        throw std::invalid_argument("t-SNE input exceeds the 5000-point cap");
    }
    if (!(perplexity >= 5.0) || !(perplexity < static_cast<double>(n) / 3.0)) {
        throw PerplexityOutOfRange("perplexity must satisfy 5 <= perplexity < n/3");
    }
}

} // namespace

Tensor<double> tsne_conditional_affinities(const Tensor<double>& data, double perplexity) {
    const std::size_t n = data.rows();
    check_preconditions(n, perplexity);
    const Tensor<double> dist = squared_distances(data);
    const double target_entropy = std::log(perplexity);

    Tensor<double> p({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        double beta = 1.0;
        double beta_min = -std::numeric_limits<double>::infinity();
        double beta_max = std::numeric_limits<double>::infinity();
        const double* di = dist.row(i);
        double* pi = p.row(i);

        for (int step = 0; step < kBisectionSteps; ++step) {
            // Row entropy H = sum beta*d*p + log(sum exp(-beta*d)).
            double sum = 0.0;
            double weighted = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) {
                    pi[j] = 0.0;
                    continue;
                }
                pi[j] = std::exp(-beta * di[j]);
                sum += pi[j];
                weighted += beta * di[j] * pi[j];
            }
            const double entropy = std::log(sum) + weighted / sum;
            for (std::size_t j = 0; j < n; ++j) pi[j] /= sum;

            const double diff = entropy - target_entropy;
            if (std::abs(diff) < kEntropyTolerance) break;
            if (diff > 0) {
                beta_min = beta;
                beta = std::isinf(beta_max) ? beta * 2.0 : (beta + beta_max) / 2.0;
            } else {
                beta_max = beta;
                beta = std::isinf(beta_min) ? beta / 2.0 : (beta + beta_min) / 2.0;
            }
        }
    }
    return p;
}

Tensor<double> tsne_affinities(const Tensor<double>& data, double perplexity) {
    const Tensor<double> cond = tsne_conditional_affinities(data, perplexity);
    const std::size_t n = cond.rows();
    Tensor<double> p({n, n});
    const double denom = 2.0 * static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            p(i, j) = (cond(i, j) + cond(j, i)) / denom;
        }
    }
    return p;
}

double tsne_kl(const Tensor<double>& p, const Tensor<double>& coords) {
    const std::size_t n = coords.rows();
    const Tensor<double> dist = squared_distances(coords);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) z += 1.0 / (1.0 + dist(i, j));
        }
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double pij = std::max(p(i, j), kProbFloor);
            const double qij = std::max(1.0 / (1.0 + dist(i, j)) / z, kProbFloor);
            kl += pij * std::log(pij / qij);
        }
    }
    return kl;
}

Tensor<double> tsne_project(const Tensor<double>& data, const TsneConfig& config,
                            std::uint64_t seed, TsneDiagnostics* diag) {
    const std::size_t n = data.rows();
    check_preconditions(n, config.perplexity);

    const Tensor<double> p_true = tsne_affinities(data, config.perplexity);

    Rng rng(seed);
    Tensor<double> y({n, 2});
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = rng.gaussian(0.0, config.init_stddev);
    }

    Tensor<double> velocity({n, 2});
    Tensor<double> grad({n, 2});

    for (std::size_t iter = 1; iter <= config.iterations; ++iter) {
        const bool exaggerate = iter <= config.exaggeration_iters;
        const double momentum = iter < config.momentum_switch_iter ? config.momentum_initial
                                                                   : config.momentum_final;

        const Tensor<double> dist = squared_distances(y);
        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i != j) z += 1.0 / (1.0 + dist(i, j));
            }
        }

        grad.fill(0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double w = 1.0 / (1.0 + dist(i, j));
                const double pij = exaggerate ? config.early_exaggeration * p_true(i, j)
                                              : p_true(i, j);
                const double mult = 4.0 * (pij - w / z) * w;
                grad(i, 0) += mult * (y(i, 0) - y(j, 0));
                grad(i, 1) += mult * (y(i, 1) - y(j, 1));
            }
        }

        for (std::size_t i = 0; i < y.size(); ++i) {
            velocity[i] = momentum * velocity[i] - config.learning_rate * grad[i];
            y[i] += velocity[i];
        }

        // Centering keeps the embedding bounded; KL is translation-invariant.
        double mean0 = 0.0, mean1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mean0 += y(i, 0);
            mean1 += y(i, 1);
        }
        mean0 /= static_cast<double>(n);
        mean1 /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            y(i, 0) -= mean0;
            y(i, 1) -= mean1;
        }

        if (diag && iter == 1) diag->kl_first = tsne_kl(p_true, y);
    }
    if (diag) diag->kl_final = tsne_kl(p_true, y);
    return y;
}

void emit_scatter(const Tensor<double>& coords, const std::vector<std::string>& tokens,
                  const std::unordered_map<std::string, std::string>* pos_of,
                  const std::string& path) {
    if (coords.rows() != tokens.size()) {
        throw LengthMismatch("emit_scatter: coordinate/token count mismatch");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write scatter file: " + path);
    out << (pos_of ? "token\tx\ty\tpos\n" : "token\tx\ty\n");
    char buf[64];
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        out << tokens[i];
        std::snprintf(buf, sizeof buf, "\t%.17g", coords(i, 0));
        out << buf;
        std::snprintf(buf, sizeof buf, "\t%.17g", coords(i, 1));
        out << buf;
        if (pos_of) {
            auto it = pos_of->find(tokens[i]);
            out << '\t' << (it == pos_of->end() ? "" : it->second);
        }
        out << '\n';
    }
    if (!out) throw IoError("failed writing scatter file: " + path);
}

} // namespace lattag
