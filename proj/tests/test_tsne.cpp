#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "lattag/rng.hpp"
#include "lattag/tsne.hpp"
#include "testutil.hpp"

using namespace lattag;

namespace {

// Points drawn from `clusters` well-separated Gaussians in `dim` dimensions.
Tensor<double> gaussian_clusters(std::size_t n, std::size_t clusters, std::size_t dim,
                                 double separation, std::uint64_t seed,
                                 std::vector<int>* labels = nullptr) {
    Rng rng(seed);
    Tensor<double> centers({clusters, dim});
    for (std::size_t c = 0; c < clusters; ++c) {
        for (std::size_t d = 0; d < dim; ++d) {
            centers(c, d) = rng.gaussian(0.0, separation);
        }
    }
    Tensor<double> data({n, dim});
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % clusters;
        if (labels) labels->push_back(static_cast<int>(c));
        for (std::size_t d = 0; d < dim; ++d) {
            data(i, d) = centers(c, d) + rng.gaussian(0.0, 1.0);
        }
    }
    return data;
}

} // namespace

TEST_CASE("affinities are symmetric, normalized and hit the target perplexity") {
    const Tensor<double> data = gaussian_clusters(60, 3, 10, 8.0, 5);

    const Tensor<double> cond = tsne_conditional_affinities(data, 12.0);
    for (std::size_t i = 0; i < 60; ++i) {
        double row_sum = 0.0, entropy = 0.0;
        for (std::size_t j = 0; j < 60; ++j) {
            row_sum += cond(i, j);
            if (cond(i, j) > 0.0) entropy -= cond(i, j) * std::log(cond(i, j));
        }
        CHECK(std::abs(row_sum - 1.0) < 1e-9);
        // Realized perplexity within 1e-3 of the target.
        CHECK(std::abs(std::exp(entropy) - 12.0) < 1e-3);
    }

    const Tensor<double> p = tsne_affinities(data, 12.0);
    double total = 0.0;
    for (std::size_t i = 0; i < 60; ++i) {
        for (std::size_t j = 0; j < 60; ++j) {
            CHECK(p(i, j) >= 0.0);
            CHECK(p(i, j) == p(j, i));
            total += p(i, j);
        }
    }
    CHECK(std::abs(total - 1.0) < 1e-8);
}

TEST_CASE("projection is finite, deterministic and reduces KL") {
    const Tensor<double> data = gaussian_clusters(90, 3, 12, 9.0, 11);
    TsneConfig config;
    config.perplexity = 10.0;
    config.iterations = 300;
    config.momentum_switch_iter = 150;
    config.exaggeration_iters = 50;

    TsneDiagnostics diag;
    const Tensor<double> coords = tsne_project(data, config, 21, &diag);
    REQUIRE(coords.shape() == std::vector<std::size_t>{90, 2});
    for (std::size_t i = 0; i < coords.size(); ++i) CHECK(std::isfinite(coords[i]));
    CHECK(diag.kl_final < diag.kl_first);

    const Tensor<double> again = tsne_project(data, config, 21, nullptr);
    CHECK(coords == again);

    const Tensor<double> other_seed = tsne_project(data, config, 22, nullptr);
    CHECK(!(coords == other_seed));
}

TEST_CASE("perplexity preconditions") {
    const Tensor<double> data = gaussian_clusters(30, 3, 5, 6.0, 2);
    TsneConfig config;
    config.perplexity = 4.0; // below the floor
    CHECK_THROWS_AS(tsne_project(data, config, 1, nullptr), PerplexityOutOfRange);
    config.perplexity = 10.0; // >= n/3
    CHECK_THROWS_AS(tsne_project(data, config, 1, nullptr), PerplexityOutOfRange);
    config.perplexity = 9.0;
    CHECK_NOTHROW(tsne_conditional_affinities(data, 9.0));
}

TEST_CASE("separated clusters stay separated in 2-D") {
    std::vector<int> labels;
    const Tensor<double> data = gaussian_clusters(120, 3, 20, 10.0, 7, &labels);
    TsneConfig config;
    config.perplexity = 15.0;
    config.iterations = 400;

    const Tensor<double> coords = tsne_project(data, config, 3, nullptr);

    // 5-NN label purity in the embedding.
    std::size_t pure = 0, total = 0;
    for (std::size_t i = 0; i < 120; ++i) {
        std::vector<std::pair<double, int>> dists;
        for (std::size_t j = 0; j < 120; ++j) {
            if (i == j) continue;
            const double dx = coords(i, 0) - coords(j, 0);
            const double dy = coords(i, 1) - coords(j, 1);
            dists.emplace_back(dx * dx + dy * dy, labels[j]);
        }
        std::partial_sort(dists.begin(), dists.begin() + 5, dists.end());
        for (int k = 0; k < 5; ++k) {
            ++total;
            if (dists[static_cast<std::size_t>(k)].second == labels[i]) ++pure;
        }
    }
    CHECK(static_cast<double>(pure) / static_cast<double>(total) > 0.9);
}

TEST_CASE("scatter file layout and precision") {
    testutil::TempDir dir;
    Tensor<double> coords({2, 2});
    coords(0, 0) = 0.123456789012345678;
    coords(0, 1) = -1.5;
    coords(1, 0) = 2.25;
    coords(1, 1) = 1e-17;
    const std::vector<std::string> tokens = {"ex", "pro"};

    const std::string plain = dir.file("scatter.tsv");
    emit_scatter(coords, tokens, nullptr, plain);
    const std::string text = testutil::read_file(plain);
    CHECK(text.find("token\tx\ty\n") == 0);
    std::size_t rows = 0;
    for (char c : text) rows += c == '\n' ? 1 : 0;
    CHECK(rows == 3); // header + 2 points

    // Coordinates round-trip at full precision.
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    const std::size_t tab1 = line.find('\t');
    const std::size_t tab2 = line.find('\t', tab1 + 1);
    CHECK(std::stod(line.substr(tab1 + 1, tab2 - tab1 - 1)) == coords(0, 0));
    CHECK(std::stod(line.substr(tab2 + 1)) == coords(0, 1));

    std::unordered_map<std::string, std::string> pos_of = {{"ex", "P"}};
    const std::string with_pos = dir.file("scatter_pos.tsv");
    emit_scatter(coords, tokens, &pos_of, with_pos);
    const std::string text2 = testutil::read_file(with_pos);
    CHECK(text2.find("token\tx\ty\tpos\n") == 0);
    CHECK(text2.find("ex\t") != std::string::npos);
    CHECK(text2.find("\tP\n") != std::string::npos);

    Tensor<double> wrong({3, 2});
    CHECK_THROWS_AS(emit_scatter(wrong, tokens, nullptr, plain), LengthMismatch);
}
