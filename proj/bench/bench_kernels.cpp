// Compares the OpenMP kernels against the serial reference and checks that
// both produce bit-identical results while timing them.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "lattag/kernels.hpp"
#include "lattag/nn.hpp"
#include "lattag/rng.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

using namespace lattag;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename Fn>
double time_best_of(int repeats, Fn&& fn) {
    double best = 1e30;
    for (int r = 0; r < repeats; ++r) {
        const auto start = Clock::now();
        fn();
        best = std::min(best, seconds_since(start));
    }
    return best;
}

void fill_random(std::vector<float>& v, Rng& rng) {
    for (float& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
}

void bench_matmul(std::size_t m, std::size_t k, std::size_t n) {
    Rng rng(42);
    std::vector<float> a(m * k), b(k * n), c_serial(m * n), c_parallel(m * n);
    fill_random(a, rng);
    fill_random(b, rng);

    const double t_serial = time_best_of(5, [&] {
        serial::matmul(a.data(), b.data(), c_serial.data(), m, k, n);
    });
    const double t_parallel = time_best_of(5, [&] {
        matmul(a.data(), b.data(), c_parallel.data(), m, k, n);
    });
    const bool identical =
        std::memcmp(c_serial.data(), c_parallel.data(), sizeof(float) * m * n) == 0;

    std::printf("matmul %4zux%4zux%4zu  serial %8.3f ms  openmp %8.3f ms  speedup %5.2fx  %s\n",
                m, k, n, t_serial * 1e3, t_parallel * 1e3, t_serial / t_parallel,
                identical ? "bit-identical" : "MISMATCH");
}

void bench_lstm(std::size_t batch, std::size_t steps, std::size_t in, std::size_t hidden) {
    Rng rng(7);
    LstmCellParams<float> l1, l2;
    l1.allocate("l1", in, hidden);
    l2.allocate("l2", hidden, hidden);
    l1.init_weights(rng);
    l2.init_weights(rng);

    std::vector<Tensor<float>> xs(steps, Tensor<float>({batch, in}));
    for (auto& x : xs) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
        }
    }

    const double t = time_best_of(3, [&] { (void)run_lstm_stack(xs, l1, l2); });
    std::printf("lstm2  batch %3zu T %2zu dims %3zu->%3zu  forward %8.3f ms\n", batch, steps,
                in, hidden, t * 1e3);
}

} // namespace

int main() {
#if defined(_OPENMP)
    std::printf("OpenMP enabled, max threads %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP disabled (serial build)\n");
#endif
    bench_matmul(64, 64, 64);
    bench_matmul(128, 400, 150);
    bench_matmul(256, 256, 256);
    bench_matmul(512, 512, 512);
    bench_lstm(100, 20, 30, 150);
    bench_lstm(100, 18, 600, 150);
    return 0;
}
