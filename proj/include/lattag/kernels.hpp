#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace lattag {

// Dense kernels used by every layer. The OpenMP variants parallelize over
// independent output rows; each output element is reduced in a fixed serial
// order, so results are bit-identical to the serial reference at any thread
// count. Build with -ffp-contract=off to keep that guarantee.

namespace kernel_detail {
// Tiny workloads stay on one thread. Transcendental maps pay off much
// earlier than arithmetic loops.
constexpr std::size_t kParallelThreshold = 1 << 14;
constexpr std::size_t kMapParallelThreshold = 1 << 12;
}

namespace serial {

// C[m x n] = A[m x k] * B[k x n]   (+= when accumulate)
template <typename T>
void matmul(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
            bool accumulate = false) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* ai = a + i * k;
        T* ci = c + i * n;
        if (!accumulate) {
            for (std::size_t j = 0; j < n; ++j) ci[j] = T(0);
        }
        for (std::size_t t = 0; t < k; ++t) {
            const T av = ai[t];
            const T* bt = b + t * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bt[j];
        }
    }
}

// C[m x n] = A[m x k] * B[n x k]^T
template <typename T>
void matmul_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
               bool accumulate = false) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* ai = a + i * k;
        T* ci = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const T* bj = b + j * k;
            T acc = accumulate ? ci[j] : T(0);
            for (std::size_t t = 0; t < k; ++t) acc += ai[t] * bj[t];
            ci[j] = acc;
        }
    }
}

// C[m x n] = A[k x m]^T * B[k x n]
template <typename T>
void matmul_tn(const T* a, const T* b, T* c, std::size_t k, std::size_t m, std::size_t n,
               bool accumulate = false) {
    for (std::size_t i = 0; i < m; ++i) {
        T* ci = c + i * n;
        if (!accumulate) {
            for (std::size_t j = 0; j < n; ++j) ci[j] = T(0);
        }
        for (std::size_t t = 0; t < k; ++t) {
            const T av = a[t * m + i];
            const T* bt = b + t * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bt[j];
        }
    }
}

} // namespace serial

template <typename T>
void matmul(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
            bool accumulate = false) {
    const bool big = m * k * n >= kernel_detail::kParallelThreshold;
#pragma omp parallel for schedule(static) if (big)
    for (long long ii = 0; ii < static_cast<long long>(m); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        const T* ai = a + i * k;
        T* ci = c + i * n;
        if (!accumulate) {
            for (std::size_t j = 0; j < n; ++j) ci[j] = T(0);
        }
        for (std::size_t t = 0; t < k; ++t) {
            const T av = ai[t];
            const T* bt = b + t * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bt[j];
        }
    }
}

template <typename T>
void matmul_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
               bool accumulate = false) {
    // Transposing B turns the per-element dot product into the vectorizable
    // accumulate form; the additions per output element stay in t order, so
    // results are bit-identical to the serial reference.
    std::vector<T> bt(k * n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t t = 0; t < k; ++t) bt[t * n + j] = b[j * k + t];
    }
    const bool big = m * k * n >= kernel_detail::kParallelThreshold;
#pragma omp parallel for schedule(static) if (big)
    for (long long ii = 0; ii < static_cast<long long>(m); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        const T* ai = a + i * k;
        T* ci = c + i * n;
        if (!accumulate) {
            for (std::size_t j = 0; j < n; ++j) ci[j] = T(0);
        }
        for (std::size_t t = 0; t < k; ++t) {
            const T av = ai[t];
            const T* btr = bt.data() + t * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * btr[j];
        }
    }
}

template <typename T>
void matmul_tn(const T* a, const T* b, T* c, std::size_t k, std::size_t m, std::size_t n,
               bool accumulate = false) {
    const bool big = m * k * n >= kernel_detail::kParallelThreshold;
#pragma omp parallel for schedule(static) if (big)
    for (long long ii = 0; ii < static_cast<long long>(m); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        T* ci = c + i * n;
        if (!accumulate) {
            for (std::size_t j = 0; j < n; ++j) ci[j] = T(0);
        }
        for (std::size_t t = 0; t < k; ++t) {
            const T av = a[t * m + i];
            const T* bt = b + t * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bt[j];
        }
    }
}

// y[b][j] += bias[j]
template <typename T>
void add_bias(T* y, const T* bias, std::size_t batch, std::size_t n) {
    const bool big = batch * n >= kernel_detail::kParallelThreshold;
#pragma omp parallel for schedule(static) if (big)
    for (long long bb = 0; bb < static_cast<long long>(batch); ++bb) {
        T* yb = y + static_cast<std::size_t>(bb) * n;
        for (std::size_t j = 0; j < n; ++j) yb[j] += bias[j];
    }
}

// bias_grad[j] += sum_b dy[b][j]
template <typename T>
void add_colsum(const T* dy, T* bias_grad, std::size_t batch, std::size_t n) {
    const bool big = batch * n >= kernel_detail::kParallelThreshold;
#pragma omp parallel for schedule(static) if (big)
    for (long long jj = 0; jj < static_cast<long long>(n); ++jj) {
        const std::size_t j = static_cast<std::size_t>(jj);
        T acc = T(0);
        for (std::size_t b = 0; b < batch; ++b) acc += dy[b * n + j];
        bias_grad[j] += acc;
    }
}

template <typename T>
void map_sigmoid(const T* x, T* y, std::size_t n) {
    const bool big = n >= kernel_detail::kMapParallelThreshold;
#pragma omp parallel for schedule(static) if (big)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        y[i] = T(1) / (T(1) + std::exp(-x[i]));
    }
}

template <typename T>
void map_tanh(const T* x, T* y, std::size_t n) {
    const bool big = n >= kernel_detail::kMapParallelThreshold;
#pragma omp parallel for schedule(static) if (big)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        y[i] = std::tanh(x[i]);
    }
}

} // namespace lattag
