#include "mme/kernels.hpp"

namespace mme::kernels {

namespace {

inline void gemm_nn_row(const double* a, const double* b, double* c, std::size_t k, std::size_t m) {
    for (std::size_t p = 0; p < k; ++p) {
        const double av = a[p];
        if (av == 0.0) continue;
        const double* brow = b + p * m;
        for (std::size_t j = 0; j < m; ++j) c[j] += av * brow[j];
    }
}

inline double pair_distance(const double* x, std::size_t i, std::size_t j, std::size_t dim) {
    double s = 0;
    for (std::size_t t = 0; t < dim; ++t) {
        const double diff = x[i * dim + t] - x[j * dim + t];
        s += diff * diff;
    }
    return s;
}

} // namespace

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) gemm_nn_row(a.data() + i * k, b.data(), c.data() + i * m, k, m);
}

void gemm_nn_omp(std::span<const double> a, std::span<const double> b, std::span<double> c,
                 std::size_t n, std::size_t k, std::size_t m) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(n); ++i)
        gemm_nn_row(a.data() + i * k, b.data(), c.data() + i * m, k, m);
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = a.data() + i * k;
        for (std::size_t j = 0; j < m; ++j) {
            const double* brow = b.data() + j * k;
            double s = 0;
            for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
            c[i * m + j] += s;
        }
    }
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t p = 0; p < k; ++p) {
        const double* arow = a.data() + p * n;
        const double* brow = b.data() + p * m;
        for (std::size_t i = 0; i < n; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* crow = c.data() + i * m;
            for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
}

void pairwise_sq_distances(std::span<const double> x, std::span<double> d, std::size_t n, std::size_t dim) {
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) d[i * n + j] = pair_distance(x.data(), i, j, dim);
}

void pairwise_sq_distances_omp(std::span<const double> x, std::span<double> d, std::size_t n, std::size_t dim) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(n); ++i)
        for (std::size_t j = 0; j < n; ++j) d[i * n + j] = pair_distance(x.data(), i, j, dim);
}

} // namespace mme::kernels
