#pragma once

// Dense kernels. Each OpenMP kernel has a serial reference twin; tests check
// the pair agrees bit-for-bit and bench/ compares their throughput.

#include <cstddef>
#include <exception>
#include <mutex>
#include <span>

namespace mme {

enum class Execution { serial, parallel };

/// Runs f(i) for i in [0, n). In parallel mode iterations are spread over
/// OpenMP threads; f must only write to slots owned by index i. The first
/// exception thrown by any iteration is rethrown on the calling thread.
template <class F>
void for_each_index(std::size_t n, Execution mode, F&& f) {
    if (mode == Execution::serial || n < 2) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < static_cast<long>(n); ++i) {
        try {
            f(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
}

namespace kernels {

// Row-major matrices. All gemm variants accumulate into C (C += ...).

/// C[n×m] += A[n×k] · B[k×m]
void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t n, std::size_t k, std::size_t m);
/// C[n×m] += A[n×k] · B[m×k]ᵀ
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t n, std::size_t k, std::size_t m);
/// C[n×m] += A[k×n]ᵀ · B[k×m]
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t n, std::size_t k, std::size_t m);

/// Row-parallel version of gemm_nn; same summation order per output element.
void gemm_nn_omp(std::span<const double> a, std::span<const double> b, std::span<double> c,
                 std::size_t n, std::size_t k, std::size_t m);

/// D[i×j] = squared Euclidean distance between rows i and j of X[n×d].
void pairwise_sq_distances(std::span<const double> x, std::span<double> d, std::size_t n, std::size_t dim);
void pairwise_sq_distances_omp(std::span<const double> x, std::span<double> d, std::size_t n, std::size_t dim);

} // namespace kernels
} // namespace mme
