#pragma once

#include <cstddef>
#include <span>

#include "qoc/mat.hpp"

#if defined(QOC_HAS_OPENMP)
#include <omp.h>
#endif

namespace qoc::kernels {

// Every kernel has one data-parallel loop whose iterations write disjoint
// output slots. The OpenMP backend parallelizes that loop; the serial
// backend runs it in order. Both call the same noinline row primitives, so
// results are bit-identical across backends and thread counts.

enum class Backend { serial, openmp };

Backend backend() noexcept;
void set_backend(Backend b) noexcept;
bool openmp_compiled() noexcept;
int max_threads() noexcept;

template <typename F>
void parallel_for(std::size_t n, F&& body) {
#if defined(QOC_HAS_OPENMP)
    if (backend() == Backend::openmp) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
            body(static_cast<std::size_t>(i));
        }
        return;
    }
#endif
    for (std::size_t i = 0; i < n; ++i) body(i);
}

// ---- row primitives (noinline; shared by all kernels) ----
float dot(const float* a, const float* b, std::size_t n) noexcept;
double dot(const double* a, const double* b, std::size_t n) noexcept;
void axpy(float a, const float* x, float* y, std::size_t n) noexcept;
void axpy(double a, const double* x, double* y, std::size_t n) noexcept;

// ---- dense layer kernels (float, network arithmetic) ----

// Y[b,o] = sum_k W[o,k] X[b,k] + bias[o], optionally rectified.
void dense_forward(const MatF& X, const MatF& W, std::span<const float> bias, bool relu, MatF& Y);

// dW[o,k] = sum_b delta[b,o] X[b,k]; db[o] = sum_b delta[b,o].
void dense_grad(const MatF& delta, const MatF& X, MatF& dW, std::span<float> db);

// dX[b,k] = sum_o delta[b,o] W[o,k].
void dense_backprop(const MatF& delta, const MatF& W, MatF& dX);

// w -= scale * g (elementwise).
void sgd_step(std::span<float> w, std::span<const float> g, float scale);

// preds[b] = argmax_o Y[b,o] (ties to lowest index).
void argmax_rows(const MatF& Y, std::span<int> preds);

// ---- geometry kernels (double) ----

struct PairScan {
    double max_abs_dot = 0.0;
    std::size_t i = 0;
    std::size_t j = 0;
};

// Exhaustive max |v_i . v_j| over distinct rows, with the worst pair.
PairScan max_abs_dot_scan(const MatD& V);

// Max signed dot over distinct rows (closest pair on the sphere).
double max_signed_dot_scan(const MatD& V);

// grad_i = sum_{j != i} f'(t_ij) v_j with f(t) = 1/(1 - t^2).
void repulsion_gradient(const MatD& V, MatD& grad);
double repulsion_energy(const MatD& V);

// ---- probability kernels (double) ----

// P[r,:] = softmax(Q Z[r,:]) with max subtraction.
void qsoftmax_rows(const MatD& Z, const MatD& Q, MatD& P);

}  // namespace qoc::kernels
