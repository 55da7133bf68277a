#include "qoc/kernels.hpp"

#include <atomic>
#include <cmath>

namespace qoc::kernels {

namespace {
std::atomic<Backend> g_backend{
#if defined(QOC_HAS_OPENMP)
    Backend::openmp
#else
    Backend::serial
#endif
};
}  // namespace

Backend backend() noexcept { return g_backend.load(std::memory_order_relaxed); }

void set_backend(Backend b) noexcept {
#if !defined(QOC_HAS_OPENMP)
    b = Backend::serial;
#endif
    g_backend.store(b, std::memory_order_relaxed);
}

bool openmp_compiled() noexcept {
#if defined(QOC_HAS_OPENMP)
    return true;
#else
    return false;
#endif
}

int max_threads() noexcept {
#if defined(QOC_HAS_OPENMP)
    return backend() == Backend::openmp ? omp_get_max_threads() : 1;
#else
    return 1;
#endif
}

// Four independent accumulators: keeps the FPU pipeline busy and fixes one
// summation order for every caller.
#define QOC_NOINLINE __attribute__((noinline))

template <typename T>
QOC_NOINLINE static T dot_impl(const T* a, const T* b, std::size_t n) noexcept {
    T s0{}, s1{}, s2{}, s3{};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

float dot(const float* a, const float* b, std::size_t n) noexcept { return dot_impl(a, b, n); }
double dot(const double* a, const double* b, std::size_t n) noexcept { return dot_impl(a, b, n); }

template <typename T>
QOC_NOINLINE static void axpy_impl(T a, const T* x, T* y, std::size_t n) noexcept {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void axpy(float a, const float* x, float* y, std::size_t n) noexcept { axpy_impl(a, x, y, n); }
void axpy(double a, const double* x, double* y, std::size_t n) noexcept { axpy_impl(a, x, y, n); }

void dense_forward(const MatF& X, const MatF& W, std::span<const float> bias, bool relu, MatF& Y) {
    const std::size_t batch = X.rows;
    const std::size_t out = W.rows;
    parallel_for(batch, [&](std::size_t b) {
        const float* x = X.row(b);
        float* y = Y.row(b);
        for (std::size_t o = 0; o < out; ++o) {
            float z = dot(W.row(o), x, W.cols) + bias[o];
            y[o] = (relu && z < 0.0f) ? 0.0f : z;
        }
    });
}

void dense_grad(const MatF& delta, const MatF& X, MatF& dW, std::span<float> db) {
    const std::size_t batch = delta.rows;
    const std::size_t out = dW.rows;
    parallel_for(out, [&](std::size_t o) {
        float* w = dW.row(o);
        for (std::size_t k = 0; k < dW.cols; ++k) w[k] = 0.0f;
        float bias_sum = 0.0f;
        for (std::size_t b = 0; b < batch; ++b) {
            const float d = delta(b, o);
            bias_sum += d;
            if (d != 0.0f) axpy(d, X.row(b), w, dW.cols);
        }
        db[o] = bias_sum;
    });
}

void dense_backprop(const MatF& delta, const MatF& W, MatF& dX) {
    const std::size_t batch = delta.rows;
    parallel_for(batch, [&](std::size_t b) {
        const float* d = delta.row(b);
        float* g = dX.row(b);
        for (std::size_t k = 0; k < dX.cols; ++k) g[k] = 0.0f;
        for (std::size_t o = 0; o < W.rows; ++o) {
            if (d[o] != 0.0f) axpy(d[o], W.row(o), g, W.cols);
        }
    });
}

void sgd_step(std::span<float> w, std::span<const float> g, float scale) {
    parallel_for(w.size(), [&](std::size_t i) { w[i] -= scale * g[i]; });
}

void argmax_rows(const MatF& Y, std::span<int> preds) {
    parallel_for(Y.rows, [&](std::size_t b) {
        const float* y = Y.row(b);
        int best = 0;
        for (std::size_t o = 1; o < Y.cols; ++o) {
            if (y[o] > y[best]) best = static_cast<int>(o);
        }
        preds[b] = best;
    });
}

PairScan max_abs_dot_scan(const MatD& V) {
    const std::size_t k = V.rows;
    std::vector<PairScan> per_row(k);
    parallel_for(k, [&](std::size_t i) {
        PairScan s{-1.0, i, i};
        for (std::size_t j = i + 1; j < k; ++j) {
            const double d = std::fabs(dot(V.row(i), V.row(j), V.cols));
            if (d > s.max_abs_dot) s = {d, i, j};
        }
        per_row[i] = s;
    });
    PairScan best{0.0, 0, 0};
    bool found = false;
    for (std::size_t i = 0; i + 1 < k; ++i) {
        if (!found || per_row[i].max_abs_dot > best.max_abs_dot) {
            best = per_row[i];
            found = true;
        }
    }
    return best;
}

double max_signed_dot_scan(const MatD& V) {
    const std::size_t k = V.rows;
    std::vector<double> per_row(k, -2.0);
    parallel_for(k, [&](std::size_t i) {
        double m = -2.0;
        for (std::size_t j = i + 1; j < k; ++j) {
            m = std::max(m, dot(V.row(i), V.row(j), V.cols));
        }
        per_row[i] = m;
    });
    double best = -2.0;
    for (std::size_t i = 0; i + 1 < k; ++i) best = std::max(best, per_row[i]);
    return best;
}

void repulsion_gradient(const MatD& V, MatD& grad) {
    const std::size_t k = V.rows;
    parallel_for(k, [&](std::size_t i) {
        double* g = grad.row(i);
        for (std::size_t c = 0; c < V.cols; ++c) g[c] = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (j == i) continue;
            const double t = dot(V.row(i), V.row(j), V.cols);
            const double denom = 1.0 - t * t;
            // f'(t) = 2t/(1-t^2)^2, capped near the |t| -> 1 pole
            const double fp = (denom < 1e-9) ? (t > 0 ? 2e18 : -2e18) : 2.0 * t / (denom * denom);
            axpy(fp, V.row(j), g, V.cols);
        }
    });
}

double repulsion_energy(const MatD& V) {
    const std::size_t k = V.rows;
    std::vector<double> per_row(k, 0.0);
    parallel_for(k, [&](std::size_t i) {
        double e = 0.0;
        for (std::size_t j = i + 1; j < k; ++j) {
            const double t = dot(V.row(i), V.row(j), V.cols);
            const double denom = 1.0 - t * t;
            e += (denom < 1e-9) ? 1e9 : 1.0 / denom;
        }
        per_row[i] = e;
    });
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) total += per_row[i];
    return total;
}

QOC_NOINLINE static void softmax_row(const double* z, double* p, std::size_t n) noexcept {
    double mx = z[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, z[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = std::exp(z[i] - mx);
        sum += p[i];
    }
    const double inv = 1.0 / sum;
    for (std::size_t i = 0; i < n; ++i) p[i] *= inv;
}

void qsoftmax_rows(const MatD& Z, const MatD& Q, MatD& P) {
    parallel_for(Z.rows, [&](std::size_t r) {
        const double* z = Z.row(r);
        double* p = P.row(r);
        for (std::size_t i = 0; i < Q.rows; ++i) p[i] = dot(Q.row(i), z, Q.cols);
        softmax_row(p, p, Q.rows);
    });
}

}  // namespace qoc::kernels
