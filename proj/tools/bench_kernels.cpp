// Times each kernel under the serial and OpenMP backends and verifies the
// outputs are bit-identical. Build with -DQOC_WITH_OPENMP=ON to compare; a
// serial-only build still runs and reports one column.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "qoc/kernels.hpp"
#include "qoc/mat.hpp"
#include "qoc/rng.hpp"

using namespace qoc;
using kernels::Backend;

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <typename F>
double time_best_of(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now_ms();
        f();
        best = std::min(best, now_ms() - t0);
    }
    return best;
}

MatF random_matf(std::size_t r, std::size_t c, Rng& rng) {
    MatF m(r, c);
    for (float& x : m.v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return m;
}

MatD random_unit_rows(std::size_t r, std::size_t c, Rng& rng) {
    MatD m(r, c);
    for (std::size_t i = 0; i < r; ++i) rng.unit_vector(m.row_span(i));
    return m;
}

bool bits_equal(const MatF& a, const MatF& b) {
    return std::memcmp(a.v.data(), b.v.data(), a.v.size() * sizeof(float)) == 0;
}

bool bits_equal(const MatD& a, const MatD& b) {
    return std::memcmp(a.v.data(), b.v.data(), a.v.size() * sizeof(double)) == 0;
}

int failures = 0;

template <typename Out, typename F>
void bench(const char* name, Out& serial_out, Out& omp_out, F&& run) {
    kernels::set_backend(Backend::serial);
    const double t_serial = time_best_of(5, [&] { run(serial_out); });
    if (!kernels::openmp_compiled()) {
        std::printf("%-16s serial %8.2f ms (openmp not compiled)\n", name, t_serial);
        return;
    }
    kernels::set_backend(Backend::openmp);
    const double t_omp = time_best_of(5, [&] { run(omp_out); });
    const bool same = bits_equal(serial_out, omp_out);
    if (!same) ++failures;
    std::printf("%-16s serial %8.2f ms   openmp %8.2f ms   speedup %5.2fx   bits %s\n", name,
                t_serial, t_omp, t_serial / t_omp, same ? "equal" : "DIFFER");
}

}  // namespace

int main() {
    Rng rng(7);
    std::printf("threads available: %d\n", []() {
        kernels::set_backend(Backend::openmp);
        return kernels::max_threads();
    }());

    {
        const MatF x = random_matf(256, 784, rng);
        const MatF w = random_matf(256, 784, rng);
        const std::vector<float> bias(256, 0.1f);
        MatF a(256, 256), b(256, 256);
        bench("dense_forward", a, b,
              [&](MatF& y) { kernels::dense_forward(x, w, bias, true, y); });
    }
    {
        const MatF delta = random_matf(256, 256, rng);
        const MatF x = random_matf(256, 784, rng);
        MatF a(256, 784), b(256, 784);
        std::vector<float> db(256);
        bench("dense_grad", a, b,
              [&](MatF& dw) { kernels::dense_grad(delta, x, dw, db); });
    }
    {
        const MatF delta = random_matf(256, 256, rng);
        const MatF w = random_matf(256, 784, rng);
        MatF a(256, 784), b(256, 784);
        bench("dense_backprop", a, b,
              [&](MatF& dx) { kernels::dense_backprop(delta, w, dx); });
    }
    {
        const MatD v = random_unit_rows(600, 16, rng);
        MatD a(600, 16), b(600, 16);
        bench("repulsion_grad", a, b,
              [&](MatD& g) { kernels::repulsion_gradient(v, g); });
    }
    {
        const MatD z = random_unit_rows(4096, 8, rng);
        const MatD q = random_unit_rows(10, 8, rng);
        MatD a(4096, 10), b(4096, 10);
        bench("qsoftmax_rows", a, b,
              [&](MatD& p) { kernels::qsoftmax_rows(z, q, p); });
    }

    if (failures > 0) {
        std::printf("%d kernel(s) differ between backends\n", failures);
        return 1;
    }
    return 0;
}
