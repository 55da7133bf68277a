#include "qoc/qsoftmax.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qoc/error.hpp"
#include "qoc/kernels.hpp"

namespace qoc {
namespace {

void require_match(std::size_t zlen, const CoordinateMatrix& q) {
    if (zlen != q.dim()) {
        throw argument_error("activation has length " + std::to_string(zlen) +
                             ", coordinate matrix expects " + std::to_string(q.dim()));
    }
}

void require_finite(std::span<const double> z) {
    for (double x : z) {
        if (!std::isfinite(x)) throw argument_error("non-finite activation component");
    }
}

std::vector<double> projections(std::span<const double> z, const CoordinateMatrix& q) {
    require_match(z.size(), q);
    require_finite(z);
    std::vector<double> y(q.labels());
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = kernels::dot(q.matrix().row(i), z.data(), z.size());
    }
    return y;
}

}  // namespace

CoordinateMatrix::CoordinateMatrix(MatD q) : q_(std::move(q)) {
    if (q_.rows == 0 || q_.cols == 0) {
        throw argument_error("coordinate matrix must be K x n with K, n >= 1");
    }
    for (std::size_t i = 0; i < q_.rows; ++i) {
        const double norm2 = kernels::dot(q_.row(i), q_.row(i), q_.cols);
        if (std::abs(std::sqrt(norm2) - 1.0) > 1e-9) {
            throw argument_error("coordinate matrix row " + std::to_string(i) +
                                 " is not unit norm");
        }
    }
}

CoordinateMatrix CoordinateMatrix::from_set(const UnitVectorSet& set) {
    return CoordinateMatrix(set.rows());
}

CoordinateMatrix CoordinateMatrix::identity(std::size_t k) {
    MatD q(k, k);
    for (std::size_t i = 0; i < k; ++i) q(i, i) = 1.0;
    return CoordinateMatrix(std::move(q));
}

ProbabilityVector::ProbabilityVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw argument_error("probability vector must be non-empty");
    double sum = 0.0;
    for (double x : values_) {
        if (!(x >= 0.0)) throw argument_error("probability entries must be nonnegative");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw argument_error("probability entries sum to " + std::to_string(sum) + ", not 1");
    }
}

ProbabilityVector softmax(std::span<const double> z) {
    if (z.empty()) throw argument_error("softmax input must be non-empty");
    require_finite(z);
    const double m = *std::max_element(z.begin(), z.end());
    std::vector<double> out(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        out[i] = std::exp(z[i] - m);
        sum += out[i];
    }
    for (double& x : out) x /= sum;
    return ProbabilityVector(std::move(out));
}

ProbabilityVector qsoftmax(std::span<const double> z, const CoordinateMatrix& Q) {
    const std::vector<double> y = projections(z, Q);
    return softmax(y);
}

std::size_t qargmax(std::span<const double> z, const CoordinateMatrix& Q) {
    const std::vector<double> y = projections(z, Q);
    std::size_t best = 0;
    for (std::size_t i = 1; i < y.size(); ++i) {
        if (y[i] > y[best]) best = i;
    }
    return best;
}

MatD qsoftmax_jacobian(std::span<const double> z, const CoordinateMatrix& Q) {
    const ProbabilityVector p = qsoftmax(z, Q);
    const MatD& q = Q.matrix();
    std::vector<double> mean(q.cols, 0.0);
    for (std::size_t i = 0; i < q.rows; ++i) {
        kernels::axpy(p[i], q.row(i), mean.data(), q.cols);
    }
    MatD jac(q.rows, q.cols);
    for (std::size_t i = 0; i < q.rows; ++i) {
        for (std::size_t c = 0; c < q.cols; ++c) {
            jac(i, c) = p[i] * (q(i, c) - mean[c]);
        }
    }
    return jac;
}

double cross_entropy(const ProbabilityVector& p, std::size_t target) {
    if (target >= p.size()) {
        throw argument_error("target " + std::to_string(target) + " out of range for " +
                             std::to_string(p.size()) + " labels");
    }
    return -std::log(p[target]);
}

double cross_entropy_from_logits(std::span<const double> z, const CoordinateMatrix& Q,
                                 std::size_t target) {
    if (target >= Q.labels()) {
        throw argument_error("target " + std::to_string(target) + " out of range for " +
                             std::to_string(Q.labels()) + " labels");
    }
    const std::vector<double> y = projections(z, Q);
    const double m = *std::max_element(y.begin(), y.end());
    double sum = 0.0;
    for (double v : y) sum += std::exp(v - m);
    return m + std::log(sum) - y[target];
}

std::vector<double> cross_entropy_gradient(std::span<const double> z, const CoordinateMatrix& Q,
                                           std::size_t target) {
    if (target >= Q.labels()) {
        throw argument_error("target " + std::to_string(target) + " out of range for " +
                             std::to_string(Q.labels()) + " labels");
    }
    const ProbabilityVector p = qsoftmax(z, Q);
    const MatD& q = Q.matrix();
    std::vector<double> grad(q.cols, 0.0);
    for (std::size_t i = 0; i < q.rows; ++i) {
        const double r = p[i] - (i == target ? 1.0 : 0.0);
        kernels::axpy(r, q.row(i), grad.data(), q.cols);
    }
    return grad;
}

}  // namespace qoc
