#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qoc/geometry.hpp"
#include "qoc/mat.hpp"

namespace qoc {

// Change-of-coordinates matrix Q: row i is basis vector v_i, so Qz holds the
// projections of z onto every label vector.
class CoordinateMatrix {
public:
    explicit CoordinateMatrix(MatD q);
    static CoordinateMatrix from_set(const UnitVectorSet& set);
    static CoordinateMatrix identity(std::size_t k);

    std::size_t labels() const noexcept { return q_.rows; }
    std::size_t dim() const noexcept { return q_.cols; }
    const MatD& matrix() const noexcept { return q_; }

private:
    MatD q_;
};

// Discrete distribution over K labels. Entries are allowed to underflow to
// exact zero at extreme activation magnitudes; nonnegativity and unit sum
// (within 1e-12) are enforced.
class ProbabilityVector {
public:
    explicit ProbabilityVector(std::vector<double> values);

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const noexcept { return values_; }

private:
    std::vector<double> values_;
};

// Stable softmax (max subtraction). Non-finite input is an argument error.
ProbabilityVector softmax(std::span<const double> z);

// softmax(Qz): distribution over the K labels given an n-dim activation.
ProbabilityVector qsoftmax(std::span<const double> z, const CoordinateMatrix& Q);

// Index of the max component of Qz, ties to the lowest index.
std::size_t qargmax(std::span<const double> z, const CoordinateMatrix& Q);

// J = (diag(p) - p p^T) Q with p = qsoftmax(z, Q); K x n.
MatD qsoftmax_jacobian(std::span<const double> z, const CoordinateMatrix& Q);

// -log p_target. The logits form computes log-sum-exp(Qz) - (Qz)_target and
// never evaluates log of an underflowed probability.
double cross_entropy(const ProbabilityVector& p, std::size_t target);
double cross_entropy_from_logits(std::span<const double> z, const CoordinateMatrix& Q,
                                 std::size_t target);

// d/dz of cross_entropy_from_logits: Q^T (p - onehot(target)).
std::vector<double> cross_entropy_gradient(std::span<const double> z, const CoordinateMatrix& Q,
                                           std::size_t target);

}  // namespace qoc
