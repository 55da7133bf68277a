#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>

#include "qoc/mat.hpp"

namespace qoc {

enum class SetKind { quasiorthonormal_basis, spherical_code };

// Ordered set of K unit vectors in R^n. Immutable after construction; the
// stored max |dot| bound is computed exhaustively on construction and never
// mutated, so instances can be shared across threads freely.
class UnitVectorSet {
public:
    UnitVectorSet(MatD vectors, SetKind kind);

    std::size_t dim() const noexcept { return vectors_.cols; }
    std::size_t count() const noexcept { return vectors_.rows; }
    std::span<const double> vec(std::size_t i) const { return vectors_.row_span(i); }
    const MatD& rows() const noexcept { return vectors_; }
    double max_abs_dot() const noexcept { return max_abs_dot_; }
    SetKind kind() const noexcept { return kind_; }

private:
    MatD vectors_;
    double max_abs_dot_ = 0.0;
    SetKind kind_ = SetKind::quasiorthonormal_basis;
};

struct GenerationConfig {
    std::size_t dim = 0;
    std::size_t count = 0;
    double target_max_dot = 0.0;  // in (0,1)
    std::uint64_t seed = 0;
    std::size_t max_iterations = 2000;
    std::size_t restarts = 8;
};

struct ValidationReport {
    bool is_normal = false;
    double max_abs_dot_observed = 0.0;
    std::pair<std::size_t, std::size_t> worst_pair{0, 0};
    double min_angle_degrees = 90.0;
    bool satisfies_epsilon = false;  // max_abs_dot_observed < epsilon (strict)
};

// Recomputes norms and the exhaustive pairwise |dot| maximum; the stored
// bound in the set is ignored on purpose.
ValidationReport validate(const UnitVectorSet& set, double epsilon);

// ceil(e^{dim * epsilon^2}): guaranteed-achievable basis size.
std::uint64_t capacity_lower_bound(std::size_t dim, double epsilon);

// Projected gradient descent on the pairwise repulsion energy
// sum_{i<j} 1/(1 - (v_i.v_j)^2) with renormalization after each step,
// seed-derived restarts, and early exit once the target holds. Restarts are
// evaluated independently, so running them in parallel cannot change which
// one is selected. Throws target_unreachable_error (carrying the best bound
// achieved) when no restart meets the target.
UnitVectorSet generate_basis(const GenerationConfig& config);

// Keeps one vector of each antipodal pair (detection: dot < -1 + 1e-6),
// preferring the representative whose first nonzero coordinate is positive.
// Unpaired vectors pass through unchanged.
UnitVectorSet code_to_basis(const UnitVectorSet& code);

// Emits (v_1, -v_1, v_2, -v_2, ...) as a spherical code of size 2K.
UnitVectorSet basis_to_code(const UnitVectorSet& basis);

// Minimum geodesic angle of a code (antipodal pairs do not count against it).
double code_min_angle_degrees(const UnitVectorSet& set);

// Text format: `qoc-basis v1 dim=<n> count=<K> kind=<basis|code>` followed
// by K lines of n decimals. Values survive a round-trip exactly.
void save_vector_set(const std::filesystem::path& path, const UnitVectorSet& set);
UnitVectorSet load_vector_set(const std::filesystem::path& path);

// Sloane-style pack: dim*count whitespace-separated floats, row-major. Rows
// are normalized; a pre-normalization norm off by more than 1e-3 is an error.
UnitVectorSet load_pack(const std::filesystem::path& path, std::size_t dim, std::size_t count,
                        SetKind kind = SetKind::spherical_code);

}  // namespace qoc
