#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "qoc/error.hpp"
#include "qoc/geometry.hpp"
#include "qoc/rng.hpp"

using namespace qoc;
namespace fs = std::filesystem;

namespace {

fs::path src_dir() {
    const char* p = std::getenv("QOC_SRC_DIR");
    return p ? fs::path(p) : fs::path(".");
}

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / ("qoc-geom-test-" + name);
}

MatD identity_rows(std::size_t n) {
    MatD m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

// brute-force verification with plain loops, independent of the library
double brute_max_abs_dot(const UnitVectorSet& s) {
    double best = 0.0;
    for (std::size_t i = 0; i < s.count(); ++i) {
        for (std::size_t j = i + 1; j < s.count(); ++j) {
            double d = 0.0;
            for (std::size_t c = 0; c < s.dim(); ++c) d += s.vec(i)[c] * s.vec(j)[c];
            best = std::max(best, std::abs(d));
        }
    }
    return best;
}

}  // namespace

TEST_CASE("capacity bound reproduces known values") {
    CHECK(capacity_lower_bound(1, 1e-9) == 1);
    CHECK(capacity_lower_bound(4, 0.5) == 3);
    CHECK(capacity_lower_bound(24, 0.5) == 404);
}

TEST_CASE("capacity bound is monotone and rejects bad arguments") {
    for (std::size_t dim = 1; dim <= 16; ++dim) {
        std::uint64_t prev = 0;
        for (double eps = 0.05; eps < 1.0; eps += 0.05) {
            const std::uint64_t c = capacity_lower_bound(dim, eps);
            CHECK(c >= prev);
            CHECK(c >= 1);
            prev = c;
        }
    }
    CHECK(capacity_lower_bound(8, 0.3) >= capacity_lower_bound(4, 0.3));
    CHECK_THROWS_AS(capacity_lower_bound(0, 0.5), argument_error);
    CHECK_THROWS_AS(capacity_lower_bound(4, 0.0), argument_error);
    CHECK_THROWS_AS(capacity_lower_bound(4, 1.0), argument_error);
    CHECK_THROWS_AS(capacity_lower_bound(4, -0.2), argument_error);
}

TEST_CASE("unit vector set rejects non-unit rows and empty shapes") {
    MatD bad = identity_rows(3);
    bad(1, 1) = 1.01;
    CHECK_THROWS_AS(UnitVectorSet(std::move(bad), SetKind::quasiorthonormal_basis), data_error);
    CHECK_THROWS_AS(UnitVectorSet(MatD(0, 3), SetKind::quasiorthonormal_basis), argument_error);
    CHECK_THROWS_AS(UnitVectorSet(MatD(3, 0), SetKind::quasiorthonormal_basis), argument_error);
}

TEST_CASE("validate reports an orthonormal set as exactly orthogonal") {
    const UnitVectorSet set(identity_rows(5), SetKind::quasiorthonormal_basis);
    const ValidationReport rep = validate(set, 0.1);
    CHECK(rep.is_normal);
    CHECK(rep.max_abs_dot_observed == 0.0);
    CHECK(rep.min_angle_degrees == doctest::Approx(90.0).epsilon(1e-12));
    CHECK(rep.satisfies_epsilon);
}

TEST_CASE("24-point 4-dim code halves to 12 vectors at max dot 0.5") {
    const UnitVectorSet code = load_pack(src_dir() / "data/codes/pack_4_24.txt", 4, 24);
    const UnitVectorSet basis = code_to_basis(code);
    CHECK(basis.count() == 12);
    const ValidationReport rep = validate(basis, 0.51);
    CHECK(rep.is_normal);
    CHECK(rep.max_abs_dot_observed == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(rep.min_angle_degrees == doctest::Approx(60.0).epsilon(1e-9));
    CHECK(rep.satisfies_epsilon);
    // epsilon equal to the observed maximum must fail the strict comparison
    CHECK_FALSE(validate(basis, rep.max_abs_dot_observed).satisfies_epsilon);
}

TEST_CASE("56-point 7-dim code halves to 28 vectors near max dot 1/3") {
    const UnitVectorSet code = load_pack(src_dir() / "data/codes/pack_7_56.txt", 7, 56);
    const UnitVectorSet basis = code_to_basis(code);
    CHECK(basis.count() == 28);
    const ValidationReport rep = validate(basis, 0.34);
    CHECK(rep.is_normal);
    CHECK(rep.max_abs_dot_observed == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    CHECK(rep.min_angle_degrees > 70.0);
    CHECK(rep.satisfies_epsilon);
}

TEST_CASE("generate_basis returns an orthonormal set when count fits the dimension") {
    GenerationConfig cfg;
    cfg.dim = 10;
    cfg.count = 10;
    cfg.target_max_dot = 1e-6;
    cfg.seed = 42;
    const UnitVectorSet set = generate_basis(cfg);
    CHECK(set.count() == 10);
    CHECK(set.max_abs_dot() <= 1e-6);
    CHECK(validate(set, 1e-6).is_normal);
    CHECK(brute_max_abs_dot(set) <= 1e-6);
}

TEST_CASE("generate_basis is bit-identical for a fixed seed") {
    GenerationConfig cfg;
    cfg.dim = 4;
    cfg.count = 7;
    cfg.target_max_dot = 0.45;
    cfg.seed = 7;
    const UnitVectorSet a = generate_basis(cfg);
    const UnitVectorSet b = generate_basis(cfg);
    REQUIRE(a.count() == b.count());
    CHECK(a.rows().v == b.rows().v);
}

TEST_CASE("generate_basis throws with the best bound when the target is impossible") {
    GenerationConfig cfg;
    cfg.dim = 2;
    cfg.count = 5;
    cfg.target_max_dot = 0.05;
    cfg.seed = 3;
    cfg.max_iterations = 300;
    cfg.restarts = 2;
    try {
        generate_basis(cfg);
        FAIL("expected target_unreachable_error");
    } catch (const target_unreachable_error& e) {
        // five lines in the plane are at best 36 degrees apart
        CHECK(e.best_max_abs_dot() > 0.05);
        CHECK(e.best_max_abs_dot() < 1.0);
    }
}

TEST_CASE("generate_basis cannot fit 10 vectors in 3 dims below max dot 0.47") {
    // the best packing of 10 lines in R^3 has max |dot| about 0.686
    GenerationConfig cfg;
    cfg.dim = 3;
    cfg.count = 10;
    cfg.target_max_dot = 0.47;
    cfg.seed = 1;
    cfg.max_iterations = 500;
    cfg.restarts = 2;
    CHECK_THROWS_AS(generate_basis(cfg), target_unreachable_error);
}

TEST_CASE("generate_basis rejects invalid configurations") {
    GenerationConfig cfg;
    cfg.dim = 4;
    cfg.count = 6;
    cfg.target_max_dot = 0.5;
    GenerationConfig bad = cfg;
    bad.dim = 0;
    CHECK_THROWS_AS(generate_basis(bad), argument_error);
    bad = cfg;
    bad.count = 0;
    CHECK_THROWS_AS(generate_basis(bad), argument_error);
    bad = cfg;
    bad.target_max_dot = 0.0;
    CHECK_THROWS_AS(generate_basis(bad), argument_error);
    bad = cfg;
    bad.target_max_dot = 1.0;
    CHECK_THROWS_AS(generate_basis(bad), argument_error);
}

TEST_CASE("generate_basis satisfies targets across random feasible configurations") {
    Rng pick(2024);
    for (int trial = 0; trial < 12; ++trial) {
        GenerationConfig cfg;
        cfg.dim = 2 + static_cast<std::size_t>(pick.below(7));
        cfg.count = 1 + static_cast<std::size_t>(pick.below(2 * cfg.dim));
        cfg.target_max_dot = cfg.count <= cfg.dim ? 1e-9 : 0.75;
        cfg.seed = 9000 + static_cast<std::uint64_t>(trial);
        const UnitVectorSet set = generate_basis(cfg);
        CHECK(set.count() == cfg.count);
        CHECK(set.dim() == cfg.dim);
        CHECK(validate(set, 1.0).is_normal);
        CHECK(brute_max_abs_dot(set) <= cfg.target_max_dot);
    }
}

TEST_CASE("code_to_basis keeps one representative per antipodal pair") {
    MatD v(4, 2);
    v(0, 0) = 1.0;
    v(1, 0) = -1.0;
    v(2, 1) = 1.0;
    v(3, 1) = -1.0;
    const UnitVectorSet basis = code_to_basis(UnitVectorSet(std::move(v), SetKind::spherical_code));
    REQUIRE(basis.count() == 2);
    CHECK(basis.max_abs_dot() == 0.0);
    CHECK(basis.vec(0)[0] == 1.0);
    CHECK(basis.vec(1)[1] == 1.0);
}

TEST_CASE("code_to_basis canonicalizes signs and passes unpaired vectors through") {
    MatD v(3, 2);
    v(0, 0) = -1.0;           // pair (0,1): representative must flip to +e1
    v(1, 0) = 1.0;
    v(2, 1) = 1.0;            // unpaired
    const UnitVectorSet basis = code_to_basis(UnitVectorSet(std::move(v), SetKind::spherical_code));
    REQUIRE(basis.count() == 2);
    CHECK(basis.vec(0)[0] == 1.0);
    CHECK(basis.vec(1)[1] == 1.0);
    CHECK(basis.kind() == SetKind::quasiorthonormal_basis);
}

TEST_CASE("basis_to_code interleaves each vector with its negation") {
    MatD one(1, 1);
    one(0, 0) = 1.0;
    const UnitVectorSet code = basis_to_code(UnitVectorSet(std::move(one), SetKind::quasiorthonormal_basis));
    REQUIRE(code.count() == 2);
    CHECK(code.vec(0)[0] == 1.0);
    CHECK(code.vec(1)[0] == -1.0);
    CHECK(code.kind() == SetKind::spherical_code);

    const UnitVectorSet full = basis_to_code(UnitVectorSet(identity_rows(5), SetKind::quasiorthonormal_basis));
    CHECK(full.count() == 10);
    CHECK(code_min_angle_degrees(full) == doctest::Approx(90.0).epsilon(1e-12));
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(full.vec(2 * i)[i] == 1.0);
        CHECK(full.vec(2 * i + 1)[i] == -1.0);
    }
}

TEST_CASE("basis -> code -> basis round-trips up to sign") {
    GenerationConfig cfg;
    cfg.dim = 4;
    cfg.count = 6;
    cfg.target_max_dot = 0.45;
    cfg.seed = 77;
    const UnitVectorSet basis = generate_basis(cfg);
    const UnitVectorSet back = code_to_basis(basis_to_code(basis));
    REQUIRE(back.count() == basis.count());
    for (std::size_t i = 0; i < basis.count(); ++i) {
        double plus = 0.0, minus = 0.0;
        for (std::size_t c = 0; c < basis.dim(); ++c) {
            plus = std::max(plus, std::abs(back.vec(i)[c] - basis.vec(i)[c]));
            minus = std::max(minus, std::abs(back.vec(i)[c] + basis.vec(i)[c]));
        }
        CHECK(std::min(plus, minus) == 0.0);  // exact copy or exact negation
    }
}

TEST_CASE("vector set files round-trip exactly") {
    GenerationConfig cfg;
    cfg.dim = 3;
    cfg.count = 5;
    cfg.target_max_dot = 0.8;
    cfg.seed = 5;
    const UnitVectorSet set = generate_basis(cfg);
    const fs::path path = temp_file("roundtrip.txt");
    save_vector_set(path, set);
    const UnitVectorSet loaded = load_vector_set(path);
    CHECK(loaded.kind() == SetKind::quasiorthonormal_basis);
    CHECK(loaded.rows().v == set.rows().v);

    const UnitVectorSet code = basis_to_code(set);
    save_vector_set(path, code);
    CHECK(load_vector_set(path).kind() == SetKind::spherical_code);
    fs::remove(path);
}

TEST_CASE("load_vector_set rejects malformed files") {
    const fs::path path = temp_file("malformed.txt");
    {
        std::ofstream out(path);
        out << "qoc-basis v2 dim=2 count=1 kind=basis\n1 0\n";
    }
    CHECK_THROWS_AS(load_vector_set(path), data_error);
    {
        std::ofstream out(path);
        out << "qoc-basis v1 dim=2 count=1 kind=basis\n1 0\n0 1\n";
    }
    CHECK_THROWS_AS(load_vector_set(path), data_error);  // trailing data
    {
        std::ofstream out(path);
        out << "qoc-basis v1 dim=2 count=2 kind=basis\n1 0\n";
    }
    CHECK_THROWS_AS(load_vector_set(path), data_error);  // truncated
    CHECK_THROWS_AS(load_vector_set(temp_file("missing.txt")), data_error);
    fs::remove(path);
}

TEST_CASE("load_pack normalizes near-unit rows and rejects bad norms") {
    const fs::path path = temp_file("pack.txt");
    {
        std::ofstream out(path);
        out << "1.00005 0\n0 0.99995\n";
    }
    const UnitVectorSet set = load_pack(path, 2, 2);
    CHECK(validate(set, 0.5).is_normal);
    {
        std::ofstream out(path);
        out << "1.002 0\n0 1\n";
    }
    CHECK_THROWS_AS(load_pack(path, 2, 2), data_error);
    {
        std::ofstream out(path);
        out << "1 0\n0 1\n0.5\n";
    }
    CHECK_THROWS_AS(load_pack(path, 2, 2), data_error);  // trailing data
    fs::remove(path);
}

TEST_CASE("shipped code packs meet their advertised angles") {
    const UnitVectorSet c3 = load_pack(src_dir() / "data/codes/pack_3_10.txt", 3, 10);
    CHECK(code_min_angle_degrees(c3) >= 66.0);
    const UnitVectorSet c5 = load_pack(src_dir() / "data/codes/pack_5_10.txt", 5, 10);
    CHECK(code_min_angle_degrees(c5) == doctest::Approx(90.0).epsilon(1e-9));
    MatD single(1, 2);
    single(0, 0) = 1.0;
    CHECK(code_min_angle_degrees(UnitVectorSet(std::move(single), SetKind::spherical_code)) == 180.0);
}
