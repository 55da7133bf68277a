#include "qoc/geometry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "qoc/error.hpp"
#include "qoc/kernels.hpp"
#include "qoc/rng.hpp"

namespace qoc {
namespace {

constexpr double kNormTolerance = 1e-9;
constexpr double kAntipodalDot = -1.0 + 1e-6;

double row_norm(std::span<const double> v) {
    return std::sqrt(kernels::dot(v.data(), v.data(), v.size()));
}

void check_unit_rows(const MatD& m, const char* what) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double norm = row_norm(m.row_span(i));
        if (std::abs(norm - 1.0) > kNormTolerance) {
            throw data_error(std::string(what) + ": vector " + std::to_string(i) +
                             " has norm " + std::to_string(norm) + ", expected 1");
        }
    }
}

double angle_degrees(double cosine) {
    return std::acos(std::clamp(cosine, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

}  // namespace

UnitVectorSet::UnitVectorSet(MatD vectors, SetKind kind)
    : vectors_(std::move(vectors)), kind_(kind) {
    if (vectors_.rows == 0 || vectors_.cols == 0) {
        throw argument_error("vector set must have at least one vector of dimension >= 1");
    }
    check_unit_rows(vectors_, "vector set");
    max_abs_dot_ = kernels::max_abs_dot_scan(vectors_).max_abs_dot;
}

ValidationReport validate(const UnitVectorSet& set, double epsilon) {
    ValidationReport report;
    report.is_normal = true;
    for (std::size_t i = 0; i < set.count(); ++i) {
        if (std::abs(row_norm(set.vec(i)) - 1.0) > kNormTolerance) report.is_normal = false;
    }
    const kernels::PairScan scan = kernels::max_abs_dot_scan(set.rows());
    report.max_abs_dot_observed = scan.max_abs_dot;
    report.worst_pair = {scan.i, scan.j};
    report.min_angle_degrees = angle_degrees(scan.max_abs_dot);
    report.satisfies_epsilon = scan.max_abs_dot < epsilon;
    return report;
}

std::uint64_t capacity_lower_bound(std::size_t dim, double epsilon) {
    if (dim == 0) throw argument_error("capacity bound requires dim >= 1");
    if (!(epsilon > 0.0) || !(epsilon < 1.0)) {
        throw argument_error("capacity bound requires epsilon in (0,1)");
    }
    const double bound = std::exp(static_cast<double>(dim) * epsilon * epsilon);
    if (!(bound < 9.2e18)) {
        throw argument_error("capacity bound exceeds the representable range");
    }
    return static_cast<std::uint64_t>(std::ceil(bound));
}

namespace {

struct RestartOutcome {
    MatD vectors;
    double max_abs_dot = 2.0;
    bool met = false;
};

// Random orthonormal rows via modified Gram-Schmidt (count <= dim only).
MatD random_orthonormal(std::size_t dim, std::size_t count, Rng& rng) {
    MatD m(count, dim);
    for (std::size_t i = 0; i < count; ++i) {
        while (true) {
            rng.unit_vector(m.row_span(i));
            for (std::size_t j = 0; j < i; ++j) {
                const double proj = kernels::dot(m.row(i), m.row(j), dim);
                kernels::axpy(-proj, m.row(j), m.row(i), dim);
            }
            const double norm = row_norm(m.row_span(i));
            if (norm > 1e-8) {
                for (std::size_t c = 0; c < dim; ++c) m(i, c) /= norm;
                break;
            }
        }
    }
    return m;
}

RestartOutcome run_restart(const GenerationConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    MatD v = cfg.count <= cfg.dim ? random_orthonormal(cfg.dim, cfg.count, rng)
                                  : MatD(cfg.count, cfg.dim);
    if (cfg.count > cfg.dim) {
        for (std::size_t i = 0; i < cfg.count; ++i) rng.unit_vector(v.row_span(i));
    }

    RestartOutcome best;
    best.vectors = v;
    best.max_abs_dot = kernels::max_abs_dot_scan(v).max_abs_dot;
    if (best.max_abs_dot <= cfg.target_max_dot) {
        best.met = true;
        return best;
    }

    MatD grad(cfg.count, cfg.dim);
    MatD candidate(cfg.count, cfg.dim);
    double energy = kernels::repulsion_energy(v);
    double step = 0.05;

    for (std::size_t iter = 0; iter < cfg.max_iterations; ++iter) {
        kernels::repulsion_gradient(v, grad);
        double scale = 1.0;
        for (std::size_t i = 0; i < cfg.count; ++i) {
            scale = std::max(scale, row_norm(grad.row_span(i)));
        }
        candidate = v;
        for (std::size_t i = 0; i < cfg.count; ++i) {
            kernels::axpy(-step / scale, grad.row(i), candidate.row(i), cfg.dim);
            const double norm = row_norm(candidate.row_span(i));
            if (norm > 1e-12) {
                for (std::size_t c = 0; c < cfg.dim; ++c) candidate(i, c) /= norm;
            } else {
                std::copy(v.row(i), v.row(i) + cfg.dim, candidate.row(i));
            }
        }
        const double new_energy = kernels::repulsion_energy(candidate);
        if (new_energy <= energy) {
            v.v.swap(candidate.v);
            energy = new_energy;
            step = std::min(step * 1.2, 1.0);
            const double observed = kernels::max_abs_dot_scan(v).max_abs_dot;
            if (observed < best.max_abs_dot) {
                best.max_abs_dot = observed;
                best.vectors = v;
            }
            if (observed <= cfg.target_max_dot) {
                best.met = true;
                return best;
            }
        } else {
            step *= 0.5;
            if (step < 1e-14) break;
        }
    }
    return best;
}

}  // namespace

UnitVectorSet generate_basis(const GenerationConfig& config) {
    if (config.dim == 0) throw argument_error("generate_basis: dim must be >= 1");
    if (config.count == 0) throw argument_error("generate_basis: count must be >= 1");
    if (!(config.target_max_dot > 0.0) || !(config.target_max_dot < 1.0)) {
        throw argument_error("generate_basis: target max |dot| must lie in (0,1)");
    }
    if (config.restarts == 0 || config.max_iterations == 0) {
        throw argument_error("generate_basis: restarts and max_iterations must be >= 1");
    }

    RestartOutcome best;
    for (std::size_t r = 0; r < config.restarts; ++r) {
        RestartOutcome out = run_restart(config, mix_seed(config.seed, r));
        if (out.met) {
            return UnitVectorSet(std::move(out.vectors), SetKind::quasiorthonormal_basis);
        }
        if (out.max_abs_dot < best.max_abs_dot) best = std::move(out);
    }
    std::ostringstream msg;
    msg << "generate_basis: target max |dot| " << config.target_max_dot << " unreachable for dim="
        << config.dim << " count=" << config.count << " within " << config.restarts
        << " restarts; best achieved " << best.max_abs_dot;
    throw target_unreachable_error(msg.str(), best.max_abs_dot);
}

UnitVectorSet code_to_basis(const UnitVectorSet& code) {
    const MatD& v = code.rows();
    const std::size_t k = v.rows;
    std::vector<char> consumed(k, 0);
    std::vector<std::size_t> kept;
    kept.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        if (consumed[i]) continue;
        std::size_t partner = k;
        for (std::size_t j = i + 1; j < k && partner == k; ++j) {
            if (!consumed[j] && kernels::dot(v.row(i), v.row(j), v.cols) < kAntipodalDot) {
                partner = j;
            }
        }
        if (partner == k) {
            kept.push_back(i);
            continue;
        }
        consumed[partner] = 1;
        std::size_t pick = i;
        for (std::size_t c = 0; c < v.cols; ++c) {
            if (std::abs(v(i, c)) > 1e-12) {
                if (v(i, c) < 0.0) pick = partner;
                break;
            }
        }
        kept.push_back(pick);
    }
    MatD out(kept.size(), v.cols);
    for (std::size_t r = 0; r < kept.size(); ++r) {
        std::copy(v.row(kept[r]), v.row(kept[r]) + v.cols, out.row(r));
    }
    return UnitVectorSet(std::move(out), SetKind::quasiorthonormal_basis);
}

UnitVectorSet basis_to_code(const UnitVectorSet& basis) {
    const MatD& v = basis.rows();
    MatD out(2 * v.rows, v.cols);
    for (std::size_t i = 0; i < v.rows; ++i) {
        for (std::size_t c = 0; c < v.cols; ++c) {
            out(2 * i, c) = v(i, c);
            out(2 * i + 1, c) = -v(i, c);
        }
    }
    return UnitVectorSet(std::move(out), SetKind::spherical_code);
}

double code_min_angle_degrees(const UnitVectorSet& set) {
    if (set.count() < 2) return 180.0;
    return angle_degrees(kernels::max_signed_dot_scan(set.rows()));
}

void save_vector_set(const std::filesystem::path& path, const UnitVectorSet& set) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot open " + path.string() + " for writing");
    out << "qoc-basis v1 dim=" << set.dim() << " count=" << set.count() << " kind="
        << (set.kind() == SetKind::quasiorthonormal_basis ? "basis" : "code") << '\n';
    char buf[64];
    for (std::size_t i = 0; i < set.count(); ++i) {
        const std::span<const double> row = set.vec(i);
        for (std::size_t c = 0; c < row.size(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", row[c]);
            out << (c ? " " : "") << buf;
        }
        out << '\n';
    }
    if (!out) throw data_error("failed writing " + path.string());
}

namespace {

std::uint64_t parse_header_field(const std::string& token, const char* key,
                                 const std::filesystem::path& path) {
    const std::string prefix = std::string(key) + "=";
    if (token.rfind(prefix, 0) != 0) {
        throw data_error(path.string() + ": malformed header, expected " + prefix + "<n>");
    }
    std::uint64_t value = 0;
    const char* first = token.data() + prefix.size();
    const char* last = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || value == 0) {
        throw data_error(path.string() + ": bad " + std::string(key) + " in header");
    }
    return value;
}

double parse_double_token(const std::string& token, const std::filesystem::path& path) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw data_error(path.string() + ": bad numeric value '" + token + "'");
    }
    return value;
}

}  // namespace

UnitVectorSet load_vector_set(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open " + path.string());
    std::string header;
    if (!std::getline(in, header)) throw data_error(path.string() + ": empty file");
    std::istringstream hs(header);
    std::string magic, version, dim_tok, count_tok, kind_tok;
    hs >> magic >> version >> dim_tok >> count_tok >> kind_tok;
    if (magic != "qoc-basis" || version != "v1") {
        throw data_error(path.string() + ": not a qoc-basis v1 file");
    }
    const std::uint64_t dim = parse_header_field(dim_tok, "dim", path);
    const std::uint64_t count = parse_header_field(count_tok, "count", path);
    SetKind kind;
    if (kind_tok == "kind=basis") {
        kind = SetKind::quasiorthonormal_basis;
    } else if (kind_tok == "kind=code") {
        kind = SetKind::spherical_code;
    } else {
        throw data_error(path.string() + ": kind must be 'basis' or 'code'");
    }

    MatD m(count, dim);
    std::string token;
    for (std::size_t i = 0; i < count * dim; ++i) {
        if (!(in >> token)) {
            throw data_error(path.string() + ": expected " + std::to_string(count * dim) +
                             " values, found " + std::to_string(i));
        }
        m.v[i] = parse_double_token(token, path);
    }
    if (in >> token) throw data_error(path.string() + ": trailing data after vectors");
    return UnitVectorSet(std::move(m), kind);
}

UnitVectorSet load_pack(const std::filesystem::path& path, std::size_t dim, std::size_t count,
                        SetKind kind) {
    if (dim == 0 || count == 0) throw argument_error("load_pack: dim and count must be >= 1");
    std::ifstream in(path);
    if (!in) throw data_error("cannot open " + path.string());
    MatD m(count, dim);
    std::string token;
    for (std::size_t i = 0; i < count * dim; ++i) {
        if (!(in >> token)) {
            throw data_error(path.string() + ": expected " + std::to_string(count * dim) +
                             " values, found " + std::to_string(i));
        }
        m.v[i] = parse_double_token(token, path);
    }
    if (in >> token) throw data_error(path.string() + ": trailing data after vectors");
    for (std::size_t i = 0; i < count; ++i) {
        const double norm = row_norm(m.row_span(i));
        if (std::abs(norm - 1.0) > 1e-3) {
            throw data_error(path.string() + ": row " + std::to_string(i) + " has norm " +
                             std::to_string(norm) + ", not within 1e-3 of 1");
        }
        for (std::size_t c = 0; c < dim; ++c) m(i, c) /= norm;
    }
    return UnitVectorSet(std::move(m), kind);
}

}  // namespace qoc
