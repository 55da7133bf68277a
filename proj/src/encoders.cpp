#include "qoc/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qoc/error.hpp"
#include "qoc/kernels.hpp"

namespace qoc {

CategoryDictionary CategoryDictionary::fit(const std::vector<std::string>& labels) {
    if (labels.empty()) throw argument_error("cannot fit a dictionary from an empty sequence");
    CategoryDictionary dict;
    for (const std::string& label : labels) {
        if (dict.index_.emplace(label, dict.labels_.size()).second) {
            dict.labels_.push_back(label);
        }
    }
    return dict;
}

std::size_t CategoryDictionary::ordinal_of(std::string_view label) const {
    const auto it = index_.find(std::string(label));
    if (it == index_.end()) throw data_error("unknown label '" + std::string(label) + "'");
    return it->second;
}

bool CategoryDictionary::contains(std::string_view label) const {
    return index_.find(std::string(label)) != index_.end();
}

void save_dictionary(const std::filesystem::path& path, const CategoryDictionary& dict) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot open " + path.string() + " for writing");
    out << "qoc-dict v1 count=" << dict.size() << '\n';
    for (const std::string& label : dict.labels()) out << label << '\n';
    if (!out) throw data_error("failed writing " + path.string());
}

CategoryDictionary load_dictionary(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open " + path.string());
    std::string header;
    if (!std::getline(in, header)) throw data_error(path.string() + ": empty file");
    std::size_t count = 0;
    {
        std::istringstream hs(header);
        std::string magic, version, count_tok;
        hs >> magic >> version >> count_tok;
        if (magic != "qoc-dict" || version != "v1" || count_tok.rfind("count=", 0) != 0) {
            throw data_error(path.string() + ": not a qoc-dict v1 file");
        }
        try {
            count = std::stoull(count_tok.substr(6));
        } catch (const std::exception&) {
            throw data_error(path.string() + ": bad count in header");
        }
        if (count == 0) throw data_error(path.string() + ": count must be >= 1");
    }
    std::vector<std::string> labels;
    labels.reserve(count);
    std::string line;
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(in, line)) {
            throw data_error(path.string() + ": expected " + std::to_string(count) +
                             " labels, found " + std::to_string(i));
        }
        labels.push_back(line);
    }
    while (std::getline(in, line)) {
        if (!line.empty()) throw data_error(path.string() + ": trailing data after labels");
    }
    CategoryDictionary dict = CategoryDictionary::fit(labels);
    if (dict.size() != labels.size()) {
        throw data_error(path.string() + ": duplicate label in dictionary");
    }
    return dict;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

// smallest width w >= 1 with base^w > K (values 1..K must fit)
std::size_t digit_width(std::size_t k, std::uint64_t base) {
    std::size_t w = 1;
    std::uint64_t span = base;
    while (span <= k) {
        span *= base;
        ++w;
    }
    return w;
}

std::uint64_t hash_mask(unsigned bits) {
    return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
}

// nearest integer in [lo, hi], half-way cases toward the smaller value
long long rectify(double x, long long lo, long long hi) {
    const double r = std::ceil(x - 0.5);
    return std::llround(std::clamp(r, static_cast<double>(lo), static_cast<double>(hi)));
}

double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

struct DigitSpec {
    std::uint64_t base;
    long long lo, hi;  // digit range (balanced digits are signed)
};

DigitSpec digit_spec(const scheme::BaseN& s) {
    if (s.balanced) {
        const long long half = (static_cast<long long>(s.base) - 1) / 2;
        return {s.base, -half, half};
    }
    return {s.base, 0, static_cast<long long>(s.base) - 1};
}

}  // namespace

BoundEncoder::BoundEncoder(CategoryDictionary dict, EncodingScheme scheme)
    : dict_(std::move(dict)), scheme_(std::move(scheme)) {
    const std::size_t k = dict_.size();
    std::visit(
        [&](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, scheme::Ordinal>) {
                dim_ = 1;
            } else if constexpr (std::is_same_v<S, scheme::OneHot>) {
                dim_ = k;
            } else if constexpr (std::is_same_v<S, scheme::Binary>) {
                digit_width_ = digit_width(k, 2);
                dim_ = digit_width_;
            } else if constexpr (std::is_same_v<S, scheme::BaseN>) {
                if (s.base < 2) throw argument_error("baseN encoding needs base >= 2");
                if (s.balanced && s.base % 2 == 0) {
                    throw argument_error("balanced digits need an odd base");
                }
                digit_width_ = digit_width(k, s.base);
                dim_ = digit_width_;
            } else if constexpr (std::is_same_v<S, scheme::Hash>) {
                if (s.bits < 1 || s.bits > 64) {
                    throw argument_error("hash encoding needs bits in 1..64");
                }
                dim_ = s.bits;
                const std::uint64_t mask = hash_mask(s.bits);
                for (std::size_t o = 0; o < k; ++o) {
                    const std::uint64_t key = fnv1a64(dict_.label(o)) & mask;
                    const auto [it, fresh] = hash_to_ordinal_.emplace(key, o);
                    if (!fresh) {
                        throw data_error("hash collision between '" + dict_.label(it->second) +
                                         "' and '" + dict_.label(o) + "' at " +
                                         std::to_string(s.bits) + " bits");
                    }
                }
            } else if constexpr (std::is_same_v<S, scheme::Qoe>) {
                if (s.basis.count() < k) {
                    throw argument_error("basis has " + std::to_string(s.basis.count()) +
                                         " vectors but the dictionary has " + std::to_string(k) +
                                         " labels");
                }
                dim_ = s.basis.dim();
            } else if constexpr (std::is_same_v<S, scheme::Spherical>) {
                if (s.code.count() < k) {
                    throw argument_error("code has " + std::to_string(s.code.count()) +
                                         " vectors but the dictionary has " + std::to_string(k) +
                                         " labels");
                }
                dim_ = s.code.dim();
            }
        },
        scheme_);
}

EncodedValue BoundEncoder::encode_ordinal(std::size_t ordinal) const {
    return std::visit(
        [&](const auto& s) -> EncodedValue {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, scheme::Ordinal>) {
                return {static_cast<double>(static_cast<long long>(ordinal) + s.offset)};
            } else if constexpr (std::is_same_v<S, scheme::OneHot>) {
                EncodedValue v(dim_, 0.0);
                v[ordinal] = 1.0;
                return v;
            } else if constexpr (std::is_same_v<S, scheme::Binary> ||
                                 std::is_same_v<S, scheme::BaseN>) {
                DigitSpec ds{2, 0, 1};
                if constexpr (std::is_same_v<S, scheme::BaseN>) ds = digit_spec(s);
                EncodedValue v(dim_, 0.0);
                std::uint64_t value = ordinal + 1;
                for (std::size_t c = dim_; c-- > 0;) {
                    long long digit = static_cast<long long>(value % ds.base);
                    value /= ds.base;
                    if (digit > ds.hi) digit -= static_cast<long long>(ds.base);
                    v[c] = static_cast<double>(digit);
                }
                return v;
            } else if constexpr (std::is_same_v<S, scheme::Hash>) {
                const std::uint64_t h = fnv1a64(dict_.label(ordinal)) & hash_mask(s.bits);
                EncodedValue v(dim_, 0.0);
                for (std::size_t c = 0; c < dim_; ++c) {
                    v[c] = static_cast<double>((h >> (dim_ - 1 - c)) & 1u);
                }
                return v;
            } else if constexpr (std::is_same_v<S, scheme::Qoe>) {
                const std::span<const double> row = s.basis.vec(ordinal);
                return EncodedValue(row.begin(), row.end());
            } else {
                const std::span<const double> row = s.code.vec(ordinal);
                return EncodedValue(row.begin(), row.end());
            }
        },
        scheme_);
}

EncodedValue BoundEncoder::encode(std::string_view label) const {
    return encode_ordinal(dict_.ordinal_of(label));
}

std::pair<std::size_t, double> BoundEncoder::decode_ordinal(std::span<const double> value) const {
    if (value.size() != dim_) {
        throw argument_error("value has length " + std::to_string(value.size()) +
                             ", scheme produces " + std::to_string(dim_));
    }
    const std::size_t k = dict_.size();
    return std::visit(
        [&](const auto& s) -> std::pair<std::size_t, double> {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, scheme::Ordinal>) {
                const long long nearest =
                    rectify(value[0], s.offset, s.offset + static_cast<long long>(k) - 1);
                const std::size_t ordinal = static_cast<std::size_t>(nearest - s.offset);
                return {ordinal, -std::abs(value[0] - static_cast<double>(nearest))};
            } else if constexpr (std::is_same_v<S, scheme::OneHot>) {
                std::size_t best = 0;
                for (std::size_t i = 1; i < k; ++i) {
                    if (value[i] > value[best]) best = i;
                }
                return {best, value[best]};
            } else if constexpr (std::is_same_v<S, scheme::Binary> ||
                                 std::is_same_v<S, scheme::BaseN> ||
                                 std::is_same_v<S, scheme::Hash>) {
                DigitSpec ds{2, 0, 1};
                if constexpr (std::is_same_v<S, scheme::BaseN>) ds = digit_spec(s);
                EncodedValue word(dim_);
                std::uint64_t acc = 0;
                for (std::size_t c = 0; c < dim_; ++c) {
                    const long long digit = rectify(value[c], ds.lo, ds.hi);
                    word[c] = static_cast<double>(digit);
                    const std::uint64_t raw =
                        digit < 0 ? static_cast<std::uint64_t>(digit + static_cast<long long>(ds.base))
                                  : static_cast<std::uint64_t>(digit);
                    acc = acc * ds.base + raw;
                }
                std::size_t ordinal = 0;
                if constexpr (std::is_same_v<S, scheme::Hash>) {
                    const auto it = hash_to_ordinal_.find(acc);
                    if (it == hash_to_ordinal_.end()) {
                        throw data_error("unresolvable code: no fitted label hashes to the "
                                         "rectified word");
                    }
                    ordinal = it->second;
                } else {
                    if (acc < 1 || acc > k) {
                        throw data_error("unresolvable code: rectified word has value " +
                                         std::to_string(acc) + ", fitted ordinals cover 1.." +
                                         std::to_string(k));
                    }
                    ordinal = static_cast<std::size_t>(acc - 1);
                }
                return {ordinal, -distance(value, word)};
            } else {
                const UnitVectorSet& set = [&]() -> const UnitVectorSet& {
                    if constexpr (std::is_same_v<S, scheme::Qoe>) return s.basis;
                    else return s.code;
                }();
                std::size_t best = 0;
                double best_dot = kernels::dot(set.vec(0).data(), value.data(), dim_);
                for (std::size_t i = 1; i < k; ++i) {
                    const double d = kernels::dot(set.vec(i).data(), value.data(), dim_);
                    if (d > best_dot) {
                        best_dot = d;
                        best = i;
                    }
                }
                return {best, best_dot};
            }
        },
        scheme_);
}

std::pair<std::string, double> BoundEncoder::decode(std::span<const double> value) const {
    const auto [ordinal, score] = decode_ordinal(value);
    return {dict_.label(ordinal), score};
}

MatD BoundEncoder::encode_column(const std::vector<std::string>& rows) const {
    MatD out(rows.size(), dim_);
    std::vector<std::string> failures;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        try {
            const EncodedValue v = encode(rows[r]);
            std::copy(v.begin(), v.end(), out.row(r));
        } catch (const std::exception& e) {
            if (failures.size() < 8) {
                failures.push_back("row " + std::to_string(r) + ": " + e.what());
            } else if (failures.size() == 8) {
                failures.push_back("...");
            }
        }
    }
    if (!failures.empty()) {
        std::string msg = failures[0];
        for (std::size_t i = 1; i < failures.size(); ++i) msg += "; " + failures[i];
        throw data_error(msg);
    }
    return out;
}

std::vector<std::string> BoundEncoder::decode_column(const MatD& values) const {
    if (values.rows > 0 && values.cols != dim_) {
        throw argument_error("matrix has " + std::to_string(values.cols) +
                             " columns, scheme produces " + std::to_string(dim_));
    }
    std::vector<std::string> out(values.rows);
    std::vector<std::string> failures;
    for (std::size_t r = 0; r < values.rows; ++r) {
        try {
            out[r] = decode(values.row_span(r)).first;
        } catch (const std::exception& e) {
            if (failures.size() < 8) {
                failures.push_back("row " + std::to_string(r) + ": " + e.what());
            } else if (failures.size() == 8) {
                failures.push_back("...");
            }
        }
    }
    if (!failures.empty()) {
        std::string msg = failures[0];
        for (std::size_t i = 1; i < failures.size(); ++i) msg += "; " + failures[i];
        throw data_error(msg);
    }
    return out;
}

std::size_t scheme_output_dim(const CategoryDictionary& dict, const EncodingScheme& scheme) {
    return BoundEncoder(dict, scheme).output_dim();
}

EncodedValue encode(const CategoryDictionary& dict, const EncodingScheme& scheme,
                    std::string_view label) {
    return BoundEncoder(dict, scheme).encode(label);
}

std::pair<std::string, double> decode(const CategoryDictionary& dict,
                                      const EncodingScheme& scheme,
                                      std::span<const double> value) {
    return BoundEncoder(dict, scheme).decode(value);
}

}  // namespace qoc
