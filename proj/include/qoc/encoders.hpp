#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "qoc/geometry.hpp"
#include "qoc/mat.hpp"

namespace qoc {

// Ordered set of distinct labels; ordinal = first-appearance rank during fit.
class CategoryDictionary {
public:
    static CategoryDictionary fit(const std::vector<std::string>& labels);

    std::size_t size() const noexcept { return labels_.size(); }
    const std::string& label(std::size_t ordinal) const { return labels_.at(ordinal); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    // data_error when the label was never fitted
    std::size_t ordinal_of(std::string_view label) const;
    bool contains(std::string_view label) const;

private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Text format: `qoc-dict v1 count=<K>` then one label per line in ordinal order.
void save_dictionary(const std::filesystem::path& path, const CategoryDictionary& dict);
CategoryDictionary load_dictionary(const std::filesystem::path& path);

namespace scheme {
struct Ordinal {
    long long offset = 1;
};
struct OneHot {};
struct Binary {};
struct BaseN {
    unsigned base = 3;
    bool balanced = false;  // balanced digits need an odd base
};
struct Hash {
    unsigned bits = 8;  // 1..64, FNV-1a truncated to the low bits
};
struct Qoe {
    UnitVectorSet basis;
};
struct Spherical {
    UnitVectorSet code;
};
}  // namespace scheme

using EncodingScheme = std::variant<scheme::Ordinal, scheme::OneHot, scheme::Binary,
                                    scheme::BaseN, scheme::Hash, scheme::Qoe, scheme::Spherical>;

using EncodedValue = std::vector<double>;

std::uint64_t fnv1a64(std::string_view bytes);

// Dictionary + scheme pair with all cross-checks done up front: vector sets
// must cover the dictionary, balanced digits need an odd base, and any
// FNV-1a collision between fitted labels is rejected here rather than
// surfacing as a silent mis-decode later.
class BoundEncoder {
public:
    BoundEncoder(CategoryDictionary dict, EncodingScheme scheme);

    const CategoryDictionary& dictionary() const noexcept { return dict_; }
    const EncodingScheme& scheme() const noexcept { return scheme_; }
    std::size_t output_dim() const noexcept { return dim_; }

    EncodedValue encode(std::string_view label) const;

    // Dot-product schemes report the winning dot product as the score; the
    // digit and ordinal schemes report minus the distance to the decoded
    // label's exact code (0 on noise-free input).
    std::pair<std::string, double> decode(std::span<const double> value) const;

    MatD encode_column(const std::vector<std::string>& rows) const;
    std::vector<std::string> decode_column(const MatD& values) const;

private:
    EncodedValue encode_ordinal(std::size_t ordinal) const;
    std::pair<std::size_t, double> decode_ordinal(std::span<const double> value) const;

    CategoryDictionary dict_;
    EncodingScheme scheme_;
    std::size_t dim_ = 0;
    std::size_t digit_width_ = 0;                        // binary/baseN
    std::unordered_map<std::uint64_t, std::size_t> hash_to_ordinal_;  // hash
};

// Output dimension of `scheme` over a K-label dictionary (see BoundEncoder).
std::size_t scheme_output_dim(const CategoryDictionary& dict, const EncodingScheme& scheme);

// Convenience one-shot forms; they bind on every call.
EncodedValue encode(const CategoryDictionary& dict, const EncodingScheme& scheme,
                    std::string_view label);
std::pair<std::string, double> decode(const CategoryDictionary& dict,
                                      const EncodingScheme& scheme,
                                      std::span<const double> value);

}  // namespace qoc
