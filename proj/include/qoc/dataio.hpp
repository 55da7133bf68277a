#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "qoc/mat.hpp"

namespace qoc {

struct MnistDataset {
    MatF train_images;  // n x 784, scaled to [0,1]
    std::vector<int> train_labels;
    MatF test_images;
    std::vector<int> test_labels;
};

struct TabularColumn {
    std::string name;
    std::vector<std::string> values;
};

// IDX image/label pair (big-endian, magic 0x803/0x801). Paths ending in .gz
// are inflated transparently. Errors name the byte offset that failed.
std::pair<MatF, std::vector<int>> load_idx(const std::filesystem::path& images_path,
                                           const std::filesystem::path& labels_path);

// Loads the four canonical MNIST files from `dir`, accepting either plain or
// .gz names. subset = 0 means full; otherwise the first `subset` samples of
// both splits.
MnistDataset load_mnist(const std::filesystem::path& dir, std::size_t subset = 0);

// RFC 4180 CSV with a header row. Field strings round-trip exactly.
TabularColumn read_csv_column(const std::filesystem::path& path, const std::string& column);
void write_csv_column(const std::filesystem::path& path, const TabularColumn& column);

void write_matrix_csv(const std::filesystem::path& path, const MatD& m,
                      const std::vector<std::string>& header);
std::pair<std::vector<std::string>, MatD> read_matrix_csv(const std::filesystem::path& path);

}  // namespace qoc
