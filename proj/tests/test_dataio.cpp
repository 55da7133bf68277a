#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "qoc/dataio.hpp"
#include "qoc/error.hpp"

using namespace qoc;
namespace fs = std::filesystem;

namespace {

fs::path src_dir() {
    const char* p = std::getenv("QOC_SRC_DIR");
    return p ? fs::path(p) : fs::path(".");
}

fs::path mnist_dir() { return src_dir() / "data/mnist"; }

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / ("qoc-dataio-test-" + name);
}

void put_be32(std::ofstream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

// tiny IDX pair: n images of 2x2 pixels and n labels
void write_idx_pair(const fs::path& images, const fs::path& labels, unsigned n_images,
                    unsigned n_labels) {
    std::ofstream img(images, std::ios::binary);
    put_be32(img, 0x803);
    put_be32(img, n_images);
    put_be32(img, 2);
    put_be32(img, 2);
    for (unsigned i = 0; i < n_images * 4; ++i) {
        const unsigned char px = static_cast<unsigned char>(i * 17 % 256);
        img.write(reinterpret_cast<const char*>(&px), 1);
    }
    img.close();
    std::ofstream lab(labels, std::ios::binary);
    put_be32(lab, 0x801);
    put_be32(lab, n_labels);
    for (unsigned i = 0; i < n_labels; ++i) {
        const unsigned char v = static_cast<unsigned char>(i % 10);
        lab.write(reinterpret_cast<const char*>(&v), 1);
    }
}

}  // namespace

TEST_CASE("load_idx reads synthetic big-endian files and scales pixels") {
    const fs::path img = temp_file("img.idx");
    const fs::path lab = temp_file("lab.idx");
    write_idx_pair(img, lab, 3, 3);
    const auto [m, labels] = load_idx(img, lab);
    CHECK(m.rows == 3);
    CHECK(m.cols == 4);
    CHECK(labels == std::vector<int>{0, 1, 2});
    CHECK(m(0, 0) == 0.0f);
    CHECK(m(0, 1) == doctest::Approx(17.0 / 255.0).epsilon(1e-7));
    CHECK(m(2, 3) == doctest::Approx((11 * 17 % 256) / 255.0).epsilon(1e-7));
    fs::remove(img);
    fs::remove(lab);
}

TEST_CASE("load_idx rejects malformed files with byte offsets") {
    const fs::path img = temp_file("bad-img.idx");
    const fs::path lab = temp_file("bad-lab.idx");
    write_idx_pair(img, lab, 2, 2);

    {
        std::ofstream out(temp_file("empty.idx"), std::ios::binary);
    }
    try {
        load_idx(temp_file("empty.idx"), lab);
        FAIL("expected data_error");
    } catch (const data_error& e) {
        CHECK(std::string(e.what()).find("truncated header") != std::string::npos);
        CHECK(std::string(e.what()).find("byte") != std::string::npos);
    }

    {
        std::ofstream out(img, std::ios::binary);
        put_be32(out, 0x802);  // wrong magic
        put_be32(out, 1);
        put_be32(out, 2);
        put_be32(out, 2);
    }
    try {
        load_idx(img, lab);
        FAIL("expected data_error");
    } catch (const data_error& e) {
        CHECK(std::string(e.what()).find("bad magic") != std::string::npos);
        CHECK(std::string(e.what()).find("0x00000803") != std::string::npos);
    }

    write_idx_pair(img, lab, 2, 2);
    fs::resize_file(img, 16 + 5);  // payload should be 8 bytes
    try {
        load_idx(img, lab);
        FAIL("expected data_error");
    } catch (const data_error& e) {
        CHECK(std::string(e.what()).find("payload at byte 16") != std::string::npos);
    }

    write_idx_pair(img, lab, 2, 3);  // count mismatch
    try {
        load_idx(img, lab);
        FAIL("expected data_error");
    } catch (const data_error& e) {
        CHECK(std::string(e.what()).find("count mismatch") != std::string::npos);
        CHECK(std::string(e.what()).find("2") != std::string::npos);
        CHECK(std::string(e.what()).find("3") != std::string::npos);
    }

    fs::remove(temp_file("empty.idx"));
    fs::remove(img);
    fs::remove(lab);
}

TEST_CASE("mnist loads from gzipped canonical files") {
    const MnistDataset subset = load_mnist(mnist_dir(), 200);
    CHECK(subset.train_images.rows == 200);
    CHECK(subset.train_images.cols == 784);
    CHECK(subset.train_labels.size() == 200);
    CHECK(subset.test_images.rows == 200);
    CHECK(subset.test_labels.size() == 200);
    CHECK(subset.test_labels[0] == 7);  // first test digit of the standard distribution
    for (std::size_t i = 0; i < subset.train_images.v.size(); ++i) {
        CHECK(subset.train_images.v[i] >= 0.0f);
        CHECK(subset.train_images.v[i] <= 1.0f);
    }
    for (int l : subset.train_labels) {
        CHECK(l >= 0);
        CHECK(l <= 9);
    }
}

TEST_CASE("full mnist has canonical counts and pixel statistics") {
    const MnistDataset full = load_mnist(mnist_dir());
    CHECK(full.train_images.rows == 60000);
    CHECK(full.test_images.rows == 10000);
    CHECK(full.train_labels.size() == 60000);
    CHECK(full.test_labels.size() == 10000);
    double sum = 0.0;
    for (float px : full.train_images.v) sum += px;
    const double mean = sum / static_cast<double>(full.train_images.v.size());
    CHECK(mean == doctest::Approx(0.1307).epsilon(0.002));  // well-known corpus statistic
}

TEST_CASE("csv columns survive quoting tortures") {
    const fs::path path = temp_file("col.csv");
    const TabularColumn col{
        "make", {"plain", "comma,inside", "quote\"inside", "multi\nline", "", "trailing space "}};
    write_csv_column(path, col);
    const TabularColumn back = read_csv_column(path, "make");
    CHECK(back.name == col.name);
    CHECK(back.values == col.values);
    fs::remove(path);
}

TEST_CASE("csv reader handles crlf, escaped quotes, and header-only files") {
    const fs::path path = temp_file("crlf.csv");
    {
        std::ofstream out(path, std::ios::binary);
        out << "make,price\r\n\"a\"\"b\",1\r\nplain,2\r\n";
    }
    const TabularColumn col = read_csv_column(path, "make");
    CHECK(col.values == std::vector<std::string>{"a\"b", "plain"});
    {
        std::ofstream out(path, std::ios::binary);
        out << "make,price\n";
    }
    CHECK(read_csv_column(path, "make").values.empty());
    fs::remove(path);
}

TEST_CASE("csv reader rejects malformed input") {
    const fs::path path = temp_file("bad.csv");
    {
        std::ofstream out(path);
        out << "make\n\"unterminated\n";
    }
    CHECK_THROWS_AS(read_csv_column(path, "make"), data_error);
    {
        std::ofstream out(path);
        out << "make\n\"closed\"junk\n";
    }
    CHECK_THROWS_AS(read_csv_column(path, "make"), data_error);
    {
        std::ofstream out(path);
        out << "make\nst\"ray\n";
    }
    CHECK_THROWS_AS(read_csv_column(path, "make"), data_error);
    {
        std::ofstream out(path);
        out << "make,price\nToyota,1\n";
    }
    CHECK_THROWS_AS(read_csv_column(path, "model"), data_error);
    {
        std::ofstream out(path);
        out << "make,price\nToyota\n";
    }
    CHECK_THROWS_AS(read_csv_column(path, "price"), data_error);  // column absent in row
    fs::remove(path);
}

TEST_CASE("matrix csv round-trips values exactly") {
    const fs::path path = temp_file("matrix.csv");
    MatD m(100, 4);
    std::uint64_t state = 0x9e3779b97f4a7c15ULL;
    for (double& x : m.v) {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        x = (static_cast<double>(state >> 11) / 9007199254740992.0 - 0.5) * 2e3;
    }
    write_matrix_csv(path, m, {"a", "b", "c,quoted", "d"});
    const auto [header, back] = read_matrix_csv(path);
    CHECK(header == std::vector<std::string>{"a", "b", "c,quoted", "d"});
    REQUIRE(back.rows == 100);
    REQUIRE(back.cols == 4);
    CHECK(back.v == m.v);
    {
        std::ofstream out(path);
        out << "a,b\n1.5,notanumber\n";
    }
    CHECK_THROWS_AS(read_matrix_csv(path), data_error);
    fs::remove(path);
}
