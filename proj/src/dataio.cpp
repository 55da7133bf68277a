#include "qoc/dataio.hpp"

#include <zlib.h>

#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "qoc/error.hpp"

namespace qoc {
namespace {

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return bytes;
}

std::vector<unsigned char> gunzip(const std::vector<unsigned char>& in, const std::string& name) {
    z_stream zs{};
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) {
        throw data_error(name + ": cannot initialize gzip decoder");
    }
    std::vector<unsigned char> out;
    unsigned char buf[1 << 16];
    zs.next_in = const_cast<unsigned char*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = buf;
        zs.avail_out = sizeof buf;
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw data_error(name + ": corrupt gzip stream");
        }
        out.insert(out.end(), buf, buf + (sizeof buf - zs.avail_out));
        if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
            inflateEnd(&zs);
            throw data_error(name + ": truncated gzip stream");
        }
    }
    inflateEnd(&zs);
    return out;
}

std::vector<unsigned char> read_maybe_gz(const std::filesystem::path& path) {
    std::vector<unsigned char> bytes = read_file_bytes(path);
    if (path.extension() == ".gz") return gunzip(bytes, path.string());
    return bytes;
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off, const std::string& name) {
    if (off + 4 > b.size()) {
        throw data_error(name + ": truncated header at byte " + std::to_string(off) + " (file has " +
                         std::to_string(b.size()) + " bytes)");
    }
    return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
           (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

}  // namespace

std::pair<MatF, std::vector<int>> load_idx(const std::filesystem::path& images_path,
                                           const std::filesystem::path& labels_path) {
    const std::vector<unsigned char> img = read_maybe_gz(images_path);
    const std::string iname = images_path.string();
    const std::uint32_t imagic = be32(img, 0, iname);
    if (imagic != 0x803) {
        char hex[16];
        std::snprintf(hex, sizeof hex, "0x%08x", imagic);
        throw data_error(iname + ": bad magic " + hex + " at byte 0, expected 0x00000803");
    }
    const std::uint32_t n = be32(img, 4, iname);
    const std::uint32_t rows = be32(img, 8, iname);
    const std::uint32_t cols = be32(img, 12, iname);
    const std::size_t need = std::size_t{n} * rows * cols;
    if (img.size() - 16 != need) {
        throw data_error(iname + ": payload at byte 16 should be " + std::to_string(need) +
                         " bytes, found " + std::to_string(img.size() - 16));
    }

    const std::vector<unsigned char> lab = read_maybe_gz(labels_path);
    const std::string lname = labels_path.string();
    const std::uint32_t lmagic = be32(lab, 0, lname);
    if (lmagic != 0x801) {
        char hex[16];
        std::snprintf(hex, sizeof hex, "0x%08x", lmagic);
        throw data_error(lname + ": bad magic " + hex + " at byte 0, expected 0x00000801");
    }
    const std::uint32_t ln = be32(lab, 4, lname);
    if (lab.size() - 8 != ln) {
        throw data_error(lname + ": payload at byte 8 should be " + std::to_string(ln) +
                         " bytes, found " + std::to_string(lab.size() - 8));
    }
    if (ln != n) {
        throw data_error("count mismatch: " + iname + " has " + std::to_string(n) + " images, " +
                         lname + " has " + std::to_string(ln) + " labels");
    }

    MatF images(n, std::size_t{rows} * cols);
    constexpr float kScale = 1.0f / 255.0f;
    for (std::size_t i = 0; i < images.v.size(); ++i) {
        images.v[i] = static_cast<float>(img[16 + i]) * kScale;
    }
    std::vector<int> labels(ln);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = lab[8 + i];
    return {std::move(images), std::move(labels)};
}

namespace {

std::filesystem::path find_mnist_file(const std::filesystem::path& dir, const char* stem) {
    const std::filesystem::path plain = dir / stem;
    if (std::filesystem::exists(plain)) return plain;
    const std::filesystem::path gz = dir / (std::string(stem) + ".gz");
    if (std::filesystem::exists(gz)) return gz;
    throw data_error("missing " + plain.string() + " (or .gz)");
}

void take_subset(MatF& images, std::vector<int>& labels, std::size_t subset) {
    if (subset == 0 || subset >= images.rows) return;
    images.v.resize(subset * images.cols);
    images.rows = subset;
    labels.resize(subset);
}

}  // namespace

MnistDataset load_mnist(const std::filesystem::path& dir, std::size_t subset) {
    MnistDataset ds;
    std::tie(ds.train_images, ds.train_labels) =
        load_idx(find_mnist_file(dir, "train-images-idx3-ubyte"),
                 find_mnist_file(dir, "train-labels-idx1-ubyte"));
    std::tie(ds.test_images, ds.test_labels) =
        load_idx(find_mnist_file(dir, "t10k-images-idx3-ubyte"),
                 find_mnist_file(dir, "t10k-labels-idx1-ubyte"));
    for (const MatF* m : {&ds.train_images, &ds.test_images}) {
        if (m->cols != 784) {
            throw data_error(dir.string() + ": images are " + std::to_string(m->cols) +
                             " pixels, expected 28x28");
        }
    }
    for (const std::vector<int>* l : {&ds.train_labels, &ds.test_labels}) {
        for (std::size_t i = 0; i < l->size(); ++i) {
            if ((*l)[i] < 0 || (*l)[i] > 9) {
                throw data_error("label " + std::to_string((*l)[i]) + " at index " +
                                 std::to_string(i) + " outside 0..9");
            }
        }
    }
    take_subset(ds.train_images, ds.train_labels, subset);
    take_subset(ds.test_images, ds.test_labels, subset);
    return ds;
}

namespace {

// RFC 4180 tokenizer; quoted fields may hold commas, quotes ("") and newlines.
std::vector<std::vector<std::string>> parse_csv(const std::string& text,
                                                const std::string& name) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    std::size_t i = 0;
    const std::size_t n = text.size();
    bool in_field = false;  // saw content for the current field

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        in_field = false;
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
    };

    while (i < n) {
        const char c = text[i];
        if (c == '"') {
            if (in_field && !field.empty()) {
                throw data_error(name + ": stray quote inside unquoted field (row " +
                                 std::to_string(rows.size() + 1) + ")");
            }
            ++i;
            while (true) {
                if (i >= n) {
                    throw data_error(name + ": unterminated quoted field (row " +
                                     std::to_string(rows.size() + 1) + ")");
                }
                if (text[i] == '"') {
                    if (i + 1 < n && text[i + 1] == '"') {
                        field += '"';
                        i += 2;
                    } else {
                        ++i;
                        break;
                    }
                } else {
                    field += text[i++];
                }
            }
            in_field = true;
            if (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
                throw data_error(name + ": content after closing quote (row " +
                                 std::to_string(rows.size() + 1) + ")");
            }
        } else if (c == ',') {
            end_field();
            ++i;
        } else if (c == '\n' || c == '\r') {
            end_row();
            i += (c == '\r' && i + 1 < n && text[i + 1] == '\n') ? 2 : 1;
        } else {
            field += c;
            in_field = true;
            ++i;
        }
    }
    if (!field.empty() || !row.empty() || in_field) end_row();
    return rows;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool needs_quoting(const std::string& s) {
    return s.find_first_of(",\"\r\n") != std::string::npos;
}

void write_field(std::ofstream& out, const std::string& s) {
    if (!needs_quoting(s)) {
        out << s;
        return;
    }
    out << '"';
    for (char c : s) {
        if (c == '"') out << '"';
        out << c;
    }
    out << '"';
}

}  // namespace

TabularColumn read_csv_column(const std::filesystem::path& path, const std::string& column) {
    const std::vector<std::vector<std::string>> rows = parse_csv(read_text(path), path.string());
    if (rows.empty()) throw data_error(path.string() + ": missing header row");
    const std::vector<std::string>& header = rows[0];
    std::size_t col = header.size();
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == column) {
            col = c;
            break;
        }
    }
    if (col == header.size()) {
        throw data_error(path.string() + ": no column named '" + column + "'");
    }
    TabularColumn out;
    out.name = column;
    out.values.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (col >= rows[r].size()) {
            throw data_error(path.string() + ": row " + std::to_string(r + 1) + " has " +
                             std::to_string(rows[r].size()) + " fields, header has " +
                             std::to_string(header.size()));
        }
        out.values.push_back(rows[r][col]);
    }
    return out;
}

void write_csv_column(const std::filesystem::path& path, const TabularColumn& column) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot open " + path.string() + " for writing");
    write_field(out, column.name);
    out << '\n';
    for (const std::string& v : column.values) {
        write_field(out, v);
        out << '\n';
    }
    if (!out) throw data_error("failed writing " + path.string());
}

void write_matrix_csv(const std::filesystem::path& path, const MatD& m,
                      const std::vector<std::string>& header) {
    if (!header.empty() && header.size() != m.cols) {
        throw argument_error("header has " + std::to_string(header.size()) + " names for " +
                             std::to_string(m.cols) + " columns");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot open " + path.string() + " for writing");
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c) out << ',';
        write_field(out, header[c]);
    }
    if (!header.empty()) out << '\n';
    char buf[64];
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < m.cols; ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
            out << (c ? "," : "") << buf;
        }
        out << '\n';
    }
    if (!out) throw data_error("failed writing " + path.string());
}

std::pair<std::vector<std::string>, MatD> read_matrix_csv(const std::filesystem::path& path) {
    const std::vector<std::vector<std::string>> rows = parse_csv(read_text(path), path.string());
    if (rows.empty()) throw data_error(path.string() + ": missing header row");
    const std::vector<std::string> header = rows[0];
    MatD m(rows.size() - 1, header.size());
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != header.size()) {
            throw data_error(path.string() + ": row " + std::to_string(r + 1) + " has " +
                             std::to_string(rows[r].size()) + " fields, header has " +
                             std::to_string(header.size()));
        }
        for (std::size_t c = 0; c < header.size(); ++c) {
            const std::string& tok = rows[r][c];
            double value = 0.0;
            const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
            if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
                throw data_error(path.string() + ": row " + std::to_string(r + 1) +
                                 " column " + std::to_string(c + 1) + ": '" + tok +
                                 "' is not a number");
            }
            m(r - 1, c) = value;
        }
    }
    return {header, m};
}

}  // namespace qoc
