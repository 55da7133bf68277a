// qoc: command-line surface over the encoding toolkit.
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "qoc/dataio.hpp"
#include "qoc/encoders.hpp"
#include "qoc/error.hpp"
#include "qoc/geometry.hpp"
#include "qoc/kernels.hpp"
#include "qoc/nn.hpp"
#include "qoc/qsoftmax.hpp"
#include "qoc/rng.hpp"

namespace {

using namespace qoc;

void print_report(const UnitVectorSet& set, double epsilon) {
    const ValidationReport r = validate(set, epsilon);
    std::printf("count=%zu dim=%zu max_abs_dot=%.6f min_angle_deg=%.4f normal=%s epsilon=%g %s\n",
                set.count(), set.dim(), r.max_abs_dot_observed, r.min_angle_degrees,
                r.is_normal ? "yes" : "no", epsilon,
                r.satisfies_epsilon ? "satisfied" : "not-satisfied");
    if (set.kind() == SetKind::spherical_code) {
        std::printf("code_min_angle_deg=%.4f\n", code_min_angle_degrees(set));
    }
}

int cmd_gen_basis(std::size_t dim, std::size_t count, double max_dot, std::uint64_t seed,
                  std::size_t restarts, std::size_t iters, const std::string& out) {
    GenerationConfig cfg;
    cfg.dim = dim;
    cfg.count = count;
    cfg.target_max_dot = max_dot;
    cfg.seed = seed;
    cfg.restarts = restarts;
    cfg.max_iterations = iters;
    const UnitVectorSet basis = generate_basis(cfg);
    save_vector_set(out, basis);
    print_report(basis, max_dot);
    return 0;
}

bool is_vector_set_file(const std::string& path) {
    std::ifstream in(path);
    std::string word;
    return bool(in >> word) && word == "qoc-basis";
}

int cmd_convert(const std::string& in, std::size_t dim, std::size_t count, const std::string& to,
                const std::string& out) {
    UnitVectorSet loaded = [&] {
        if (is_vector_set_file(in)) return load_vector_set(in);
        if (dim == 0 || count == 0) {
            throw argument_error("raw packs need --dim and --count");
        }
        return load_pack(in, dim, count);
    }();
    // to=basis keeps one vector per antipodal pair; to=code doubles a basis
    // with its antipodes, and re-tags code input unchanged.
    const UnitVectorSet converted = [&] {
        if (to == "basis") return code_to_basis(loaded);
        if (loaded.kind() == SetKind::spherical_code) return std::move(loaded);
        return basis_to_code(loaded);
    }();
    save_vector_set(out, converted);
    print_report(converted, 1.0);
    return 0;
}

EncodingScheme make_scheme(const std::string& name, const std::string& basis_file,
                           unsigned base, bool balanced, unsigned bits, long long offset) {
    if (name == "ordinal") return scheme::Ordinal{offset};
    if (name == "onehot") return scheme::OneHot{};
    if (name == "binary") return scheme::Binary{};
    if (name == "ternary") return scheme::BaseN{3, false};
    if (name == "balanced-ternary") return scheme::BaseN{3, true};
    if (name == "baseN") return scheme::BaseN{base, balanced};
    if (name == "hash") return scheme::Hash{bits};
    if (name == "qoe" || name == "sphere") {
        if (basis_file.empty()) {
            throw argument_error("scheme '" + name + "' needs --basis-file");
        }
        UnitVectorSet set = load_vector_set(basis_file);
        if (name == "qoe") return scheme::Qoe{std::move(set)};
        return scheme::Spherical{std::move(set)};
    }
    throw argument_error("unknown scheme '" + name + "'");
}

int cmd_encode(const std::string& csv, const std::string& column, const std::string& scheme_name,
               const std::string& basis_file, unsigned base, bool balanced, unsigned bits,
               long long offset, const std::string& out, const std::string& dict_out) {
    const TabularColumn col = read_csv_column(csv, column);
    if (col.values.empty()) throw data_error(csv + ": column '" + column + "' has no rows");
    const CategoryDictionary dict = CategoryDictionary::fit(col.values);
    const BoundEncoder enc(dict, make_scheme(scheme_name, basis_file, base, balanced, bits, offset));
    const MatD m = enc.encode_column(col.values);
    std::vector<std::string> header(m.cols);
    for (std::size_t c = 0; c < m.cols; ++c) header[c] = "v" + std::to_string(c);
    write_matrix_csv(out, m, header);
    if (!dict_out.empty()) save_dictionary(dict_out, dict);
    std::printf("encoded %zu rows to %zu dims (%zu categories)\n", m.rows, m.cols, dict.size());
    return 0;
}

int cmd_decode(const std::string& csv, const std::string& dict_path,
               const std::string& scheme_name, const std::string& basis_file, unsigned base,
               bool balanced, unsigned bits, long long offset, const std::string& column,
               const std::string& out) {
    const auto [header, m] = read_matrix_csv(csv);
    const CategoryDictionary dict = load_dictionary(dict_path);
    const BoundEncoder enc(dict, make_scheme(scheme_name, basis_file, base, balanced, bits, offset));
    TabularColumn col;
    col.name = column;
    col.values = enc.decode_column(m);
    write_csv_column(out, col);
    std::printf("decoded %zu rows\n", col.values.size());
    return 0;
}

struct SchemeSpec {
    std::string name;  // onehot | qoe | sphere
    std::string file;  // basis/code file for qoe and sphere
};

SchemeSpec parse_scheme_spec(const std::string& raw, const std::string& fallback_file) {
    SchemeSpec spec;
    const std::size_t eq = raw.find('=');
    spec.name = raw.substr(0, eq == std::string::npos ? raw.size() : eq);
    if (eq != std::string::npos) spec.file = raw.substr(eq + 1);
    if (spec.file.empty()) spec.file = fallback_file;
    if (spec.name != "onehot" && spec.name != "qoe" && spec.name != "sphere") {
        throw argument_error("unknown scheme '" + spec.name + "' (use onehot, qoe or sphere)");
    }
    if (spec.name != "onehot" && spec.file.empty()) {
        throw argument_error("scheme '" + spec.name + "' needs a basis file: --scheme " +
                             spec.name + "=FILE");
    }
    return spec;
}

CoordinateMatrix scheme_matrix(const SchemeSpec& spec, std::size_t classes) {
    if (spec.name == "onehot") return CoordinateMatrix::identity(classes);
    const UnitVectorSet set = load_vector_set(spec.file);
    if (set.count() < classes) {
        throw argument_error(spec.file + " has " + std::to_string(set.count()) +
                             " vectors, need " + std::to_string(classes));
    }
    MatD q(classes, set.dim());
    for (std::size_t i = 0; i < classes; ++i) {
        const std::span<const double> row = set.vec(i);
        std::copy(row.begin(), row.end(), q.row(i));
    }
    return CoordinateMatrix(std::move(q));
}

int cmd_train_mnist(const std::vector<std::string>& scheme_args, const std::string& basis_file,
                    std::size_t epochs, std::size_t runs, std::uint64_t seed, std::size_t subset,
                    std::size_t batch, std::size_t hidden, double dropout,
                    const std::string& optimizer, std::optional<double> lr,
                    std::vector<std::size_t> eval_at, const std::string& data_dir,
                    const std::string& report, bool pivot) {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.runs = runs;
    cfg.seed = seed;
    cfg.batch_size = batch;
    cfg.optimizer =
        optimizer == "sgd" ? TrainConfig::Optimizer::sgd : TrainConfig::Optimizer::adam;
    cfg.learning_rate =
        lr.value_or(cfg.optimizer == TrainConfig::Optimizer::sgd ? 0.05 : 1e-3);
    cfg.eval_epochs = std::move(eval_at);

    std::filesystem::path dir = data_dir;
    if (dir.empty()) {
        const char* env = std::getenv("QOC_DATA_DIR");
        dir = env != nullptr ? env : "data/mnist";
    }
    const MnistDataset data = load_mnist(dir, subset);

    std::vector<std::string> names;
    std::vector<std::size_t> dims;
    std::vector<TrainResult> results;
    for (const std::string& raw : scheme_args) {
        const SchemeSpec spec = parse_scheme_spec(raw, basis_file);
        MlpModel model(784, hidden, scheme_matrix(spec, 10), dropout);
        const TrainResult res = train(model, data, cfg);
        names.push_back(spec.name + std::to_string(model.out_dim()));
        dims.push_back(model.out_dim());
        results.push_back(res);
        for (const EpochEval& e : res.evals) {
            std::printf("%s dim=%zu epochs=%zu train=%.2f%% test=%.2f%%\n", spec.name.c_str(),
                        model.out_dim(), e.epoch, 100.0 * e.train_accuracy,
                        100.0 * e.test_accuracy);
        }
    }

    if (!report.empty()) {
        std::ofstream out(report, std::ios::binary);
        if (!out) throw data_error("cannot open " + report + " for writing");
        char buf[64];
        if (pivot) {
            out << "epochs";
            for (const std::string& n : names) out << ',' << n;
            out << '\n';
            for (std::size_t i = 0; i < results[0].evals.size(); ++i) {
                out << results[0].evals[i].epoch;
                for (const TrainResult& r : results) {
                    std::snprintf(buf, sizeof buf, "%.4f", 100.0 * r.evals[i].test_accuracy);
                    out << ',' << buf;
                }
                out << '\n';
            }
        } else {
            out << "scheme,dim,epochs,train_accuracy,test_accuracy\n";
            for (std::size_t s = 0; s < results.size(); ++s) {
                for (const EpochEval& e : results[s].evals) {
                    std::snprintf(buf, sizeof buf, "%.4f,%.4f", 100.0 * e.train_accuracy,
                                  100.0 * e.test_accuracy);
                    out << names[s] << ',' << dims[s] << ',' << e.epoch << ',' << buf
                        << '\n';
                }
            }
        }
    }
    return 0;
}

int cmd_geometry_demo(const std::string& mode, std::size_t samples, double radius,
                      std::uint64_t seed, const std::string& out) {
    MatD q;
    if (mode == "ortho") {
        q = MatD(2, 2);
        q(0, 0) = 1.0;
        q(1, 1) = 1.0;
    } else if (mode == "quasi") {
        // three unit vectors 120 degrees apart: pairwise |dot| = 0.5
        q = MatD(3, 2);
        for (std::size_t i = 0; i < 3; ++i) {
            const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / 3.0;
            q(i, 0) = std::cos(a);
            q(i, 1) = std::sin(a);
        }
    } else {
        q = MatD(4, 2);
        q(0, 0) = 1.0;
        q(1, 0) = -1.0;
        q(2, 1) = 1.0;
        q(3, 1) = -1.0;
    }
    const CoordinateMatrix Q(std::move(q));

    Rng rng(seed);
    MatD table(samples, 4);
    for (std::size_t i = 0; i < samples; ++i) {
        double x, y;
        do {
            x = rng.uniform(-radius, radius);
            y = rng.uniform(-radius, radius);
        } while (x * x + y * y > radius * radius);
        const double z[2] = {x, y};
        const ProbabilityVector p = qsoftmax(z, Q);
        double ox = 0.0, oy = 0.0;
        for (std::size_t k = 0; k < Q.labels(); ++k) {
            ox += p[k] * Q.matrix()(k, 0);
            oy += p[k] * Q.matrix()(k, 1);
        }
        table(i, 0) = x;
        table(i, 1) = y;
        table(i, 2) = ox;
        table(i, 3) = oy;
    }
    write_matrix_csv(out, table, {"x_in", "y_in", "x_out", "y_out"});
    std::printf("wrote %zu samples (%s mode, radius %g)\n", samples, mode.c_str(), radius);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quasiorthonormal and spherical-code categorical encoding toolkit"};
    app.require_subcommand(1);

    if (const char* backend = std::getenv("QOC_BACKEND")) {
        if (std::string(backend) == "serial") qoc::kernels::set_backend(qoc::kernels::Backend::serial);
    }

    // gen-basis
    auto* gen = app.add_subcommand("gen-basis", "generate a quasiorthonormal basis");
    std::size_t g_dim = 0, g_count = 0, g_restarts = 8, g_iters = 2000;
    double g_maxdot = 0.0;
    std::uint64_t g_seed = 1;
    std::string g_out;
    gen->add_option("--dim", g_dim, "ambient dimension")->required();
    gen->add_option("--count", g_count, "number of basis vectors")->required();
    gen->add_option("--max-dot", g_maxdot, "pairwise |dot| bound to reach")->required();
    gen->add_option("--seed", g_seed, "rng seed")->capture_default_str();
    gen->add_option("--restarts", g_restarts, "random restarts before giving up")
        ->capture_default_str();
    gen->add_option("--iters", g_iters, "repulsion iterations per restart")
        ->capture_default_str();
    gen->add_option("--out", g_out, "output basis file")->required();

    // convert
    auto* conv = app.add_subcommand("convert", "convert between code packs, codes and bases");
    std::string c_in, c_to, c_out;
    std::size_t c_dim = 0, c_count = 0;
    conv->add_option("--in", c_in, "basis, code or raw pack file")->required();
    conv->add_option("--dim", c_dim, "dimension (raw packs only)");
    conv->add_option("--count", c_count, "vector count (raw packs only)");
    conv->add_option("--to", c_to, "output kind")
        ->required()
        ->check(CLI::IsMember({"basis", "code"}));
    conv->add_option("--out", c_out, "output file")->required();

    // shared encode/decode flags
    std::string e_csv, e_column = "label", e_scheme, e_basis, e_out, e_dict;
    unsigned e_base = 3, e_bits = 8;
    bool e_balanced = false;
    long long e_offset = 1;

    auto* enc = app.add_subcommand("encode", "encode a CSV column");
    enc->add_option("--csv", e_csv, "input CSV file")->required();
    enc->add_option("--column", e_column, "column to encode")->capture_default_str();
    enc->add_option("--scheme", e_scheme,
                    "ordinal | onehot | binary | ternary | balanced-ternary | baseN | hash | "
                    "qoe | sphere")
        ->required();
    enc->add_option("--basis-file", e_basis, "basis/code file for qoe and sphere");
    enc->add_option("--base", e_base, "radix for baseN")->capture_default_str();
    enc->add_flag("--balanced", e_balanced, "use balanced digits for baseN");
    enc->add_option("--bits", e_bits, "word width for hash")->capture_default_str();
    enc->add_option("--offset", e_offset, "first ordinal value")->capture_default_str();
    enc->add_option("--out", e_out, "output matrix CSV")->required();
    enc->add_option("--dict-out", e_dict, "write the fitted category dictionary here");

    auto* dec = app.add_subcommand("decode", "decode an encoded matrix back to labels");
    std::string d_csv, d_dict, d_scheme, d_basis, d_out, d_column = "label";
    unsigned d_base = 3, d_bits = 8;
    bool d_balanced = false;
    long long d_offset = 1;
    dec->add_option("--csv", d_csv, "encoded matrix CSV")->required();
    dec->add_option("--dict", d_dict, "category dictionary from encode")->required();
    dec->add_option("--scheme", d_scheme, "scheme the matrix was encoded with")->required();
    dec->add_option("--basis-file", d_basis, "basis/code file for qoe and sphere");
    dec->add_option("--base", d_base, "radix for baseN")->capture_default_str();
    dec->add_flag("--balanced", d_balanced, "use balanced digits for baseN");
    dec->add_option("--bits", d_bits, "word width for hash")->capture_default_str();
    dec->add_option("--offset", d_offset, "first ordinal value")->capture_default_str();
    dec->add_option("--column", d_column, "column name for the output CSV")
        ->capture_default_str();
    dec->add_option("--out", d_out, "output label CSV")->required();

    // train-mnist
    auto* tr = app.add_subcommand("train-mnist", "train the reference MLP on MNIST");
    std::vector<std::string> t_schemes{"onehot"};
    std::string t_basis, t_optimizer = "adam", t_data, t_report;
    std::size_t t_epochs = 10, t_runs = 3, t_subset = 0, t_batch = 32, t_hidden = 64;
    std::uint64_t t_seed = 1;
    double t_dropout = 0.2;
    std::optional<double> t_lr;
    std::vector<std::size_t> t_eval;
    bool t_pivot = false;
    tr->add_option("--scheme", t_schemes, "onehot | qoe=FILE | sphere=FILE (repeatable)")
        ->capture_default_str();
    tr->add_option("--basis-file", t_basis, "fallback basis file for bare qoe/sphere schemes");
    tr->add_option("--epochs", t_epochs, "training epochs")->capture_default_str();
    tr->add_option("--runs", t_runs, "restarts averaged into the reported accuracy")
        ->capture_default_str();
    tr->add_option("--seed", t_seed, "rng seed")->capture_default_str();
    tr->add_option("--subset", t_subset, "train on the first N rows (0 = full dataset)")
        ->capture_default_str();
    tr->add_option("--batch", t_batch, "minibatch size")->capture_default_str();
    tr->add_option("--hidden", t_hidden, "hidden layer width")->capture_default_str();
    tr->add_option("--dropout", t_dropout, "dropout rate after the hidden layer")
        ->capture_default_str();
    tr->add_option("--optimizer", t_optimizer)
        ->check(CLI::IsMember({"sgd", "adam"}))
        ->capture_default_str();
    tr->add_option("--lr", [&t_lr](const std::vector<std::string>& v) {
        t_lr = std::stod(v[0]);
        return true;
    }, "learning rate (default 1e-3 adam, 0.05 sgd)");
    tr->add_option("--eval-at", t_eval, "extra epochs to evaluate at (repeatable)");
    tr->add_option("--data", t_data, "dataset directory (default $QOC_DATA_DIR or data/mnist)");
    tr->add_option("--report", t_report, "write per-scheme accuracies to this CSV");
    tr->add_flag("--report-pivot", t_pivot, "pivot the report: one column per scheme");

    // geometry-demo
    auto* demo = app.add_subcommand("geometry-demo", "sample the softmax mappings of the plane");
    std::string m_mode, m_out;
    std::size_t m_samples = 1000;
    double m_radius = 6.0;
    std::uint64_t m_seed = 1;
    demo->add_option("--mode", m_mode, "label geometry to map through")
        ->required()
        ->check(CLI::IsMember({"ortho", "quasi", "antipodal"}));
    demo->add_option("--samples", m_samples, "points drawn from the disk")
        ->capture_default_str();
    demo->add_option("--radius", m_radius, "sampling disk radius")->capture_default_str();
    demo->add_option("--seed", m_seed, "rng seed")->capture_default_str();
    demo->add_option("--out", m_out, "output CSV of input/output coordinates")->required();

    try {
        app.parse(argc, argv);
        if (*gen) return cmd_gen_basis(g_dim, g_count, g_maxdot, g_seed, g_restarts, g_iters, g_out);
        if (*conv) return cmd_convert(c_in, c_dim, c_count, c_to, c_out);
        if (*enc) {
            return cmd_encode(e_csv, e_column, e_scheme, e_basis, e_base, e_balanced, e_bits,
                              e_offset, e_out, e_dict);
        }
        if (*dec) {
            return cmd_decode(d_csv, d_dict, d_scheme, d_basis, d_base, d_balanced, d_bits,
                              d_offset, d_column, d_out);
        }
        if (*tr) {
            return cmd_train_mnist(t_schemes, t_basis, t_epochs, t_runs, t_seed, t_subset, t_batch,
                                   t_hidden, t_dropout, t_optimizer, t_lr, t_eval, t_data,
                                   t_report, t_pivot);
        }
        if (*demo) return cmd_geometry_demo(m_mode, m_samples, m_radius, m_seed, m_out);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const qoc::target_unreachable_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const qoc::argument_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const qoc::data_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
