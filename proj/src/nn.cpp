#include "qoc/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

#include "qoc/error.hpp"
#include "qoc/kernels.hpp"

namespace qoc {

namespace {

MatF to_float(const MatD& m) {
    MatF out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.v.size(); ++i) out.v[i] = static_cast<float>(m.v[i]);
    return out;
}

void check_finite(std::span<const float> v, const char* layer) {
    for (float x : v) {
        if (!std::isfinite(x)) {
            throw training_error(std::string("non-finite activation in ") + layer);
        }
    }
}

}  // namespace

MlpModel::MlpModel(std::size_t input_dim_, std::size_t hidden_, CoordinateMatrix q_,
                   double dropout_rate_)
    : input_dim(input_dim_),
      hidden(hidden_),
      dropout_rate(dropout_rate_),
      q(std::move(q_)),
      qf(to_float(q.matrix())),
      w1(hidden_, input_dim_),
      b1(hidden_, 0.0f),
      w2(q.dim(), hidden_),
      b2(q.dim(), 0.0f) {
    if (input_dim == 0 || hidden == 0) {
        throw argument_error("model needs input_dim and hidden >= 1");
    }
    if (!(dropout_rate >= 0.0) || dropout_rate >= 1.0) {
        throw argument_error("dropout rate must lie in [0,1)");
    }
}

void MlpModel::reinit(std::uint64_t seed) {
    Rng rng(seed);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
    for (float& w : w1.v) w = static_cast<float>(rng.uniform(-s1, s1));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (float& w : w2.v) w = static_cast<float>(rng.uniform(-s2, s2));
    std::fill(b1.begin(), b1.end(), 0.0f);
    std::fill(b2.begin(), b2.end(), 0.0f);
}

ProbabilityVector forward(const MlpModel& m, std::span<const float> x, bool train_mode,
                          Rng* rng) {
    if (x.size() != m.input_dim) {
        throw argument_error("input has " + std::to_string(x.size()) + " values, model expects " +
                             std::to_string(m.input_dim));
    }
    std::vector<float> h(m.hidden);
    for (std::size_t u = 0; u < m.hidden; ++u) {
        const float z = kernels::dot(m.w1.row(u), x.data(), m.input_dim) + m.b1[u];
        h[u] = z < 0.0f ? 0.0f : z;
    }
    check_finite(h, "layer1 (hidden)");
    if (train_mode && m.dropout_rate > 0.0) {
        if (rng == nullptr) {
            throw argument_error("train-mode forward with dropout needs an rng");
        }
        const float scale = static_cast<float>(1.0 / (1.0 - m.dropout_rate));
        for (float& v : h) v = rng->uniform() < m.dropout_rate ? 0.0f : v * scale;
    }
    std::vector<double> z(m.out_dim());
    for (std::size_t o = 0; o < m.out_dim(); ++o) {
        z[o] = kernels::dot(m.w2.row(o), h.data(), m.hidden) + m.b2[o];
        if (!std::isfinite(z[o])) throw training_error("non-finite activation in layer2 (output)");
    }
    return qsoftmax(z, m.q);
}

BatchGradients batch_gradients(const MlpModel& m, const MatF& xb, std::span<const int> targets,
                               const MatF* dropout_mask) {
    const std::size_t batch = xb.rows;
    if (batch == 0) throw argument_error("empty batch");
    if (xb.cols != m.input_dim) {
        throw argument_error("batch has " + std::to_string(xb.cols) + " columns, model expects " +
                             std::to_string(m.input_dim));
    }
    if (targets.size() != batch) throw argument_error("targets do not match batch rows");
    for (int t : targets) {
        if (t < 0 || static_cast<std::size_t>(t) >= m.classes()) {
            throw argument_error("target " + std::to_string(t) + " out of range");
        }
    }
    if (dropout_mask != nullptr &&
        (dropout_mask->rows != batch || dropout_mask->cols != m.hidden)) {
        throw argument_error("dropout mask shape mismatch");
    }

    const std::size_t k = m.classes();
    const std::size_t d = m.out_dim();

    MatF h_relu(batch, m.hidden);
    kernels::dense_forward(xb, m.w1, m.b1, true, h_relu);
    MatF h = h_relu;
    if (dropout_mask != nullptr) {
        kernels::parallel_for(batch, [&](std::size_t b) {
            float* row = h.row(b);
            const float* mask = dropout_mask->row(b);
            for (std::size_t u = 0; u < m.hidden; ++u) row[u] *= mask[u];
        });
    }
    MatF z(batch, d);
    kernels::dense_forward(h, m.w2, m.b2, false, z);

    const std::vector<float> zero_bias(k, 0.0f);
    MatF y(batch, k);
    kernels::dense_forward(z, m.qf, zero_bias, false, y);

    // Softmax, per-row loss and dL/dy in one pass; losses summed serially.
    MatF dy(batch, k);
    std::vector<double> row_loss(batch);
    const double inv_batch = 1.0 / static_cast<double>(batch);
    kernels::parallel_for(batch, [&](std::size_t b) {
        const float* yr = y.row(b);
        double mx = yr[0];
        for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, static_cast<double>(yr[j]));
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) sum += std::exp(yr[j] - mx);
        const std::size_t t = static_cast<std::size_t>(targets[b]);
        row_loss[b] = mx + std::log(sum) - yr[t];
        float* g = dy.row(b);
        for (std::size_t j = 0; j < k; ++j) {
            const double p = std::exp(yr[j] - mx) / sum;
            g[j] = static_cast<float>((p - (j == t ? 1.0 : 0.0)) * inv_batch);
        }
    });

    BatchGradients out;
    out.mean_loss = std::accumulate(row_loss.begin(), row_loss.end(), 0.0) * inv_batch;

    MatF dz(batch, d);
    kernels::dense_backprop(dy, m.qf, dz);

    out.dw2 = MatF(d, m.hidden);
    out.db2.resize(d);
    kernels::dense_grad(dz, h, out.dw2, out.db2);

    MatF dh(batch, m.hidden);
    kernels::dense_backprop(dz, m.w2, dh);
    kernels::parallel_for(batch, [&](std::size_t b) {
        float* row = dh.row(b);
        const float* relu = h_relu.row(b);
        const float* mask = dropout_mask != nullptr ? dropout_mask->row(b) : nullptr;
        for (std::size_t u = 0; u < m.hidden; ++u) {
            float g = relu[u] > 0.0f ? row[u] : 0.0f;
            if (mask != nullptr) g *= mask[u];
            row[u] = g;
        }
    });

    out.dw1 = MatF(m.hidden, m.input_dim);
    out.db1.resize(m.hidden);
    kernels::dense_grad(dh, xb, out.dw1, out.db1);
    return out;
}

namespace {

// Counter-keyed dropout: the mask for a sample depends only on
// (run_seed, epoch, original sample index), not on batch layout.
void fill_dropout_mask(MatF& mask, std::uint64_t epoch_key, std::span<const std::size_t> samples,
                       double rate) {
    const float scale = static_cast<float>(1.0 / (1.0 - rate));
    kernels::parallel_for(mask.rows, [&](std::size_t b) {
        const std::uint64_t sample_key = mix_seed(epoch_key, samples[b]);
        float* row = mask.row(b);
        for (std::size_t u = 0; u < mask.cols; ++u) {
            const double x = static_cast<double>(mix_seed(sample_key, u) >> 11) * 0x1.0p-53;
            row[u] = x < rate ? 0.0f : scale;
        }
    });
}

struct AdamState {
    std::vector<float> m, v;
    explicit AdamState(std::size_t n) : m(n, 0.0f), v(n, 0.0f) {}
};

void adam_step(std::span<float> w, std::span<const float> g, AdamState& st, double lr,
               long step) {
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
    const float step_size = static_cast<float>(lr / (1.0 - std::pow(kBeta1, step)));
    const float inv_sqrt_bc2 =
        static_cast<float>(1.0 / std::sqrt(1.0 - std::pow(kBeta2, step)));
    float* mp = st.m.data();
    float* vp = st.v.data();
    kernels::parallel_for(w.size(), [&](std::size_t i) {
        mp[i] = static_cast<float>(kBeta1) * mp[i] + static_cast<float>(1.0 - kBeta1) * g[i];
        vp[i] = static_cast<float>(kBeta2) * vp[i] + static_cast<float>(1.0 - kBeta2) * g[i] * g[i];
        const float denom = std::sqrt(vp[i]) * inv_sqrt_bc2 + static_cast<float>(kEps);
        w[i] -= step_size * mp[i] / denom;
    });
}

double accuracy_over(const MlpModel& m, const MatF& images, const std::vector<int>& labels) {
    const std::size_t n = images.rows;
    constexpr std::size_t kChunk = 512;
    MatF h(kChunk, m.hidden);
    MatF z(kChunk, m.out_dim());
    MatF y(kChunk, m.classes());
    const std::vector<float> zero_bias(m.classes(), 0.0f);
    std::vector<int> preds(kChunk);
    MatF xb(kChunk, images.cols);
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += kChunk) {
        const std::size_t b = std::min(kChunk, n - start);
        xb.rows = h.rows = z.rows = y.rows = b;
        std::memcpy(xb.v.data(), images.row(start), b * images.cols * sizeof(float));
        kernels::dense_forward(xb, m.w1, m.b1, true, h);
        kernels::dense_forward(h, m.w2, m.b2, false, z);
        kernels::dense_forward(z, m.qf, zero_bias, false, y);
        kernels::argmax_rows(y, std::span<int>(preds.data(), b));
        for (std::size_t i = 0; i < b; ++i) {
            if (preds[i] == labels[start + i]) ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

}  // namespace

double evaluate_accuracy(const MlpModel& m, const MatF& images, const std::vector<int>& labels) {
    if (images.rows != labels.size()) throw argument_error("images/labels count mismatch");
    if (images.rows == 0) throw argument_error("empty evaluation set");
    return accuracy_over(m, images, labels);
}

Metrics evaluate(const MlpModel& m, const MnistDataset& data) {
    Metrics out;
    out.train_accuracy = evaluate_accuracy(m, data.train_images, data.train_labels);
    out.test_accuracy = evaluate_accuracy(m, data.test_images, data.test_labels);
    return out;
}

TrainResult train(MlpModel& model, const MnistDataset& data, const TrainConfig& config) {
    if (config.epochs == 0 || config.batch_size == 0 || config.runs == 0) {
        throw argument_error("epochs, batch_size and runs must be >= 1");
    }
    if (!(config.learning_rate > 0.0)) throw argument_error("learning rate must be positive");
    const std::size_t n = data.train_images.rows;
    if (n == 0 || data.train_labels.size() != n) {
        throw argument_error("training set is empty or inconsistent");
    }
    for (int label : data.train_labels) {
        if (label < 0 || static_cast<std::size_t>(label) >= model.classes()) {
            throw argument_error("label " + std::to_string(label) + " outside the model's " +
                                 std::to_string(model.classes()) + " classes");
        }
    }

    std::vector<std::size_t> eval_epochs = config.eval_epochs;
    eval_epochs.push_back(config.epochs);
    std::sort(eval_epochs.begin(), eval_epochs.end());
    eval_epochs.erase(std::unique(eval_epochs.begin(), eval_epochs.end()), eval_epochs.end());
    for (std::size_t e : eval_epochs) {
        if (e == 0 || e > config.epochs) {
            throw argument_error("evaluation epoch " + std::to_string(e) + " outside 1.." +
                                 std::to_string(config.epochs));
        }
    }

    TrainResult result;
    result.evals.resize(eval_epochs.size());
    for (std::size_t i = 0; i < eval_epochs.size(); ++i) result.evals[i].epoch = eval_epochs[i];
    result.metrics.loss_curve.assign(config.epochs, 0.0);

    const std::size_t batch_size = std::min(config.batch_size, n);
    MatF xb(batch_size, model.input_dim);
    MatF mask(batch_size, model.hidden);
    std::vector<int> targets(batch_size);
    std::vector<std::size_t> batch_samples(batch_size);
    std::vector<std::size_t> perm(n);

    for (std::size_t run = 0; run < config.runs; ++run) {
        const std::uint64_t run_seed = mix_seed(config.seed, run);
        model.reinit(mix_seed(run_seed, 0x494e49));
        AdamState st_w1(model.w1.v.size()), st_b1(model.b1.size());
        AdamState st_w2(model.w2.v.size()), st_b2(model.b2.size());
        long step = 0;

        for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
            std::iota(perm.begin(), perm.end(), std::size_t{0});
            Rng shuffle_rng(mix_seed(mix_seed(run_seed, 0x5348), epoch));
            shuffle_rng.shuffle(std::span<std::size_t>(perm));
            const std::uint64_t epoch_key = mix_seed(mix_seed(run_seed, 0xd5), epoch);

            double epoch_loss = 0.0;
            for (std::size_t start = 0; start < n; start += batch_size) {
                const std::size_t b = std::min(batch_size, n - start);
                xb.rows = b;
                mask.rows = b;
                for (std::size_t i = 0; i < b; ++i) {
                    const std::size_t s = perm[start + i];
                    batch_samples[i] = s;
                    targets[i] = data.train_labels[s];
                    std::memcpy(xb.row(i), data.train_images.row(s),
                                model.input_dim * sizeof(float));
                }
                const MatF* mask_ptr = nullptr;
                if (model.dropout_rate > 0.0) {
                    fill_dropout_mask(mask, epoch_key,
                                      std::span<const std::size_t>(batch_samples.data(), b),
                                      model.dropout_rate);
                    mask_ptr = &mask;
                }
                const BatchGradients g =
                    batch_gradients(model, xb, std::span<const int>(targets.data(), b), mask_ptr);
                if (!std::isfinite(g.mean_loss)) {
                    throw training_error("loss diverged at epoch " + std::to_string(epoch) +
                                         ", batch " + std::to_string(start / batch_size) +
                                         " (run " + std::to_string(run) + ")");
                }
                epoch_loss += g.mean_loss * static_cast<double>(b);

                ++step;
                if (config.optimizer == TrainConfig::Optimizer::adam) {
                    adam_step(model.w1.v, g.dw1.v, st_w1, config.learning_rate, step);
                    adam_step(model.b1, g.db1, st_b1, config.learning_rate, step);
                    adam_step(model.w2.v, g.dw2.v, st_w2, config.learning_rate, step);
                    adam_step(model.b2, g.db2, st_b2, config.learning_rate, step);
                } else {
                    const float lr = static_cast<float>(config.learning_rate);
                    kernels::sgd_step(model.w1.v, g.dw1.v, lr);
                    kernels::sgd_step(model.b1, g.db1, lr);
                    kernels::sgd_step(model.w2.v, g.dw2.v, lr);
                    kernels::sgd_step(model.b2, g.db2, lr);
                }
            }
            result.metrics.loss_curve[epoch - 1] += epoch_loss / static_cast<double>(n);

            const auto it = std::find(eval_epochs.begin(), eval_epochs.end(), epoch);
            if (it != eval_epochs.end()) {
                const std::size_t slot = static_cast<std::size_t>(it - eval_epochs.begin());
                result.evals[slot].train_accuracy +=
                    accuracy_over(model, data.train_images, data.train_labels);
                if (data.test_images.rows > 0) {
                    result.evals[slot].test_accuracy +=
                        accuracy_over(model, data.test_images, data.test_labels);
                }
            }
        }
    }

    const double inv_runs = 1.0 / static_cast<double>(config.runs);
    for (double& x : result.metrics.loss_curve) x *= inv_runs;
    for (EpochEval& e : result.evals) {
        e.train_accuracy *= inv_runs;
        e.test_accuracy *= inv_runs;
    }
    result.metrics.train_accuracy = result.evals.back().train_accuracy;
    result.metrics.test_accuracy = result.evals.back().test_accuracy;
    return result;
}

namespace {

constexpr char kModelMagic[8] = {'Q', 'O', 'C', 'M', 'L', 'P', '1', '\n'};

template <typename T>
void write_raw(std::ofstream& out, const T* data, std::size_t count) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
}

template <typename T>
void read_raw(std::ifstream& in, T* data, std::size_t count, const std::string& name) {
    in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(T)) {
        throw data_error(name + ": truncated checkpoint");
    }
}

}  // namespace

void save_model(const std::filesystem::path& path, const MlpModel& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot open " + path.string() + " for writing");
    write_raw(out, kModelMagic, 8);
    const std::uint64_t dims[4] = {m.input_dim, m.hidden, m.out_dim(), m.classes()};
    write_raw(out, dims, 4);
    write_raw(out, &m.dropout_rate, 1);
    write_raw(out, m.q.matrix().v.data(), m.q.matrix().v.size());
    write_raw(out, m.w1.v.data(), m.w1.v.size());
    write_raw(out, m.b1.data(), m.b1.size());
    write_raw(out, m.w2.v.data(), m.w2.v.size());
    write_raw(out, m.b2.data(), m.b2.size());
    if (!out) throw data_error("failed writing " + path.string());
}

MlpModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open " + path.string());
    const std::string name = path.string();
    char magic[8];
    read_raw(in, magic, 8, name);
    if (std::memcmp(magic, kModelMagic, 8) != 0) {
        throw data_error(name + ": not a model checkpoint");
    }
    std::uint64_t dims[4];
    read_raw(in, dims, 4, name);
    double dropout = 0.0;
    read_raw(in, &dropout, 1, name);
    MatD q(dims[3], dims[2]);
    read_raw(in, q.v.data(), q.v.size(), name);
    MlpModel m(dims[0], dims[1], CoordinateMatrix(std::move(q)), dropout);
    read_raw(in, m.w1.v.data(), m.w1.v.size(), name);
    read_raw(in, m.b1.data(), m.b1.size(), name);
    read_raw(in, m.w2.v.data(), m.w2.v.size(), name);
    read_raw(in, m.b2.data(), m.b2.size(), name);
    char extra;
    if (in.read(&extra, 1) && in.gcount() == 1) {
        throw data_error(name + ": trailing bytes after checkpoint payload");
    }
    return m;
}

}  // namespace qoc
