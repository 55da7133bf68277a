#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "qoc/dataio.hpp"
#include "qoc/mat.hpp"
#include "qoc/qsoftmax.hpp"
#include "qoc/rng.hpp"

namespace qoc {

// 784 -> hidden (ReLU) -> inverted dropout -> d, decoded through qsoftmax
// with the K x d coordinate matrix q.
struct MlpModel {
    MlpModel(std::size_t input_dim, std::size_t hidden, CoordinateMatrix q,
             double dropout_rate = 0.2);

    // Redraws weights from U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
    void reinit(std::uint64_t seed);

    std::size_t out_dim() const noexcept { return q.dim(); }
    std::size_t classes() const noexcept { return q.labels(); }

    std::size_t input_dim;
    std::size_t hidden;
    double dropout_rate;
    CoordinateMatrix q;
    MatF qf;  // float copy of q used by the batch kernels
    MatF w1;  // hidden x input_dim
    std::vector<float> b1;
    MatF w2;  // out_dim x hidden
    std::vector<float> b2;
};

// Probabilities over the K classes. rng drives the dropout mask and is
// required when train_mode is set with a nonzero dropout rate.
ProbabilityVector forward(const MlpModel& m, std::span<const float> x, bool train_mode,
                          Rng* rng = nullptr);

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    // Adam with the usual moment defaults reaches the reference accuracy
    // bars; plain SGD stays available for comparison runs.
    enum class Optimizer { sgd, adam };
    Optimizer optimizer = Optimizer::adam;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;
    std::size_t runs = 3;
    std::vector<std::size_t> eval_epochs;  // extra mid-run evaluation points
};

struct Metrics {
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::vector<double> loss_curve;  // mean train loss per epoch
};

struct EpochEval {
    std::size_t epoch = 0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
};

struct TrainResult {
    Metrics metrics;               // means over config.runs at the final epoch
    std::vector<EpochEval> evals;  // at eval_epochs plus the final epoch
};

// Cross-entropy gradients of one minibatch; mask holds per-unit dropout
// multipliers (0 or 1/(1-rate)) or nullptr for no dropout.
struct BatchGradients {
    MatF dw1;
    std::vector<float> db1;
    MatF dw2;
    std::vector<float> db2;
    double mean_loss = 0.0;
};
BatchGradients batch_gradients(const MlpModel& m, const MatF& xb, std::span<const int> targets,
                               const MatF* dropout_mask);

// Minibatch training over config.runs independently seeded runs (weights,
// shuffles and dropout all derive from mix_seed(config.seed, run)). The
// model is left holding the last run's weights. Dropout noise is drawn from
// a counter keyed on (run, epoch, sample index), so results do not depend
// on how batches are scheduled, and a longer run replays a shorter one's
// epochs exactly.
TrainResult train(MlpModel& model, const MnistDataset& data, const TrainConfig& config);

double evaluate_accuracy(const MlpModel& m, const MatF& images, const std::vector<int>& labels);
Metrics evaluate(const MlpModel& m, const MnistDataset& data);

// Binary checkpoint; round-trips bit-exactly.
void save_model(const std::filesystem::path& path, const MlpModel& m);
MlpModel load_model(const std::filesystem::path& path);

}  // namespace qoc
