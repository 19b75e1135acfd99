#pragma once

#include "docscan/dense.hpp"
#include "docscan/embedding.hpp"
#include "docscan/neighbors.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace docscan {

/// Single softmax classification layer: logits = x W + b.
///
/// Parameters are stored flat, weights first (dim x C, row-major) and then
/// the C biases, so the optimizer can treat them as one vector.
class LinearClassifier {
public:
    LinearClassifier() = default;
    LinearClassifier(std::size_t dim, std::size_t num_classes);

    /// Weights uniform in +-1/sqrt(dim), zero bias.
    static LinearClassifier initialize(std::size_t dim, std::size_t num_classes, std::uint64_t seed);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t num_classes() const noexcept { return classes_; }
    std::size_t parameter_count() const noexcept { return params_.size(); }

    double& weight(std::size_t j, std::size_t c) { return params_[j * classes_ + c]; }
    double weight(std::size_t j, std::size_t c) const { return params_[j * classes_ + c]; }
    double& bias(std::size_t c) { return params_[dim_ * classes_ + c]; }
    double bias(std::size_t c) const { return params_[dim_ * classes_ + c]; }

    std::span<double> parameters() noexcept { return params_; }
    std::span<const double> parameters() const noexcept { return params_; }

    friend bool operator==(const LinearClassifier&, const LinearClassifier&) = default;

private:
    std::size_t dim_ = 0;
    std::size_t classes_ = 0;
    std::vector<double> params_;
};

struct RunConfig {
    std::size_t k_neighbors = 5;
    double entropy_weight = 2.0;
    std::size_t batch_size = 128;
    double dropout = 0.1;
    std::size_t epochs = 5;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Raw logits for `n` rows packed row-major in `rows` (n * dim floats).
DenseMatrix logits(const LinearClassifier& model, std::span<const float> rows);

/// Row-wise softmax with max subtraction.
DenseMatrix softmax(const DenseMatrix& logits);

/// Softmax probabilities for every row of `rows`.
DenseMatrix forward(const LinearClassifier& model, std::span<const float> rows);
DenseMatrix forward(const LinearClassifier& model, const EmbeddingMatrix& matrix);

inline constexpr double kLogEpsilon = 1e-8;

struct ScanLoss {
    double total = 0.0;
    double consistency = 0.0;
    double entropy = 0.0;  // already scaled by the entropy weight
};

/// consistency = -(1/b) sum_j log(<p_j, q_j> + eps)
/// entropy     = weight * sum_i pbar_i log(pbar_i + eps), pbar = mean anchor row
ScanLoss scan_loss(const DenseMatrix& probs_anchor, const DenseMatrix& probs_neighbor,
                   double entropy_weight);

struct ScanLossGradient {
    ScanLoss loss;
    DenseMatrix anchor_logits;    // d total / d anchor logits
    DenseMatrix neighbor_logits;  // d total / d neighbor logits
};

/// Loss and its gradient with respect to both sets of logits.
ScanLossGradient scan_loss_gradient(const DenseMatrix& logits_anchor,
                                    const DenseMatrix& logits_neighbor,
                                    double entropy_weight);

struct ParameterGradient {
    ScanLoss loss;
    /// Same layout as LinearClassifier::parameters().
    std::vector<double> grads;
};

/// Loss and gradient with respect to the model parameters for one batch of
/// anchor/neighbor rows (each b * dim floats, row j of one pairs with row j
/// of the other).
ParameterGradient scan_loss_parameter_gradient(const LinearClassifier& model,
                                               std::span<const float> anchors,
                                               std::span<const float> neighbors,
                                               double entropy_weight);

/// Adam with bias correction; beta1 = 0.9, beta2 = 0.999, eps = 1e-8 by default.
class AdamOptimizer {
public:
    struct Hyper {
        double beta1 = 0.9;
        double beta2 = 0.999;
        double epsilon = 1e-8;
    };

    explicit AdamOptimizer(std::size_t parameter_count) : AdamOptimizer(parameter_count, Hyper{}) {}
    AdamOptimizer(std::size_t parameter_count, Hyper hyper);

    /// Applies one update in place. Throws NonFiniteGradient before touching
    /// any state if a gradient entry is NaN or infinite.
    void step(std::span<double> params, std::span<const double> grads, double learning_rate);

    std::size_t steps_taken() const noexcept { return t_; }
    std::span<const double> first_moment() const noexcept { return m_; }
    std::span<const double> second_moment() const noexcept { return v_; }

private:
    Hyper hyper_;
    std::size_t t_ = 0;
    std::vector<double> m_;
    std::vector<double> v_;
};

struct LossRecord {
    std::size_t epoch = 0;
    std::size_t step = 0;
    ScanLoss loss;
};

struct TrainResult {
    LinearClassifier model;
    std::vector<LossRecord> trace;

    /// Mean total loss per epoch, derived from the step trace.
    std::vector<double> epoch_means() const;
};

/// Trains on every (row, neighbor) pair of the table, reshuffled each epoch.
/// Inverted dropout is applied to both input rows of a pair; a trailing
/// partial batch is kept. Optimization runs on centered rows scaled to unit
/// mean column variance; the returned model is folded back to raw inputs.
/// Pure in (matrix, table, num_classes, cfg).
TrainResult train(const EmbeddingMatrix& matrix, const NeighborTable& table,
                  std::size_t num_classes, const RunConfig& cfg);

/// Argmax of the logits per row (equivalently of the softmax); ties go to
/// the lowest class index.
std::vector<std::int32_t> predict(const LinearClassifier& model, const EmbeddingMatrix& matrix);

/// JSON {dim, num_classes, weights, bias} with 17 significant digits.
void save_model(const LinearClassifier& model, const std::filesystem::path& path);
LinearClassifier load_model(const std::filesystem::path& path);

/// CSV with header epoch,step,total,consistency,entropy.
void save_loss_trace(std::span<const LossRecord> trace, const std::filesystem::path& path);

}  // namespace docscan
