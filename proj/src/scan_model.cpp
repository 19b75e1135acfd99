#include "docscan/scan_model.hpp"

#include "docscan/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>

namespace docscan {

namespace {

constexpr double kSimplexTolerance = 1e-4;

void check_simplex(const DenseMatrix& probs, const char* name) {
    for (std::size_t r = 0; r < probs.rows; ++r) {
        double sum = 0.0;
        for (double p : probs.row(r)) {
            if (!(p >= 0.0) || !std::isfinite(p)) {
                fail(ErrorCode::NonSimplexInput,
                     std::string(name) + " row " + std::to_string(r) + " has a negative or non-finite entry");
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > kSimplexTolerance) {
            fail(ErrorCode::NonSimplexInput,
                 std::string(name) + " row " + std::to_string(r) + " sums to " + std::to_string(sum));
        }
    }
}

// d loss / d probabilities -> d loss / d logits through the row softmax.
void softmax_backward(const DenseMatrix& probs, DenseMatrix& grad) {
    for (std::size_t r = 0; r < probs.rows; ++r) {
        auto p = probs.row(r);
        auto g = grad.row(r);
        const double inner = std::inner_product(p.begin(), p.end(), g.begin(), 0.0);
        for (std::size_t c = 0; c < probs.cols; ++c) {
            g[c] = p[c] * (g[c] - inner);
        }
    }
}

// Adds rows^T * grad into the weight block and column sums into the bias.
void accumulate_parameter_grad(std::span<const float> rows, const DenseMatrix& grad,
                               std::size_t dim, std::span<double> out) {
    const std::size_t classes = grad.cols;
    for (std::size_t r = 0; r < grad.rows; ++r) {
        const float* x = rows.data() + r * dim;
        auto g = grad.row(r);
        for (std::size_t j = 0; j < dim; ++j) {
            const double xj = x[j];
            if (xj == 0.0) {
                continue;
            }
            double* w = out.data() + j * classes;
            for (std::size_t c = 0; c < classes; ++c) {
                w[c] += xj * g[c];
            }
        }
        double* b = out.data() + dim * classes;
        for (std::size_t c = 0; c < classes; ++c) {
            b[c] += g[c];
        }
    }
}

}  // namespace

LinearClassifier::LinearClassifier(std::size_t dim, std::size_t num_classes)
    : dim_(dim), classes_(num_classes), params_(dim * num_classes + num_classes, 0.0) {
    if (dim == 0 || num_classes == 0) {
        fail(ErrorCode::InvalidArgument, "classifier needs dim >= 1 and num_classes >= 1");
    }
}

LinearClassifier LinearClassifier::initialize(std::size_t dim, std::size_t num_classes,
                                              std::uint64_t seed) {
    LinearClassifier model(dim, num_classes);
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(-bound, bound);
    for (std::size_t i = 0; i < dim * num_classes; ++i) {
        model.params_[i] = uniform(rng);
    }
    return model;
}

void RunConfig::validate() const {
    if (k_neighbors < 1) {
        fail(ErrorCode::InvalidArgument, "k_neighbors must be >= 1");
    }
    if (!(entropy_weight >= 0.0) || !std::isfinite(entropy_weight)) {
        fail(ErrorCode::InvalidArgument, "entropy_weight must be finite and >= 0");
    }
    if (batch_size < 2) {
        fail(ErrorCode::InvalidArgument, "batch_size must be >= 2");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        fail(ErrorCode::InvalidArgument, "dropout must lie in [0, 1)");
    }
    if (epochs < 1) {
        fail(ErrorCode::InvalidArgument, "epochs must be >= 1");
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        fail(ErrorCode::InvalidArgument, "learning_rate must be positive");
    }
}

DenseMatrix logits(const LinearClassifier& model, std::span<const float> rows) {
    const std::size_t dim = model.dim();
    if (dim == 0 || rows.size() % dim != 0) {
        fail(ErrorCode::DimensionMismatch,
             "input of " + std::to_string(rows.size()) + " values is not a multiple of model dim " +
                 std::to_string(dim));
    }
    const std::size_t n = rows.size() / dim;
    const std::size_t classes = model.num_classes();
    DenseMatrix out(n, classes);
    for (std::size_t r = 0; r < n; ++r) {
        auto z = out.row(r);
        for (std::size_t c = 0; c < classes; ++c) {
            z[c] = model.bias(c);
        }
        const float* x = rows.data() + r * dim;
        for (std::size_t j = 0; j < dim; ++j) {
            const double xj = x[j];
            const double* w = model.parameters().data() + j * classes;
            for (std::size_t c = 0; c < classes; ++c) {
                z[c] += xj * w[c];
            }
        }
    }
    return out;
}

DenseMatrix softmax(const DenseMatrix& logits) {
    DenseMatrix probs(logits.rows, logits.cols);
    for (std::size_t r = 0; r < logits.rows; ++r) {
        auto z = logits.row(r);
        auto p = probs.row(r);
        const double top = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (std::size_t c = 0; c < logits.cols; ++c) {
            p[c] = std::exp(z[c] - top);
            sum += p[c];
        }
        for (double& v : p) {
            v /= sum;
        }
    }
    return probs;
}

DenseMatrix forward(const LinearClassifier& model, std::span<const float> rows) {
    return softmax(logits(model, rows));
}

DenseMatrix forward(const LinearClassifier& model, const EmbeddingMatrix& matrix) {
    if (matrix.dim() != model.dim()) {
        fail(ErrorCode::DimensionMismatch, "matrix dim " + std::to_string(matrix.dim()) +
                                               " != model dim " + std::to_string(model.dim()));
    }
    return forward(model, matrix.data());
}

ScanLoss scan_loss(const DenseMatrix& probs_anchor, const DenseMatrix& probs_neighbor,
                   double entropy_weight) {
    if (probs_anchor.rows == 0 || probs_anchor.rows != probs_neighbor.rows ||
        probs_anchor.cols != probs_neighbor.cols) {
        fail(ErrorCode::DimensionMismatch, "anchor and neighbor probabilities must share a non-empty shape");
    }
    check_simplex(probs_anchor, "anchor");
    check_simplex(probs_neighbor, "neighbor");

    const std::size_t b = probs_anchor.rows;
    const std::size_t classes = probs_anchor.cols;
    ScanLoss loss;
    std::vector<double> mean(classes, 0.0);
    for (std::size_t r = 0; r < b; ++r) {
        auto p = probs_anchor.row(r);
        auto q = probs_neighbor.row(r);
        const double similarity = std::inner_product(p.begin(), p.end(), q.begin(), 0.0);
        loss.consistency -= std::log(similarity + kLogEpsilon);
        for (std::size_t c = 0; c < classes; ++c) {
            mean[c] += p[c];
        }
    }
    loss.consistency /= static_cast<double>(b);
    if (entropy_weight != 0.0) {
        double neg_entropy = 0.0;
        for (double& m : mean) {
            m /= static_cast<double>(b);
            neg_entropy += m * std::log(m + kLogEpsilon);
        }
        loss.entropy = entropy_weight * neg_entropy;
    }
    loss.total = loss.consistency + loss.entropy;
    return loss;
}

ScanLossGradient scan_loss_gradient(const DenseMatrix& logits_anchor,
                                    const DenseMatrix& logits_neighbor,
                                    double entropy_weight) {
    const DenseMatrix probs_anchor = softmax(logits_anchor);
    const DenseMatrix probs_neighbor = softmax(logits_neighbor);
    ScanLossGradient out;
    out.loss = scan_loss(probs_anchor, probs_neighbor, entropy_weight);

    const std::size_t b = probs_anchor.rows;
    const std::size_t classes = probs_anchor.cols;
    const double inv_b = 1.0 / static_cast<double>(b);
    out.anchor_logits = DenseMatrix(b, classes);
    out.neighbor_logits = DenseMatrix(b, classes);

    for (std::size_t r = 0; r < b; ++r) {
        auto p = probs_anchor.row(r);
        auto q = probs_neighbor.row(r);
        const double similarity = std::inner_product(p.begin(), p.end(), q.begin(), 0.0);
        const double scale = -inv_b / (similarity + kLogEpsilon);
        for (std::size_t c = 0; c < classes; ++c) {
            out.anchor_logits(r, c) = scale * q[c];
            out.neighbor_logits(r, c) = scale * p[c];
        }
    }
    if (entropy_weight != 0.0) {
        std::vector<double> mean(classes, 0.0);
        for (std::size_t r = 0; r < b; ++r) {
            for (std::size_t c = 0; c < classes; ++c) {
                mean[c] += probs_anchor(r, c) * inv_b;
            }
        }
        // d/dpbar_i of pbar_i log(pbar_i + eps), spread over the b anchor rows.
        std::vector<double> dmean(classes);
        for (std::size_t c = 0; c < classes; ++c) {
            dmean[c] = entropy_weight * inv_b *
                       (std::log(mean[c] + kLogEpsilon) + mean[c] / (mean[c] + kLogEpsilon));
        }
        for (std::size_t r = 0; r < b; ++r) {
            for (std::size_t c = 0; c < classes; ++c) {
                out.anchor_logits(r, c) += dmean[c];
            }
        }
    }
    softmax_backward(probs_anchor, out.anchor_logits);
    softmax_backward(probs_neighbor, out.neighbor_logits);
    return out;
}

ParameterGradient scan_loss_parameter_gradient(const LinearClassifier& model,
                                               std::span<const float> anchors,
                                               std::span<const float> neighbors,
                                               double entropy_weight) {
    if (anchors.size() != neighbors.size()) {
        fail(ErrorCode::DimensionMismatch, "anchor and neighbor batches differ in size");
    }
    const auto grad = scan_loss_gradient(logits(model, anchors), logits(model, neighbors), entropy_weight);
    ParameterGradient out{grad.loss, std::vector<double>(model.parameter_count(), 0.0)};
    accumulate_parameter_grad(anchors, grad.anchor_logits, model.dim(), out.grads);
    accumulate_parameter_grad(neighbors, grad.neighbor_logits, model.dim(), out.grads);
    return out;
}

AdamOptimizer::AdamOptimizer(std::size_t parameter_count, Hyper hyper)
    : hyper_(hyper), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {}

void AdamOptimizer::step(std::span<double> params, std::span<const double> grads,
                         double learning_rate) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        fail(ErrorCode::DimensionMismatch, "Adam state, parameters and gradients differ in size");
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!std::isfinite(grads[i])) {
            fail(ErrorCode::NonFiniteGradient, "non-finite gradient at parameter " + std::to_string(i));
        }
    }
    ++t_;
    const double correction1 = 1.0 - std::pow(hyper_.beta1, static_cast<double>(t_));
    const double correction2 = 1.0 - std::pow(hyper_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = hyper_.beta1 * m_[i] + (1.0 - hyper_.beta1) * grads[i];
        v_[i] = hyper_.beta2 * v_[i] + (1.0 - hyper_.beta2) * grads[i] * grads[i];
        const double m_hat = m_[i] / correction1;
        const double v_hat = v_[i] / correction2;
        params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + hyper_.epsilon);
    }
}

std::vector<double> TrainResult::epoch_means() const {
    std::vector<double> sums;
    std::vector<std::size_t> counts;
    for (const auto& rec : trace) {
        if (rec.epoch >= sums.size()) {
            sums.resize(rec.epoch + 1, 0.0);
            counts.resize(rec.epoch + 1, 0);
        }
        sums[rec.epoch] += rec.loss.total;
        ++counts[rec.epoch];
    }
    for (std::size_t e = 0; e < sums.size(); ++e) {
        sums[e] /= static_cast<double>(std::max<std::size_t>(counts[e], 1));
    }
    return sums;
}

TrainResult train(const EmbeddingMatrix& matrix, const NeighborTable& table,
                  std::size_t num_classes, const RunConfig& cfg) {
    cfg.validate();
    if (num_classes < 2) {
        fail(ErrorCode::InvalidArgument, "training needs at least 2 classes");
    }
    if (table.n_rows != matrix.n_rows()) {
        fail(ErrorCode::LengthMismatch, "neighbor table rows != matrix rows");
    }
    if (cfg.k_neighbors > table.k) {
        fail(ErrorCode::KTooLarge, "k_neighbors=" + std::to_string(cfg.k_neighbors) +
                                       " exceeds mined k=" + std::to_string(table.k));
    }

    const std::size_t dim = matrix.dim();
    const std::size_t k = cfg.k_neighbors;
    std::mt19937_64 rng(cfg.seed);
    TrainResult result{LinearClassifier::initialize(dim, num_classes, rng()), {}};
    AdamOptimizer optimizer(result.model.parameter_count());

    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    pairs.reserve(matrix.n_rows() * k);
    for (std::size_t r = 0; r < matrix.n_rows(); ++r) {
        auto nbrs = table.neighbors_of(r);
        for (std::size_t j = 0; j < k; ++j) {
            pairs.emplace_back(static_cast<std::uint32_t>(r), nbrs[j]);
        }
    }

    // Train on centered rows scaled to unit mean column variance. Raw
    // embeddings at large scale saturate the softmax at initialization and the
    // loss gradients vanish. One scale for every column keeps the geometry the
    // neighbors were mined in.
    const auto n = static_cast<double>(matrix.n_rows());
    std::vector<double> mean(dim, 0.0);
    for (std::size_t r = 0; r < matrix.n_rows(); ++r) {
        auto x = matrix.row(r);
        for (std::size_t j = 0; j < dim; ++j) {
            mean[j] += x[j] / n;
        }
    }
    double variance = 0.0;
    for (std::size_t r = 0; r < matrix.n_rows(); ++r) {
        auto x = matrix.row(r);
        for (std::size_t j = 0; j < dim; ++j) {
            const double d = x[j] - mean[j];
            variance += d * d;
        }
    }
    double scale = std::sqrt(variance / (n * static_cast<double>(dim)));
    if (!(scale > 0.0)) {
        scale = 1.0;
    }

    const double keep_scale = 1.0 / (1.0 - cfg.dropout);
    std::bernoulli_distribution drop(cfg.dropout);
    auto load_row = [&](std::uint32_t r, float* dst) {
        auto src = matrix.row(r);
        for (std::size_t j = 0; j < dim; ++j) {
            if (cfg.dropout > 0.0 && drop(rng)) {
                dst[j] = 0.0f;
            } else {
                dst[j] = static_cast<float>((src[j] - mean[j]) / scale * keep_scale);
            }
        }
    };

    std::vector<float> anchors;
    std::vector<float> neighbors;
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(pairs.begin(), pairs.end(), rng);
        for (std::size_t start = 0; start < pairs.size(); start += cfg.batch_size) {
            const std::size_t b = std::min(cfg.batch_size, pairs.size() - start);
            anchors.resize(b * dim);
            neighbors.resize(b * dim);
            for (std::size_t i = 0; i < b; ++i) {
                load_row(pairs[start + i].first, anchors.data() + i * dim);
                load_row(pairs[start + i].second, neighbors.data() + i * dim);
            }
            const auto grad =
                scan_loss_parameter_gradient(result.model, anchors, neighbors, cfg.entropy_weight);
            optimizer.step(result.model.parameters(), grad.grads, cfg.learning_rate);
            result.trace.push_back({epoch, step++, grad.loss});
        }
    }

    // Fold the centering and scale into the parameters so the model applies
    // to raw rows.
    auto& model = result.model;
    for (std::size_t j = 0; j < dim; ++j) {
        for (std::size_t c = 0; c < num_classes; ++c) {
            model.weight(j, c) /= scale;
            model.bias(c) -= mean[j] * model.weight(j, c);
        }
    }
    return result;
}

std::vector<std::int32_t> predict(const LinearClassifier& model, const EmbeddingMatrix& matrix) {
    const DenseMatrix probs = forward(model, matrix);
    std::vector<std::int32_t> out(probs.rows);
    for (std::size_t r = 0; r < probs.rows; ++r) {
        auto p = probs.row(r);
        // max_element returns the first maximum, i.e. the lowest class index.
        out[r] = static_cast<std::int32_t>(std::max_element(p.begin(), p.end()) - p.begin());
    }
    return out;
}

void save_model(const LinearClassifier& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    }
    out << std::setprecision(17);
    const auto params = model.parameters();
    const std::size_t n_weights = model.dim() * model.num_classes();
    out << "{\"dim\": " << model.dim() << ", \"num_classes\": " << model.num_classes()
        << ", \"weights\": [";
    for (std::size_t i = 0; i < n_weights; ++i) {
        out << (i ? ", " : "") << params[i];
    }
    out << "], \"bias\": [";
    for (std::size_t c = 0; c < model.num_classes(); ++c) {
        out << (c ? ", " : "") << params[n_weights + c];
    }
    out << "]}\n";
    if (!out) {
        fail(ErrorCode::IoFailure, "write failed for " + path.string());
    }
}

LinearClassifier load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::IoFailure, "cannot open " + path.string());
    }
    try {
        const auto doc = nlohmann::json::parse(in);
        const auto dim = doc.at("dim").get<std::size_t>();
        const auto classes = doc.at("num_classes").get<std::size_t>();
        const auto weights = doc.at("weights").get<std::vector<double>>();
        const auto bias = doc.at("bias").get<std::vector<double>>();
        if (weights.size() != dim * classes || bias.size() != classes) {
            fail(ErrorCode::ParseError, path.string() + ": parameter arrays do not match dim/num_classes");
        }
        LinearClassifier model(dim, classes);
        auto params = model.parameters();
        std::copy(weights.begin(), weights.end(), params.begin());
        std::copy(bias.begin(), bias.end(), params.begin() + static_cast<std::ptrdiff_t>(weights.size()));
        for (double v : params) {
            if (!std::isfinite(v)) {
                fail(ErrorCode::NonFiniteValue, path.string() + ": non-finite parameter");
            }
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
}

void save_loss_trace(std::span<const LossRecord> trace, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    }
    out << std::setprecision(17) << "epoch,step,total,consistency,entropy\n";
    for (const auto& rec : trace) {
        out << rec.epoch << ',' << rec.step << ',' << rec.loss.total << ',' << rec.loss.consistency
            << ',' << rec.loss.entropy << '\n';
    }
    if (!out) {
        fail(ErrorCode::IoFailure, "write failed for " + path.string());
    }
}

}  // namespace docscan
