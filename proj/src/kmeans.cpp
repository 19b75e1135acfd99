#include "docscan/kmeans.hpp"

#include "docscan/error.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace docscan {

namespace {

double squared_distance(std::span<const float> x, const double* centroid) {
    double acc = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = static_cast<double>(x[j]) - centroid[j];
        acc += d * d;
    }
    return acc;
}

std::vector<double> plus_plus_seeds(const EmbeddingMatrix& matrix, std::size_t k, std::mt19937_64& rng) {
    const std::size_t n = matrix.n_rows();
    const std::size_t dim = matrix.dim();
    std::vector<double> centroids(k * dim);
    auto place = [&](std::size_t c, std::size_t row) {
        auto src = matrix.row(row);
        std::copy(src.begin(), src.end(), centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
    };

    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    place(0, first(rng));
    std::vector<double> closest(n);
    for (std::size_t i = 0; i < n; ++i) {
        closest[i] = squared_distance(matrix.row(i), centroids.data());
    }
    std::vector<bool> chosen(n, false);
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double d : closest) {
            total += d;
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng);
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                target -= closest[i];
                if (target < 0.0 && closest[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
            while (closest[pick] == 0.0 && pick > 0) {
                --pick;
            }
        } else {
            // Every point coincides with a chosen centre; fall back to uniform.
            std::uniform_int_distribution<std::size_t> any(0, n - 1);
            pick = any(rng);
        }
        place(c, pick);
        const double* centre = centroids.data() + c * dim;
        for (std::size_t i = 0; i < n; ++i) {
            closest[i] = std::min(closest[i], squared_distance(matrix.row(i), centre));
        }
    }
    return centroids;
}

}  // namespace

double assign_to_centroids(const EmbeddingMatrix& matrix, const std::vector<double>& centroids,
                           std::size_t k, std::vector<std::int32_t>& assignments) {
    const std::size_t dim = matrix.dim();
    assignments.resize(matrix.n_rows());
    double inertia = 0.0;
    for (std::size_t i = 0; i < matrix.n_rows(); ++i) {
        const auto x = matrix.row(i);
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_c = 0;
        for (std::size_t c = 0; c < k; ++c) {
            const double d = squared_distance(x, centroids.data() + c * dim);
            if (d < best) {
                best = d;
                best_c = c;
            }
        }
        assignments[i] = static_cast<std::int32_t>(best_c);
        inertia += best;
    }
    return inertia;
}

KmeansResult kmeans(const EmbeddingMatrix& matrix, std::size_t k, std::uint64_t seed,
                    const KmeansOptions& options) {
    const std::size_t n = matrix.n_rows();
    const std::size_t dim = matrix.dim();
    if (k < 1) {
        fail(ErrorCode::InvalidArgument, "k must be >= 1");
    }
    if (k > n) {
        fail(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " exceeds n_rows=" + std::to_string(n));
    }

    std::mt19937_64 rng(seed);
    KmeansResult result;
    result.k = k;
    result.dim = dim;
    result.centroids = plus_plus_seeds(matrix, k, rng);
    result.inertia = assign_to_centroids(matrix, result.centroids, k, result.assignments);
    result.inertia_history.push_back(result.inertia);

    std::vector<double> sums(k * dim);
    std::vector<std::size_t> counts(k);
    for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(result.assignments[i]);
            const auto x = matrix.row(i);
            ++counts[c];
            for (std::size_t j = 0; j < dim; ++j) {
                sums[c * dim + j] += x[j];
            }
        }

        // Empty clusters take the point farthest from its current centroid;
        // that point leaves its old cluster, which can only lower inertia.
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) {
                continue;
            }
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const auto owner = static_cast<std::size_t>(result.assignments[i]);
                if (counts[owner] < 2) {
                    continue;
                }
                const double d = squared_distance(matrix.row(i), result.centroids.data() + owner * dim);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            const auto owner = static_cast<std::size_t>(result.assignments[far]);
            const auto x = matrix.row(far);
            for (std::size_t j = 0; j < dim; ++j) {
                sums[owner * dim + j] -= x[j];
                sums[c * dim + j] = x[j];
            }
            --counts[owner];
            counts[c] = 1;
            result.assignments[far] = static_cast<std::int32_t>(c);
        }

        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            double moved = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                const double updated = sums[c * dim + j] / static_cast<double>(counts[c]);
                const double d = updated - result.centroids[c * dim + j];
                moved += d * d;
                result.centroids[c * dim + j] = updated;
            }
            shift = std::max(shift, moved);
        }
        result.inertia = assign_to_centroids(matrix, result.centroids, k, result.assignments);
        result.inertia_history.push_back(result.inertia);
        result.iterations_run = iter + 1;
        if (shift < options.tol) {
            break;
        }
    }
    return result;
}

}  // namespace docscan
