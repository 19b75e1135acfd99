#pragma once

#include "docscan/embedding.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace docscan {

struct KmeansOptions {
    std::size_t max_iters = 300;
    double tol = 1e-6;
};

struct KmeansResult {
    std::size_t k = 0;
    std::size_t dim = 0;
    std::vector<double> centroids;  // k x dim, row-major
    std::vector<std::int32_t> assignments;
    double inertia = 0.0;
    std::size_t iterations_run = 0;
    /// Inertia after the initial assignment and after every Lloyd iteration.
    std::vector<double> inertia_history;
};

/// k-means++ seeding followed by Lloyd iterations, stopping once the largest
/// squared centroid shift drops below tol or after max_iters. A cluster left
/// empty is reseeded with the point farthest from its assigned centroid.
/// Each row ends up assigned to its nearest centroid (ties -> lower index).
KmeansResult kmeans(const EmbeddingMatrix& matrix, std::size_t k, std::uint64_t seed,
                    const KmeansOptions& options = {});

/// Nearest-centroid assignment (ties -> lower index); returns the inertia.
double assign_to_centroids(const EmbeddingMatrix& matrix, const std::vector<double>& centroids,
                           std::size_t k, std::vector<std::int32_t>& assignments);

}  // namespace docscan
