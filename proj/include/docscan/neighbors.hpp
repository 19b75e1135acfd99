#pragma once

#include "docscan/embedding.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace docscan {

/// k nearest other rows for every row of a matrix, ascending by distance.
struct NeighborTable {
    std::size_t k = 0;
    std::size_t n_rows = 0;
    std::vector<std::uint32_t> indices;  // n_rows x k, row-major
    std::vector<double> distances;       // n_rows x k, Euclidean

    std::span<const std::uint32_t> neighbors_of(std::size_t row) const {
        return {indices.data() + row * k, k};
    }
    std::span<const double> distances_of(std::size_t row) const {
        return {distances.data() + row * k, k};
    }

    /// Throws InvalidArgument if any table invariant is violated.
    void validate() const;

    friend bool operator==(const NeighborTable&, const NeighborTable&) = default;
};

/// Exact Euclidean k-NN over all rows, excluding each row itself. Distances
/// use ||a||^2 + ||b||^2 - 2 a.b in double precision, clamped at zero; equal
/// distances go to the lower row index.
NeighborTable mine_neighbors(const EmbeddingMatrix& matrix, std::size_t k);

/// Entry k'-1 is the fraction of (row, neighbor) pairs among each row's k'
/// nearest neighbors whose gold labels agree, for k' = 1..up_to_k.
std::vector<double> neighbor_label_agreement(const NeighborTable& table,
                                             const LabelVector& labels,
                                             std::size_t up_to_k);

/// JSON Lines: {"id": i, "neighbors": [...], "distances": [...]} per row.
void save_neighbor_table(const NeighborTable& table, const std::filesystem::path& path);
NeighborTable load_neighbor_table(const std::filesystem::path& path);

}  // namespace docscan
