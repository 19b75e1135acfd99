#pragma once

#include "docscan/embedding.hpp"

#include <cstddef>
#include <cstdint>
#include <utility>

namespace docscan {

/// Synthetic Gaussian clusters with unit-variance noise. When C <= dim class c
/// is centred at (separation / sqrt(2)) * e_c, so every pair of centres is
/// exactly `separation` apart. With more classes than dimensions the centres
/// sit on the first axis, `separation` apart from their neighbours.
/// Rows are emitted class by class; a pure function of its arguments.
std::pair<EmbeddingMatrix, LabelVector> make_blobs(std::size_t n_per_class,
                                                   std::int32_t num_classes,
                                                   std::size_t dim,
                                                   double separation,
                                                   std::uint64_t seed);

}  // namespace docscan
