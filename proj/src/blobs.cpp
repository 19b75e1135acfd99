#include "docscan/blobs.hpp"

#include "docscan/error.hpp"

#include <cmath>
#include <random>

namespace docscan {

std::pair<EmbeddingMatrix, LabelVector> make_blobs(std::size_t n_per_class,
                                                   std::int32_t num_classes,
                                                   std::size_t dim,
                                                   double separation,
                                                   std::uint64_t seed) {
    if (n_per_class < 1 || num_classes < 1 || dim < 1) {
        fail(ErrorCode::InvalidArgument, "make_blobs: counts must be >= 1");
    }
    if (!(separation > 0.0) || !std::isfinite(separation)) {
        fail(ErrorCode::InvalidArgument, "make_blobs: separation must be positive");
    }
    const auto classes = static_cast<std::size_t>(num_classes);
    const bool simplex = classes <= dim;
    const double axis_offset = separation / std::sqrt(2.0);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<float> data(n_per_class * classes * dim);
    std::vector<std::int32_t> labels(n_per_class * classes);
    std::vector<double> centre(dim);
    std::size_t r = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        std::fill(centre.begin(), centre.end(), 0.0);
        if (simplex) {
            centre[c] = axis_offset;
        } else {
            centre[0] = separation * static_cast<double>(c);
        }
        for (std::size_t i = 0; i < n_per_class; ++i, ++r) {
            labels[r] = static_cast<std::int32_t>(c);
            for (std::size_t j = 0; j < dim; ++j) {
                data[r * dim + j] = static_cast<float>(centre[j] + noise(rng));
            }
        }
    }
    return {EmbeddingMatrix(r, dim, std::move(data)),
            LabelVector::from_ids(std::move(labels), num_classes)};
}

}  // namespace docscan
