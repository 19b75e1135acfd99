#pragma once

#include "docscan/dense.hpp"
#include "docscan/embedding.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace docscan {

struct Assignment {
    std::vector<std::size_t> row_to_col;
    double cost = 0.0;
};

/// Minimum-cost perfect matching on a square cost matrix (Kuhn-Munkres with
/// potentials, O(C^3)).
Assignment hungarian(const DenseMatrix& cost);

struct AccuracyResult {
    double accuracy = 0.0;
    /// mapping[cluster] = gold label; a bijection on [0, C).
    std::vector<std::int32_t> mapping;
};

/// Matches predicted cluster ids to gold labels maximizing agreement, then
/// scores the relabeled predictions. C is the larger of the gold class count
/// and the largest predicted id + 1.
AccuracyResult clustering_accuracy(std::span<const std::int32_t> pred, const LabelVector& gold);

struct Aggregate {
    double mean = 0.0;
    double ci95_halfwidth = 0.0;
};

/// Mean and 1.96 * s / sqrt(n), s the sample standard deviation. Needs >= 2 values.
Aggregate aggregate_runs(std::span<const double> accuracies);

struct EvalReport {
    std::string experiment;
    std::string dataset;
    std::vector<std::uint64_t> seeds;
    std::vector<double> per_seed_accuracies;
    double mean = 0.0;
    /// Absent when only one run was scored.
    std::optional<double> ci95_halfwidth;
    std::vector<std::vector<std::int32_t>> mappings;

    /// Fills mean and ci95_halfwidth from per_seed_accuracies.
    void finalize();
    /// "mean ± halfwidth" in percentage points, one decimal.
    std::string summary() const;
};

/// Uniform random cluster ids per run, seeded with seed + run index.
EvalReport random_baseline(const LabelVector& gold, std::uint64_t seed, std::size_t runs = 10);

std::string report_to_json(const EvalReport& report);
void save_report(const EvalReport& report, const std::filesystem::path& path);

}  // namespace docscan
