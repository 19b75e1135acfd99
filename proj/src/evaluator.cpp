#include "docscan/evaluator.hpp"

#include "docscan/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>

namespace docscan {

Assignment hungarian(const DenseMatrix& cost) {
    if (cost.rows != cost.cols) {
        fail(ErrorCode::NonSquareMatrix, "cost matrix is " + std::to_string(cost.rows) + "x" +
                                             std::to_string(cost.cols));
    }
    for (double v : cost.values) {
        if (!std::isfinite(v)) {
            fail(ErrorCode::NonFiniteValue, "cost matrix has a non-finite entry");
        }
    }
    const std::size_t n = cost.rows;
    Assignment out;
    if (n == 0) {
        return out;
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    // 1-based potentials; column 0 is a virtual column used to start each
    // augmenting search.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = match[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) {
                    continue;
                }
                const double reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (reduced < minv[j]) {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    out.row_to_col.assign(n, 0);
    for (std::size_t j = 1; j <= n; ++j) {
        out.row_to_col[match[j] - 1] = j - 1;
    }
    for (std::size_t i = 0; i < n; ++i) {
        out.cost += cost(i, out.row_to_col[i]);
    }
    return out;
}

AccuracyResult clustering_accuracy(std::span<const std::int32_t> pred, const LabelVector& gold) {
    if (pred.size() != gold.size()) {
        fail(ErrorCode::LengthMismatch, "predictions have " + std::to_string(pred.size()) +
                                            " rows, gold has " + std::to_string(gold.size()));
    }
    if (pred.empty()) {
        fail(ErrorCode::InvalidArgument, "cannot score an empty prediction list");
    }
    std::int32_t classes = gold.num_classes;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] < 0 || gold.labels[i] < 0) {
            fail(ErrorCode::InvalidArgument, "negative id at row " + std::to_string(i));
        }
        classes = std::max({classes, pred[i] + 1, gold.labels[i] + 1});
    }
    const auto c = static_cast<std::size_t>(classes);
    DenseMatrix counts(c, c);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        counts(static_cast<std::size_t>(pred[i]), static_cast<std::size_t>(gold.labels[i])) += 1.0;
    }
    DenseMatrix cost = counts;
    for (double& v : cost.values) {
        v = -v;
    }
    const Assignment match = hungarian(cost);
    AccuracyResult result;
    result.mapping.resize(c);
    double correct = 0.0;
    for (std::size_t cluster = 0; cluster < c; ++cluster) {
        result.mapping[cluster] = static_cast<std::int32_t>(match.row_to_col[cluster]);
        correct += counts(cluster, match.row_to_col[cluster]);
    }
    result.accuracy = correct / static_cast<double>(pred.size());
    return result;
}

Aggregate aggregate_runs(std::span<const double> accuracies) {
    if (accuracies.size() < 2) {
        fail(ErrorCode::InsufficientRuns, "need at least 2 runs to aggregate, got " +
                                              std::to_string(accuracies.size()));
    }
    const double n = static_cast<double>(accuracies.size());
    double mean = 0.0;
    for (double a : accuracies) {
        mean += a;
    }
    mean /= n;
    double ss = 0.0;
    for (double a : accuracies) {
        ss += (a - mean) * (a - mean);
    }
    const double sd = std::sqrt(ss / (n - 1.0));
    return {mean, 1.96 * sd / std::sqrt(n)};
}

void EvalReport::finalize() {
    if (per_seed_accuracies.empty()) {
        fail(ErrorCode::InsufficientRuns, "report has no runs");
    }
    if (per_seed_accuracies.size() == 1) {
        mean = per_seed_accuracies.front();
        ci95_halfwidth.reset();
        return;
    }
    const auto agg = aggregate_runs(per_seed_accuracies);
    mean = agg.mean;
    ci95_halfwidth = agg.ci95_halfwidth;
}

std::string EvalReport::summary() const {
    char buf[64];
    if (ci95_halfwidth) {
        std::snprintf(buf, sizeof buf, "%.1f ± %.1f", 100.0 * mean, 100.0 * *ci95_halfwidth);
    } else {
        std::snprintf(buf, sizeof buf, "%.1f", 100.0 * mean);
    }
    return buf;
}

EvalReport random_baseline(const LabelVector& gold, std::uint64_t seed, std::size_t runs) {
    if (runs < 2) {
        fail(ErrorCode::InsufficientRuns, "random baseline needs at least 2 runs");
    }
    if (gold.size() == 0 || gold.num_classes < 1) {
        fail(ErrorCode::InvalidArgument, "random baseline needs non-empty gold labels");
    }
    EvalReport report;
    report.experiment = "random-baseline";
    std::vector<std::int32_t> pred(gold.size());
    for (std::size_t run = 0; run < runs; ++run) {
        const std::uint64_t run_seed = seed + run;
        std::mt19937_64 rng(run_seed);
        std::uniform_int_distribution<std::int32_t> cluster(0, gold.num_classes - 1);
        for (auto& p : pred) {
            p = cluster(rng);
        }
        const auto scored = clustering_accuracy(pred, gold);
        report.seeds.push_back(run_seed);
        report.per_seed_accuracies.push_back(scored.accuracy);
        report.mappings.push_back(scored.mapping);
    }
    report.finalize();
    return report;
}

std::string report_to_json(const EvalReport& report) {
    nlohmann::ordered_json doc;
    doc["experiment"] = report.experiment;
    doc["dataset"] = report.dataset;
    doc["seeds"] = report.seeds;
    doc["per_seed_accuracies"] = report.per_seed_accuracies;
    doc["mean"] = report.mean;
    doc["ci95_halfwidth"] = report.ci95_halfwidth ? nlohmann::ordered_json(*report.ci95_halfwidth)
                                                  : nlohmann::ordered_json(nullptr);
    doc["mapping"] = report.mappings;
    return doc.dump(2) + "\n";
}

void save_report(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    }
    out << report_to_json(report);
    if (!out) {
        fail(ErrorCode::IoFailure, "write failed for " + path.string());
    }
}

}  // namespace docscan
