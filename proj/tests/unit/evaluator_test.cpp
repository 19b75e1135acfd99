#include "docscan/error.hpp"
#include "docscan/evaluator.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <cmath>
#include <numeric>

namespace docscan {
namespace {

DenseMatrix square(std::size_t n, std::initializer_list<double> values) {
    DenseMatrix m(n, n);
    std::copy(values.begin(), values.end(), m.values.begin());
    return m;
}

TEST(Hungarian, IdentityFavoringCost) {
    const auto r = hungarian(square(3, {0, 1, 1, 1, 0, 1, 1, 1, 0}));
    EXPECT_EQ(r.row_to_col, (std::vector<std::size_t>{0, 1, 2}));
    EXPECT_EQ(r.cost, 0.0);
}

TEST(Hungarian, TwoByTwoAntiDiagonal) {
    const auto r = hungarian(square(2, {2, 1, 1, 2}));
    EXPECT_EQ(r.row_to_col, (std::vector<std::size_t>{1, 0}));
    EXPECT_EQ(r.cost, 2.0);
}

TEST(Hungarian, MatchesExhaustiveSearch) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int trial = 0; trial < 1000; ++trial) {
        DenseMatrix cost(6, 6);
        for (auto& v : cost.values) {
            v = trial % 3 == 0 ? std::round(u(rng)) : u(rng);  // integer costs exercise ties
        }
        const auto r = hungarian(cost);
        std::vector<std::size_t> cols = r.row_to_col;
        std::sort(cols.begin(), cols.end());
        ASSERT_EQ(cols, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
        ASSERT_NEAR(r.cost, testing::brute_force_assignment_cost(cost), 1e-9) << "trial " << trial;
    }
}

TEST(Hungarian, Errors) {
    try {
        hungarian(DenseMatrix(2, 3));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonSquareMatrix);
    }
    auto m = square(2, {0, 1, 1, 0});
    m(0, 1) = std::nan("");
    EXPECT_THROW(hungarian(m), Error);
    EXPECT_TRUE(hungarian(DenseMatrix(0, 0)).row_to_col.empty());
}

TEST(ClusteringAccuracy, IdentityAndRelabeling) {
    const auto gold = LabelVector::from_ids({0, 1, 2, 2, 1, 0, 3}, 4);
    EXPECT_EQ(clustering_accuracy(gold.labels, gold).accuracy, 1.0);
    const std::vector<std::int32_t> perm = {2, 0, 3, 1};
    std::vector<std::int32_t> pred;
    for (auto g : gold.labels) {
        pred.push_back(perm[g]);
    }
    const auto r = clustering_accuracy(pred, gold);
    EXPECT_EQ(r.accuracy, 1.0);
    for (std::int32_t g = 0; g < 4; ++g) {
        EXPECT_EQ(r.mapping[perm[g]], g);
    }
}

TEST(ClusteringAccuracy, InvariantUnderBijectiveRelabeling) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::int32_t> gold_ids(80), pred(80);
        for (std::size_t i = 0; i < 80; ++i) {
            gold_ids[i] = static_cast<std::int32_t>(rng() % 5);
            pred[i] = static_cast<std::int32_t>(rng() % 5);
        }
        const auto gold = LabelVector::from_ids(gold_ids, 5);
        const double base = clustering_accuracy(pred, gold).accuracy;
        EXPECT_GE(base, 0.0);
        EXPECT_LE(base, 1.0);

        std::vector<std::int32_t> perm(5);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        auto pred2 = pred;
        auto gold2 = gold_ids;
        for (auto& p : pred2) p = perm[p];
        EXPECT_DOUBLE_EQ(clustering_accuracy(pred2, gold).accuracy, base);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (auto& g : gold2) g = perm[g];
        EXPECT_DOUBLE_EQ(clustering_accuracy(pred, LabelVector::from_ids(gold2, 5)).accuracy, base);
    }
}

TEST(ClusteringAccuracy, PerfectOnlyForRelabelings) {
    const auto gold = LabelVector::from_ids({0, 0, 1, 1}, 2);
    EXPECT_EQ(clustering_accuracy(std::vector<std::int32_t>{1, 1, 0, 0}, gold).accuracy, 1.0);
    EXPECT_EQ(clustering_accuracy(std::vector<std::int32_t>{0, 1, 0, 1}, gold).accuracy, 0.5);
    EXPECT_EQ(clustering_accuracy(std::vector<std::int32_t>{0, 0, 0, 0}, gold).accuracy, 0.5);
}

TEST(ClusteringAccuracy, LengthMismatch) {
    const auto gold = LabelVector::from_ids({0, 1}, 2);
    try {
        clustering_accuracy(std::vector<std::int32_t>{0}, gold);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
    }
}

TEST(AggregateRuns, Examples) {
    const std::vector<double> ones = {1.0, 1.0, 1.0};
    const auto a = aggregate_runs(ones);
    EXPECT_EQ(a.mean, 1.0);
    EXPECT_EQ(a.ci95_halfwidth, 0.0);

    const std::vector<double> two = {0.8, 0.9};
    const auto b = aggregate_runs(two);
    EXPECT_NEAR(b.mean, 0.85, 1e-12);
    // s = 0.0707107, 1.96 * s / sqrt(2) = 0.098
    EXPECT_NEAR(b.ci95_halfwidth, 0.098, 1e-12);
}

TEST(AggregateRuns, ShiftMovesMeanNotWidth) {
    const std::vector<double> v = {0.61, 0.72, 0.58, 0.69, 0.75};
    std::vector<double> shifted = v;
    for (auto& x : shifted) x += 0.17;
    const auto a = aggregate_runs(v);
    const auto b = aggregate_runs(shifted);
    EXPECT_NEAR(b.mean - a.mean, 0.17, 1e-12);
    EXPECT_NEAR(b.ci95_halfwidth, a.ci95_halfwidth, 1e-12);
}

TEST(AggregateRuns, NeedsTwoValues) {
    const std::vector<double> one = {0.5};
    try {
        aggregate_runs(one);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InsufficientRuns);
    }
}

TEST(RandomBaseline, SingleClassIsPerfect) {
    const auto gold = LabelVector::from_ids(std::vector<std::int32_t>(50, 0), 1);
    for (std::uint64_t seed : {0u, 7u, 1234u}) {
        const auto report = random_baseline(gold, seed, 3);
        EXPECT_EQ(report.mean, 1.0);
    }
}

TEST(RandomBaseline, BalancedTwoClassNearHalf) {
    std::vector<std::int32_t> ids(10000);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        ids[i] = static_cast<std::int32_t>(i % 2);
    }
    const auto report = random_baseline(LabelVector::from_ids(ids, 2), 0, 10);
    EXPECT_NEAR(report.mean, 0.50, 0.02);
    EXPECT_GE(report.mean, 0.5);  // Hungarian can only lift chance agreement
    ASSERT_EQ(report.per_seed_accuracies.size(), 10u);
    EXPECT_EQ(report.seeds.front(), 0u);
    EXPECT_EQ(report.seeds.back(), 9u);
}

TEST(RandomBaseline, NeedsTwoRuns) {
    EXPECT_THROW(random_baseline(LabelVector::from_ids({0, 1}), 0, 1), Error);
}

TEST(EvalReport, JsonFieldsAndAbsentHalfwidth) {
    EvalReport report;
    report.experiment = "docscan";
    report.dataset = "blobs";
    report.seeds = {4};
    report.per_seed_accuracies = {0.75};
    report.mappings = {{1, 0}};
    report.finalize();
    EXPECT_FALSE(report.ci95_halfwidth.has_value());
    const auto doc = nlohmann::json::parse(report_to_json(report));
    EXPECT_TRUE(doc["ci95_halfwidth"].is_null());
    EXPECT_EQ(doc["mean"].get<double>(), 0.75);
    EXPECT_EQ(doc["mapping"][0], (std::vector<int>{1, 0}));
    EXPECT_EQ(report.summary(), "75.0");

    report.per_seed_accuracies = {0.8, 0.9};
    report.finalize();
    EXPECT_EQ(report.summary(), "85.0 ± 9.8");
}

}  // namespace
}  // namespace docscan
