#include "docscan/error.hpp"
#include "docscan/neighbors.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <numeric>

namespace docscan {
namespace {

void expect_same_table(const NeighborTable& got, const NeighborTable& want) {
    ASSERT_EQ(got.k, want.k);
    ASSERT_EQ(got.n_rows, want.n_rows);
    EXPECT_EQ(got.indices, want.indices);
    for (std::size_t i = 0; i < got.distances.size(); ++i) {
        EXPECT_NEAR(got.distances[i], want.distances[i], 1e-6 * (1.0 + want.distances[i]));
    }
}

TEST(MineNeighbors, CollinearPoints) {
    const EmbeddingMatrix m(3, 1, {0.0f, 1.0f, 3.0f});
    const auto table = mine_neighbors(m, 1);
    EXPECT_EQ(table.indices, (std::vector<std::uint32_t>{1, 0, 1}));
    EXPECT_EQ(table.distances, (std::vector<double>{1.0, 1.0, 2.0}));
}

TEST(MineNeighbors, DuplicatesAreEachOthersNeighbor) {
    const auto base = testing::random_matrix(10, 4, 2);
    std::vector<float> data;
    for (std::size_t i = 0; i < base.n_rows(); ++i) {
        for (int copy = 0; copy < 2; ++copy) {
            data.insert(data.end(), base.row(i).begin(), base.row(i).end());
        }
    }
    const EmbeddingMatrix m(20, 4, data);
    const auto table = mine_neighbors(m, 1);
    for (std::uint32_t r = 0; r < 20; ++r) {
        EXPECT_EQ(table.indices[r], r ^ 1u);
        EXPECT_EQ(table.distances[r], 0.0);
    }
    table.validate();
}

TEST(MineNeighbors, MatchesBruteForce) {
    const auto m = testing::random_matrix(200, 16, 42);
    expect_same_table(mine_neighbors(m, 5), testing::brute_force_neighbors(m, 5));
}

TEST(MineNeighbors, TiesGoToLowerIndex) {
    // Row 0 is equidistant from rows 1..4.
    const EmbeddingMatrix m(5, 2, {0, 0, 1, 0, 0, 1, -1, 0, 0, -1});
    const auto table = mine_neighbors(m, 3);
    EXPECT_EQ(std::vector<std::uint32_t>(table.neighbors_of(0).begin(), table.neighbors_of(0).end()),
              (std::vector<std::uint32_t>{1, 2, 3}));
}

TEST(MineNeighbors, PermutationEquivariance) {
    const auto m = testing::random_matrix(120, 6, 8);
    std::vector<std::size_t> perm(m.n_rows());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
    const auto permuted = m.select_rows(perm);
    const auto base = mine_neighbors(m, 4);
    const auto moved = mine_neighbors(permuted, 4);
    for (std::size_t i = 0; i < m.n_rows(); ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            EXPECT_EQ(perm[moved.neighbors_of(i)[j]], base.neighbors_of(perm[i])[j]);
        }
    }
}

TEST(MineNeighbors, KMustBeBelowRowCount) {
    const auto m = testing::random_matrix(4, 2, 1);
    try {
        mine_neighbors(m, 4);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::KTooLarge);
    }
    EXPECT_NO_THROW(mine_neighbors(m, 3));
}

TEST(NeighborAgreement, SingleLabelIsPerfect) {
    const auto m = testing::random_matrix(30, 3, 5);
    const auto table = mine_neighbors(m, 4);
    const auto labels = LabelVector::from_ids(std::vector<std::int32_t>(30, 0), 1);
    EXPECT_EQ(neighbor_label_agreement(table, labels, 4), (std::vector<double>(4, 1.0)));
}

TEST(NeighborAgreement, MatchesPairCounting) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto m = testing::random_matrix(60, 5, seed);
        const auto table = mine_neighbors(m, 6);
        std::mt19937_64 rng(seed);
        std::vector<std::int32_t> ids(60);
        for (auto& id : ids) {
            id = static_cast<std::int32_t>(rng() % 3);
        }
        const auto labels = LabelVector::from_ids(ids, 3);
        const auto agreement = neighbor_label_agreement(table, labels, 6);
        for (std::size_t kp = 1; kp <= 6; ++kp) {
            EXPECT_DOUBLE_EQ(agreement[kp - 1], testing::pair_count_agreement(table, ids, kp));
            EXPECT_GE(agreement[kp - 1], 0.0);
            EXPECT_LE(agreement[kp - 1], 1.0);
        }
    }
}

TEST(NeighborAgreement, Errors) {
    const auto table = mine_neighbors(testing::random_matrix(10, 2, 1), 3);
    const auto short_labels = LabelVector::from_ids(std::vector<std::int32_t>(9, 0));
    EXPECT_THROW(neighbor_label_agreement(table, short_labels, 2), Error);
    const auto labels = LabelVector::from_ids(std::vector<std::int32_t>(10, 0));
    EXPECT_THROW(neighbor_label_agreement(table, labels, 4), Error);
}

TEST(NeighborTableIo, JsonLinesRoundTrip) {
    testing::TempDir dir("nbrs");
    const auto table = mine_neighbors(testing::random_matrix(25, 3, 4), 3);
    save_neighbor_table(table, dir / "t.jsonl");
    EXPECT_EQ(load_neighbor_table(dir / "t.jsonl"), table);
}

TEST(NeighborTableIo, RejectsSelfNeighbor) {
    testing::TempDir dir("nbrs");
    std::ofstream(dir / "bad.jsonl") << R"({"id": 0, "neighbors": [0], "distances": [0.0]})" "\n"
                                     << R"({"id": 1, "neighbors": [0], "distances": [1.0]})" "\n";
    EXPECT_THROW(load_neighbor_table(dir / "bad.jsonl"), Error);
}

TEST(NeighborTableIo, EmptyFileIsRejected) {
    testing::TempDir dir("empty_table");
    std::ofstream(dir / "t.jsonl").close();
    try {
        load_neighbor_table(dir / "t.jsonl");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ParseError);
    }
}

}  // namespace
}  // namespace docscan
