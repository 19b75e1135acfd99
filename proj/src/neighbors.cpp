#include "docscan/neighbors.hpp"

#include "docscan/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>

namespace docscan {

namespace {

constexpr std::size_t kQueryBlock = 64;
constexpr std::size_t kBaseBlock = 512;

struct Candidate {
    double dist2;
    std::uint32_t index;

    bool operator<(const Candidate& other) const {
        return dist2 != other.dist2 ? dist2 < other.dist2 : index < other.index;
    }
};

double dot(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        acc += static_cast<double>(a[j]) * static_cast<double>(b[j]);
    }
    return acc;
}

}  // namespace

void NeighborTable::validate() const {
    if (indices.size() != n_rows * k || distances.size() != n_rows * k) {
        fail(ErrorCode::InvalidArgument, "neighbor table arrays do not match n_rows x k");
    }
    for (std::size_t r = 0; r < n_rows; ++r) {
        auto idx = neighbors_of(r);
        auto dst = distances_of(r);
        std::set<std::uint32_t> seen;
        for (std::size_t j = 0; j < k; ++j) {
            if (idx[j] >= n_rows || idx[j] == r || !seen.insert(idx[j]).second) {
                fail(ErrorCode::InvalidArgument, "bad neighbor index in row " + std::to_string(r));
            }
            if (!(dst[j] >= 0.0) || (j > 0 && dst[j] < dst[j - 1])) {
                fail(ErrorCode::InvalidArgument,
                     "distances not ascending and non-negative in row " + std::to_string(r));
            }
        }
    }
}

NeighborTable mine_neighbors(const EmbeddingMatrix& matrix, std::size_t k) {
    const std::size_t n = matrix.n_rows();
    if (k < 1) {
        fail(ErrorCode::InvalidArgument, "k must be >= 1");
    }
    if (k >= n) {
        fail(ErrorCode::KTooLarge,
             "k=" + std::to_string(k) + " must be smaller than n_rows=" + std::to_string(n));
    }

    std::vector<double> sq_norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        sq_norms[i] = dot(matrix.row(i), matrix.row(i));
    }

    NeighborTable table;
    table.k = k;
    table.n_rows = n;
    table.indices.resize(n * k);
    table.distances.resize(n * k);

    // One bounded max-heap per query row in the current block; the top is the
    // worst candidate kept so far.
    std::vector<std::priority_queue<Candidate>> heaps(kQueryBlock);
    for (std::size_t q0 = 0; q0 < n; q0 += kQueryBlock) {
        const std::size_t q1 = std::min(n, q0 + kQueryBlock);
        for (std::size_t b0 = 0; b0 < n; b0 += kBaseBlock) {
            const std::size_t b1 = std::min(n, b0 + kBaseBlock);
            for (std::size_t q = q0; q < q1; ++q) {
                auto& heap = heaps[q - q0];
                const auto query = matrix.row(q);
                for (std::size_t b = b0; b < b1; ++b) {
                    if (b == q) {
                        continue;
                    }
                    const double d2 =
                        std::max(0.0, sq_norms[q] + sq_norms[b] - 2.0 * dot(query, matrix.row(b)));
                    const Candidate cand{d2, static_cast<std::uint32_t>(b)};
                    if (heap.size() < k) {
                        heap.push(cand);
                    } else if (cand < heap.top()) {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
        }
        for (std::size_t q = q0; q < q1; ++q) {
            auto& heap = heaps[q - q0];
            for (std::size_t j = k; j-- > 0;) {
                table.indices[q * k + j] = heap.top().index;
                table.distances[q * k + j] = std::sqrt(heap.top().dist2);
                heap.pop();
            }
        }
    }
    return table;
}

std::vector<double> neighbor_label_agreement(const NeighborTable& table,
                                             const LabelVector& labels,
                                             std::size_t up_to_k) {
    if (labels.size() != table.n_rows) {
        fail(ErrorCode::LengthMismatch, "labels have " + std::to_string(labels.size()) +
                                            " rows, neighbor table has " +
                                            std::to_string(table.n_rows));
    }
    if (up_to_k < 1 || up_to_k > table.k) {
        fail(ErrorCode::InvalidArgument, "up_to_k must lie in [1, " + std::to_string(table.k) + "]");
    }
    // matches[j] counts agreeing pairs at neighbor rank j; prefix sums give k'.
    std::vector<std::size_t> matches(up_to_k, 0);
    for (std::size_t r = 0; r < table.n_rows; ++r) {
        auto nbrs = table.neighbors_of(r);
        for (std::size_t j = 0; j < up_to_k; ++j) {
            if (labels.labels[nbrs[j]] == labels.labels[r]) {
                ++matches[j];
            }
        }
    }
    std::vector<double> agreement(up_to_k);
    std::size_t cumulative = 0;
    for (std::size_t j = 0; j < up_to_k; ++j) {
        cumulative += matches[j];
        agreement[j] = static_cast<double>(cumulative) /
                       (static_cast<double>(table.n_rows) * static_cast<double>(j + 1));
    }
    return agreement;
}

void save_neighbor_table(const NeighborTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    }
    for (std::size_t r = 0; r < table.n_rows; ++r) {
        auto idx = table.neighbors_of(r);
        auto dst = table.distances_of(r);
        nlohmann::json row;
        row["id"] = r;
        row["neighbors"] = std::vector<std::uint32_t>(idx.begin(), idx.end());
        row["distances"] = std::vector<double>(dst.begin(), dst.end());
        out << row.dump() << '\n';
    }
    if (!out) {
        fail(ErrorCode::IoFailure, "write failed for " + path.string());
    }
}

NeighborTable load_neighbor_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::IoFailure, "cannot open " + path.string());
    }
    NeighborTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto where = path.string() + ":" + std::to_string(line_no);
        try {
            const auto row = nlohmann::json::parse(line);
            const auto id = row.at("id").get<std::size_t>();
            const auto nbrs = row.at("neighbors").get<std::vector<std::uint32_t>>();
            const auto dist = row.at("distances").get<std::vector<double>>();
            if (id != table.n_rows) {
                fail(ErrorCode::ParseError, where + ": ids must be consecutive from 0");
            }
            if (table.n_rows == 0) {
                table.k = nbrs.size();
            }
            if (nbrs.size() != table.k || dist.size() != table.k) {
                fail(ErrorCode::ParseError, where + ": inconsistent neighbor count");
            }
            table.indices.insert(table.indices.end(), nbrs.begin(), nbrs.end());
            table.distances.insert(table.distances.end(), dist.begin(), dist.end());
            ++table.n_rows;
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::ParseError, where + ": " + e.what());
        }
    }
    if (table.n_rows == 0) {
        fail(ErrorCode::ParseError, path.string() + ": no rows");
    }
    table.validate();
    return table;
}

}  // namespace docscan
