// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances are pinned below; nothing reads them from the
// environment.

#include "docscan/blobs.hpp"
#include "docscan/embedding.hpp"
#include "docscan/evaluator.hpp"
#include "docscan/kmeans.hpp"
#include "docscan/neighbors.hpp"
#include "docscan/pipeline.hpp"
#include "docscan/scan_model.hpp"
#include "docscan/tfidf.hpp"
#include "test_support.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

namespace {

using namespace docscan;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr double kGradientTolerance = 1e-4;
constexpr double kGradientSeconds = 10.0;
constexpr double kHungarianSeconds = 30.0;
constexpr double kInertiaSlack = 1e-9;
constexpr double kSeparableSeconds = 120.0;
constexpr double kHardAgreementLow = 0.80;
constexpr double kHardAgreementHigh = 0.90;
constexpr std::size_t kSeeds = 10;
constexpr std::size_t kCollapseMaxClusters = 2;
constexpr std::size_t kCollapseMinSeeds = 7;
constexpr double kAgNewsTarget = 0.495;
constexpr double kAgNewsTolerance = 0.08;

struct Outcome {
    enum Status { Pass, Fail, NotRun } status;
    std::string detail;
};

int failures = 0;

void report(const char* name, const std::function<Outcome()>& check) {
    const auto start = Clock::now();
    Outcome outcome;
    try {
        outcome = check();
    } catch (const std::exception& e) {
        outcome = {Outcome::Fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    const char* label = outcome.status == Outcome::Pass ? "PASS" : outcome.status == Outcome::Fail ? "FAIL" : "NOT RUN";
    failures += outcome.status == Outcome::Fail;
    std::printf("%-7s %-32s %7.2fs  %s\n", label, name, secs, outcome.detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c);
    return buf;
}

double elapsed(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Outcome gradient_check() {
    const auto start = Clock::now();
    std::mt19937_64 rng(2024);
    const std::size_t b = 5, dim = 8, c = 3;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        auto model = LinearClassifier::initialize(dim, c, rng());
        for (std::size_t k = 0; k < c; ++k) {
            model.bias(k) = std::normal_distribution<double>(0.0, 0.5)(rng);
        }
        const auto anchors = testing::random_matrix(b, dim, rng());
        const auto neighbors = testing::random_matrix(b, dim, rng());
        const double weight = std::uniform_real_distribution<double>(0.0, 5.0)(rng);
        const auto analytic = scan_loss_parameter_gradient(model, anchors.data(), neighbors.data(), weight);
        const std::vector<double> params(model.parameters().begin(), model.parameters().end());
        const auto numeric = testing::central_differences(
            [&](const std::vector<double>& p) {
                return testing::reference_loss_from_parameters(p, anchors, neighbors, c, weight);
            },
            params, 1e-4);
        worst = std::max(worst, testing::max_relative_error(analytic.grads, numeric));
    }
    const double secs = elapsed(start);
    const bool ok = worst < kGradientTolerance && secs < kGradientSeconds;
    return {ok ? Outcome::Pass : Outcome::Fail, fmt("100 instances, max rel err %.2e (< 1e-4), %.2fs (< 10s)", worst, secs)};
}

Outcome hungarian_check() {
    const auto start = Clock::now();
    std::mt19937_64 rng(99);
    std::size_t mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + trial % 7;
        DenseMatrix cost(n, n);
        for (auto& v : cost.values) {
            // Every third matrix uses small integers so ties are common.
            v = trial % 3 == 0 ? static_cast<double>(rng() % 5) : std::uniform_real_distribution<double>(-50, 50)(rng);
        }
        const auto solved = hungarian(cost);
        double realized = 0.0;
        std::set<std::size_t> used;
        for (std::size_t r = 0; r < n; ++r) {
            realized += cost(r, solved.row_to_col[r]);
            used.insert(solved.row_to_col[r]);
        }
        const double best = testing::brute_force_assignment_cost(cost);
        if (used.size() != n || std::abs(realized - best) > 1e-9 || std::abs(solved.cost - best) > 1e-9) {
            ++mismatches;
        }
    }
    const double secs = elapsed(start);
    const bool ok = mismatches == 0 && secs < kHungarianSeconds;
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt("1000 matrices C<=7, %.0f mismatches, %.2fs (< 30s)", static_cast<double>(mismatches), secs)};
}

Outcome knn_check() {
    std::mt19937_64 rng(5);
    std::size_t mismatches = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 20 + rng() % 481;
        const std::size_t dim = 1 + rng() % 64;
        const std::size_t k = 1 + rng() % 10;
        auto m = testing::random_matrix(n, dim, rng());
        if (trial % 5 == 0) {
            // Duplicate some rows to exercise ties.
            std::vector<float> data(m.data().begin(), m.data().end());
            for (std::size_t r = 1; r < n; r += 3) {
                std::copy_n(data.begin() + (r - 1) * dim, dim, data.begin() + r * dim);
            }
            m = EmbeddingMatrix(n, dim, std::move(data));
        }
        const auto mined = mine_neighbors(m, k);
        const auto oracle = testing::brute_force_neighbors(m, k);
        bool same = mined.indices == oracle.indices;
        for (std::size_t i = 0; same && i < oracle.distances.size(); ++i) {
            same = std::abs(mined.distances[i] - oracle.distances[i]) <= 1e-4 * (1.0 + oracle.distances[i]);
        }
        mismatches += !same;
    }
    return {mismatches == 0 ? Outcome::Pass : Outcome::Fail,
            fmt("50 matrices n<=500 dim<=64 k<=10, %.0f mismatches", static_cast<double>(mismatches))};
}

Outcome kmeans_monotonicity_check() {
    std::mt19937_64 rng(11);
    std::size_t violations = 0;
    double worst_rise = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 30 + rng() % 300;
        const std::size_t dim = 1 + rng() % 20;
        const std::size_t k = 2 + rng() % 9;
        const auto m = testing::random_matrix(n, dim, rng());
        const auto result = kmeans(m, k, rng());
        for (std::size_t i = 1; i < result.inertia_history.size(); ++i) {
            const double rise = result.inertia_history[i] - result.inertia_history[i - 1];
            worst_rise = std::max(worst_rise, rise);
            if (rise > kInertiaSlack) {
                ++violations;
            }
        }
    }
    return {violations == 0 ? Outcome::Pass : Outcome::Fail,
            fmt("50 instances, %.0f violations, largest rise %.2e (slack 1e-9)", static_cast<double>(violations),
                worst_rise)};
}

struct SeedScores {
    std::vector<double> docscan;
    std::vector<double> kmeans;
    std::vector<std::size_t> populated;  // distinct predicted clusters per DocSCAN seed
};

SeedScores score_blobs(const EmbeddingMatrix& m, const LabelVector& gold, const RunConfig& base) {
    SeedScores scores;
    const auto table = mine_neighbors(m, base.k_neighbors);
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        RunConfig cfg = base;
        cfg.seed = seed;
        const auto trained = train(m, table, static_cast<std::size_t>(gold.num_classes), cfg);
        const auto pred = predict(trained.model, m);
        scores.docscan.push_back(clustering_accuracy(pred, gold).accuracy);
        scores.populated.push_back(std::set<std::int32_t>(pred.begin(), pred.end()).size());
        scores.kmeans.push_back(
            clustering_accuracy(kmeans(m, static_cast<std::size_t>(gold.num_classes), seed).assignments, gold)
                .accuracy);
    }
    return scores;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

Outcome separable_check() {
    const auto start = Clock::now();
    const auto [m, gold] = make_blobs(500, 4, 16, 1000.0, 0);
    const auto scores = score_blobs(m, gold, RunConfig{});
    const double secs = elapsed(start);
    const double min_d = *std::min_element(scores.docscan.begin(), scores.docscan.end());
    const double min_k = *std::min_element(scores.kmeans.begin(), scores.kmeans.end());
    const bool ok = min_d == 1.0 && min_k == 1.0 && secs < kSeparableSeconds;
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt("10 seeds, min acc docscan %.4f kmeans %.4f, %.1fs (< 120s)", min_d, min_k, secs)};
}

struct HardBlobs {
    double separation = 0.0;
    double agreement = 0.0;
    EmbeddingMatrix matrix;
    LabelVector gold;
};

// Bisects the class separation until the 5-NN agreement diagnostic lands
// inside the target band. Agreement grows monotonically with separation.
const HardBlobs& hard_blobs() {
    static const HardBlobs cached = [] {
        const double target = 0.5 * (kHardAgreementLow + kHardAgreementHigh);
        double lo = 0.0, hi = 20.0;
        HardBlobs best;
        for (int iter = 0; iter < 40; ++iter) {
            const double mid = 0.5 * (lo + hi);
            auto [m, gold] = make_blobs(500, 4, 16, mid, 0);
            const double agree = neighbor_label_agreement(mine_neighbors(m, 5), gold, 5).back();
            best = {mid, agree, std::move(m), std::move(gold)};
            if (std::abs(agree - target) < 0.01) {
                break;
            }
            (agree < target ? lo : hi) = mid;
        }
        return best;
    }();
    return cached;
}

Outcome hard_blobs_check() {
    const auto& hb = hard_blobs();
    if (hb.agreement < kHardAgreementLow || hb.agreement > kHardAgreementHigh) {
        return {Outcome::Fail, fmt("could not tune separation: agreement %.3f at %.3f", hb.agreement, hb.separation)};
    }
    const auto scores = score_blobs(hb.matrix, hb.gold, RunConfig{});
    const double d = mean_of(scores.docscan), k = mean_of(scores.kmeans);
    const std::string detail = fmt("sep %.3f agreement %.3f; ", hb.separation, hb.agreement) +
                               fmt("mean acc docscan %.4f >= kmeans %.4f", d, k);
    return {d >= k ? Outcome::Pass : Outcome::Fail, detail};
}

Outcome collapse_check() {
    const auto& hb = hard_blobs();
    RunConfig cfg;
    cfg.entropy_weight = 0.0;
    const auto scores = score_blobs(hb.matrix, hb.gold, cfg);
    std::size_t collapsed = 0;
    std::string counts;
    for (auto p : scores.populated) {
        collapsed += p <= kCollapseMaxClusters;
        counts += std::to_string(p);
    }
    const bool ok = collapsed >= kCollapseMinSeeds;
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt("lambda=0: %.0f of 10 seeds use <= 2 clusters (need >= 7); populated per seed: ",
                static_cast<double>(collapsed)) +
                counts};
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Outcome determinism_check() {
    testing::TempDir dir("acceptance_det");
    BlobsArgs args;
    args.n_per_class = 100;
    args.separation = 4.0;
    cmd_blobs(args, dir / "a_data", "blobs");
    cmd_blobs(args, dir / "b_data", "blobs");
    if (slurp(dir / "a_data" / "blobs.dse") != slurp(dir / "b_data" / "blobs.dse")) {
        return {Outcome::Fail, "blobs differ"};
    }
    {
        std::ofstream grid(dir / "grid.json");
        grid << R"({"rows": [{"name": "base"}, {"name": "k2", "k_neighbors": 2}, {"name": "km", "method": "kmeans"}]})";
    }
    std::size_t compared = 0;
    std::vector<std::string> differing;
    PipelineSpec spec;
    spec.dataset = "blobs";
    spec.train.embeddings = dir / "a_data" / "blobs.dse";
    spec.train.labels = dir / "a_data" / "blobs.labels";
    spec.num_runs = 3;
    spec.seed = 17;
    for (const char* side : {"a", "b"}) {
        spec.out_dir = dir / side;
        cmd_mine(spec);
        cmd_docscan(spec);
        cmd_kmeans(spec);
        cmd_random_baseline(spec);
        cmd_ablation(spec, dir / "grid.json");
        cmd_agreement(spec.train.embeddings, spec.train.labels, 5, dir / side / "agreement_cmd");
        std::ofstream corpus(dir / (std::string(side) + ".jsonl"));
        corpus << "{\"text\": \"alpha beta\", \"label\": 0}\n{\"text\": \"beta gamma gamma\", \"label\": 1}\n";
        corpus.close();
        cmd_tfidf(dir / (std::string(side) + ".jsonl"), TfidfConfig{}, dir / side / "tfidf", "feat");
    }
    for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
        if (!entry.is_regular_file()) {
            continue;
        }
        const auto rel = fs::relative(entry.path(), dir / "a");
        ++compared;
        if (slurp(entry.path()) != slurp(dir / "b" / rel)) {
            differing.push_back(rel.string());
        }
    }
    std::string detail = fmt("%.0f output files compared across repeated runs", static_cast<double>(compared));
    for (const auto& d : differing) {
        detail += "; differs: " + d;
    }
    return {differing.empty() && compared > 10 ? Outcome::Pass : Outcome::Fail, detail};
}

// Needs <DOCSCAN_AGNEWS_DIR>/train.jsonl and test.jsonl ({"text", "label"}).
Outcome agnews_check() {
    const char* root = std::getenv("DOCSCAN_AGNEWS_DIR");
    if (root == nullptr || !fs::exists(fs::path(root) / "train.jsonl") || !fs::exists(fs::path(root) / "test.jsonl")) {
        return {Outcome::NotRun, "set DOCSCAN_AGNEWS_DIR to a directory with train.jsonl and test.jsonl"};
    }
    const auto train_corpus = load_corpus_jsonl(fs::path(root) / "train.jsonl");
    const auto test_corpus = load_corpus_jsonl(fs::path(root) / "test.jsonl");
    TfidfConfig cfg;
    cfg.max_features = 10000;
    const auto vocab = fit_tfidf(train_corpus.texts, cfg);
    const auto features = transform_tfidf(vocab, test_corpus.texts);
    const auto gold = LabelVector::from_ids(test_corpus.labels);
    std::vector<double> accs;
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        accs.push_back(clustering_accuracy(kmeans(features.matrix, 4, seed).assignments, gold).accuracy);
    }
    const auto agg = aggregate_runs(accs);
    const bool ok = std::abs(agg.mean - kAgNewsTarget) <= kAgNewsTolerance;
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt("mean %.1f +- %.1f (target 49.5 +- 8)", 100.0 * agg.mean, 100.0 * agg.ci95_halfwidth)};
}

}  // namespace

int main() {
    report("gradient correctness", gradient_check);
    report("hungarian optimality", hungarian_check);
    report("knn exactness", knn_check);
    report("kmeans monotonicity", kmeans_monotonicity_check);
    report("separable recovery", separable_check);
    report("docscan beats kmeans (hard)", hard_blobs_check);
    report("entropy shortcut (lambda=0)", collapse_check);
    report("determinism", determinism_check);
    report("agnews tfidf+kmeans", agnews_check);
    std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
