#pragma once

#include "docscan/embedding.hpp"
#include "docscan/evaluator.hpp"
#include "docscan/neighbors.hpp"
#include "docscan/scan_model.hpp"
#include "docscan/tfidf.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace docscan {

enum class Featurizer { Precomputed, Tfidf };

/// Files for one data split. Precomputed features use `embeddings` (+ optional
/// `labels`); the tfidf featurizer reads `corpus` (JSON Lines).
struct SplitPaths {
    std::filesystem::path embeddings;
    std::filesystem::path labels;
    std::filesystem::path corpus;

    bool present() const { return !embeddings.empty() || !corpus.empty(); }
};

enum class EvalSplit { Train, Test };

struct PipelineSpec {
    std::string dataset = "dataset";
    Featurizer featurizer = Featurizer::Precomputed;
    SplitPaths train;
    SplitPaths test;
    TfidfConfig tfidf;
    RunConfig run;
    std::size_t num_runs = 10;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = "out";
    /// Defaults to Test when a test split is configured, otherwise Train.
    std::optional<EvalSplit> eval_split;
    /// 0 = infer from the gold labels.
    std::int32_t num_classes = 0;

    /// Parses the JSON spec file; relative paths resolve against its directory.
    static PipelineSpec load(const std::filesystem::path& path);
    static PipelineSpec from_json_text(const std::string& text, const std::filesystem::path& base_dir);

    EvalSplit effective_eval_split() const;
    void validate() const;
};

struct SplitData {
    EmbeddingMatrix matrix;
    std::optional<LabelVector> labels;
};

/// Loads (or featurizes) both configured splits. With the tfidf featurizer the
/// vocabulary is fitted on the train corpus and applied to the test corpus.
struct Dataset {
    SplitData train;
    std::optional<SplitData> test;

    static Dataset load(const PipelineSpec& spec);
    const SplitData& eval(const PipelineSpec& spec) const;
    std::int32_t num_classes(const PipelineSpec& spec) const;
};

struct MineResult {
    NeighborTable table;
    /// Empty when the train split has no labels.
    std::vector<double> agreement;
};

/// Mines run.k_neighbors neighbors on the train split; writes neighbors.jsonl
/// and, with labels, agreement.csv.
MineResult cmd_mine(const PipelineSpec& spec);

/// num_runs seeded train/predict/score cycles (seed + run index), trained on
/// the train split and scored on the evaluation split. Writes
/// docscan_report.json, docscan_summary.csv, and per-run model and loss files.
EvalReport cmd_docscan(const PipelineSpec& spec);

/// k-means on the evaluation split, one seeded run per repetition. Writes
/// kmeans_report.json, kmeans_summary.csv and kmeans_assignments_run<i>.txt.
EvalReport cmd_kmeans(const PipelineSpec& spec);

/// Uniform random clusters on the evaluation split.
EvalReport cmd_random_baseline(const PipelineSpec& spec);

struct AblationRow {
    std::string name;
    /// "docscan" or "kmeans".
    std::string method = "docscan";
    RunConfig run;
};

/// Grid file: {"rows": [{"name": ..., "method"?: ..., <one RunConfig override>?}]}.
/// Each row may change at most one hyperparameter relative to the spec's run
/// configuration.
std::vector<AblationRow> load_ablation_grid(const std::filesystem::path& path, const RunConfig& defaults);

/// Runs every grid row on the train split and writes ablation_reports.json
/// plus ablation_summary.csv in the grid's row order.
std::vector<EvalReport> cmd_ablation(const PipelineSpec& spec, const std::filesystem::path& grid_path);

/// Featurizes a JSON Lines corpus into <out>/<name>.dse and, when labeled,
/// <out>/<name>.labels. Returns the number of all-zero rows.
std::size_t cmd_tfidf(const std::filesystem::path& corpus, const TfidfConfig& cfg,
                      const std::filesystem::path& out_dir, const std::string& name);

struct BlobsArgs {
    std::size_t n_per_class = 500;
    std::int32_t num_classes = 4;
    std::size_t dim = 16;
    double separation = 6.0;
    std::uint64_t seed = 0;
};

/// Writes <out>/<name>.dse and <out>/<name>.labels.
void cmd_blobs(const BlobsArgs& args, const std::filesystem::path& out_dir, const std::string& name);

/// Neighbor-label agreement for k' = 1..k; writes <out>/agreement.csv.
std::vector<double> cmd_agreement(const std::filesystem::path& embeddings,
                                  const std::filesystem::path& labels, std::size_t k,
                                  const std::filesystem::path& out_dir);

/// Summary table with columns experiment,dataset,mean,ci95 (percentages).
void save_summary_csv(const std::vector<EvalReport>& reports, const std::filesystem::path& path);

}  // namespace docscan
