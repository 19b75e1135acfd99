// Command-line driver for the neighbor-consistency clustering pipeline.

#include "docscan/error.hpp"
#include "docscan/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace docscan;
namespace fs = std::filesystem;

struct CommonFlags {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> runs;
    std::optional<std::string> out;
};

struct SpecFlags {
    std::string spec_path;
    std::optional<std::size_t> k;
    std::optional<double> entropy_weight;
    std::optional<std::size_t> batch_size;
    std::optional<double> dropout;
    std::optional<std::size_t> epochs;
    std::optional<double> learning_rate;
    std::optional<std::string> eval_split;
    std::optional<std::string> dataset;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--seed", flags.seed, "Base seed; run i uses seed + i");
    cmd->add_option("--runs", flags.runs, "Number of seeded runs")->check(CLI::PositiveNumber);
    cmd->add_option("--out", flags.out, "Output directory");
}

void add_spec_flags(CLI::App* cmd, SpecFlags& flags) {
    cmd->add_option("--spec", flags.spec_path, "Pipeline spec (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--k", flags.k, "Neighbors per row");
    cmd->add_option("--lambda", flags.entropy_weight, "Entropy weight");
    cmd->add_option("--batch-size", flags.batch_size, "Pairs per batch");
    cmd->add_option("--dropout", flags.dropout, "Input dropout rate");
    cmd->add_option("--epochs", flags.epochs, "Training epochs");
    cmd->add_option("--lr", flags.learning_rate, "Adam learning rate");
    cmd->add_option("--eval-split", flags.eval_split, "Split to score: train or test")
        ->check(CLI::IsMember({"train", "test"}));
    cmd->add_option("--dataset", flags.dataset, "Dataset name used in reports");
}

PipelineSpec build_spec(const SpecFlags& flags, const CommonFlags& common) {
    auto spec = PipelineSpec::load(flags.spec_path);
    if (flags.k) spec.run.k_neighbors = *flags.k;
    if (flags.entropy_weight) spec.run.entropy_weight = *flags.entropy_weight;
    if (flags.batch_size) spec.run.batch_size = *flags.batch_size;
    if (flags.dropout) spec.run.dropout = *flags.dropout;
    if (flags.epochs) spec.run.epochs = *flags.epochs;
    if (flags.learning_rate) spec.run.learning_rate = *flags.learning_rate;
    if (flags.eval_split) {
        spec.eval_split = *flags.eval_split == "train" ? EvalSplit::Train : EvalSplit::Test;
    }
    if (flags.dataset) spec.dataset = *flags.dataset;
    if (common.seed) spec.seed = *common.seed;
    if (common.runs) spec.num_runs = *common.runs;
    if (common.out) spec.out_dir = *common.out;
    return spec;
}

void print_agreement(const std::vector<double>& agreement) {
    for (std::size_t i = 0; i < agreement.size(); ++i) {
        std::printf("agreement k=%zu %.4f\n", i + 1, agreement[i]);
    }
}

void print_report(const EvalReport& report) {
    std::printf("%s,%s,%s\n", report.experiment.c_str(), report.dataset.c_str(), report.summary().c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Neighbor-consistency document clustering"};
    app.require_subcommand(1);

    CommonFlags common;
    SpecFlags spec_flags;

    auto* mine = app.add_subcommand("mine", "Mine nearest neighbors on the train split");
    auto* docscan_cmd = app.add_subcommand("docscan", "Train and score the SCAN classifier over seeded runs");
    auto* kmeans_cmd = app.add_subcommand("kmeans", "k-means baseline over seeded runs");
    auto* random_cmd = app.add_subcommand("random-baseline", "Uniform random cluster baseline");
    auto* ablation = app.add_subcommand("ablation", "Hyperparameter grid on the train split");
    for (auto* cmd : {mine, docscan_cmd, kmeans_cmd, random_cmd, ablation}) {
        add_common(cmd, common);
        add_spec_flags(cmd, spec_flags);
    }
    std::string grid_path;
    ablation->add_option("--grid", grid_path, "Grid file (JSON)")->required()->check(CLI::ExistingFile);

    auto* tfidf = app.add_subcommand("tfidf", "Featurize a JSON Lines corpus with TF-IDF");
    add_common(tfidf, common);
    std::string corpus_path;
    std::string name = "features";
    TfidfConfig tfidf_cfg;
    tfidf->add_option("--corpus", corpus_path, "JSON Lines corpus")->required()->check(CLI::ExistingFile);
    tfidf->add_option("--name", name, "Output file stem");
    tfidf->add_option("--ngram-min", tfidf_cfg.ngram_min);
    tfidf->add_option("--ngram-max", tfidf_cfg.ngram_max);
    tfidf->add_option("--max-features", tfidf_cfg.max_features);
    tfidf->add_option("--min-df", tfidf_cfg.min_df);
    tfidf->add_flag("!--no-lowercase", tfidf_cfg.lowercase, "Keep original case");

    auto* blobs = app.add_subcommand("blobs", "Generate Gaussian blob embeddings");
    add_common(blobs, common);
    BlobsArgs blob_args;
    std::string blob_name = "blobs";
    blobs->add_option("--n-per-class", blob_args.n_per_class);
    blobs->add_option("--classes", blob_args.num_classes);
    blobs->add_option("--dim", blob_args.dim);
    blobs->add_option("--separation", blob_args.separation);
    blobs->add_option("--name", blob_name, "Output file stem");

    auto* agreement = app.add_subcommand("agreement", "Neighbor-label agreement diagnostic");
    add_common(agreement, common);
    std::string emb_path;
    std::string labels_path;
    std::size_t agreement_k = 5;
    agreement->add_option("--embeddings", emb_path)->required()->check(CLI::ExistingFile);
    agreement->add_option("--labels", labels_path)->required()->check(CLI::ExistingFile);
    agreement->add_option("--k", agreement_k, "Largest k' to report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "error: UsageError: %s\n", e.what());
        return 64;
    }

    try {
        const fs::path out_dir = common.out.value_or("out");
        if (mine->parsed()) {
            const auto spec = build_spec(spec_flags, common);
            const auto result = cmd_mine(spec);
            std::printf("mined k=%zu neighbors for %zu rows -> %s\n", result.table.k, result.table.n_rows,
                        (spec.out_dir / "neighbors.jsonl").string().c_str());
            print_agreement(result.agreement);
        } else if (docscan_cmd->parsed()) {
            print_report(cmd_docscan(build_spec(spec_flags, common)));
        } else if (kmeans_cmd->parsed()) {
            print_report(cmd_kmeans(build_spec(spec_flags, common)));
        } else if (random_cmd->parsed()) {
            print_report(cmd_random_baseline(build_spec(spec_flags, common)));
        } else if (ablation->parsed()) {
            for (const auto& report : cmd_ablation(build_spec(spec_flags, common), grid_path)) {
                print_report(report);
            }
        } else if (tfidf->parsed()) {
            const auto zero_rows = cmd_tfidf(corpus_path, tfidf_cfg, out_dir, name);
            if (zero_rows > 0) {
                std::fprintf(stderr, "warning: %zu documents have no in-vocabulary term\n", zero_rows);
            }
            std::printf("wrote %s\n", (out_dir / (name + ".dse")).string().c_str());
        } else if (blobs->parsed()) {
            blob_args.seed = common.seed.value_or(0);
            cmd_blobs(blob_args, out_dir, blob_name);
            std::printf("wrote %s\n", (out_dir / (blob_name + ".dse")).string().c_str());
        } else if (agreement->parsed()) {
            print_agreement(cmd_agreement(emb_path, labels_path, agreement_k, out_dir));
        }
    } catch (const docscan::Error& e) {
        std::fprintf(stderr, "error: %s: %s\n", std::string(to_string(e.code())).c_str(), e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: Internal: %s\n", e.what());
        return 3;
    }
    return 0;
}
