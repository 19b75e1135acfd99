#include "docscan/pipeline.hpp"

#include "docscan/blobs.hpp"
#include "docscan/error.hpp"
#include "docscan/kmeans.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace docscan {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const json& node, const char* key) {
    if (!node.contains(key) || node[key].is_null()) {
        return {};
    }
    fs::path p = node[key].get<std::string>();
    return p.is_absolute() || base.empty() ? p : base / p;
}

SplitPaths parse_split(const json& node, const fs::path& base) {
    SplitPaths paths;
    if (node.is_null()) {
        return paths;
    }
    paths.embeddings = resolve(base, node, "embeddings");
    paths.labels = resolve(base, node, "labels");
    paths.corpus = resolve(base, node, "corpus");
    return paths;
}

void apply_run_overrides(const json& node, RunConfig& run) {
    run.k_neighbors = node.value("k_neighbors", run.k_neighbors);
    run.entropy_weight = node.value("entropy_weight", run.entropy_weight);
    run.batch_size = node.value("batch_size", run.batch_size);
    run.dropout = node.value("dropout", run.dropout);
    run.epochs = node.value("epochs", run.epochs);
    run.learning_rate = node.value("learning_rate", run.learning_rate);
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        fail(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
    }
}

std::string percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
    return buf;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    }
    return out;
}

void save_agreement_csv(const std::vector<double>& agreement, const fs::path& path) {
    auto out = open_output(path);
    out << "k,agreement\n";
    char buf[64];
    for (std::size_t i = 0; i < agreement.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.6f\n", i + 1, agreement[i]);
        out << buf;
    }
}

const LabelVector& require_labels(const SplitData& split, const char* what) {
    if (!split.labels) {
        fail(ErrorCode::InvalidArgument, std::string(what) + " needs gold labels on the evaluation split");
    }
    return *split.labels;
}

std::optional<LabelVector> load_optional_labels(const fs::path& path, std::size_t rows) {
    if (path.empty()) {
        return std::nullopt;
    }
    auto labels = load_labels(path);
    if (labels.size() != rows) {
        fail(ErrorCode::LengthMismatch, path.string() + " has " + std::to_string(labels.size()) +
                                            " labels for " + std::to_string(rows) + " rows");
    }
    return labels;
}

std::optional<LabelVector> corpus_labels(const Corpus& corpus) {
    if (corpus.labels.empty()) {
        return std::nullopt;
    }
    return LabelVector::from_ids(corpus.labels);
}

EvalReport docscan_runs(const SplitData& train_split, const NeighborTable& table, const SplitData& eval,
                        std::int32_t classes, const RunConfig& base, std::uint64_t seed,
                        std::size_t runs, const fs::path* artifacts) {
    const auto& gold = require_labels(eval, "docscan");
    EvalReport report;
    report.experiment = "docscan";
    for (std::size_t run = 0; run < runs; ++run) {
        RunConfig cfg = base;
        cfg.seed = seed + run;
        const auto trained = train(train_split.matrix, table, static_cast<std::size_t>(classes), cfg);
        const auto pred = predict(trained.model, eval.matrix);
        const auto scored = clustering_accuracy(pred, gold);
        report.seeds.push_back(cfg.seed);
        report.per_seed_accuracies.push_back(scored.accuracy);
        report.mappings.push_back(scored.mapping);
        if (artifacts != nullptr) {
            const auto tag = "_run" + std::to_string(run);
            save_model(trained.model, *artifacts / ("docscan_model" + tag + ".json"));
            save_loss_trace(trained.trace, *artifacts / ("docscan_loss" + tag + ".csv"));
        }
    }
    report.finalize();
    return report;
}

EvalReport kmeans_runs(const SplitData& eval, std::int32_t classes, std::uint64_t seed,
                       std::size_t runs, const fs::path* artifacts) {
    const auto& gold = require_labels(eval, "kmeans");
    EvalReport report;
    report.experiment = "kmeans";
    for (std::size_t run = 0; run < runs; ++run) {
        const std::uint64_t run_seed = seed + run;
        const auto result = kmeans(eval.matrix, static_cast<std::size_t>(classes), run_seed);
        const auto scored = clustering_accuracy(result.assignments, gold);
        report.seeds.push_back(run_seed);
        report.per_seed_accuracies.push_back(scored.accuracy);
        report.mappings.push_back(scored.mapping);
        if (artifacts != nullptr) {
            save_labels(result.assignments,
                        *artifacts / ("kmeans_assignments_run" + std::to_string(run) + ".txt"));
        }
    }
    report.finalize();
    return report;
}

void write_outputs(const EvalReport& report, const fs::path& out_dir) {
    save_report(report, out_dir / (report.experiment + "_report.json"));
    save_summary_csv({report}, out_dir / (report.experiment + "_summary.csv"));
}

}  // namespace

PipelineSpec PipelineSpec::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::IoFailure, "cannot open spec " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str(), path.parent_path());
}

PipelineSpec PipelineSpec::from_json_text(const std::string& text, const fs::path& base_dir) {
    PipelineSpec spec;
    try {
        const auto doc = json::parse(text);
        spec.dataset = doc.value("dataset", spec.dataset);
        const auto featurizer = doc.value("featurizer", std::string("precomputed"));
        if (featurizer == "precomputed") {
            spec.featurizer = Featurizer::Precomputed;
        } else if (featurizer == "tfidf") {
            spec.featurizer = Featurizer::Tfidf;
        } else {
            fail(ErrorCode::ParseError, "featurizer must be \"precomputed\" or \"tfidf\"");
        }
        spec.train = parse_split(doc.value("train", json()), base_dir);
        spec.test = parse_split(doc.value("test", json()), base_dir);
        if (doc.contains("run")) {
            apply_run_overrides(doc["run"], spec.run);
        }
        if (doc.contains("tfidf")) {
            const auto& t = doc["tfidf"];
            spec.tfidf.ngram_min = t.value("ngram_min", spec.tfidf.ngram_min);
            spec.tfidf.ngram_max = t.value("ngram_max", spec.tfidf.ngram_max);
            spec.tfidf.max_features = t.value("max_features", spec.tfidf.max_features);
            spec.tfidf.lowercase = t.value("lowercase", spec.tfidf.lowercase);
            spec.tfidf.min_df = t.value("min_df", spec.tfidf.min_df);
        }
        spec.num_runs = doc.value("num_runs", spec.num_runs);
        spec.seed = doc.value("seed", spec.seed);
        if (doc.contains("out")) {
            spec.out_dir = resolve(base_dir, doc, "out");
        }
        if (doc.contains("eval_split")) {
            const auto split = doc["eval_split"].get<std::string>();
            if (split == "train") {
                spec.eval_split = EvalSplit::Train;
            } else if (split == "test") {
                spec.eval_split = EvalSplit::Test;
            } else {
                fail(ErrorCode::ParseError, "eval_split must be \"train\" or \"test\"");
            }
        }
        spec.num_classes = doc.value("num_classes", spec.num_classes);
    } catch (const json::exception& e) {
        fail(ErrorCode::ParseError, std::string("spec: ") + e.what());
    }
    return spec;
}

EvalSplit PipelineSpec::effective_eval_split() const {
    if (eval_split) {
        return *eval_split;
    }
    return test.present() ? EvalSplit::Test : EvalSplit::Train;
}

void PipelineSpec::validate() const {
    if (num_runs < 1) {
        fail(ErrorCode::InvalidArgument, "num_runs must be >= 1");
    }
    run.validate();
    if (featurizer == Featurizer::Tfidf) {
        tfidf.validate();
    }
    auto check = [&](const SplitPaths& split, const char* name, bool required) {
        if (!split.present()) {
            if (required) {
                fail(ErrorCode::InvalidArgument, std::string("spec has no ") + name + " split");
            }
            return;
        }
        const fs::path& main =
            featurizer == Featurizer::Tfidf ? split.corpus : split.embeddings;
        if (main.empty()) {
            fail(ErrorCode::InvalidArgument,
                 std::string(name) + (featurizer == Featurizer::Tfidf ? " split needs \"corpus\""
                                                                      : " split needs \"embeddings\""));
        }
        for (const auto& p : {main, split.labels}) {
            if (!p.empty() && !fs::exists(p)) {
                fail(ErrorCode::IoFailure, "missing file " + p.string());
            }
        }
    };
    check(train, "train", true);
    check(test, "test", eval_split == EvalSplit::Test);
}

Dataset Dataset::load(const PipelineSpec& spec) {
    spec.validate();
    Dataset data;
    if (spec.featurizer == Featurizer::Precomputed) {
        auto train_matrix = load_embeddings(spec.train.embeddings);
        auto train_labels = load_optional_labels(spec.train.labels, train_matrix.n_rows());
        data.train = SplitData{std::move(train_matrix), std::move(train_labels)};
        if (spec.test.present()) {
            auto test_matrix = load_embeddings(spec.test.embeddings);
            if (test_matrix.dim() != data.train.matrix.dim()) {
                fail(ErrorCode::DimensionMismatch, "train and test embeddings differ in dim");
            }
            auto test_labels = load_optional_labels(spec.test.labels, test_matrix.n_rows());
            data.test = SplitData{std::move(test_matrix), std::move(test_labels)};
        }
        return data;
    }

    const auto train_corpus = load_corpus_jsonl(spec.train.corpus);
    const auto vocab = fit_tfidf(train_corpus.texts, spec.tfidf);
    auto train_features = transform_tfidf(vocab, train_corpus.texts);
    auto train_labels = spec.train.labels.empty()
                            ? corpus_labels(train_corpus)
                            : load_optional_labels(spec.train.labels, train_corpus.texts.size());
    data.train = SplitData{std::move(train_features.matrix), std::move(train_labels)};
    if (spec.test.present()) {
        const auto test_corpus = load_corpus_jsonl(spec.test.corpus);
        auto test_features = transform_tfidf(vocab, test_corpus.texts);
        auto test_labels = spec.test.labels.empty()
                               ? corpus_labels(test_corpus)
                               : load_optional_labels(spec.test.labels, test_corpus.texts.size());
        data.test = SplitData{std::move(test_features.matrix), std::move(test_labels)};
    }
    return data;
}

const SplitData& Dataset::eval(const PipelineSpec& spec) const {
    if (spec.effective_eval_split() == EvalSplit::Test) {
        if (!test) {
            fail(ErrorCode::InvalidArgument, "evaluation split \"test\" is not configured");
        }
        return *test;
    }
    return train;
}

std::int32_t Dataset::num_classes(const PipelineSpec& spec) const {
    std::int32_t classes = spec.num_classes;
    if (classes == 0) {
        if (train.labels) {
            classes = std::max(classes, train.labels->num_classes);
        }
        if (test && test->labels) {
            classes = std::max(classes, test->labels->num_classes);
        }
    }
    if (classes < 2) {
        fail(ErrorCode::InvalidArgument,
             "number of clusters unknown or < 2; set \"num_classes\" or provide labels");
    }
    return classes;
}

MineResult cmd_mine(const PipelineSpec& spec) {
    const auto data = Dataset::load(spec);
    ensure_dir(spec.out_dir);
    MineResult result;
    result.table = mine_neighbors(data.train.matrix, spec.run.k_neighbors);
    save_neighbor_table(result.table, spec.out_dir / "neighbors.jsonl");
    if (data.train.labels) {
        result.agreement =
            neighbor_label_agreement(result.table, *data.train.labels, spec.run.k_neighbors);
        save_agreement_csv(result.agreement, spec.out_dir / "agreement.csv");
    }
    return result;
}

EvalReport cmd_docscan(const PipelineSpec& spec) {
    const auto data = Dataset::load(spec);
    const auto classes = data.num_classes(spec);
    ensure_dir(spec.out_dir);
    const auto table = mine_neighbors(data.train.matrix, spec.run.k_neighbors);
    auto report = docscan_runs(data.train, table, data.eval(spec), classes, spec.run, spec.seed,
                               spec.num_runs, &spec.out_dir);
    report.dataset = spec.dataset;
    write_outputs(report, spec.out_dir);
    return report;
}

EvalReport cmd_kmeans(const PipelineSpec& spec) {
    const auto data = Dataset::load(spec);
    const auto classes = data.num_classes(spec);
    ensure_dir(spec.out_dir);
    auto report = kmeans_runs(data.eval(spec), classes, spec.seed, spec.num_runs, &spec.out_dir);
    report.dataset = spec.dataset;
    write_outputs(report, spec.out_dir);
    return report;
}

EvalReport cmd_random_baseline(const PipelineSpec& spec) {
    const auto data = Dataset::load(spec);
    const auto& gold = require_labels(data.eval(spec), "random-baseline");
    ensure_dir(spec.out_dir);
    auto report = random_baseline(gold, spec.seed, spec.num_runs);
    report.dataset = spec.dataset;
    write_outputs(report, spec.out_dir);
    return report;
}

std::vector<AblationRow> load_ablation_grid(const fs::path& path, const RunConfig& defaults) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::IoFailure, "cannot open grid " + path.string());
    }
    std::vector<AblationRow> rows;
    try {
        const auto doc = json::parse(in);
        for (const auto& node : doc.at("rows")) {
            AblationRow row;
            row.name = node.at("name").get<std::string>();
            row.method = node.value("method", row.method);
            if (row.method != "docscan" && row.method != "kmeans") {
                fail(ErrorCode::ParseError, "grid row \"" + row.name + "\": unknown method " + row.method);
            }
            row.run = defaults;
            apply_run_overrides(node, row.run);
            const int changed = (row.run.k_neighbors != defaults.k_neighbors) +
                                (row.run.entropy_weight != defaults.entropy_weight) +
                                (row.run.batch_size != defaults.batch_size) +
                                (row.run.dropout != defaults.dropout) +
                                (row.run.epochs != defaults.epochs) +
                                (row.run.learning_rate != defaults.learning_rate);
            if (changed > 1) {
                fail(ErrorCode::InvalidArgument,
                     "grid row \"" + row.name + "\" varies more than one hyperparameter");
            }
            row.run.validate();
            rows.push_back(std::move(row));
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    if (rows.empty()) {
        fail(ErrorCode::InvalidArgument, path.string() + ": grid has no rows");
    }
    return rows;
}

std::vector<EvalReport> cmd_ablation(const PipelineSpec& spec, const fs::path& grid_path) {
    const auto rows = load_ablation_grid(grid_path, spec.run);
    PipelineSpec train_spec = spec;
    train_spec.eval_split = EvalSplit::Train;
    const auto data = Dataset::load(train_spec);
    const auto classes = data.num_classes(train_spec);
    ensure_dir(spec.out_dir);

    std::size_t max_k = 0;
    for (const auto& row : rows) {
        if (row.method == "docscan") {
            max_k = std::max(max_k, row.run.k_neighbors);
        }
    }
    // Neighbors for smaller k are a prefix of the max-k table.
    NeighborTable table;
    if (max_k > 0) {
        table = mine_neighbors(data.train.matrix, max_k);
    }

    std::vector<EvalReport> reports;
    json all = json::array();
    for (const auto& row : rows) {
        EvalReport report =
            row.method == "docscan"
                ? docscan_runs(data.train, table, data.train, classes, row.run, spec.seed, spec.num_runs, nullptr)
                : kmeans_runs(data.train, classes, spec.seed, spec.num_runs, nullptr);
        report.experiment = row.name;
        report.dataset = spec.dataset;
        all.push_back(json::parse(report_to_json(report)));
        reports.push_back(std::move(report));
    }

    auto json_out = open_output(spec.out_dir / "ablation_reports.json");
    json_out << all.dump(2) << '\n';

    auto csv = open_output(spec.out_dir / "ablation_summary.csv");
    csv << "experiment,method,neighbors,entropy_weight,batch_size,dropout,epochs,dataset,mean,ci95\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i].run;
        const auto& rep = reports[i];
        csv << rows[i].name << ',' << rows[i].method << ',' << r.k_neighbors << ',' << r.entropy_weight
            << ',' << r.batch_size << ',' << r.dropout << ',' << r.epochs << ',' << rep.dataset << ','
            << percent(rep.mean) << ',' << (rep.ci95_halfwidth ? percent(*rep.ci95_halfwidth) : "")
            << '\n';
    }
    return reports;
}

std::size_t cmd_tfidf(const fs::path& corpus_path, const TfidfConfig& cfg, const fs::path& out_dir,
                      const std::string& name) {
    const auto corpus = load_corpus_jsonl(corpus_path);
    const auto result = tfidf_featurize(corpus.texts, cfg);
    ensure_dir(out_dir);
    save_embeddings(result.matrix, out_dir / (name + ".dse"));
    if (!corpus.labels.empty()) {
        save_labels(corpus.labels, out_dir / (name + ".labels"));
    }
    auto vocab_out = open_output(out_dir / (name + ".vocab.txt"));
    for (const auto& term : result.vocabulary.vocabulary) {
        vocab_out << term << '\n';
    }
    return result.zero_rows;
}

void cmd_blobs(const BlobsArgs& args, const fs::path& out_dir, const std::string& name) {
    const auto [matrix, labels] =
        make_blobs(args.n_per_class, args.num_classes, args.dim, args.separation, args.seed);
    ensure_dir(out_dir);
    save_embeddings(matrix, out_dir / (name + ".dse"));
    save_labels(labels.labels, out_dir / (name + ".labels"));
}

std::vector<double> cmd_agreement(const fs::path& embeddings, const fs::path& labels_path,
                                  std::size_t k, const fs::path& out_dir) {
    const auto matrix = load_embeddings(embeddings);
    const auto labels = load_optional_labels(labels_path, matrix.n_rows());
    if (!labels) {
        fail(ErrorCode::InvalidArgument, "agreement needs a label file");
    }
    const auto table = mine_neighbors(matrix, k);
    auto agreement = neighbor_label_agreement(table, *labels, k);
    ensure_dir(out_dir);
    save_agreement_csv(agreement, out_dir / "agreement.csv");
    return agreement;
}

void save_summary_csv(const std::vector<EvalReport>& reports, const fs::path& path) {
    auto out = open_output(path);
    out << "experiment,dataset,mean,ci95\n";
    for (const auto& r : reports) {
        out << r.experiment << ',' << r.dataset << ',' << percent(r.mean) << ','
            << (r.ci95_halfwidth ? percent(*r.ci95_halfwidth) : "") << '\n';
    }
}

}  // namespace docscan
