#include "docscan/tfidf.hpp"

#include "docscan/error.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace docscan {

void TfidfConfig::validate() const {
    if (ngram_min < 1 || ngram_min > ngram_max || ngram_max > 3) {
        fail(ErrorCode::InvalidArgument, "tfidf n-gram span must satisfy 1 <= min <= max <= 3");
    }
    if (max_features < 1) {
        fail(ErrorCode::InvalidArgument, "tfidf max_features must be >= 1");
    }
}

std::vector<std::string> tokenize(std::string_view text, bool lowercase) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        const auto byte = static_cast<unsigned char>(ch);
        const bool word = byte >= 0x80 || (byte >= '0' && byte <= '9') ||
                          (byte >= 'a' && byte <= 'z') || (byte >= 'A' && byte <= 'Z');
        if (word) {
            current.push_back(lowercase && byte >= 'A' && byte <= 'Z'
                                  ? static_cast<char>(byte - 'A' + 'a')
                                  : ch);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

std::vector<std::string> ngrams(const std::vector<std::string>& tokens, int ngram_min, int ngram_max) {
    std::vector<std::string> out;
    for (int n = ngram_min; n <= ngram_max; ++n) {
        const auto span = static_cast<std::size_t>(n);
        for (std::size_t start = 0; start + span <= tokens.size(); ++start) {
            std::string gram = tokens[start];
            for (std::size_t j = 1; j < span; ++j) {
                gram += ' ';
                gram += tokens[start + j];
            }
            out.push_back(std::move(gram));
        }
    }
    return out;
}

TfidfVocabulary fit_tfidf(const std::vector<std::string>& corpus, const TfidfConfig& cfg) {
    cfg.validate();
    if (corpus.empty()) {
        fail(ErrorCode::InvalidArgument, "tfidf corpus is empty");
    }

    struct TermStats {
        std::size_t total = 0;
        std::size_t df = 0;
        std::size_t last_doc = static_cast<std::size_t>(-1);
    };
    std::unordered_map<std::string, TermStats> stats;
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        for (auto& term : ngrams(tokenize(corpus[d], cfg.lowercase), cfg.ngram_min, cfg.ngram_max)) {
            auto& s = stats[std::move(term)];
            ++s.total;
            if (s.last_doc != d) {
                s.last_doc = d;
                ++s.df;
            }
        }
    }

    std::vector<std::pair<std::string, TermStats>> kept;
    for (auto& [term, s] : stats) {
        if (s.df >= cfg.min_df) {
            kept.emplace_back(term, s);
        }
    }
    if (kept.empty()) {
        fail(ErrorCode::EmptyVocabulary, "no term survives min_df filtering");
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second.total != b.second.total) {
            return a.second.total > b.second.total;
        }
        return a.first < b.first;
    });
    if (kept.size() > cfg.max_features) {
        kept.resize(cfg.max_features);
    }

    TfidfVocabulary vocab;
    vocab.config = cfg;
    const double n_docs = static_cast<double>(corpus.size());
    vocab.vocabulary.reserve(kept.size());
    vocab.idf.reserve(kept.size());
    for (auto& [term, s] : kept) {
        vocab.vocabulary.push_back(std::move(term));
        vocab.idf.push_back(std::log((1.0 + n_docs) / (1.0 + static_cast<double>(s.df))) + 1.0);
    }
    return vocab;
}

TfidfResult transform_tfidf(const TfidfVocabulary& vocab, const std::vector<std::string>& corpus) {
    if (corpus.empty()) {
        fail(ErrorCode::InvalidArgument, "tfidf corpus is empty");
    }
    const std::size_t dim = vocab.vocabulary.size();
    if (dim == 0 || vocab.idf.size() != dim) {
        fail(ErrorCode::EmptyVocabulary, "tfidf vocabulary is empty or inconsistent");
    }
    std::unordered_map<std::string_view, std::size_t> column;
    column.reserve(dim);
    for (std::size_t j = 0; j < dim; ++j) {
        column.emplace(vocab.vocabulary[j], j);
    }

    TfidfResult result;
    const auto& cfg = vocab.config;
    std::vector<float> data(corpus.size() * dim, 0.0f);
    std::unordered_map<std::size_t, double> counts;
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        counts.clear();
        for (const auto& term : ngrams(tokenize(corpus[d], cfg.lowercase), cfg.ngram_min, cfg.ngram_max)) {
            if (auto it = column.find(term); it != column.end()) {
                counts[it->second] += 1.0;
            }
        }
        if (counts.empty()) {
            ++result.zero_rows;
            continue;
        }
        double norm2 = 0.0;
        for (auto& [j, value] : counts) {
            value *= vocab.idf[j];
            norm2 += value * value;
        }
        const double inv = 1.0 / std::sqrt(norm2);
        float* out = data.data() + d * dim;
        for (const auto& [j, value] : counts) {
            out[j] = static_cast<float>(value * inv);
        }
    }
    result.matrix = EmbeddingMatrix(corpus.size(), dim, std::move(data));
    result.vocabulary = vocab;
    return result;
}

TfidfResult tfidf_featurize(const std::vector<std::string>& corpus, const TfidfConfig& cfg) {
    return transform_tfidf(fit_tfidf(corpus, cfg), corpus);
}

}  // namespace docscan
