#pragma once

#include "docscan/embedding.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace docscan {

struct TfidfConfig {
    int ngram_min = 1;
    int ngram_max = 1;
    std::size_t max_features = 50000;
    bool lowercase = true;
    std::size_t min_df = 1;

    void validate() const;
};

/// Fitted vocabulary: column j is the term vocabulary[j] with weight idf[j].
struct TfidfVocabulary {
    TfidfConfig config;
    std::vector<std::string> vocabulary;
    std::vector<double> idf;
};

struct TfidfResult {
    EmbeddingMatrix matrix;
    TfidfVocabulary vocabulary;
    /// Documents with no in-vocabulary term; their rows are left all-zero.
    std::size_t zero_rows = 0;
};

/// Lowercases (optionally) and splits on runs of non-alphanumeric ASCII
/// characters. Bytes >= 0x80 count as word characters so UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text, bool lowercase = true);

/// Space-joined n-grams of the token sequence for n in [ngram_min, ngram_max].
std::vector<std::string> ngrams(const std::vector<std::string>& tokens, int ngram_min, int ngram_max);

/// Learns the vocabulary and smoothed idf ln((1+N)/(1+df)) + 1. Terms with
/// df < min_df are dropped; the rest are ranked by total corpus count (ties
/// lexicographic) and capped at max_features. Throws EmptyVocabulary when
/// nothing survives.
TfidfVocabulary fit_tfidf(const std::vector<std::string>& corpus, const TfidfConfig& cfg);

/// Raw term counts times idf, L2-normalized per row.
TfidfResult transform_tfidf(const TfidfVocabulary& vocab, const std::vector<std::string>& corpus);

/// fit_tfidf followed by transform_tfidf on the same corpus.
TfidfResult tfidf_featurize(const std::vector<std::string>& corpus, const TfidfConfig& cfg);

}  // namespace docscan
