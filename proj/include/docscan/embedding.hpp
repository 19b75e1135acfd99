#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace docscan {

/// Dense row-major matrix of documents x features (32-bit floats).
///
/// The constructor enforces the invariants: at least one row and one
/// column, data length equal to rows * dim, and every value finite.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;
    EmbeddingMatrix(std::size_t n_rows, std::size_t dim, std::vector<float> data);

    /// Zero-filled matrix of the given shape.
    static EmbeddingMatrix zeros(std::size_t n_rows, std::size_t dim);

    std::size_t n_rows() const noexcept { return n_rows_; }
    std::size_t dim() const noexcept { return dim_; }
    bool empty() const noexcept { return n_rows_ == 0; }

    std::span<const float> row(std::size_t i) const {
        return {data_.data() + i * dim_, dim_};
    }
    std::span<float> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }

    std::span<const float> data() const noexcept { return data_; }

    /// New matrix holding the selected rows, in order.
    EmbeddingMatrix select_rows(std::span<const std::size_t> rows) const;

    friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

private:
    std::size_t n_rows_ = 0;
    std::size_t dim_ = 0;
    std::vector<float> data_;
};

/// One gold class id per row, each in [0, num_classes).
struct LabelVector {
    std::vector<std::int32_t> labels;
    std::int32_t num_classes = 0;

    std::size_t size() const noexcept { return labels.size(); }

    /// Validates ids and infers num_classes as max id + 1 when not given.
    static LabelVector from_ids(std::vector<std::int32_t> ids, std::int32_t num_classes = 0);

    friend bool operator==(const LabelVector&, const LabelVector&) = default;
};

/// Binary layout: "DSE1", u32 version, u64 rows, u32 dim, then f32 payload,
/// all little-endian.
inline constexpr std::size_t kEmbeddingHeaderBytes = 20;
inline constexpr std::uint32_t kEmbeddingFormatVersion = 1;

EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path);

/// In-memory codec used by the file functions; exposed for tests.
std::vector<std::uint8_t> encode_embeddings(const EmbeddingMatrix& matrix);
EmbeddingMatrix decode_embeddings(std::span<const std::uint8_t> bytes);

/// Label file: one integer per line.
LabelVector load_labels(const std::filesystem::path& path, std::int32_t num_classes = 0);
void save_labels(std::span<const std::int32_t> labels, const std::filesystem::path& path);

/// A JSON Lines corpus: "text" is required, "label" optional (integer, or a
/// string mapped to ids in order of first appearance).
struct Corpus {
    std::vector<std::string> texts;
    std::vector<std::int32_t> labels;      // empty when the corpus is unlabeled
    std::vector<std::string> label_names;  // only filled for string labels
};

Corpus load_corpus_jsonl(const std::filesystem::path& path);

}  // namespace docscan
