#include "docscan/embedding.hpp"

#include "docscan/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>

namespace docscan {

namespace {

constexpr char kMagic[4] = {'D', 'S', 'E', '1'};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
    }
}

template <typename T>
T get_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        value |= static_cast<T>(bytes[offset + i]) << (8 * i);
    }
    return value;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoFailure, "cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t n_rows, std::size_t dim, std::vector<float> data)
    : n_rows_(n_rows), dim_(dim), data_(std::move(data)) {
    if (n_rows_ == 0 || dim_ == 0) {
        fail(ErrorCode::InvalidArgument, "embedding matrix needs at least one row and one column");
    }
    if (data_.size() != n_rows_ * dim_) {
        fail(ErrorCode::LengthMismatch, "embedding data length " + std::to_string(data_.size()) +
                                            " != rows*dim " + std::to_string(n_rows_ * dim_));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) {
            fail(ErrorCode::NonFiniteValue,
                 "non-finite value at row " + std::to_string(i / dim_) + " col " +
                     std::to_string(i % dim_));
        }
    }
}

EmbeddingMatrix EmbeddingMatrix::zeros(std::size_t n_rows, std::size_t dim) {
    return EmbeddingMatrix(n_rows, dim, std::vector<float>(n_rows * dim, 0.0f));
}

EmbeddingMatrix EmbeddingMatrix::select_rows(std::span<const std::size_t> rows) const {
    std::vector<float> out;
    out.reserve(rows.size() * dim_);
    for (std::size_t r : rows) {
        if (r >= n_rows_) {
            fail(ErrorCode::InvalidArgument, "row index out of range: " + std::to_string(r));
        }
        auto src = row(r);
        out.insert(out.end(), src.begin(), src.end());
    }
    return EmbeddingMatrix(rows.size(), dim_, std::move(out));
}

LabelVector LabelVector::from_ids(std::vector<std::int32_t> ids, std::int32_t num_classes) {
    std::int32_t max_id = -1;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0) {
            fail(ErrorCode::InvalidArgument, "negative label at row " + std::to_string(i));
        }
        max_id = std::max(max_id, ids[i]);
    }
    if (num_classes == 0) {
        num_classes = max_id + 1;
    } else if (max_id >= num_classes) {
        fail(ErrorCode::InvalidArgument, "label " + std::to_string(max_id) +
                                             " outside [0, " + std::to_string(num_classes) + ")");
    }
    return LabelVector{std::move(ids), num_classes};
}

std::vector<std::uint8_t> encode_embeddings(const EmbeddingMatrix& matrix) {
    static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big);
    std::vector<std::uint8_t> out;
    out.reserve(kEmbeddingHeaderBytes + matrix.data().size() * 4);
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put_le<std::uint32_t>(out, kEmbeddingFormatVersion);
    put_le<std::uint64_t>(out, matrix.n_rows());
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(matrix.dim()));
    for (float v : matrix.data()) {
        put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

EmbeddingMatrix decode_embeddings(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kEmbeddingHeaderBytes) {
        fail(ErrorCode::MalformedHeader,
             "header truncated at byte offset " + std::to_string(bytes.size()));
    }
    if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
        fail(ErrorCode::MalformedHeader, "bad magic at byte offset 0");
    }
    const auto version = get_le<std::uint32_t>(bytes, 4);
    if (version != kEmbeddingFormatVersion) {
        fail(ErrorCode::MalformedHeader,
             "unsupported version " + std::to_string(version) + " at byte offset 4");
    }
    const auto n_rows = get_le<std::uint64_t>(bytes, 8);
    const auto dim = get_le<std::uint32_t>(bytes, 16);
    if (n_rows == 0) {
        fail(ErrorCode::MalformedHeader, "zero rows at byte offset 8");
    }
    if (dim == 0) {
        fail(ErrorCode::MalformedHeader, "zero dim at byte offset 16");
    }
    const std::size_t payload = bytes.size() - kEmbeddingHeaderBytes;
    if (n_rows > payload / 4 / dim) {
        fail(ErrorCode::TruncatedData,
             "expected " + std::to_string(n_rows) + "x" + std::to_string(dim) +
                 " floats, data ends at byte offset " + std::to_string(bytes.size()));
    }
    const std::size_t count = static_cast<std::size_t>(n_rows) * dim;
    if (payload != count * 4) {
        fail(ErrorCode::MalformedHeader,
             "trailing bytes after payload at byte offset " +
                 std::to_string(kEmbeddingHeaderBytes + count * 4));
    }
    std::vector<float> data(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t offset = kEmbeddingHeaderBytes + 4 * i;
        data[i] = std::bit_cast<float>(get_le<std::uint32_t>(bytes, offset));
        if (!std::isfinite(data[i])) {
            fail(ErrorCode::NonFiniteValue, "non-finite value at byte offset " + std::to_string(offset));
        }
    }
    return EmbeddingMatrix(n_rows, dim, std::move(data));
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return decode_embeddings(bytes);
}

void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
    const auto bytes = encode_embeddings(matrix);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        fail(ErrorCode::IoFailure, "write failed for " + path.string());
    }
}

LabelVector load_labels(const std::filesystem::path& path, std::int32_t num_classes) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::IoFailure, "cannot open " + path.string());
    }
    std::vector<std::int32_t> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::size_t consumed = 0;
        long value = 0;
        try {
            value = std::stol(line, &consumed);
        } catch (const std::exception&) {
            consumed = 0;
        }
        if (consumed != line.size()) {
            fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) +
                                            ": not an integer label");
        }
        ids.push_back(static_cast<std::int32_t>(value));
    }
    return LabelVector::from_ids(std::move(ids), num_classes);
}

void save_labels(std::span<const std::int32_t> labels, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    }
    for (auto id : labels) {
        out << id << '\n';
    }
    if (!out) {
        fail(ErrorCode::IoFailure, "write failed for " + path.string());
    }
}

Corpus load_corpus_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::IoFailure, "cannot open " + path.string());
    }
    Corpus corpus;
    std::map<std::string, std::int32_t> name_ids;
    bool any_label = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto where = path.string() + ":" + std::to_string(line_no);
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            fail(ErrorCode::ParseError, where + ": " + e.what());
        }
        if (!obj.is_object() || !obj.contains("text") || !obj["text"].is_string()) {
            fail(ErrorCode::ParseError, where + ": missing string field \"text\"");
        }
        corpus.texts.push_back(obj["text"].get<std::string>());

        const bool has_label = obj.contains("label") && !obj["label"].is_null();
        if (corpus.texts.size() > 1 && has_label != any_label) {
            fail(ErrorCode::ParseError, where + ": \"label\" present on some lines only");
        }
        any_label = has_label;
        if (!has_label) {
            continue;
        }
        const auto& label = obj["label"];
        if (label.is_number_integer()) {
            if (!corpus.label_names.empty()) {
                fail(ErrorCode::ParseError, where + ": mixed integer and string labels");
            }
            corpus.labels.push_back(label.get<std::int32_t>());
        } else if (label.is_string()) {
            if (corpus.label_names.empty() && !corpus.labels.empty()) {
                fail(ErrorCode::ParseError, where + ": mixed integer and string labels");
            }
            const auto name = label.get<std::string>();
            auto [it, inserted] =
                name_ids.emplace(name, static_cast<std::int32_t>(corpus.label_names.size()));
            if (inserted) {
                corpus.label_names.push_back(name);
            }
            corpus.labels.push_back(it->second);
        } else {
            fail(ErrorCode::ParseError, where + ": \"label\" must be an integer or string");
        }
    }
    if (corpus.texts.empty()) {
        fail(ErrorCode::InvalidArgument, path.string() + ": empty corpus");
    }
    return corpus;
}

}  // namespace docscan
