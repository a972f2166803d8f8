#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace fignn {

enum class FieldKind { categorical, numeric };

struct FieldSpec {
    std::string name;
    FieldKind kind = FieldKind::categorical;
};

/// Ordered field list; a field's position is its index. At least two fields.
class FieldSchema {
public:
    FieldSchema() = default;
    explicit FieldSchema(std::vector<FieldSpec> fields);

    static FieldSchema from_json(const nlohmann::json& j);
    static FieldSchema load(const std::filesystem::path& path);
    nlohmann::json to_json() const;

    std::size_t size() const { return fields_.size(); }
    const FieldSpec& operator[](std::size_t i) const { return fields_[i]; }
    const std::vector<FieldSpec>& fields() const { return fields_; }
    std::vector<std::string> names() const;

private:
    std::vector<FieldSpec> fields_;
};

struct RawRecord {
    int label = 0;
    std::vector<std::string> values;  // empty string = missing
    std::size_t line = 0;             // 1-based source line, 0 if synthetic
};

/// One active feature index per field; never materialized as one-hot.
struct EncodedInstance {
    int label = 0;
    std::vector<std::size_t> features;

    friend bool operator==(const EncodedInstance&, const EncodedInstance&) = default;
};

inline constexpr const char* kUnknownToken = "<unknown>";
inline constexpr const char* kMissingToken = "<missing>";

// Bucketizes a numeric value: floor(z) for z <= 2, floor((ln z)^2) above.
std::string normalize_numeric(double z);

// Token for one raw cell. Empty input yields the missing token.
std::string tokenize(const std::string& raw, FieldKind kind, std::size_t line = 0,
                     const std::string& field_name = {});

/// Per-field token frequencies; counts from separate readers merge before thresholding.
class TokenCounts {
public:
    explicit TokenCounts(const FieldSchema& schema);

    void add(const RawRecord& record);
    void merge(const TokenCounts& other);
    std::size_t records() const { return records_; }
    const std::vector<std::map<std::string, std::uint64_t>>& per_field() const { return counts_; }
    const FieldSchema& schema() const { return schema_; }

private:
    FieldSchema schema_;
    std::vector<std::map<std::string, std::uint64_t>> counts_;
    std::size_t records_ = 0;
};

/// Token -> global feature index. Each field owns a contiguous index range that
/// starts with its "<unknown>" entry, followed by kept tokens in sorted order.
class Vocabulary {
public:
    static Vocabulary build(std::span<const RawRecord> records, const FieldSchema& schema, std::size_t min_count);
    static Vocabulary from_counts(const TokenCounts& counts, std::size_t min_count);

    static Vocabulary from_json(const nlohmann::json& j);
    static Vocabulary load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
    std::string serialize() const;  // byte-stable
    void save(const std::filesystem::path& path) const;

    const FieldSchema& schema() const { return schema_; }
    std::size_t field_count() const { return fields_.size(); }
    std::size_t total_feature_count() const { return total_; }
    std::size_t min_count() const { return min_count_; }
    std::size_t offset(std::size_t field) const { return fields_.at(field).offset; }
    std::size_t field_size(std::size_t field) const { return fields_.at(field).tokens.size(); }
    std::size_t unknown_index(std::size_t field) const { return fields_.at(field).offset; }
    std::size_t missing_index(std::size_t field) const;
    std::size_t lookup(std::size_t field, const std::string& token) const;
    const std::map<std::string, std::size_t>& tokens(std::size_t field) const { return fields_.at(field).tokens; }

private:
    struct FieldVocab {
        std::size_t offset = 0;
        std::map<std::string, std::size_t> tokens;
    };
    FieldSchema schema_;
    std::vector<FieldVocab> fields_;
    std::size_t total_ = 0;
    std::size_t min_count_ = 1;
};

EncodedInstance encode(const RawRecord& record, const Vocabulary& vocab);
std::vector<EncodedInstance> encode_all(std::span<const RawRecord> records, const Vocabulary& vocab);

// Header-less TSV: label then one column per field.
RawRecord parse_tsv_line(const std::string& line, std::size_t field_count, std::size_t line_no);
std::vector<RawRecord> read_tsv(std::istream& in, std::size_t field_count);
std::vector<RawRecord> read_tsv_file(const std::filesystem::path& path, std::size_t field_count);

struct DatasetSplit {
    std::vector<EncodedInstance> train;
    std::vector<EncodedInstance> validation;
    std::vector<EncodedInstance> test;
    std::uint64_t split_seed = 0;
};

// Seeded 8:1:1 partition with sizes floor(0.8n), floor(0.1n), remainder.
DatasetSplit split_dataset(std::vector<EncodedInstance> instances, std::uint64_t seed);

}  // namespace fignn
