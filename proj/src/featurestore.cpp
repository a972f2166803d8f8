#include "fignn/featurestore.hpp"

#include "fignn/errors.hpp"
#include "fignn/random.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace fignn {

namespace {

std::string where(std::size_t line, const std::string& field) {
    std::string s;
    if (line) s += "line " + std::to_string(line);
    if (!field.empty()) s += (s.empty() ? "field '" : ", field '") + field + "'";
    return s.empty() ? s : " (" + s + ")";
}

FieldKind parse_kind(const std::string& s) {
    if (s == "categorical") return FieldKind::categorical;
    if (s == "numeric") return FieldKind::numeric;
    throw ConfigError("unknown field kind '" + s + "' (expected categorical or numeric)");
}

const char* kind_name(FieldKind k) { return k == FieldKind::numeric ? "numeric" : "categorical"; }

}  // namespace

// ---------------------------------------------------------------- schema

FieldSchema::FieldSchema(std::vector<FieldSpec> fields) : fields_(std::move(fields)) {
    if (fields_.size() < 2) throw ConfigError("schema needs at least 2 fields, got " + std::to_string(fields_.size()));
    std::set<std::string> seen;
    for (const auto& f : fields_)
        if (!seen.insert(f.name).second) throw ConfigError("duplicate field name '" + f.name + "'");
}

FieldSchema FieldSchema::from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ConfigError("schema must be a JSON list of {name, kind}");
    std::vector<FieldSpec> fields;
    for (const auto& e : j) {
        if (!e.is_object() || !e.contains("name")) throw ConfigError("schema entry missing 'name'");
        fields.push_back({e.at("name").get<std::string>(), parse_kind(e.value("kind", std::string("categorical")))});
    }
    return FieldSchema(std::move(fields));
}

FieldSchema FieldSchema::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open schema file " + path.string());
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed schema file " + path.string() + ": " + e.what());
    }
}

nlohmann::json FieldSchema::to_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& f : fields_) j.push_back({{"name", f.name}, {"kind", kind_name(f.kind)}});
    return j;
}

std::vector<std::string> FieldSchema::names() const {
    std::vector<std::string> out;
    for (const auto& f : fields_) out.push_back(f.name);
    return out;
}

// ---------------------------------------------------------------- tokens

std::string normalize_numeric(double z) {
    if (!std::isfinite(z) || z < 0) {
        std::ostringstream os;
        os << "numeric value " << z << " is negative or non-finite";
        throw DataError(os.str());
    }
    if (z <= 2.0) return std::to_string(static_cast<long long>(std::floor(z)));
    const double l = std::log(z);
    return std::to_string(static_cast<long long>(std::floor(l * l)));
}

std::string tokenize(const std::string& raw, FieldKind kind, std::size_t line, const std::string& field_name) {
    if (raw.empty()) return kMissingToken;
    if (kind == FieldKind::categorical) return raw;
    double z = 0;
    auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), z);
    if (ec != std::errc() || ptr != raw.data() + raw.size())
        throw DataError("cannot parse numeric value '" + raw + "'" + where(line, field_name));
    try {
        return normalize_numeric(z);
    } catch (const DataError& e) {
        throw DataError(e.what() + where(line, field_name));
    }
}

TokenCounts::TokenCounts(const FieldSchema& schema) : schema_(schema), counts_(schema.size()) {}

void TokenCounts::add(const RawRecord& record) {
    if (record.values.size() != schema_.size())
        throw DataError("record has " + std::to_string(record.values.size()) + " fields, expected " +
                        std::to_string(schema_.size()) + where(record.line, {}));
    for (std::size_t f = 0; f < schema_.size(); ++f)
        ++counts_[f][tokenize(record.values[f], schema_[f].kind, record.line, schema_[f].name)];
    ++records_;
}

void TokenCounts::merge(const TokenCounts& other) {
    if (other.schema_.names() != schema_.names()) throw InvariantError("merging token counts of different schemas");
    for (std::size_t f = 0; f < counts_.size(); ++f)
        for (const auto& [tok, n] : other.counts_[f]) counts_[f][tok] += n;
    records_ += other.records_;
}

// ---------------------------------------------------------------- vocabulary

Vocabulary Vocabulary::build(std::span<const RawRecord> records, const FieldSchema& schema, std::size_t min_count) {
    TokenCounts counts(schema);
    for (const auto& r : records) counts.add(r);
    return from_counts(counts, min_count);
}

Vocabulary Vocabulary::from_counts(const TokenCounts& counts, std::size_t min_count) {
    if (min_count < 1) throw ConfigError("min_count must be >= 1");
    if (counts.records() == 0) throw DataError("cannot build a vocabulary from an empty record stream");
    Vocabulary v;
    v.schema_ = counts.schema();
    v.min_count_ = min_count;
    std::size_t next = 0;
    for (const auto& per_field : counts.per_field()) {
        FieldVocab fv;
        fv.offset = next;
        fv.tokens.emplace(kUnknownToken, next++);
        // per_field iterates in sorted order, so kept tokens get ascending indices
        for (const auto& [tok, n] : per_field)
            if (n >= min_count && tok != kUnknownToken) fv.tokens.emplace(tok, next++);
        v.fields_.push_back(std::move(fv));
    }
    v.total_ = next;
    return v;
}

std::size_t Vocabulary::missing_index(std::size_t field) const {
    const auto& toks = fields_.at(field).tokens;
    auto it = toks.find(kMissingToken);
    return it == toks.end() ? unknown_index(field) : it->second;
}

std::size_t Vocabulary::lookup(std::size_t field, const std::string& token) const {
    const auto& fv = fields_.at(field);
    auto it = fv.tokens.find(token);
    return it == fv.tokens.end() ? fv.offset : it->second;
}

nlohmann::json Vocabulary::to_json() const {
    nlohmann::json fields = nlohmann::json::array();
    for (std::size_t f = 0; f < fields_.size(); ++f) {
        nlohmann::json toks = nlohmann::json::object();
        for (const auto& [tok, idx] : fields_[f].tokens) toks[tok] = idx;
        fields.push_back({{"name", schema_[f].name},
                          {"kind", kind_name(schema_[f].kind)},
                          {"offset", fields_[f].offset},
                          {"size", fields_[f].tokens.size()},
                          {"unknown_index", unknown_index(f)},
                          {"missing_index", missing_index(f)},
                          {"tokens", std::move(toks)}});
    }
    return {{"format", "fignn-vocabulary"},
            {"version", 1},
            {"min_count", min_count_},
            {"total_feature_count", total_},
            {"fields", std::move(fields)}};
}

std::string Vocabulary::serialize() const { return to_json().dump(2) + "\n"; }

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write vocabulary file " + path.string());
    out << serialize();
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
    try {
        Vocabulary v;
        v.min_count_ = j.at("min_count").get<std::size_t>();
        std::vector<FieldSpec> specs;
        std::size_t expected = 0;
        for (const auto& fj : j.at("fields")) {
            specs.push_back({fj.at("name").get<std::string>(), parse_kind(fj.at("kind").get<std::string>())});
            FieldVocab fv;
            fv.offset = fj.at("offset").get<std::size_t>();
            if (fv.offset != expected) throw ConfigError("vocabulary field ranges are not contiguous");
            for (const auto& [tok, idx] : fj.at("tokens").items()) fv.tokens.emplace(tok, idx.get<std::size_t>());
            if (!fv.tokens.contains(kUnknownToken) || fv.tokens.at(kUnknownToken) != fv.offset)
                throw ConfigError("vocabulary field '" + specs.back().name + "' lacks a leading <unknown> entry");
            std::set<std::size_t> idx;
            for (const auto& [tok, i] : fv.tokens) idx.insert(i);
            if (idx.size() != fv.tokens.size() || *idx.begin() != fv.offset ||
                *idx.rbegin() != fv.offset + fv.tokens.size() - 1)
                throw ConfigError("vocabulary field '" + specs.back().name + "' has a non-contiguous index range");
            expected += fv.tokens.size();
            v.fields_.push_back(std::move(fv));
        }
        v.schema_ = FieldSchema(std::move(specs));
        v.total_ = expected;
        if (j.at("total_feature_count").get<std::size_t>() != v.total_)
            throw ConfigError("vocabulary total_feature_count disagrees with its fields");
        return v;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed vocabulary: ") + e.what());
    }
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open vocabulary file " + path.string());
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("malformed vocabulary file " + path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------- encoding

EncodedInstance encode(const RawRecord& record, const Vocabulary& vocab) {
    const auto& schema = vocab.schema();
    if (record.values.size() != schema.size())
        throw DataError("record has " + std::to_string(record.values.size()) + " fields, expected " +
                        std::to_string(schema.size()) + where(record.line, {}));
    EncodedInstance inst;
    inst.label = record.label;
    inst.features.reserve(schema.size());
    for (std::size_t f = 0; f < schema.size(); ++f)
        inst.features.push_back(vocab.lookup(f, tokenize(record.values[f], schema[f].kind, record.line, schema[f].name)));
    return inst;
}

std::vector<EncodedInstance> encode_all(std::span<const RawRecord> records, const Vocabulary& vocab) {
    std::vector<EncodedInstance> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(encode(r, vocab));
    return out;
}

RawRecord parse_tsv_line(const std::string& line, std::size_t field_count, std::size_t line_no) {
    std::vector<std::string> cols;
    std::size_t start = 0;
    std::string_view s = line;
    if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
    while (true) {
        const auto tab = s.find('\t', start);
        cols.emplace_back(s.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
        if (tab == std::string_view::npos) break;
        start = tab + 1;
    }
    if (cols.size() != field_count + 1)
        throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(field_count + 1) +
                        " columns (label + fields), got " + std::to_string(cols.size()));
    RawRecord r;
    if (cols[0] == "0")
        r.label = 0;
    else if (cols[0] == "1")
        r.label = 1;
    else
        throw DataError("line " + std::to_string(line_no) + ": label must be 0 or 1, got '" + cols[0] + "'");
    r.values.assign(cols.begin() + 1, cols.end());
    r.line = line_no;
    return r;
}

std::vector<RawRecord> read_tsv(std::istream& in, std::size_t field_count) {
    std::vector<RawRecord> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty() || line == "\r") continue;
        out.push_back(parse_tsv_line(line, field_count, n));
    }
    return out;
}

std::vector<RawRecord> read_tsv_file(const std::filesystem::path& path, std::size_t field_count) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file " + path.string());
    return read_tsv(in, field_count);
}

DatasetSplit split_dataset(std::vector<EncodedInstance> instances, std::uint64_t seed) {
    const std::size_t n = instances.size();
    if (n < 10) throw DataError("need at least 10 instances to split, got " + std::to_string(n));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    const std::size_t n_train = n * 8 / 10;
    const std::size_t n_val = n / 10;
    DatasetSplit s;
    s.split_seed = seed;
    for (std::size_t k = 0; k < n; ++k) {
        auto& dst = k < n_train ? s.train : (k < n_train + n_val ? s.validation : s.test);
        dst.push_back(std::move(instances[order[k]]));
    }
    return s;
}

}  // namespace fignn
