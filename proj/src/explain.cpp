#include "fignn/explain.hpp"

#include "fignn/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace fignn::explain {

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
}

CaseExplanation explain_one(const FiGnnModel& model, const ParameterStore& params, const EncodedInstance& inst,
                            const std::vector<std::string>& names) {
    ad::Tape tape;
    const auto f = model.forward(tape, params, inst);
    const auto pred = scoring::to_prediction(f.prediction);
    return {{names, f.adjacency.value(), pred.node_weights}, pred.probability, inst.label};
}

}  // namespace

ExplanationBundle global_explanation(const FiGnnModel& model, const ParameterStore& params,
                                     const std::vector<EncodedInstance>& instances,
                                     const std::vector<std::string>& field_names) {
    const std::size_t m = model.config().field_count;
    if (field_names.size() != m) throw ConfigError("field name count does not match the model");
    if (instances.empty()) throw DataError("explanation needs at least one instance");
    ExplanationBundle out{field_names, Tensor(m, m), std::vector<double>(m, 0.0)};
    for (const auto& inst : instances) {
        const auto c = explain_one(model, params, inst, field_names);
        for (std::size_t k = 0; k < m * m; ++k) out.edge_heatmap[k] += c.bundle.edge_heatmap[k];
        for (std::size_t i = 0; i < m; ++i) out.node_weights[i] += c.bundle.node_weights[i];
    }
    const double inv = 1.0 / static_cast<double>(instances.size());
    for (auto& v : out.edge_heatmap.values()) v *= inv;
    for (auto& v : out.node_weights) v *= inv;
    return out;
}

std::vector<CaseExplanation> case_explanations(const FiGnnModel& model, const ParameterStore& params,
                                               const std::vector<EncodedInstance>& instances,
                                               const std::vector<std::string>& field_names, std::size_t count) {
    if (field_names.size() != model.config().field_count)
        throw ConfigError("field name count does not match the model");
    std::vector<CaseExplanation> out;
    for (std::size_t k = 0; k < std::min(count, instances.size()); ++k)
        out.push_back(explain_one(model, params, instances[k], field_names));
    return out;
}

std::string heatmap_csv(const ExplanationBundle& b) {
    std::ostringstream os;
    os << "field";
    for (const auto& n : b.field_names) os << ',' << csv_field(n);
    os << '\n';
    for (std::size_t i = 0; i < b.field_names.size(); ++i) {
        os << csv_field(b.field_names[i]);
        for (std::size_t j = 0; j < b.field_names.size(); ++j) os << ',' << num(b.edge_heatmap(i, j));
        os << '\n';
    }
    return os.str();
}

std::string node_weights_csv(const std::vector<std::string>& field_names, const std::vector<std::string>& column_names,
                             const std::vector<std::vector<double>>& columns) {
    std::ostringstream os;
    os << "field";
    for (const auto& c : column_names) os << ',' << csv_field(c);
    os << '\n';
    for (std::size_t i = 0; i < field_names.size(); ++i) {
        os << csv_field(field_names[i]);
        for (const auto& col : columns) os << ',' << num(col.at(i));
        os << '\n';
    }
    return os.str();
}

void write_global(const std::filesystem::path& dir, const ExplanationBundle& bundle) {
    std::filesystem::create_directories(dir);
    write_text(dir / "edge_heatmap_global.csv", heatmap_csv(bundle));
    write_text(dir / "node_weights_global.csv", node_weights_csv(bundle.field_names, {"global"}, {bundle.node_weights}));
}

void write_cases(const std::filesystem::path& dir, const ExplanationBundle& global,
                 const std::vector<CaseExplanation>& cases) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> names{"global"};
    std::vector<std::vector<double>> cols{global.node_weights};
    for (std::size_t k = 0; k < cases.size(); ++k) {
        write_text(dir / ("edge_heatmap_case_" + std::to_string(k + 1) + ".csv"), heatmap_csv(cases[k].bundle));
        names.push_back("case_" + std::to_string(k + 1));
        cols.push_back(cases[k].bundle.node_weights);
    }
    std::string text = node_weights_csv(global.field_names, names, cols);
    text += "prediction,";
    for (std::size_t k = 0; k < cases.size(); ++k) text += "," + num(cases[k].probability);
    text += "\nlabel,";
    for (std::size_t k = 0; k < cases.size(); ++k) text += "," + std::to_string(cases[k].label);
    text += "\n";
    write_text(dir / "node_weights_cases.csv", text);
}

}  // namespace fignn::explain
