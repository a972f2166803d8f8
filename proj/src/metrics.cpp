#include "fignn/metrics.hpp"

#include "fignn/errors.hpp"
#include "fignn/random.hpp"
#include "fignn/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace fignn::metrics {

double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        throw ShapeError("auc: " + std::to_string(scores.size()) + " scores vs " + std::to_string(labels.size()) +
                         " labels");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0.0;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        // ranks i+1..j share their average; kept doubled to stay integral
        const std::size_t doubled_avg = (i + 1) + j;
        for (std::size_t k = i; k < j; ++k) {
            const int y = labels[order[k]];
            if (y != 0 && y != 1) throw DataError("auc: labels must be 0 or 1");
            if (y == 1) {
                pos_rank_sum += static_cast<double>(doubled_avg);
                ++pos;
            }
        }
        i = j;
    }
    const std::size_t neg = n - pos;
    if (pos == 0 || neg == 0) throw DataError("auc needs both positive and negative labels");
    // U = R+ - P(P+1)/2, computed on doubled ranks
    const double u2 = pos_rank_sum - static_cast<double>(pos) * static_cast<double>(pos + 1);
    return u2 / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

double relative_improvement(double value, double base) {
    if (base == 0.0) throw DataError("relative improvement against a zero base");
    return std::abs(value - base) / base * 100.0;
}

std::string format_percent(double percent) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f%%", percent);
    return buf;
}

nlohmann::json EvalReport::to_json() const {
    return {{"auc", auc}, {"logloss", logloss}, {"n_instances", n_instances}};
}

EvalReport evaluate(const Model& model, const ParameterStore& params, const std::vector<EncodedInstance>& instances) {
    if (instances.empty()) throw DataError("evaluate: no instances");
    const auto probs = model.predict_all(params, instances);
    std::vector<int> labels;
    labels.reserve(instances.size());
    for (const auto& i : instances) labels.push_back(i.label);
    return {auc(probs, labels), scoring::log_loss(probs, labels), instances.size()};
}

std::vector<EncodedInstance> subsample(const std::vector<EncodedInstance>& instances, std::size_t n,
                                       std::uint64_t seed) {
    if (n >= instances.size()) return instances;
    std::vector<std::size_t> order(instances.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<EncodedInstance> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) out.push_back(instances[order[k]]);
    return out;
}

std::string comparison_table(const std::vector<ComparisonRow>& rows, const std::string& reference) {
    auto ref = std::find_if(rows.begin(), rows.end(), [&](const ComparisonRow& r) { return r.name == reference; });
    if (ref == rows.end()) throw ConfigError("comparison table: reference '" + reference + "' not among rows");
    std::size_t name_w = 5;
    for (const auto& r : rows) name_w = std::max(name_w, r.name.size());
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-*s  %8s  %8s  %8s  %10s\n", static_cast<int>(name_w), "Model", "AUC", "RI-AUC",
                  "Logloss", "RI-Logloss");
    os << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-*s  %8.4f  %8s  %8.4f  %10s\n", static_cast<int>(name_w), r.name.c_str(),
                      r.report.auc, format_percent(relative_improvement(r.report.auc, ref->report.auc)).c_str(),
                      r.report.logloss,
                      format_percent(relative_improvement(r.report.logloss, ref->report.logloss)).c_str());
        os << buf;
    }
    return os.str();
}

}  // namespace fignn::metrics
