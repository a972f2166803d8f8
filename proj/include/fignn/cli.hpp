#pragma once

#include "fignn/checkpoint.hpp"
#include "fignn/featurestore.hpp"
#include "fignn/metrics.hpp"
#include "fignn/model.hpp"
#include "fignn/training.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace fignn::cli {

enum ExitCode : int { kOk = 0, kDataError = 1, kConfigError = 2, kInternalError = 3 };

/// Settings for `train`, read from a JSON config and then overridden by flags.
struct TrainSettings {
    std::filesystem::path data;
    std::filesystem::path vocab;
    std::filesystem::path out = "fignn-out";
    std::optional<std::uint64_t> split_seed;
    ModelConfig model;  // field_count and feature_count come from the vocabulary
    training::TrainingConfig training;

    static TrainSettings from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
    static TrainSettings load(const std::filesystem::path& config_path);
};

struct TrainOverrides {
    std::optional<std::string> model;
    std::optional<std::string> ablation;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> steps;
    std::optional<std::size_t> state_dim;
    std::optional<std::size_t> heads;
    std::optional<std::filesystem::path> out;

    void apply(TrainSettings& s) const;
};

void cmd_build_vocab(const std::filesystem::path& data, const std::filesystem::path& schema, std::size_t min_count,
                     const std::filesystem::path& out);

struct TrainOutcome {
    std::filesystem::path checkpoint;
    std::filesystem::path history;
    metrics::EvalReport validation;
    metrics::EvalReport test;
};

TrainOutcome cmd_train(const TrainSettings& settings, std::ostream& log);

// Checkpoint plus the vocabulary it was trained with (hash verified).
struct LoadedModel {
    io::Checkpoint checkpoint;
    Vocabulary vocab;
    std::unique_ptr<Model> model;
};
LoadedModel load_model(const std::filesystem::path& checkpoint, const std::optional<std::filesystem::path>& vocab);

metrics::EvalReport cmd_evaluate(const LoadedModel& loaded, const std::filesystem::path& data, std::ostream& out);

// One line per input line: the probability, or empty for a malformed line.
// Returns the number of malformed lines.
std::size_t cmd_predict(const LoadedModel& loaded, const std::filesystem::path& data, const std::filesystem::path& out,
                        std::ostream& err);

void cmd_explain(const LoadedModel& loaded, const std::filesystem::path& data, const std::string& mode,
                 const std::filesystem::path& out_dir, std::size_t cases = 4);

// Full command-line entry point; returns the process exit code.
int run(int argc, char** argv);

}  // namespace fignn::cli
