#include "fignn/cli.hpp"

#include "fignn/errors.hpp"
#include "fignn/explain.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fignn::cli {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- settings

TrainSettings TrainSettings::from_json(const nlohmann::json& j, const fs::path& base_dir) {
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base_dir / p; };
    TrainSettings s;
    try {
        s.data = resolve(j.at("data").get<std::string>());
        s.vocab = resolve(j.at("vocab").get<std::string>());
        if (j.contains("out")) s.out = resolve(j.at("out").get<std::string>());
        if (j.contains("split_seed")) s.split_seed = j.at("split_seed").get<std::uint64_t>();
        const auto mj = j.value("model", nlohmann::json::object());
        nlohmann::json full = {{"kind", mj.value("kind", std::string("fignn"))}, {"field_count", 0}, {"feature_count", 0}};
        for (const auto& [k, v] : mj.items())
            if (k != "kind") full[k] = v;
        s.model = ModelConfig::from_json(full);
        s.training = training::TrainingConfig::from_json(j.value("training", nlohmann::json::object()));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed train config: ") + e.what());
    }
    return s;
}

TrainSettings TrainSettings::load(const fs::path& config_path) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config " + config_path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("malformed config " + config_path.string() + ": " + e.what());
    }
    return from_json(j, config_path.parent_path());
}

void TrainOverrides::apply(TrainSettings& s) const {
    if (model) s.model.kind = parse_model_kind(*model);
    if (ablation) s.model.ablation = AblationConfig::parse(*ablation);
    if (seed) s.training.seed = *seed;
    if (steps) s.model.steps = *steps;
    if (state_dim) s.model.state_dim = *state_dim;
    if (heads) s.model.heads = *heads;
    if (out) s.out = *out;
    if (s.model.kind != ModelKind::fignn && s.model.ablation.any())
        throw ConfigError("ablation flags apply to the fignn model only");
}

// ---------------------------------------------------------------- commands

void cmd_build_vocab(const fs::path& data, const fs::path& schema_path, std::size_t min_count, const fs::path& out) {
    const auto schema = FieldSchema::load(schema_path);
    const auto records = read_tsv_file(data, schema.size());
    const auto vocab = Vocabulary::build(records, schema, min_count);
    vocab.save(out);
    spdlog::info("vocabulary: {} fields, {} features from {} records", vocab.field_count(),
                 vocab.total_feature_count(), records.size());
}

TrainOutcome cmd_train(const TrainSettings& settings, std::ostream& log) {
    const std::string vocab_bytes = io::read_file(settings.vocab);
    const auto vocab = Vocabulary::from_json([&] {
        try {
            return nlohmann::json::parse(vocab_bytes);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError("malformed vocabulary " + settings.vocab.string() + ": " + e.what());
        }
    }());
    const auto records = read_tsv_file(settings.data, vocab.field_count());
    auto split = split_dataset(encode_all(records, vocab), settings.split_seed.value_or(settings.training.seed));

    ModelConfig mc = settings.model;
    mc.field_count = vocab.field_count();
    mc.feature_count = vocab.total_feature_count();
    const auto model = make_model(mc);
    spdlog::info("training {} on {} / {} / {} instances ({} parameters)", to_string(mc.kind), split.train.size(),
                 split.validation.size(), split.test.size(), training::count_parameters(mc));

    auto result = training::train(*model, split, settings.training, [](const training::EpochRecord& e) {
        spdlog::info("epoch {}: train_loss={:.5f} val_auc={:.5f} val_logloss={:.5f} ({:.1f}s)", e.epoch, e.train_loss,
                     e.val_auc, e.val_logloss, e.seconds);
    });

    fs::create_directories(settings.out);
    TrainOutcome outcome;
    outcome.checkpoint = settings.out / "checkpoint.fgc";
    outcome.history = settings.out / "history.csv";
    io::Checkpoint ckpt{mc,
                        vocab.schema().names(),
                        io::hash_hex(io::fnv1a64(vocab_bytes)),
                        fs::absolute(settings.vocab).lexically_normal().string(),
                        {{"config", settings.training.to_json()}, {"best_epoch", result.best_epoch}},
                        result.parameters};
    io::save_checkpoint(outcome.checkpoint, ckpt);
    {
        std::ofstream h(outcome.history, std::ios::binary);
        h << result.history.to_csv();
    }
    outcome.validation = metrics::evaluate(*model, result.parameters, split.validation);
    outcome.test = metrics::evaluate(*model, result.parameters, split.test);
    log << "best epoch " << result.best_epoch << "\n"
        << "validation auc=" << outcome.validation.auc << " logloss=" << outcome.validation.logloss << "\n"
        << "test auc=" << outcome.test.auc << " logloss=" << outcome.test.logloss << "\n";
    return outcome;
}

LoadedModel load_model(const fs::path& checkpoint, const std::optional<fs::path>& vocab_override) {
    LoadedModel lm;
    lm.checkpoint = io::load_checkpoint(checkpoint);
    const fs::path vocab_path = vocab_override.value_or(fs::path(lm.checkpoint.vocab_path));
    const std::string bytes = io::read_file(vocab_path);
    if (io::hash_hex(io::fnv1a64(bytes)) != lm.checkpoint.vocab_hash)
        throw ConfigError("vocabulary " + vocab_path.string() + " does not match the checkpoint (hash " +
                          io::hash_hex(io::fnv1a64(bytes)) + " vs " + lm.checkpoint.vocab_hash + ")");
    try {
        lm.vocab = Vocabulary::from_json(nlohmann::json::parse(bytes));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("malformed vocabulary " + vocab_path.string() + ": " + e.what());
    }
    lm.model = make_model(lm.checkpoint.model);
    const auto expected = lm.model->init_parameters(0);
    const auto& got = lm.checkpoint.parameters;
    if (expected.size() != got.size()) throw InvariantError("checkpoint parameter set does not match its model config");
    for (ParamId p = 0; p < got.size(); ++p)
        if (expected.name(p) != got.name(p) || !expected.value(p).same_shape(got.value(p)))
            throw InvariantError("checkpoint parameter '" + got.name(p) + "' does not match its model config");
    return lm;
}

metrics::EvalReport cmd_evaluate(const LoadedModel& lm, const fs::path& data, std::ostream& out) {
    const auto instances = encode_all(read_tsv_file(data, lm.vocab.field_count()), lm.vocab);
    const auto report = metrics::evaluate(*lm.model, lm.checkpoint.parameters, instances);
    out << report.to_json().dump(2) << "\n\n"
        << metrics::comparison_table({{to_string(lm.model->kind()), report}}, to_string(lm.model->kind()));
    return report;
}

std::size_t cmd_predict(const LoadedModel& lm, const fs::path& data, const fs::path& out_path, std::ostream& err) {
    std::ifstream in(data);
    if (!in) throw DataError("cannot open data file " + data.string());
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + out_path.string());
    const std::size_t m = lm.vocab.field_count();
    std::string line;
    std::size_t line_no = 0, bad = 0;
    char buf[32];
    while (std::getline(in, line)) {
        ++line_no;
        try {
            const auto tabs = static_cast<std::size_t>(std::count(line.begin(), line.end(), '\t'));
            // with m columns there is no label; pad one so the TSV parser applies
            const auto record = parse_tsv_line(tabs + 1 == m ? "0\t" + line : line, m, line_no);
            const double p = lm.model->predict(lm.checkpoint.parameters, encode(record, lm.vocab));
            std::snprintf(buf, sizeof buf, "%.17g", p);
            out << buf << '\n';
        } catch (const DataError& e) {
            ++bad;
            err << e.what() << '\n';
            out << '\n';
        }
    }
    return bad;
}

void cmd_explain(const LoadedModel& lm, const fs::path& data, const std::string& mode, const fs::path& out_dir,
                 std::size_t cases) {
    const auto* fignn = dynamic_cast<const FiGnnModel*>(lm.model.get());
    if (!fignn)
        throw ConfigError("explain needs a fignn checkpoint; " + to_string(lm.model->kind()) +
                          " has no edge or node attention to export");
    if (mode != "global" && mode != "case") throw ConfigError("explain mode must be 'global' or 'case'");
    const auto instances = encode_all(read_tsv_file(data, lm.vocab.field_count()), lm.vocab);
    const auto& names = lm.checkpoint.field_names;
    const auto global = explain::global_explanation(*fignn, lm.checkpoint.parameters, instances, names);
    if (mode == "global")
        explain::write_global(out_dir, global);
    else
        explain::write_cases(out_dir, global,
                             explain::case_explanations(*fignn, lm.checkpoint.parameters, instances, names, cases));
}

// ---------------------------------------------------------------- entry point

namespace {

void configure_logging() {
    spdlog::set_pattern("[%l] %v");
    if (const char* lvl = std::getenv("FIGNN_LOG_LEVEL"))
        spdlog::set_level(spdlog::level::from_str(lvl));
    else
        spdlog::set_level(spdlog::level::info);
}

}  // namespace

int run(int argc, char** argv) {
    configure_logging();
    CLI::App app{"Fi-GNN click-through-rate models: vocabulary, training, evaluation, prediction, explanations"};
    app.require_subcommand(1);

    fs::path data, schema, out, config, ckpt_path;
    std::optional<fs::path> vocab;
    std::size_t min_count = 1;
    auto* bv = app.add_subcommand("build-vocab", "Build a vocabulary from a TSV file");
    bv->add_option("--data", data, "TSV input")->required();
    bv->add_option("--schema", schema, "JSON schema")->required();
    bv->add_option("--min-count", min_count, "Drop tokens seen fewer times")->check(CLI::PositiveNumber);
    bv->add_option("--out", out, "Vocabulary JSON output")->required();

    TrainOverrides ov;
    auto* tr = app.add_subcommand("train", "Train a model from a JSON config");
    tr->add_option("--config", config, "Training config JSON")->required();
    tr->add_option("--model", ov.model, "lr | fm | fignn");
    tr->add_option("--ablation", ov.ablation, "Comma list: no-edge-attention,no-edge-transform,no-residual");
    tr->add_option("--seed", ov.seed, "Seed for init, batching and split");
    tr->add_option("--steps", ov.steps, "Interaction steps T");
    tr->add_option("--state-dim", ov.state_dim, "Node state dimension d'");
    tr->add_option("--heads", ov.heads, "Attention heads");
    tr->add_option("--out", ov.out, "Output directory");

    auto* ev = app.add_subcommand("evaluate", "AUC and logloss of a checkpoint on a TSV file");
    ev->add_option("--checkpoint", ckpt_path)->required();
    ev->add_option("--data", data)->required();
    ev->add_option("--vocab", vocab, "Override the vocabulary path stored in the checkpoint");
    ev->add_option("--out", out, "Also write the JSON report here");

    auto* pr = app.add_subcommand("predict", "Per-line click probabilities");
    pr->add_option("--checkpoint", ckpt_path)->required();
    pr->add_option("--data", data)->required();
    pr->add_option("--vocab", vocab);
    pr->add_option("--out", out)->required();

    std::string mode = "global";
    std::size_t cases = 4;
    auto* ex = app.add_subcommand("explain", "Export edge and node attention heat maps as CSV");
    ex->add_option("--checkpoint", ckpt_path)->required();
    ex->add_option("--data", data)->required();
    ex->add_option("--vocab", vocab);
    ex->add_option("--mode", mode, "global | case")->check(CLI::IsMember({"global", "case"}));
    ex->add_option("--cases", cases, "Instances exported in case mode");
    ex->add_option("--out", out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*bv) {
            cmd_build_vocab(data, schema, min_count, out);
        } else if (*tr) {
            auto settings = TrainSettings::load(config);
            ov.apply(settings);
            cmd_train(settings, std::cout);
        } else if (*ev) {
            std::ostringstream report;
            const auto r = cmd_evaluate(load_model(ckpt_path, vocab), data, report);
            std::cout << report.str();
            if (!out.empty()) {
                std::ofstream f(out, std::ios::binary);
                f << r.to_json().dump(2) << "\n";
            }
        } else if (*pr) {
            const auto bad = cmd_predict(load_model(ckpt_path, vocab), data, out, std::cerr);
            if (bad > 0) {
                spdlog::error("{} malformed line(s) skipped", bad);
                return kDataError;
            }
        } else if (*ex) {
            cmd_explain(load_model(ckpt_path, vocab), data, mode, out, cases);
        }
    } catch (const DataError& e) {
        spdlog::error("{}", e.what());
        return kDataError;
    } catch (const ConfigError& e) {
        spdlog::error("{}", e.what());
        return kConfigError;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kInternalError;
    }
    return kOk;
}

}  // namespace fignn::cli
