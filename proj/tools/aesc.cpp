// Command-line front end: train, run, report.

#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "aesc/harness/report.hpp"
#include "aesc/harness/train.hpp"

namespace fs = std::filesystem;
using namespace aesc;
using namespace aesc::harness;

namespace {

constexpr int kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitDivergence = 3;

struct CommonOptions {
    std::string config;
    std::string data_dir;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config, "key = value configuration file");
    cmd->add_option("--data-dir", o.data_dir, "dataset directory (default: bundled data/<dataset>)");
    cmd->add_option("--seed", o.seed, "master seed (overrides the config)");
    cmd->add_option("--out", o.out, "output directory")->capture_default_str();
}

ConfigDoc load_doc(const CommonOptions& o) {
    ConfigDoc doc = o.config.empty() ? ConfigDoc{} : ConfigDoc::load(o.config);
    if (o.seed) doc.set("seed", std::to_string(*o.seed));
    return doc;
}

fs::path data_dir_for(const CommonOptions& o, const ConfigDoc& doc) {
    if (!o.data_dir.empty()) return o.data_dir;
    if (doc.has("data_dir")) return doc.get("data_dir", "");
    return fs::path(AESC_DATA_ROOT) / std::string(data::dataset_name(data::parse_dataset(doc.get("dataset", "mnist"))));
}

void warn_unused(const ConfigDoc& doc) {
    for (const auto& k : doc.unused_keys())
        if (!known_config_key(k)) std::cerr << "warning: unknown config key '" << k << "'\n";
}

const Logger stderr_log = [](const std::string& s) { std::cerr << s << std::endl; };

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Autoencoder semantic image transmission simulator"};
    app.require_subcommand(1);

    CommonOptions train_o, run_o, report_o;
    std::string train_dataset, train_z;
    auto* train = app.add_subcommand("train", "train the classifier and one autoencoder per z_dims");
    add_common(train, train_o);
    train->add_option("--dataset", train_dataset, "mnist or cifar10");
    train->add_option("--z-dims", train_z, "comma-separated code sizes");

    std::string models_dir;
    bool amortize = false;
    auto* run = app.add_subcommand("run", "evaluate the experiment grid and write results.csv");
    add_common(run, run_o);
    run->add_option("--models", models_dir, "directory with trained model files (default: <out>/models)");
    run->add_flag("--amortize-decoder", amortize, "send decoder parameters once per session");

    std::string results;
    auto* report = app.add_subcommand("report", "render SVG charts and image mosaics from results.csv");
    add_common(report, report_o);
    report->add_option("--results", results, "results file (default: <out>/results.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*train) {
            ConfigDoc doc = load_doc(train_o);
            if (!train_dataset.empty()) doc.set("dataset", train_dataset);
            if (!train_z.empty()) doc.set("z_dims", train_z);
            const auto plan = TrainingPlan::from(doc);
            const auto dir = data_dir_for(train_o, doc);
            warn_unused(doc);
            const auto outcome = run_training(plan, dir, train_o.out, stderr_log);
            for (const auto& f : outcome.files) std::cout << f.string() << "\n";
        } else if (*run) {
            ConfigDoc doc = load_doc(run_o);
            if (amortize) doc.set("amortize_decoder", "true");
            if (!doc.has("codec_command")) doc.set("codec_command", AESC_DEFAULT_CODEC);
            const auto cfg = ExperimentConfig::from(doc);
            const auto dir = data_dir_for(run_o, doc);
            fs::path mdir = models_dir.empty() ? fs::path(doc.get("models_dir", (fs::path(run_o.out) / "models").string()))
                                               : fs::path(models_dir);
            warn_unused(doc);
            const auto summary = run_experiment(cfg, dir, mdir, run_o.out, stderr_log);
            std::cout << (fs::path(run_o.out) / "results.csv").string() << " (" << summary.rows.size() << " rows)\n";
        } else if (*report) {
            const fs::path in = results.empty() ? fs::path(report_o.out) / "results.csv" : fs::path(results);
            const auto files = make_report(in, fs::path(report_o.out) / "report");
            for (const auto& f : files.written) std::cout << f.string() << "\n";
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ShapeError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DivergenceError& e) {
        std::cerr << "diverged: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}
