#pragma once

// The `train` command: classifier first, then one autoencoder per z_dims,
// writing model files, per-epoch logs and a checksum list.

#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "aesc/harness/experiment.hpp"
#include "aesc/training.hpp"

namespace aesc::harness {

struct TrainingPlan {
    DatasetName dataset = DatasetName::mnist;
    std::vector<std::size_t> z_dims{40};
    std::uint64_t seed = 2022;
    training::TrainConfig autoencoder;
    training::LossConfig loss;
    training::TrainConfig classifier;
    std::size_t train_limit = 0;
    std::size_t test_limit = 0;
    bool reuse_classifier = false;

    static TrainingPlan from(const ConfigDoc& doc) {
        TrainingPlan p;
        p.dataset = data::parse_dataset(doc.get("dataset", "mnist"));
        p.z_dims = doc.get_sizes("z_dims", {p.dataset == DatasetName::mnist ? 40u : 8u});
        p.seed = doc.get_size("seed", p.seed);
        p.autoencoder = training::TrainConfig::for_dataset(p.dataset);
        p.autoencoder.lr = doc.get_double("lr", p.autoencoder.lr);
        p.autoencoder.batch_size = doc.get_size("batch_size", p.autoencoder.batch_size);
        p.autoencoder.max_epochs = doc.get_size("max_epochs", p.autoencoder.max_epochs);
        p.autoencoder.patience = doc.get_size("patience", p.autoencoder.patience);
        p.loss = training::LossConfig::for_dataset(p.dataset);
        p.loss.gamma = doc.get_double("gamma", p.loss.gamma);
        const std::string rec = doc.get("reconstruction", p.loss.reconstruction == training::ReconstructionKind::bce ? "bce" : "mse");
        if (rec != "bce" && rec != "mse") throw UsageError("reconstruction must be bce or mse");
        p.loss.reconstruction = rec == "bce" ? training::ReconstructionKind::bce : training::ReconstructionKind::mse;
        p.classifier = training::TrainConfig::classifier_defaults(p.dataset);
        p.classifier.lr = doc.get_double("classifier_lr", p.classifier.lr);
        p.classifier.batch_size = doc.get_size("classifier_batch_size", p.classifier.batch_size);
        p.classifier.max_epochs = doc.get_size("classifier_epochs", p.classifier.max_epochs);
        p.classifier.patience = doc.get_size("classifier_patience", p.classifier.patience);
        p.train_limit = doc.get_size("train_limit", 0);
        p.test_limit = doc.get_size("test_limit", 0);
        p.reuse_classifier = doc.get_bool("reuse_classifier", false);
        p.validate();
        return p;
    }

    void validate() const {
        if (z_dims.empty()) throw UsageError("z_dims is empty");
        for (std::size_t z : z_dims) models::autoencoder_spec(dataset, z);
        loss.validate();
        for (const auto* c : {&autoencoder, &classifier}) {
            if (!(c->lr > 0.0)) throw UsageError("learning rates must be positive");
            if (c->batch_size == 0 || c->max_epochs == 0 || c->patience == 0)
                throw UsageError("batch sizes, epoch counts and patience must be positive");
        }
    }
};

struct TrainingOutcome {
    double classifier_test_accuracy = 0.0;
    std::vector<training::TrainLog> logs; // one per z_dims, in plan order
    std::vector<std::filesystem::path> files;
};

// Every key understood by `train` or `run`; config files are shared.
inline bool known_config_key(const std::string& key) {
    static const std::set<std::string> keys{
        "dataset",       "z_dims",         "channel",          "snr_db",          "frames",
        "seed",          "schemes",        "codec_command",    "codec_quality",   "code_bits",
        "param_bits",    "amortize_decoder", "service_mapping", "taps",           "rayleigh_taps",
        "threads",       "samples",        "models_dir",       "data_dir",        "lr",
        "batch_size",    "max_epochs",     "patience",         "gamma",           "reconstruction",
        "classifier_lr", "classifier_batch_size", "classifier_epochs", "classifier_patience", "train_limit",
        "test_limit",    "reuse_classifier"};
    return keys.count(key) != 0;
}

inline std::string hex32(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%08x", v);
    return buf;
}

inline TrainingOutcome run_training(const TrainingPlan& plan, const std::filesystem::path& data_dir,
                                    const std::filesystem::path& out_dir, const Logger& log = {}) {
    data::LoadOptions lo;
    lo.split_seed = plan.seed;
    lo.train_limit = plan.train_limit;
    lo.test_limit = plan.test_limit;
    const auto splits = data::load_dataset(plan.dataset, data_dir, lo);
    if (log)
        log("loaded " + std::string(data::dataset_name(plan.dataset)) + ": " + std::to_string(splits.train.size()) + " train, " +
            std::to_string(splits.val.size()) + " val, " + std::to_string(splits.test.size()) + " test");

    const auto models_dir = out_dir / "models";
    const auto logs_dir = out_dir / "logs";
    std::filesystem::create_directories(models_dir);
    std::filesystem::create_directories(logs_dir);
    TrainingOutcome out;

    const auto cls_path = classifier_path(models_dir, plan.dataset);
    models::Classifier classifier;
    if (plan.reuse_classifier && std::filesystem::exists(cls_path)) {
        classifier = models::classifier_from_file(models::load_model(cls_path));
        classifier.require_trained("reuse_classifier");
        out.classifier_test_accuracy = metrics::accuracy(models::classify_batch(splits.test.images, classifier), splits.test.labels);
        if (log) log("reusing classifier " + cls_path.string());
    } else {
        auto ccfg = plan.classifier;
        ccfg.seed = derive_seed(plan.seed, {0xC1A5});
        std::string clog = "epoch,train_loss,val_accuracy\n";
        const auto run = training::train_classifier(splits, ccfg, [&](std::size_t e, double loss, double acc) {
            char line[128];
            std::snprintf(line, sizeof line, "%zu,%.9g,%.9g\n", e, loss, acc);
            clog += line;
            if (log) log("classifier epoch " + std::to_string(e) + " loss " + format_number(loss) + " val_acc " + format_number(acc));
        });
        classifier = run.model;
        out.classifier_test_accuracy = run.test_accuracy;
        models::save_model(cls_path, models::to_model_file(classifier));
        write_text(logs_dir / (std::string(data::dataset_name(plan.dataset)) + "_classifier.csv"), clog);
    }
    out.files.push_back(cls_path);
    if (log) log("classifier test accuracy " + format_number(out.classifier_test_accuracy));

    for (std::size_t z : plan.z_dims) {
        auto acfg = plan.autoencoder;
        acfg.seed = derive_seed(plan.seed, {0xAE00u, z});
        auto run = training::train_autoencoder(splits, z, plan.loss, acfg, classifier, [&](const training::EpochRecord& r) {
            if (log)
                log("z=" + std::to_string(z) + " epoch " + std::to_string(r.epoch) + " val_recon " + format_number(r.val_recon) +
                    " val_sem " + format_number(r.val_sem));
        });
        const auto paths = model_paths(models_dir, plan.dataset, z);
        models::save_model(paths.encoder, models::to_model_file(run.model, models::ModelRole::encoder));
        models::save_model(paths.decoder, models::to_model_file(run.model, models::ModelRole::decoder));
        const std::string stem = std::string(data::dataset_name(plan.dataset)) + "_z" + std::to_string(z);
        run.log.write_csv(logs_dir / (stem + "_train.csv"));
        write_text(logs_dir / (stem + "_summary.txt"),
                   "best_epoch " + std::to_string(run.log.best_epoch) + "\nepochs " + std::to_string(run.log.epochs.size()) +
                       "\nearly_stopped " + (run.log.early_stopped ? "1" : "0") + "\n");
        if (log) log("z=" + std::to_string(z) + " best epoch " + std::to_string(run.log.best_epoch));
        out.files.push_back(paths.encoder);
        out.files.push_back(paths.decoder);
        out.logs.push_back(std::move(run.log));
    }

    std::string sums;
    for (const auto& f : out.files) sums += hex32(models::model_checksum(models::read_bytes(f))) + "  " + f.filename().string() + "\n";
    write_text(models_dir / "checksums.txt", sums);
    return out;
}

} // namespace aesc::harness
