#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "aesc/data.hpp"
#include "aesc/models.hpp"
#include "aesc/nn/adam.hpp"

namespace aesc::training {

using data::DatasetName;

// ---- losses ----

template <typename T>
struct LossValue {
    double value = 0.0;
    BasicTensor<T> grad; // d value / d reconstruction; empty unless requested
};

namespace detail {
template <typename T>
void require_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* what) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(what) + ": shape " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}
} // namespace detail

// Mean squared error over every element.
template <typename T>
LossValue<T> loss_mse(const BasicTensor<T>& target, const BasicTensor<T>& recon, bool want_grad = false) {
    detail::require_same_shape(target, recon, "loss_mse");
    const double n = static_cast<double>(target.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double d = static_cast<double>(recon[i]) - static_cast<double>(target[i]);
        acc += d * d;
    }
    LossValue<T> out{acc / n, {}};
    if (want_grad) {
        out.grad = BasicTensor<T>(recon.shape());
        for (std::size_t i = 0; i < recon.size(); ++i) out.grad[i] = static_cast<T>(2.0 * (double(recon[i]) - double(target[i])) / n);
    }
    return out;
}

inline constexpr double kBceClamp = 1e-12;

// Binary cross-entropy averaged over every element; log arguments are clamped
// at 1e-12. Reconstructions must lie in [0, 1].
template <typename T>
LossValue<T> loss_bce(const BasicTensor<T>& target, const BasicTensor<T>& recon, bool want_grad = false) {
    detail::require_same_shape(target, recon, "loss_bce");
    const double n = static_cast<double>(target.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double p = recon[i];
        if (!(p >= 0.0 && p <= 1.0)) throw DivergenceError("loss_bce: reconstruction value outside [0,1]");
        const double s = target[i];
        acc -= s * std::log(std::max(p, kBceClamp)) + (1.0 - s) * std::log(std::max(1.0 - p, kBceClamp));
    }
    LossValue<T> out{acc / n, {}};
    if (want_grad) {
        out.grad = BasicTensor<T>(recon.shape());
        for (std::size_t i = 0; i < recon.size(); ++i) {
            const double p = recon[i], s = target[i];
            out.grad[i] = static_cast<T>((-s / std::max(p, kBceClamp) + (1.0 - s) / std::max(1.0 - p, kBceClamp)) / n);
        }
    }
    return out;
}

// MSE between penultimate classifier features of the originals (given here
// as precomputed `target_features`) and of the reconstructions. The gradient
// flows into the reconstructions only; the classifier is not modified.
template <typename T>
LossValue<T> loss_semantic_features(const BasicTensor<T>& target_features, const BasicTensor<T>& recon,
                                    const models::BasicClassifier<T>& classifier, bool want_grad = false) {
    classifier.require_trained("semantic loss");
    nn::Trace<T> trace;
    const BasicTensor<T> f = classifier.features(recon, want_grad ? &trace : nullptr);
    LossValue<T> mse = loss_mse(target_features, f, want_grad);
    LossValue<T> out{mse.value, {}};
    if (want_grad) out.grad = classifier.net.backward(trace, mse.grad, nullptr);
    return out;
}

template <typename T>
LossValue<T> loss_semantic(const BasicTensor<T>& target, const BasicTensor<T>& recon,
                           const models::BasicClassifier<T>& classifier, bool want_grad = false) {
    detail::require_same_shape(target, recon, "loss_semantic");
    return loss_semantic_features(classifier.features(target), recon, classifier, want_grad);
}

enum class ReconstructionKind : std::uint8_t { mse, bce };

struct LossConfig {
    double gamma = 0.5;
    ReconstructionKind reconstruction = ReconstructionKind::bce;

    static LossConfig for_dataset(DatasetName d) {
        return d == DatasetName::mnist ? LossConfig{0.5, ReconstructionKind::bce} : LossConfig{0.1, ReconstructionKind::mse};
    }

    void validate() const {
        if (!(gamma >= 0.0 && gamma < 1.0)) throw UsageError("gamma must lie in [0, 1)");
    }
};

template <typename T>
LossValue<T> loss_reconstruction(const BasicTensor<T>& target, const BasicTensor<T>& recon, ReconstructionKind kind,
                                 bool want_grad = false) {
    return kind == ReconstructionKind::bce ? loss_bce(target, recon, want_grad) : loss_mse(target, recon, want_grad);
}

// gamma * L_SE + (1 - gamma) * L_recon, with both components reported.
template <typename T>
struct CombinedLoss {
    double value = 0.0;
    double semantic = 0.0;
    double reconstruction = 0.0;
    BasicTensor<T> grad;
};

inline double combine(double gamma, double semantic, double reconstruction) {
    return gamma * semantic + (1.0 - gamma) * reconstruction;
}

template <typename T>
CombinedLoss<T> loss_combined_features(const BasicTensor<T>& target, const BasicTensor<T>& target_features,
                                       const BasicTensor<T>& recon, const LossConfig& cfg,
                                       const models::BasicClassifier<T>& classifier, bool want_grad = false) {
    const LossValue<T> rec = loss_reconstruction(target, recon, cfg.reconstruction, want_grad);
    CombinedLoss<T> out;
    out.reconstruction = rec.value;
    LossValue<T> sem;
    if (cfg.gamma > 0.0) {
        sem = loss_semantic_features(target_features, recon, classifier, want_grad);
        out.semantic = sem.value;
    } else if (classifier.trained) {
        out.semantic = loss_semantic_features(target_features, recon, classifier, false).value;
    }
    out.value = combine(cfg.gamma, out.semantic, out.reconstruction);
    if (want_grad) {
        out.grad = BasicTensor<T>(recon.shape());
        for (std::size_t i = 0; i < recon.size(); ++i)
            out.grad[i] = static_cast<T>((1.0 - cfg.gamma) * double(rec.grad[i]) +
                                         (cfg.gamma > 0.0 ? cfg.gamma * double(sem.grad[i]) : 0.0));
    }
    return out;
}

template <typename T>
CombinedLoss<T> loss_combined(const BasicTensor<T>& target, const BasicTensor<T>& recon, const LossConfig& cfg,
                              const models::BasicClassifier<T>& classifier, bool want_grad = false) {
    return loss_combined_features(target, classifier.trained ? classifier.features(target) : BasicTensor<T>{}, recon, cfg,
                                  classifier, want_grad);
}

// Softmax cross-entropy over 10-way logits, averaged over the batch.
inline LossValue<float> loss_cross_entropy(const Tensor& logits, std::span<const std::uint8_t> labels, bool want_grad) {
    const std::size_t n = labels.size(), k = logits.size() / n;
    LossValue<float> out;
    if (want_grad) out.grad = Tensor(logits.shape());
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto z = logits.data().subspan(i * k, k);
        const double mx = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (float v : z) sum += std::exp(double(v) - mx);
        const double lse = mx + std::log(sum);
        acc += lse - z[labels[i]];
        if (want_grad)
            for (std::size_t j = 0; j < k; ++j)
                out.grad[i * k + j] = static_cast<float>((std::exp(double(z[j]) - lse) - (j == labels[i] ? 1.0 : 0.0)) / double(n));
    }
    out.value = acc / double(n);
    return out;
}

// ---- compression accounting ----

// Source scalars per semantic-code scalar: C*H*W / z (MNIST) or
// C*H*W / (z*6*6) (CIFAR-10).
inline double compression_ratio(DatasetName d, std::size_t z_dims) {
    if (z_dims == 0) throw UsageError("z_dims must be at least 1");
    const double source = static_cast<double>(shape_size(data::image_shape(d)));
    return d == DatasetName::mnist ? source / static_cast<double>(z_dims) : source / static_cast<double>(z_dims * 36);
}

// ---- configuration and logs ----

struct TrainConfig {
    double lr = 1e-3;
    std::size_t batch_size = 256;
    std::size_t max_epochs = 100;
    std::size_t patience = 10;
    std::uint64_t seed = 0;

    static TrainConfig for_dataset(DatasetName d) {
        TrainConfig c;
        c.batch_size = d == DatasetName::mnist ? 256 : 128;
        c.max_epochs = d == DatasetName::mnist ? 100 : 150;
        return c;
    }

    static TrainConfig classifier_defaults(DatasetName d) {
        TrainConfig c;
        c.batch_size = 128;
        c.max_epochs = d == DatasetName::mnist ? 20 : 40;
        c.patience = 3;
        return c;
    }
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_recon = 0.0;
    double train_sem = 0.0;
    double val_recon = 0.0;
    double val_sem = 0.0;
    double val_combined = 0.0;
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    bool early_stopped = false;

    std::string to_csv() const {
        std::string out = "epoch,train_recon,train_sem,val_recon,val_sem\n";
        char line[256];
        for (const auto& e : epochs) {
            std::snprintf(line, sizeof line, "%zu,%.9g,%.9g,%.9g,%.9g\n", e.epoch, e.train_recon, e.train_sem, e.val_recon,
                          e.val_sem);
            out += line;
        }
        return out;
    }

    void write_csv(const std::filesystem::path& path) const {
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        std::ofstream f(path, std::ios::trunc);
        f << to_csv();
        if (!f) throw Error("cannot write " + path.string());
    }

    friend bool operator==(const TrainLog& a, const TrainLog& b) { return a.to_csv() == b.to_csv() && a.best_epoch == b.best_epoch; }
};

using Progress = std::function<void(const EpochRecord&)>;

// Penultimate features of a whole dataset, computed in chunks.
inline Tensor dataset_features(const data::Dataset& ds, const models::Classifier& c, std::size_t chunk = 256) {
    const std::size_t dim = c.penultimate_dim();
    Tensor out({std::max<std::size_t>(ds.size(), 1), dim});
    for (std::size_t start = 0; start < ds.size(); start += chunk) {
        std::vector<std::size_t> idx;
        for (std::size_t i = start; i < std::min(ds.size(), start + chunk); ++i) idx.push_back(i);
        const Tensor f = c.features(ds.gather(idx));
        std::copy(f.storage().begin(), f.storage().end(), out.storage().begin() + static_cast<std::ptrdiff_t>(start * dim));
    }
    return out;
}

inline Tensor rows(const Tensor& t, std::span<const std::size_t> idx) {
    const std::size_t w = t.size() / t.dim(0);
    Tensor out({idx.size(), w});
    for (std::size_t k = 0; k < idx.size(); ++k)
        std::copy_n(t.storage().begin() + static_cast<std::ptrdiff_t>(idx[k] * w), w,
                    out.storage().begin() + static_cast<std::ptrdiff_t>(k * w));
    return out;
}

struct AutoencoderRun {
    models::Autoencoder model;
    TrainLog log;
};

// Mean losses of `ae` over a dataset (no parameter updates).
inline CombinedLoss<float> evaluate_autoencoder(const models::Autoencoder& ae, const data::Dataset& ds,
                                                const Tensor& features, const LossConfig& cfg,
                                                const models::Classifier& classifier, std::size_t chunk = 256) {
    CombinedLoss<float> total;
    for (std::size_t start = 0; start < ds.size(); start += chunk) {
        std::vector<std::size_t> idx;
        for (std::size_t i = start; i < std::min(ds.size(), start + chunk); ++i) idx.push_back(i);
        const Tensor x = ds.gather(idx);
        const Tensor recon = ae.decoder.forward(ae.encoder.forward(x));
        const auto l = loss_combined_features(x, rows(features, idx), recon, cfg, classifier, false);
        const double w = double(idx.size()) / double(ds.size());
        total.reconstruction += w * l.reconstruction;
        total.semantic += w * l.semantic;
    }
    total.value = combine(cfg.gamma, total.semantic, total.reconstruction);
    return total;
}

// Adam training of encoder+decoder on the combined loss with early stopping on
// the validation combined loss; returns the best-epoch parameters.
inline AutoencoderRun train_autoencoder(const data::DatasetSplits& splits, std::size_t z_dims, const LossConfig& loss_cfg,
                                        const TrainConfig& cfg, const models::Classifier& classifier,
                                        const Progress& progress = {}) {
    loss_cfg.validate();
    if (loss_cfg.gamma > 0.0) classifier.require_trained("autoencoder training with semantic loss");
    if (classifier.dataset != splits.train.name) throw UsageError("classifier was trained on a different dataset");
    models::Autoencoder ae = models::build_autoencoder(splits.train.name, z_dims, cfg.seed);

    const Tensor train_features = classifier.trained ? dataset_features(splits.train, classifier) : Tensor({1, 1});
    const Tensor val_features = classifier.trained ? dataset_features(splits.val, classifier) : Tensor({1, 1});

    auto enc_state = nn::AdamState<float>::for_params(ae.encoder.params(), cfg.lr);
    auto dec_state = nn::AdamState<float>::for_params(ae.decoder.params(), cfg.lr);
    const data::BatchConfig bcfg{std::min(cfg.batch_size, splits.train.size()), derive_seed(cfg.seed, {0xAE}), false, true};

    AutoencoderRun run{ae, {}};
    double best = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        double rec_sum = 0.0, sem_sum = 0.0;
        for (const auto& idx : data::epoch_batches(splits.train.size(), bcfg, epoch)) try {
            const Tensor x = splits.train.gather(idx);
            nn::Trace<float> enc_trace, dec_trace;
            const Tensor code = ae.encoder.forward(x, &enc_trace);
            const Tensor recon = ae.decoder.forward(code, &dec_trace);
            const auto loss = loss_combined_features(x, classifier.trained ? rows(train_features, idx) : Tensor{}, recon,
                                                     loss_cfg, classifier, true);
            if (!std::isfinite(loss.value)) throw DivergenceError("non-finite loss");
            auto dec_grads = ae.decoder.params().zeros_like();
            auto enc_grads = ae.encoder.params().zeros_like();
            const Tensor dcode = ae.decoder.backward(dec_trace, loss.grad, &dec_grads);
            ae.encoder.backward(enc_trace, dcode, &enc_grads, false);
            nn::adam_step(ae.decoder.params(), dec_grads, dec_state);
            nn::adam_step(ae.encoder.params(), enc_grads, enc_state);
            const double w = double(idx.size()) / double(splits.train.size());
            rec_sum += w * loss.reconstruction;
            sem_sum += w * loss.semantic;
        } catch (const DivergenceError& e) {
            throw DivergenceError("autoencoder training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
        }
        const auto val = evaluate_autoencoder(ae, splits.val, val_features, loss_cfg, classifier);
        if (!std::isfinite(val.value)) throw DivergenceError("validation loss diverged at epoch " + std::to_string(epoch));
        const EpochRecord rec{epoch, rec_sum, sem_sum, val.reconstruction, val.semantic, val.value};
        run.log.epochs.push_back(rec);
        if (progress) progress(rec);
        if (val.value < best) {
            best = val.value;
            since_best = 0;
            run.log.best_epoch = epoch;
            run.model = ae;
        } else if (++since_best >= cfg.patience) {
            run.log.early_stopped = true;
            break;
        }
    }
    return run;
}

inline double accuracy(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> labels) {
    if (labels.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i];
    return double(hits) / double(labels.size());
}

struct ClassifierRun {
    models::Classifier model;
    double test_accuracy = 0.0;
    double val_accuracy = 0.0;
    std::size_t epochs = 0;
};

using ClassifierProgress = std::function<void(std::size_t epoch, double train_loss, double val_accuracy)>;

// Cross-entropy training with Adam; keeps the epoch with the best validation
// accuracy, then freezes the model and reports test accuracy.
inline ClassifierRun train_classifier(const data::DatasetSplits& splits, const TrainConfig& cfg,
                                      const ClassifierProgress& progress = {}) {
    models::Classifier c = models::build_classifier(splits.train.name, cfg.seed);
    auto state = nn::AdamState<float>::for_params(c.net.params(), cfg.lr);
    const data::BatchConfig bcfg{std::min(cfg.batch_size, splits.train.size()), derive_seed(cfg.seed, {0xC1}), false, true};
    ClassifierRun run{c, 0.0, -1.0, 0};
    std::size_t since_best = 0;
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        double loss_sum = 0.0;
        for (const auto& idx : data::epoch_batches(splits.train.size(), bcfg, epoch)) {
            const Tensor x = splits.train.gather(idx);
            const auto labels = splits.train.gather_labels(idx);
            nn::Trace<float> trace;
            const Tensor logits = c.net.forward(x, &trace);
            const auto loss = loss_cross_entropy(logits, labels, true);
            if (!std::isfinite(loss.value)) throw DivergenceError("classifier training diverged at epoch " + std::to_string(epoch));
            auto grads = c.net.params().zeros_like();
            c.net.backward(trace, loss.grad, &grads, false);
            try {
                nn::adam_step(c.net.params(), grads, state);
            } catch (const DivergenceError& e) {
                throw DivergenceError("classifier training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
            }
            loss_sum += loss.value * double(idx.size()) / double(splits.train.size());
        }
        const double val_acc = accuracy(models::classify_batch(splits.val.images, c), splits.val.labels);
        run.epochs = epoch;
        if (progress) progress(epoch, loss_sum, val_acc);
        if (val_acc > run.val_accuracy) {
            run.val_accuracy = val_acc;
            run.model = c;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    run.model.trained = true;
    run.test_accuracy = accuracy(models::classify_batch(splits.test.images, run.model), splits.test.labels);
    return run;
}

} // namespace aesc::training
