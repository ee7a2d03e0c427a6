#pragma once

// MNIST (IDX) and CIFAR-10 (binary batch) ingestion. Files may be stored
// plain or gzip-compressed; `<name>.gz` is tried when `<name>` is absent.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

#include "aesc/bytes.hpp"
#include "aesc/rng.hpp"
#include "aesc/tensor.hpp"

namespace aesc::data {

enum class DatasetName : std::uint8_t { mnist = 1, cifar10 = 2 };
enum class Split : std::uint8_t { train, val, test };

constexpr std::string_view dataset_name(DatasetName d) { return d == DatasetName::mnist ? "mnist" : "cifar10"; }

inline DatasetName parse_dataset(std::string_view s) {
    if (s == "mnist") return DatasetName::mnist;
    if (s == "cifar10" || s == "cifar-10" || s == "cifar") return DatasetName::cifar10;
    throw UsageError("unknown dataset '" + std::string(s) + "' (expected mnist or cifar10)");
}

inline Shape image_shape(DatasetName d) { return d == DatasetName::mnist ? Shape{1, 28, 28} : Shape{3, 32, 32}; }

inline float normalize_pixel(std::uint8_t b) { return static_cast<float>(b) / 255.0f; }
inline std::uint8_t denormalize_pixel(float v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0f), 0L, 255L));
}

struct Dataset {
    DatasetName name = DatasetName::mnist;
    Split split = Split::train;
    Tensor images; // (N, C, H, W), values in [0, 1]
    std::vector<std::uint8_t> labels;

    std::size_t size() const noexcept { return labels.size(); }
    Shape sample_shape() const { return image_shape(name); }
    Tensor image(std::size_t i) const { return images.slice(i); }

    Tensor gather(std::span<const std::size_t> indices) const {
        const std::size_t n = shape_size(sample_shape());
        Shape s = sample_shape();
        s.insert(s.begin(), indices.size());
        Tensor out(std::move(s));
        for (std::size_t k = 0; k < indices.size(); ++k)
            std::copy_n(images.storage().begin() + static_cast<std::ptrdiff_t>(indices[k] * n), n,
                        out.storage().begin() + static_cast<std::ptrdiff_t>(k * n));
        return out;
    }

    std::vector<std::uint8_t> gather_labels(std::span<const std::size_t> indices) const {
        std::vector<std::uint8_t> out;
        out.reserve(indices.size());
        for (std::size_t i : indices) out.push_back(labels[i]);
        return out;
    }

    // First `n` samples (all when n == 0 or n >= size()).
    Dataset head(std::size_t n) const {
        if (n == 0 || n >= size()) return *this;
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        return subset(idx);
    }

    Dataset subset(std::span<const std::size_t> indices) const {
        return {name, split, gather(indices), gather_labels(indices)};
    }
};

struct DatasetSplits {
    Dataset train;
    Dataset val;
    Dataset test;
};

struct LoadOptions {
    std::uint64_t split_seed = 0;
    double val_fraction = 0.1;
    std::size_t train_limit = 0; // keep only the first n training images (0 = all)
    std::size_t test_limit = 0;
};

namespace detail {

inline Bytes read_file(const std::filesystem::path& dir, const std::string& name) {
    std::filesystem::path p = dir / name;
    if (!std::filesystem::exists(p)) {
        const auto gz = dir / (name + ".gz");
        if (!std::filesystem::exists(gz)) throw DataError("missing dataset file " + p.string() + " (or .gz)");
        p = gz;
    }
    gzFile f = gzopen(p.c_str(), "rb");
    if (!f) throw DataError("cannot open " + p.string());
    Bytes out;
    std::array<std::uint8_t, 1 << 16> buf{};
    int n = 0;
    while ((n = gzread(f, buf.data(), static_cast<unsigned>(buf.size()))) > 0) out.insert(out.end(), buf.begin(), buf.begin() + n);
    const bool failed = n < 0;
    gzclose(f);
    if (failed) throw DataError("read error in " + p.string());
    return out;
}

inline std::uint32_t be32(const Bytes& b, std::size_t at) {
    return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
           std::uint32_t{b[at + 3]};
}

inline Dataset read_idx_pair(const std::filesystem::path& dir, const std::string& images_file,
                             const std::string& labels_file, Split split) {
    const Bytes img = read_file(dir, images_file);
    const Bytes lab = read_file(dir, labels_file);
    if (img.size() < 16) throw DataError(images_file + ": truncated header");
    if (be32(img, 0) != 0x00000803) throw DataError(images_file + ": bad magic (expected 0x00000803)");
    if (lab.size() < 8) throw DataError(labels_file + ": truncated header");
    if (be32(lab, 0) != 0x00000801) throw DataError(labels_file + ": bad magic (expected 0x00000801)");
    const std::size_t n = be32(img, 4), rows = be32(img, 8), cols = be32(img, 12);
    if (rows != 28 || cols != 28) throw DataError(images_file + ": expected 28x28 images");
    if (img.size() != 16 + n * rows * cols)
        throw DataError(images_file + ": size " + std::to_string(img.size()) + " does not match " + std::to_string(n) +
                        " images (truncated file?)");
    const std::size_t nl = be32(lab, 4);
    if (lab.size() != 8 + nl) throw DataError(labels_file + ": size does not match header count (truncated file?)");
    if (nl != n)
        throw DataError(images_file + " has " + std::to_string(n) + " images but " + labels_file + " has " +
                        std::to_string(nl) + " labels");
    if (n == 0) throw DataError(images_file + ": no images");
    Dataset d{DatasetName::mnist, split, Tensor({n, 1, 28, 28}), {}};
    for (std::size_t i = 0; i < n * 784; ++i) d.images[i] = normalize_pixel(img[16 + i]);
    d.labels.assign(lab.begin() + 8, lab.end());
    for (auto l : d.labels)
        if (l > 9) throw DataError(labels_file + ": label out of range");
    return d;
}

inline void read_cifar_batch(const std::filesystem::path& dir, const std::string& file, std::vector<float>& pixels,
                             std::vector<std::uint8_t>& labels) {
    constexpr std::size_t record = 1 + 3072;
    const Bytes b = read_file(dir, file);
    if (b.empty() || b.size() % record != 0)
        throw DataError(file + ": size " + std::to_string(b.size()) + " is not a whole number of 3073-byte records");
    for (std::size_t off = 0; off < b.size(); off += record) {
        if (b[off] > 9) throw DataError(file + ": label out of range at record " + std::to_string(off / record));
        labels.push_back(b[off]);
        for (std::size_t i = 1; i < record; ++i) pixels.push_back(normalize_pixel(b[off + i]));
    }
}

// Seeded train/val partition of a loaded training set.
inline void split_validation(Dataset& train, Dataset& val, std::uint64_t seed, double fraction) {
    std::vector<std::size_t> perm(train.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(derive_seed(seed, {0x5911u}));
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto nval = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(train.size())));
    std::vector<std::size_t> vidx(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(nval));
    std::vector<std::size_t> tidx(perm.begin() + static_cast<std::ptrdiff_t>(nval), perm.end());
    std::sort(vidx.begin(), vidx.end());
    std::sort(tidx.begin(), tidx.end());
    val = train.subset(vidx);
    val.split = Split::val;
    train = train.subset(tidx);
}

} // namespace detail

inline DatasetSplits load_mnist(const std::filesystem::path& dir, const LoadOptions& opt = {}) {
    DatasetSplits s;
    s.train = detail::read_idx_pair(dir, "train-images-idx3-ubyte", "train-labels-idx1-ubyte", Split::train)
                  .head(opt.train_limit);
    s.test = detail::read_idx_pair(dir, "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte", Split::test)
                 .head(opt.test_limit);
    s.test.split = Split::test;
    detail::split_validation(s.train, s.val, opt.split_seed, opt.val_fraction);
    return s;
}

inline DatasetSplits load_cifar10(const std::filesystem::path& dir, const LoadOptions& opt = {}) {
    auto load = [&](std::initializer_list<std::string> files, Split split) {
        std::vector<float> px;
        std::vector<std::uint8_t> labels;
        for (const auto& f : files) detail::read_cifar_batch(dir, f, px, labels);
        const std::size_t n = labels.size();
        return Dataset{DatasetName::cifar10, split, Tensor({n, 3, 32, 32}, std::move(px)), std::move(labels)};
    };
    DatasetSplits s;
    s.train = load({"data_batch_1.bin", "data_batch_2.bin", "data_batch_3.bin", "data_batch_4.bin", "data_batch_5.bin"},
                   Split::train)
                  .head(opt.train_limit);
    s.test = load({"test_batch.bin"}, Split::test).head(opt.test_limit);
    detail::split_validation(s.train, s.val, opt.split_seed, opt.val_fraction);
    return s;
}

inline DatasetSplits load_dataset(DatasetName name, const std::filesystem::path& dir, const LoadOptions& opt = {}) {
    return name == DatasetName::mnist ? load_mnist(dir, opt) : load_cifar10(dir, opt);
}

struct BatchConfig {
    std::size_t batch_size = 256;
    std::uint64_t seed = 0;
    bool drop_last = false;
    bool shuffle = true;
};

// Index batches for one epoch; the permutation derives from (seed, epoch).
inline std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, const BatchConfig& cfg, std::size_t epoch) {
    if (cfg.batch_size == 0 || cfg.batch_size > n)
        throw UsageError("batch size " + std::to_string(cfg.batch_size) + " must be in [1, " + std::to_string(n) + "]");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (cfg.shuffle) {
        Rng rng(derive_seed(cfg.seed, {0xBA7Cu, epoch}));
        std::shuffle(order.begin(), order.end(), rng);
    }
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
        const std::size_t end = std::min(n, start + cfg.batch_size);
        if (cfg.drop_last && end - start < cfg.batch_size) break;
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

struct Batch {
    Tensor images;
    std::vector<std::uint8_t> labels;
};

// Streams the batches of one epoch over a dataset.
class BatchIterator {
public:
    BatchIterator(const Dataset& ds, const BatchConfig& cfg, std::size_t epoch)
        : ds_(&ds), batches_(epoch_batches(ds.size(), cfg, epoch)) {}

    bool next(Batch& out) {
        if (pos_ >= batches_.size()) return false;
        const auto& idx = batches_[pos_++];
        out.images = ds_->gather(idx);
        out.labels = ds_->gather_labels(idx);
        return true;
    }

    std::size_t batch_count() const noexcept { return batches_.size(); }

private:
    const Dataset* ds_;
    std::vector<std::vector<std::size_t>> batches_;
    std::size_t pos_ = 0;
};

} // namespace aesc::data
