#pragma once

// End-to-end experiment grid: encode -> frame -> coded channel -> receiver,
// for the semantic scheme and the two baselines, with per-point metrics.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "aesc/data.hpp"
#include "aesc/harness/codec.hpp"
#include "aesc/harness/config.hpp"
#include "aesc/image_io.hpp"
#include "aesc/metrics.hpp"
#include "aesc/models.hpp"
#include "aesc/phy/link.hpp"
#include "aesc/training.hpp"

namespace aesc::harness {

using data::DatasetName;

enum class Scheme : std::uint8_t { aesc_i, direct, external_codec };

constexpr std::string_view scheme_name(Scheme s) {
    switch (s) {
    case Scheme::aesc_i: return "aesc_i";
    case Scheme::direct: return "direct";
    case Scheme::external_codec: return "external_codec";
    }
    return "?";
}

inline Scheme parse_scheme(std::string_view s) {
    if (s == "aesc_i") return Scheme::aesc_i;
    if (s == "direct") return Scheme::direct;
    if (s == "external_codec" || s == "codec") return Scheme::external_codec;
    throw UsageError("unknown scheme '" + std::string(s) + "' (expected aesc_i, direct or external_codec)");
}

// ---- configuration ----

struct ExperimentConfig {
    DatasetName dataset = DatasetName::mnist;
    std::vector<std::size_t> z_dims{40};
    phy::ChannelFamily channel = phy::ChannelFamily::awgn;
    std::vector<double> snr_db{0, 2, 4, 6, 8, 10};
    std::size_t frames = 200;
    std::uint64_t seed = 2022;
    std::vector<Scheme> schemes{Scheme::aesc_i, Scheme::direct, Scheme::external_codec};
    std::string codec_command;
    int codec_quality = 60;
    int code_bits = 8;
    int param_bits = 8;
    bool amortize_decoder = false;
    metrics::ServiceMapping service_mapping = metrics::ServiceMapping::identity;
    std::vector<phy::Tap> taps{phy::Tap{}};
    bool rayleigh_taps = false;
    std::size_t threads = 1;
    std::size_t samples = 4; // reconstructions saved per point

    static ExperimentConfig from(const ConfigDoc& doc) {
        ExperimentConfig c;
        c.dataset = data::parse_dataset(doc.get("dataset", "mnist"));
        c.z_dims = doc.get_sizes("z_dims", {c.dataset == DatasetName::mnist ? 40u : 8u});
        c.channel = phy::parse_channel(doc.get("channel", "awgn"));
        c.snr_db = doc.get_doubles("snr_db", c.snr_db);
        c.frames = doc.get_size("frames", c.frames);
        c.seed = doc.get_size("seed", c.seed);
        c.schemes.clear();
        for (const auto& s : doc.get_strings("schemes", {"aesc_i", "direct", "external_codec"})) c.schemes.push_back(parse_scheme(s));
        c.codec_command = doc.get("codec_command", "");
        c.codec_quality = static_cast<int>(doc.get_size("codec_quality", 60));
        c.code_bits = static_cast<int>(doc.get_size("code_bits", 8));
        c.param_bits = static_cast<int>(doc.get_size("param_bits", c.dataset == DatasetName::mnist ? 8 : 16));
        c.amortize_decoder = doc.get_bool("amortize_decoder", false);
        c.service_mapping = metrics::parse_mapping(doc.get("service_mapping", "identity"));
        c.rayleigh_taps = doc.get_bool("rayleigh_taps", false);
        c.threads = doc.get_size("threads", std::max(1u, std::thread::hardware_concurrency()));
        c.samples = doc.get_size("samples", c.samples);
        if (doc.has("taps")) c.taps = parse_taps(doc.get("taps", ""));
        c.validate();
        return c;
    }

    // "gain@delay, gain@delay, ..." with real gains, e.g. "0.8@0, 0.6@2".
    static std::vector<phy::Tap> parse_taps(const std::string& text) {
        std::vector<phy::Tap> taps;
        for (const auto& item : split(text, ',')) {
            const auto parts = split(item, '@');
            if (parts.size() != 2) throw UsageError("bad tap '" + item + "' (expected gain@delay)");
            const ConfigDoc one = ConfigDoc::parse("g = " + parts[0] + "\nd = " + parts[1], "taps");
            taps.push_back({phy::Complex(one.get_double("g", 0), 0.0), one.get_size("d", 0)});
        }
        return taps;
    }

    void validate() const {
        if (z_dims.empty()) throw UsageError("z_dims is empty");
        for (std::size_t z : z_dims) models::autoencoder_spec(dataset, z);
        if (frames == 0) throw UsageError("frames must be positive");
        if (snr_db.empty()) throw UsageError("snr_db is empty");
        if (schemes.empty()) throw UsageError("schemes is empty");
        phy::check_bits(code_bits);
        phy::check_bits(param_bits);
        if (codec_quality < 1 || codec_quality > 100) throw UsageError("codec_quality must be in [1, 100]");
        if (threads == 0) throw UsageError("threads must be positive");
        channel_config(0.0, 0).validate();
    }

    phy::ChannelConfig channel_config(double snr, std::uint64_t point_seed) const {
        phy::ChannelConfig cc;
        cc.family = channel;
        cc.snr_db = snr;
        cc.seed = point_seed;
        if (channel == phy::ChannelFamily::multipath_tdl) {
            cc.taps = taps;
            cc.rayleigh_taps = rayleigh_taps;
        }
        return cc;
    }
};

// ---- model files ----

struct ModelPaths {
    std::filesystem::path classifier, encoder, decoder;
};

inline std::filesystem::path classifier_path(const std::filesystem::path& dir, DatasetName d) {
    return dir / (std::string(data::dataset_name(d)) + "_classifier.aesm");
}

inline ModelPaths model_paths(const std::filesystem::path& dir, DatasetName d, std::size_t z) {
    const std::string stem = std::string(data::dataset_name(d)) + "_z" + std::to_string(z);
    return {classifier_path(dir, d), dir / (stem + "_encoder.aesm"), dir / (stem + "_decoder.aesm")};
}

inline models::ModelFile load_model_checked(const std::filesystem::path& p) {
    if (!std::filesystem::exists(p)) throw DataError("missing model file " + p.string() + " (run `train` first)");
    return models::load_model(p);
}

// ---- results ----

struct ResultRow {
    std::string dataset;
    std::size_t z_dims = 0;
    double compression_ratio = 0.0;
    std::string channel;
    double snr_db = 0.0;
    std::string scheme;
    double psnr = 0.0;
    double ssim = 0.0;
    double rr_ratio = 0.0;
    double ss_index = 0.0;
    double outage_rate = 0.0;
    double pre_ber = 0.0;
    double post_ber = 0.0;
    double bits_per_image = 0.0;
};

inline constexpr const char* kResultColumns =
    "dataset,z_dims,compression_ratio,channel,snr_db,scheme,psnr,ssim,rr_ratio,ss_index,outage_rate,pre_ber,post_ber,"
    "bits_per_image";

inline std::string format_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline std::string to_csv_line(const ResultRow& r) {
    std::string s = r.dataset + "," + std::to_string(r.z_dims) + "," + format_number(r.compression_ratio) + "," + r.channel +
                    "," + format_number(r.snr_db) + "," + r.scheme;
    for (double v : {r.psnr, r.ssim, r.rr_ratio, r.ss_index, r.outage_rate, r.pre_ber, r.post_ber, r.bits_per_image})
        s += "," + format_number(v);
    return s;
}

inline std::string results_csv(const std::vector<ResultRow>& rows) {
    std::string out = std::string(kResultColumns) + "\n";
    for (const auto& r : rows) out += to_csv_line(r) + "\n";
    return out;
}

// ---- receiver ----

// Builds the receiver-side decoder purely from a received frame: the model id
// selects the architecture family and the parameters are the frame's.
inline nn::Network<float> decoder_from_frame(const phy::Frame& f) {
    const auto spec = models::autoencoder_spec(models::dataset_from_model_id(f.model_id), f.z_dims);
    auto params = nn::init_params<float>(spec.decoder, 0);
    params.assign(f.param_values());
    return nn::Network<float>(spec.decoder, std::move(params));
}

inline Tensor decode_frame_code(const phy::Frame& f, const nn::Network<float>& decoder) {
    const auto spec = models::autoencoder_spec(models::dataset_from_model_id(f.model_id), f.z_dims);
    return models::decode(Tensor(spec.code_shape(), f.code_values()), decoder);
}

// ---- per-point accumulation ----

struct PointAccumulator {
    double mse_sum = 0.0;
    double ssim_sum = 0.0;
    std::size_t outages = 0;
    std::uint64_t pre_errors = 0, coded_bits = 0, post_errors = 0, payload_bits = 0;
    double channel_bits = 0.0;
    std::vector<Tensor> recon;

    void add_link(const phy::LinkReport& r) {
        pre_errors += r.pre_errors;
        coded_bits += r.coded_bits;
        post_errors += r.post_errors;
        payload_bits += r.payload_bits;
    }

    void add_image(const Tensor& original, Tensor image) {
        mse_sum += metrics::mse(original, image);
        ssim_sum += metrics::ssim(original, image);
        recon.push_back(std::move(image));
    }
};

struct PointOutput {
    ResultRow row;
    std::vector<Tensor> samples;
};

struct Workload {
    ExperimentConfig cfg;
    data::Dataset test;
    models::Classifier classifier;
    std::vector<std::uint8_t> original_predictions;
    double original_accuracy = 0.0;
    std::map<std::size_t, models::Autoencoder> autoencoders;
    std::optional<ExternalCodec> codec;
    std::vector<Bytes> codec_streams; // compressed test images, empty entry on encode failure
};

inline ResultRow finish_point(const Workload& w, PointAccumulator& acc, Scheme scheme, std::size_t z, double cr, double snr,
                              PointOutput* out) {
    const std::size_t n = w.test.size();
    Tensor stacked = stack<float>(acc.recon);
    const auto pred = models::classify_batch(stacked, w.classifier);
    const double acc_recon = metrics::accuracy(pred, w.test.labels);

    ResultRow r;
    r.dataset = std::string(data::dataset_name(w.cfg.dataset));
    r.z_dims = z;
    r.compression_ratio = cr;
    r.channel = std::string(phy::channel_name(w.cfg.channel));
    r.snr_db = snr;
    r.scheme = std::string(scheme_name(scheme));
    r.psnr = metrics::psnr_from_mse(acc.mse_sum / double(n));
    r.ssim = acc.ssim_sum / double(n);
    r.rr_ratio = metrics::rr_ratio_from_predictions(w.original_predictions, pred, w.test.labels);
    r.ss_index = metrics::semantic_service(w.original_accuracy, acc_recon, w.cfg.service_mapping);
    r.outage_rate = double(acc.outages) / double(n);
    r.pre_ber = acc.coded_bits ? double(acc.pre_errors) / double(acc.coded_bits) : 0.0;
    r.post_ber = acc.payload_bits ? double(acc.post_errors) / double(acc.payload_bits) : 0.0;
    r.bits_per_image = acc.channel_bits / double(n);
    if (out) {
        const std::size_t keep = std::min(w.cfg.samples, n);
        out->samples.assign(acc.recon.begin(), acc.recon.begin() + static_cast<std::ptrdiff_t>(keep));
    }
    return r;
}

inline Tensor blank_image(const data::Dataset& ds) { return Tensor(ds.sample_shape(), 0.0f); }

// Semantic scheme at one grid point. Outages reconstruct as an all-zero
// image, which also counts against the recognition rate.
inline ResultRow run_aesc_point(const Workload& w, std::size_t z, double snr, std::uint64_t point_seed,
                                PointOutput* out = nullptr) {
    const auto& ae = w.autoencoders.at(z);
    const auto cc = w.cfg.channel_config(snr, point_seed);
    const std::vector<float> beta = ae.decoder.params().flatten();
    const auto id = models::model_id(w.cfg.dataset);
    const auto zz = static_cast<std::uint32_t>(z);
    const std::size_t n = w.test.size();
    PointAccumulator acc;

    std::optional<nn::Network<float>> session_decoder;
    if (w.cfg.amortize_decoder) {
        // One decoder frame per session, repeated until it arrives intact.
        const phy::Frame bf = phy::make_frame({}, id, zz, beta, w.cfg.code_bits, w.cfg.param_bits);
        constexpr std::size_t kMaxAttempts = 64;
        for (std::size_t attempt = 0; attempt < kMaxAttempts && !session_decoder; ++attempt) {
            const auto tx = phy::transmit(bf, cc, n + attempt, beta);
            acc.add_link(tx.report);
            acc.channel_bits += double(phy::frame_bytes(bf) * 8);
            if (!tx.frame) continue;
            try {
                session_decoder = decoder_from_frame(*tx.frame);
            } catch (const Error&) {
            }
        }
    }

    const Tensor codes = models::encode_batch(w.test.images, ae);
    const std::size_t code_len = codes.size() / n;
    for (std::size_t i = 0; i < n; ++i) {
        const std::span<const float> code(codes.storage().data() + i * code_len, code_len);
        const phy::Frame f = w.cfg.amortize_decoder ? phy::make_frame(code, id, zz, {}, w.cfg.code_bits, w.cfg.param_bits)
                                                    : phy::make_frame(code, id, zz, beta, w.cfg.code_bits, w.cfg.param_bits);
        const auto tx = phy::transmit(f, cc, i, w.cfg.amortize_decoder ? std::span<const float>{} : std::span<const float>(beta));
        acc.add_link(tx.report);
        acc.channel_bits += double(phy::frame_bytes(f) * 8);
        std::optional<Tensor> img;
        if (tx.frame && tx.frame->model_id == id && tx.frame->z_dims == zz) {
            try {
                if (w.cfg.amortize_decoder) {
                    if (session_decoder) img = decode_frame_code(*tx.frame, *session_decoder);
                } else {
                    img = decode_frame_code(*tx.frame, decoder_from_frame(*tx.frame));
                }
            } catch (const Error&) {
            }
        }
        if (!img) ++acc.outages;
        acc.add_image(w.test.image(i), img ? std::move(*img) : blank_image(w.test));
    }
    return finish_point(w, acc, Scheme::aesc_i, z, training::compression_ratio(w.cfg.dataset, z), snr, out);
}

// Uncompressed baseline: 8-bit pixels through the same coded channel.
inline ResultRow run_direct_point(const Workload& w, double snr, std::uint64_t point_seed, PointOutput* out = nullptr) {
    const auto cc = w.cfg.channel_config(snr, point_seed);
    PointAccumulator acc;
    for (std::size_t i = 0; i < w.test.size(); ++i) {
        const Tensor original = w.test.image(i);
        Bytes pixels;
        pixels.reserve(original.size());
        for (float v : original.storage()) pixels.push_back(data::denormalize_pixel(v));
        const auto rx = phy::transmit_bytes(pixels, cc, i);
        acc.add_link(rx.report);
        acc.channel_bits += double(pixels.size() * 8);
        Tensor img(original.shape());
        for (std::size_t k = 0; k < img.size(); ++k) img[k] = data::normalize_pixel(rx.bytes[k]);
        acc.add_image(original, std::move(img));
    }
    return finish_point(w, acc, Scheme::direct, 0, 1.0, snr, out);
}

// External codec baseline. Any decode failure after the channel is an outage.
inline ResultRow run_codec_point(const Workload& w, double snr, std::uint64_t point_seed, PointOutput* out = nullptr) {
    const auto cc = w.cfg.channel_config(snr, point_seed);
    PointAccumulator acc;
    double raw_bytes = 0.0, coded_bytes = 0.0;
    for (std::size_t i = 0; i < w.test.size(); ++i) {
        const Tensor original = w.test.image(i);
        const Bytes& stream = w.codec_streams[i];
        raw_bytes += double(original.size());
        coded_bytes += double(stream.size());
        std::optional<Tensor> img;
        if (!stream.empty()) {
            const auto rx = phy::transmit_bytes(stream, cc, i);
            acc.add_link(rx.report);
            acc.channel_bits += double(stream.size() * 8);
            img = w.codec->decode(rx.bytes, original.shape());
        }
        if (!img) ++acc.outages;
        acc.add_image(original, img ? std::move(*img) : blank_image(w.test));
    }
    const double cr = coded_bytes > 0 ? raw_bytes / coded_bytes : 0.0;
    return finish_point(w, acc, Scheme::external_codec, 0, cr, snr, out);
}

// ---- grid ----

struct GridPoint {
    Scheme scheme;
    std::size_t z_dims;
    std::size_t snr_index;
};

// Grid order: SNR-major; within an SNR, aesc_i for each z, then direct, then codec.
inline std::vector<GridPoint> grid_points(const ExperimentConfig& cfg, bool codec_available) {
    std::vector<GridPoint> pts;
    auto wants = [&](Scheme s) { return std::find(cfg.schemes.begin(), cfg.schemes.end(), s) != cfg.schemes.end(); };
    for (std::size_t si = 0; si < cfg.snr_db.size(); ++si) {
        if (wants(Scheme::aesc_i))
            for (std::size_t z : cfg.z_dims) pts.push_back({Scheme::aesc_i, z, si});
        if (wants(Scheme::direct)) pts.push_back({Scheme::direct, 0, si});
        if (wants(Scheme::external_codec) && codec_available) pts.push_back({Scheme::external_codec, 0, si});
    }
    return pts;
}

inline std::uint64_t point_seed(const ExperimentConfig& cfg, const GridPoint& p) {
    return derive_seed(cfg.seed, {0x9041u, static_cast<std::uint64_t>(p.scheme), p.z_dims, p.snr_index});
}

inline PointOutput run_point(const Workload& w, const GridPoint& p) {
    PointOutput out;
    const double snr = w.cfg.snr_db[p.snr_index];
    const std::uint64_t seed = point_seed(w.cfg, p);
    switch (p.scheme) {
    case Scheme::aesc_i: out.row = run_aesc_point(w, p.z_dims, snr, seed, &out); break;
    case Scheme::direct: out.row = run_direct_point(w, snr, seed, &out); break;
    case Scheme::external_codec: out.row = run_codec_point(w, snr, seed, &out); break;
    }
    return out;
}

using Logger = std::function<void(const std::string&)>;

// Loads models and the test split and prepares the codec streams.
inline Workload prepare_workload(const ExperimentConfig& cfg, const std::filesystem::path& data_dir,
                                 const std::filesystem::path& models_dir, const Logger& log = {}) {
    Workload w;
    w.cfg = cfg;
    data::LoadOptions lo;
    lo.split_seed = cfg.seed;
    const auto splits = data::load_dataset(cfg.dataset, data_dir, lo);
    w.test = splits.test.head(cfg.frames);
    if (w.test.size() < cfg.frames && log)
        log("warning: only " + std::to_string(w.test.size()) + " test images available; using all of them");

    const auto cls_file = load_model_checked(classifier_path(models_dir, cfg.dataset));
    if (cls_file.dataset != cfg.dataset) throw DataError("classifier model was trained on a different dataset");
    w.classifier = models::classifier_from_file(cls_file);
    w.classifier.require_trained("run");
    w.original_predictions = models::classify_batch(w.test.images, w.classifier);
    w.original_accuracy = metrics::accuracy(w.original_predictions, w.test.labels);

    const bool wants_aesc = std::find(cfg.schemes.begin(), cfg.schemes.end(), Scheme::aesc_i) != cfg.schemes.end();
    if (wants_aesc) {
        for (std::size_t z : cfg.z_dims) {
            const auto p = model_paths(models_dir, cfg.dataset, z);
            const auto enc = load_model_checked(p.encoder), dec = load_model_checked(p.decoder);
            if (enc.dataset != cfg.dataset || enc.z_dims != z)
                throw DataError(p.encoder.string() + " does not match dataset/z_dims of the config");
            w.autoencoders.emplace(z, models::autoencoder_from_files(enc, dec));
        }
    }

    const bool wants_codec =
        std::find(cfg.schemes.begin(), cfg.schemes.end(), Scheme::external_codec) != cfg.schemes.end();
    if (wants_codec) {
        if (cfg.codec_command.empty()) {
            if (log) log("warning: external_codec requested but codec_command is empty; scheme skipped");
        } else {
            ExternalCodec codec(cfg.codec_command);
            if (!codec.available()) {
                if (log) log("warning: codec command '" + cfg.codec_command + "' is not usable; scheme skipped");
            } else {
                w.codec = codec;
                for (std::size_t i = 0; i < w.test.size(); ++i)
                    w.codec_streams.push_back(codec.encode(w.test.image(i), cfg.codec_quality).value_or(Bytes{}));
            }
        }
    }
    return w;
}

// Evaluates every grid point on a worker pool; results come back in grid order.
inline std::vector<PointOutput> run_grid(const Workload& w, const std::vector<GridPoint>& pts, std::size_t threads,
                                         const Logger& log = {}) {
    std::vector<PointOutput> results(pts.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    std::exception_ptr failure;
    auto worker = [&] {
        for (std::size_t i; (i = next++) < pts.size();) {
            try {
                results[i] = run_point(w, pts[i]);
            } catch (...) {
                std::lock_guard lock(log_mutex);
                if (!failure) failure = std::current_exception();
                next = pts.size();
                return;
            }
            if (log) {
                std::lock_guard lock(log_mutex);
                const auto& r = results[i].row;
                log(r.scheme + " z=" + std::to_string(r.z_dims) + " snr=" + format_number(r.snr_db) +
                    " rr=" + format_number(r.rr_ratio) + " outage=" + format_number(r.outage_rate));
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < std::min(threads, pts.size()); ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return results;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f << text;
    if (!f) throw Error("cannot write " + p.string());
}

inline std::string snr_tag(double snr) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", snr);
    return buf;
}

// Writes originals and per-point reconstructions plus samples.csv
// (scheme,z_dims,snr_db,index,file; scheme "original" for the sources).
inline void write_samples(const std::filesystem::path& out_dir, const Workload& w, const std::vector<GridPoint>& pts,
                          const std::vector<PointOutput>& outputs) {
    const auto dir = out_dir / "samples";
    std::filesystem::create_directories(dir);
    std::string index = "scheme,z_dims,snr_db,index,file\n";
    const std::size_t keep = std::min(w.cfg.samples, w.test.size());
    for (std::size_t i = 0; i < keep; ++i) {
        const std::string name = "original_" + std::to_string(i) + (w.test.sample_shape()[0] == 1 ? ".pgm" : ".ppm");
        image::write_pnm(dir / name, w.test.image(i));
        index += "original,0,0," + std::to_string(i) + "," + name + "\n";
    }
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const auto& r = outputs[k].row;
        for (std::size_t i = 0; i < outputs[k].samples.size(); ++i) {
            const std::string name = r.scheme + "_z" + std::to_string(r.z_dims) + "_snr" + snr_tag(r.snr_db) + "_" +
                                     std::to_string(i) + (w.test.sample_shape()[0] == 1 ? ".pgm" : ".ppm");
            image::write_pnm(dir / name, outputs[k].samples[i]);
            index += r.scheme + "," + std::to_string(r.z_dims) + "," + format_number(r.snr_db) + "," + std::to_string(i) +
                     "," + name + "\n";
        }
    }
    write_text(out_dir / "samples.csv", index);
}

struct RunSummary {
    std::vector<ResultRow> rows;
    bool codec_skipped = false;
};

inline RunSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& data_dir,
                                 const std::filesystem::path& models_dir, const std::filesystem::path& out_dir,
                                 const Logger& log = {}) {
    const Workload w = prepare_workload(cfg, data_dir, models_dir, log);
    const auto pts = grid_points(cfg, w.codec.has_value());
    const auto outputs = run_grid(w, pts, cfg.threads, log);
    RunSummary s;
    s.codec_skipped = !w.codec.has_value() &&
                      std::find(cfg.schemes.begin(), cfg.schemes.end(), Scheme::external_codec) != cfg.schemes.end();
    for (const auto& o : outputs) s.rows.push_back(o.row);
    write_text(out_dir / "results.csv", results_csv(s.rows));
    if (cfg.samples > 0) write_samples(out_dir, w, pts, outputs);
    return s;
}

} // namespace aesc::harness
