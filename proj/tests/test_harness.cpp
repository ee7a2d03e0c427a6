#include <gtest/gtest.h>

#include <fstream>
#include <regex>

#include "aesc/harness/report.hpp"
#include "aesc/harness/train.hpp"
#include "support/tempdir.hpp"

using namespace aesc;
using namespace aesc::harness;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

std::size_t count(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
    return n;
}

// A briefly trained classifier and an untrained z=40 autoencoder saved to a
// scratch models directory, shared by the experiment tests.
class HarnessModels : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = new TempDir;
        data::LoadOptions lo;
        lo.train_limit = 600;
        const auto splits = data::load_mnist(AESC_MNIST_DIR, lo);
        auto cfg = training::TrainConfig::classifier_defaults(data::DatasetName::mnist);
        cfg.max_epochs = 2;
        cfg.seed = 5;
        const auto run = training::train_classifier(splits, cfg);
        const auto models = *dir_ / "models";
        fs::create_directories(models);
        models::save_model(classifier_path(models, data::DatasetName::mnist), models::to_model_file(run.model));
        ae_ = new models::Autoencoder(models::build_autoencoder(data::DatasetName::mnist, 40, 9));
        const auto p = model_paths(models, data::DatasetName::mnist, 40);
        models::save_model(p.encoder, models::to_model_file(*ae_, models::ModelRole::encoder));
        models::save_model(p.decoder, models::to_model_file(*ae_, models::ModelRole::decoder));
    }
    static void TearDownTestSuite() {
        delete ae_;
        delete dir_;
    }

    static ExperimentConfig small_config() {
        auto doc = ConfigDoc::parse("frames = 12\nsnr_db = 100\nschemes = aesc_i, direct\nthreads = 2\nsamples = 2\nseed = 4");
        return ExperimentConfig::from(doc);
    }

    static fs::path models_dir() { return *dir_ / "models"; }

    static TempDir* dir_;
    static models::Autoencoder* ae_;
};

TempDir* HarnessModels::dir_ = nullptr;
models::Autoencoder* HarnessModels::ae_ = nullptr;

} // namespace

// ---- config ----

TEST(Config, ParsesValuesCommentsAndRanges) {
    const auto doc = ConfigDoc::parse("# header\n dataset = mnist  # trailing\n\nsnr_db = 0:10:2, 15\nz_dims = 196,98, 40\n"
                                      "amortize_decoder = yes\nlr = 1e-3\n");
    EXPECT_EQ(doc.get("dataset", ""), "mnist");
    EXPECT_EQ(doc.get_doubles("snr_db", {}), (std::vector<double>{0, 2, 4, 6, 8, 10, 15}));
    EXPECT_EQ(doc.get_sizes("z_dims", {}), (std::vector<std::size_t>{196, 98, 40}));
    EXPECT_TRUE(doc.get_bool("amortize_decoder", false));
    EXPECT_DOUBLE_EQ(doc.get_double("lr", 0), 1e-3);
    EXPECT_EQ(doc.get_size("frames", 200), 200u);
    EXPECT_TRUE(doc.unused_keys().empty());
}

TEST(Config, RejectsMalformedDocuments) {
    EXPECT_THROW(ConfigDoc::parse("just words"), UsageError);
    EXPECT_THROW(ConfigDoc::parse("a = 1\na = 2"), UsageError);
    EXPECT_THROW(ConfigDoc::parse(" = 3"), UsageError);
    EXPECT_THROW(ConfigDoc::parse("frames = ten").get_size("frames", 1), UsageError);
    EXPECT_THROW(ConfigDoc::parse("frames = -3").get_size("frames", 1), UsageError);
    EXPECT_THROW(ConfigDoc::parse("snr = 10:0:1").get_doubles("snr", {}), UsageError);
    EXPECT_THROW(ConfigDoc::parse("b = maybe").get_bool("b", false), UsageError);
    EXPECT_THROW(ConfigDoc::load("/nonexistent/file.cfg"), UsageError);
}

TEST(Config, ExperimentDefaultsAndValidation) {
    const auto c = ExperimentConfig::from(ConfigDoc{});
    EXPECT_EQ(c.frames, 200u);
    EXPECT_EQ(c.z_dims, std::vector<std::size_t>{40});
    EXPECT_EQ(c.code_bits, 8);
    EXPECT_EQ(c.param_bits, 8);
    EXPECT_EQ(c.codec_quality, 60);
    EXPECT_FALSE(c.amortize_decoder);
    EXPECT_EQ(c.service_mapping, metrics::ServiceMapping::identity);
    EXPECT_EQ(ExperimentConfig::from(ConfigDoc::parse("dataset = cifar10")).param_bits, 16);

    EXPECT_THROW(ExperimentConfig::from(ConfigDoc::parse("z_dims = 0")), UsageError);
    EXPECT_THROW(ExperimentConfig::from(ConfigDoc::parse("dataset = svhn")), UsageError);
    EXPECT_THROW(ExperimentConfig::from(ConfigDoc::parse("code_bits = 12")), UsageError);
    EXPECT_THROW(ExperimentConfig::from(ConfigDoc::parse("schemes = aesc_i, jpeg2000")), UsageError);
    EXPECT_THROW(ExperimentConfig::from(ConfigDoc::parse("channel = multipath_tdl\ntaps = 0.5@0, 0.5@1")), UsageError);
    const auto mp = ExperimentConfig::from(ConfigDoc::parse("channel = multipath_tdl\ntaps = 0.8@0, 0.6@2"));
    ASSERT_EQ(mp.taps.size(), 2u);
    EXPECT_EQ(mp.taps[1].delay, 2u);
}

TEST(Config, TrainingPlanMirrorsRecipeDefaults) {
    const auto p = TrainingPlan::from(ConfigDoc{});
    EXPECT_DOUBLE_EQ(p.autoencoder.lr, 1e-3);
    EXPECT_EQ(p.autoencoder.batch_size, 256u);
    EXPECT_DOUBLE_EQ(p.loss.gamma, 0.5);
    EXPECT_EQ(p.loss.reconstruction, training::ReconstructionKind::bce);
    const auto c = TrainingPlan::from(ConfigDoc::parse("dataset = cifar10"));
    EXPECT_EQ(c.autoencoder.batch_size, 128u);
    EXPECT_DOUBLE_EQ(c.loss.gamma, 0.1);
    EXPECT_EQ(c.loss.reconstruction, training::ReconstructionKind::mse);
    EXPECT_THROW(TrainingPlan::from(ConfigDoc::parse("z_dims = 0")), UsageError);
    EXPECT_THROW(TrainingPlan::from(ConfigDoc::parse("gamma = 1.5")), UsageError);
    EXPECT_THROW(TrainingPlan::from(ConfigDoc::parse("reconstruction = l1")), UsageError);
    EXPECT_TRUE(known_config_key("amortize_decoder"));
    EXPECT_FALSE(known_config_key("amortise"));
}

// ---- CSV ----

TEST(Results, CsvColumnsAndInfinitySentinel) {
    ResultRow r{"mnist", 40, 19.6, "awgn", 100, "aesc_i", std::numeric_limits<double>::infinity(), 1, 1, 1, 0, 0, 0, 59928};
    const std::string csv = results_csv({r});
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "dataset,z_dims,compression_ratio,channel,snr_db,scheme,psnr,ssim,rr_ratio,ss_index,outage_rate,pre_ber,"
              "post_ber,bits_per_image");
    EXPECT_NE(csv.find("mnist,40,19.6,awgn,100,aesc_i,inf,1,1,1,0,0,0,59928"), std::string::npos);
    const auto back = parse_results({csv.substr(0, csv.find('\n')), to_csv_line(r)});
    ASSERT_EQ(back.size(), 1u);
    EXPECT_TRUE(std::isinf(back[0].psnr));
    EXPECT_EQ(back[0].z_dims, 40u);
}

// ---- receiver ----

TEST(Receiver, DecoderIsBuiltFromFrameParameters) {
    const auto ae = models::build_autoencoder(data::DatasetName::mnist, 40, 3);
    const auto beta = ae.decoder.params().flatten();
    Tensor img({1, 28, 28});
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = float((i * 37 + 11) % 256) / 255.0f;
    const auto code = models::encode(img, ae).values;
    const auto frame = phy::make_frame(code.data(), 1, 40, beta, 8, 8);

    const auto rx = decoder_from_frame(frame);
    EXPECT_EQ(rx.params().flatten(), frame.param_values());
    const Tensor good = decode_frame_code(frame, rx);

    // Corrupting the delivered parameters must change the reconstruction.
    auto bad = frame;
    for (std::size_t i = 0; i < bad.params.size(); i += 7) bad.params[i] = static_cast<std::uint16_t>(255 - bad.params[i]);
    const Tensor worse = decode_frame_code(bad, decoder_from_frame(bad));
    EXPECT_GT(metrics::mse(good, worse), 1e-6);

    auto wrong_id = frame;
    wrong_id.model_id = 77;
    EXPECT_THROW(decoder_from_frame(wrong_id), FormatError);
}

TEST_F(HarnessModels, NoiselessPointEqualsLocalDecode) {
    const auto cfg = small_config();
    const Workload w = prepare_workload(cfg, AESC_MNIST_DIR, models_dir());
    PointOutput out;
    const ResultRow row = run_aesc_point(w, 40, 100.0, 1, &out);

    // Local reference: the same quantized code and parameters, no channel.
    const auto beta = ae_->decoder.params().flatten();
    double mse = 0, ssim = 0;
    std::vector<Tensor> recon;
    for (std::size_t i = 0; i < w.test.size(); ++i) {
        const Tensor img = w.test.image(i);
        const auto f = phy::make_frame(models::encode(img, *ae_).values.data(), 1, 40, beta, 8, 8);
        recon.push_back(decode_frame_code(f, decoder_from_frame(f)));
        mse += metrics::mse(img, recon.back());
        ssim += metrics::ssim(img, recon.back());
    }
    const double n = double(w.test.size());
    EXPECT_EQ(row.outage_rate, 0.0);
    EXPECT_EQ(row.post_ber, 0.0);
    EXPECT_EQ(row.psnr, metrics::psnr_from_mse(mse / n));
    EXPECT_EQ(row.ssim, ssim / n);
    ASSERT_EQ(out.samples.size(), 2u);
    EXPECT_EQ(out.samples[0], recon[0]);
    const auto pred = models::classify_batch(stack<float>(recon), w.classifier);
    EXPECT_EQ(row.rr_ratio, metrics::rr_ratio_from_predictions(w.original_predictions, pred, w.test.labels));
    EXPECT_EQ(row.ss_index, row.rr_ratio);
    EXPECT_DOUBLE_EQ(row.compression_ratio, 19.6);
    EXPECT_EQ(row.bits_per_image, double(phy::kFrameOverheadBytes + 40 + 7409) * 8);
}

TEST_F(HarnessModels, AmortizedDecoderMatchesPerFrameAtNoiselessPoint) {
    auto cfg = small_config();
    const Workload a = prepare_workload(cfg, AESC_MNIST_DIR, models_dir());
    cfg.amortize_decoder = true;
    const Workload b = prepare_workload(cfg, AESC_MNIST_DIR, models_dir());
    const auto ra = run_aesc_point(a, 40, 100.0, 1);
    const auto rb = run_aesc_point(b, 40, 100.0, 1);
    EXPECT_EQ(ra.psnr, rb.psnr);
    EXPECT_EQ(ra.rr_ratio, rb.rr_ratio);
    EXPECT_LT(rb.bits_per_image, ra.bits_per_image / 5);
}

TEST_F(HarnessModels, DeepFadeCausesOutagesCountedAsFailures) {
    const Workload w = prepare_workload(small_config(), AESC_MNIST_DIR, models_dir());
    const auto row = run_aesc_point(w, 40, -6.0, 2);
    EXPECT_EQ(row.outage_rate, 1.0);
    EXPECT_GT(row.post_ber, 0.0);
    // Every reconstruction is the blank image.
    double ssim = 0.0, mse = 0.0;
    const Tensor blank = blank_image(w.test);
    for (std::size_t i = 0; i < w.test.size(); ++i) {
        ssim += metrics::ssim(w.test.image(i), blank);
        mse += metrics::mse(w.test.image(i), blank);
    }
    EXPECT_NEAR(row.ssim, ssim / double(w.test.size()), 1e-9);
    EXPECT_NEAR(row.psnr, metrics::psnr_from_mse(mse / double(w.test.size())), 1e-9);
}

TEST_F(HarnessModels, DirectBaselineIsTransparentAtHighSnrAndDegradesAtLowSnr) {
    const Workload w = prepare_workload(small_config(), AESC_MNIST_DIR, models_dir());
    const auto hi = run_direct_point(w, 100.0, 3);
    EXPECT_EQ(hi.rr_ratio, 1.0);
    EXPECT_TRUE(std::isinf(hi.psnr));
    EXPECT_EQ(hi.bits_per_image, 784.0 * 8);
    EXPECT_EQ(hi.compression_ratio, 1.0);
    const auto lo = run_direct_point(w, -4.0, 3);
    EXPECT_GT(lo.post_ber, 0.0);
    EXPECT_LT(lo.psnr, 20.0);
}

TEST_F(HarnessModels, RunIsReproducibleAndIndependentOfThreadCount) {
    TempDir out1, out2;
    auto cfg = small_config();
    cfg.snr_db = {-2, 100};
    run_experiment(cfg, AESC_MNIST_DIR, models_dir(), out1.path());
    cfg.threads = 1;
    run_experiment(cfg, AESC_MNIST_DIR, models_dir(), out2.path());
    const std::string a = slurp(out1 / "results.csv");
    EXPECT_EQ(a, slurp(out2 / "results.csv"));
    EXPECT_EQ(count(a, "\n"), 5u);
    EXPECT_EQ(slurp(out1 / "samples.csv"), slurp(out2 / "samples.csv"));
    EXPECT_TRUE(fs::exists(out1 / "samples" / "aesc_i_z40_snr-2_1.pgm"));
}

TEST_F(HarnessModels, MissingModelsAreDataErrors) {
    TempDir empty;
    EXPECT_THROW(prepare_workload(small_config(), AESC_MNIST_DIR, empty.path()), DataError);
    EXPECT_THROW(prepare_workload(small_config(), empty.path(), models_dir()), DataError);
}

// ---- external codec ----

TEST(Codec, ProcessRoundTripThroughCat) {
    const Bytes in(200000, 7);
    const auto r = run_process({"cat"}, in);
    EXPECT_EQ(r.status, 0);
    EXPECT_EQ(r.out, in);
    EXPECT_NE(run_process({"false"}, {}).status, 0);
    EXPECT_EQ(run_process({"/nonexistent/codec"}, {}).status, 127);
}

TEST(Codec, MissingExecutableIsUnavailable) {
    EXPECT_FALSE(ExternalCodec("/nonexistent/codec --flag").available());
    EXPECT_THROW(ExternalCodec("   "), UsageError);
}

TEST(Codec, JpegToolReconstructsDigitAndRejectsGarbage) {
    const ExternalCodec codec(AESC_JPEG_CODEC);
    if (!codec.available()) GTEST_SKIP() << "python3 with Pillow not available";
    const auto splits = data::load_mnist(AESC_MNIST_DIR);
    const Tensor digit = splits.test.image(0);
    const auto enc = codec.encode(digit, 60);
    ASSERT_TRUE(enc.has_value());
    EXPECT_LT(enc->size(), 784u);
    const auto dec = codec.decode(*enc, digit.shape());
    ASSERT_TRUE(dec.has_value());
    EXPECT_GT(metrics::ssim(digit, *dec), 0.8);
    const Bytes garbage{'n', 'o', 't', ' ', 'j', 'p', 'e', 'g'};
    EXPECT_FALSE(codec.decode(garbage, digit.shape()).has_value());
}

// ---- report ----

namespace {

std::string synthetic_csv(std::size_t schemes, std::size_t snrs) {
    std::vector<ResultRow> rows;
    const char* names[] = {"aesc_i", "direct", "external_codec"};
    for (std::size_t s = 0; s < snrs; ++s)
        for (std::size_t k = 0; k < schemes; ++k)
            rows.push_back({"mnist", k == 0 ? 40u : 0u, k == 0 ? 19.6 : 1.0, "awgn", double(2 * s), names[k],
                            s == snrs - 1 ? std::numeric_limits<double>::infinity() : 10.0 + double(s), 0.5, 0.9, 0.9, 0.1,
                            0.01, 0.0, 1000});
    return results_csv(rows);
}

} // namespace

TEST(Report, OneChartPerMetricWithOnePolylinePerScheme) {
    TempDir d;
    const std::string csv = synthetic_csv(3, 6);
    d.write("results.csv", std::vector<unsigned char>(csv.begin(), csv.end()));
    const auto files = make_report(d / "results.csv", d / "report");
    EXPECT_EQ(files.written.size(), report_metrics().size());
    for (const auto& m : report_metrics()) {
        const std::string svg = slurp(d / "report" / (std::string(m.key) + "_vs_snr.svg"));
        EXPECT_EQ(svg.rfind("<svg", 0), 0u);
        EXPECT_EQ(count(svg, "<polyline"), 3u) << m.key;
        EXPECT_EQ(count(svg, "<circle"), 18u) << m.key;
    }
}

TEST(Report, CompressionChartsForSeveralCodeSizes) {
    std::vector<ResultRow> rows;
    for (std::size_t z : {196u, 98u, 40u})
        for (double snr : {0.0, 10.0})
            rows.push_back({"mnist", z, training::compression_ratio(data::DatasetName::mnist, z), "awgn", snr, "aesc_i", 20, 0.8,
                            0.9, 0.9, 0, 0, 0, 1000});
    const auto charts = cr_charts(rows);
    ASSERT_EQ(charts.size(), report_metrics().size());
    EXPECT_EQ(count(charts.at("rr_ratio_vs_cr.svg"), "<polyline"), 2u);
}

TEST(Report, EmptyOrMalformedCsvWritesNothing) {
    TempDir d;
    d.write("results.csv", {});
    EXPECT_THROW(make_report(d / "results.csv", d / "report"), FormatError);
    EXPECT_FALSE(fs::exists(d / "report"));

    const std::string header_only = std::string(kResultColumns) + "\n";
    d.write("results.csv", std::vector<unsigned char>(header_only.begin(), header_only.end()));
    EXPECT_THROW(make_report(d / "results.csv", d / "report"), FormatError);

    const std::string bad = header_only + "mnist,40,19.6,awgn,zero,aesc_i,1,1,1,1,0,0,0,1\n";
    d.write("results.csv", std::vector<unsigned char>(bad.begin(), bad.end()));
    EXPECT_THROW(make_report(d / "results.csv", d / "report"), FormatError);
    EXPECT_FALSE(fs::exists(d / "report"));
    EXPECT_THROW(make_report(d / "missing.csv", d / "report"), DataError);
}

TEST_F(HarnessModels, MosaicHasOneRowPerSchemeAndOneColumnPerSnr) {
    TempDir out;
    auto cfg = small_config();
    cfg.snr_db = {0, 5, 100};
    run_experiment(cfg, AESC_MNIST_DIR, models_dir(), out.path());
    make_report(out / "results.csv", out / "report");
    const Tensor mosaic = image::read_pnm(out / "report" / "mosaic_z40_0.pgm");
    // rows: original, aesc_i, direct; columns: three SNR points; 2-pixel gutters.
    EXPECT_EQ(mosaic.dim(1), 3 * 28 + 4 * 2u);
    EXPECT_EQ(mosaic.dim(2), 3 * 28 + 4 * 2u);
}
