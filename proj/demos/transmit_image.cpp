// Sends one MNIST test image through the semantic link and writes the
// original and the receiver's reconstruction as PGM files.
//
//   transmit_image <models dir> <mnist dir> [snr_db] [awgn|slow_rayleigh] [index]

#include <cstdio>
#include <cstdlib>
#include <string>

#include "aesc/harness/experiment.hpp"

using namespace aesc;

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr, "usage: %s <models dir> <mnist dir> [snr_db] [channel] [index]\n", argv[0]);
        return 1;
    }
    try {
        const std::filesystem::path models_dir = argv[1];
        const double snr = argc > 3 ? std::atof(argv[3]) : 10.0;
        const auto family = phy::parse_channel(argc > 4 ? argv[4] : "awgn");
        const std::size_t index = argc > 5 ? std::strtoul(argv[5], nullptr, 10) : 0;

        const auto test = data::load_mnist(argv[2]).test;
        const auto paths = harness::model_paths(models_dir, data::DatasetName::mnist, 40);
        const auto ae = models::autoencoder_from_files(models::load_model(paths.encoder), models::load_model(paths.decoder));
        const auto classifier = models::classifier_from_file(models::load_model(paths.classifier));

        const Tensor image = test.image(index);
        const auto code = models::encode(image, ae);
        const auto beta = ae.decoder.params().flatten();
        const auto frame = phy::make_frame(code.values.data(), code.model_id, 40, beta, 8, 8);

        phy::ChannelConfig cfg;
        cfg.family = family;
        cfg.snr_db = snr;
        cfg.seed = 1;
        const auto tx = phy::transmit(frame, cfg, index, beta);
        std::printf("frame %zu bytes, %zu codewords, pre-decoding BER %.3g, post-decoding BER %.3g\n", phy::frame_bytes(frame),
                    tx.report.codewords, tx.report.pre_ber(), tx.report.post_ber());

        image::write_pnm("original.pgm", image);
        if (!tx.frame) {
            std::printf("outage: frame CRC failed\n");
            return 0;
        }
        const Tensor recon = harness::decode_frame_code(*tx.frame, harness::decoder_from_frame(*tx.frame));
        image::write_pnm("received.pgm", recon);
        std::printf("label %d, classified %d -> %d, PSNR %.2f dB, SSIM %.4f\n", test.labels[index], models::classify(image, classifier),
                    models::classify(recon, classifier), metrics::psnr(image, recon), metrics::ssim(image, recon));
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
