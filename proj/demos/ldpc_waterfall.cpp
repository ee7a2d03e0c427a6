// Bit and frame error rates of the default LDPC code over AWGN and slow
// Rayleigh fading, BPSK, as a function of Eb/N0.
//
//   ldpc_waterfall [codewords per point]

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "aesc/phy/link.hpp"

using namespace aesc;

int main(int argc, char** argv) {
    const std::size_t blocks = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 200;
    if (argc > 2 || blocks == 0) {
        std::fprintf(stderr, "usage: %s [codewords per point > 0]\n", argv[0]);
        return 1;
    }
    const auto& code = phy::default_ldpc();
    const double rate = double(code.k()) / double(code.n());
    std::printf("# (%zu,%zu) LDPC, %zu codewords per point\n", code.n(), code.k(), blocks);
    std::printf("%-14s %8s %12s %12s %10s\n", "channel", "Eb/N0", "raw BER", "BER", "FER");
    for (auto family : {phy::ChannelFamily::awgn, phy::ChannelFamily::slow_rayleigh}) {
        for (double ebn0 = 0.0; ebn0 <= (family == phy::ChannelFamily::awgn ? 4.0 : 16.0); ebn0 += 1.0) {
            phy::ChannelConfig cfg;
            cfg.family = family;
            cfg.snr_db = ebn0 + 10.0 * std::log10(rate);
            cfg.seed = 2022;
            Rng rng(derive_seed(7, {static_cast<std::uint64_t>(ebn0 * 10)}));
            std::uint64_t raw = 0, errors = 0, failed = 0;
            for (std::size_t b = 0; b < blocks; ++b) {
                phy::Bits info(code.k());
                for (auto& x : info) x = static_cast<std::uint8_t>(rng() & 1u);
                const auto cw = code.encode(info);
                phy::ChannelState st;
                const auto y = phy::channel(phy::modulate_bpsk(cw), cfg, b, &st);
                const auto llr = phy::demod_llr(y, st.taps.front().gain, st.noise_variance);
                for (std::size_t i = 0; i < cw.size(); ++i) raw += (llr[i] < 0) != cw[i];
                const auto r = code.decode(llr);
                for (std::size_t i = 0; i < info.size(); ++i) errors += r.info[i] != info[i];
                failed += !r.success;
            }
            std::printf("%-14s %8.1f %12.3g %12.3g %10.3g\n", std::string(phy::channel_name(family)).c_str(), ebn0,
                        double(raw) / double(blocks * code.n()), double(errors) / double(blocks * code.k()),
                        double(failed) / double(blocks));
        }
    }
    return 0;
}
