#pragma once

// End-to-end bit pipe: bytes -> LDPC -> BPSK -> channel -> (equalizer) -> LLR
// -> LDPC decode -> bytes, and the frame-level transmit built on it.

#include <optional>
#include <span>

#include "aesc/bytes.hpp"
#include "aesc/phy/channel.hpp"
#include "aesc/phy/equalizer.hpp"
#include "aesc/phy/frame.hpp"
#include "aesc/phy/ldpc.hpp"
#include "aesc/phy/modem.hpp"

namespace aesc::phy {

struct LinkReport {
    std::size_t payload_bits = 0;
    std::size_t coded_bits = 0;
    std::size_t pre_errors = 0;  // hard-decision errors on coded bits before decoding
    std::size_t post_errors = 0; // payload bit errors after decoding
    std::size_t codewords = 0;
    std::size_t failed_codewords = 0;
    bool crc_ok = true;
    double param_mse = 0.0;

    double pre_ber() const { return coded_bits ? double(pre_errors) / double(coded_bits) : 0.0; }
    double post_ber() const { return payload_bits ? double(post_errors) / double(payload_bits) : 0.0; }
};

inline Bits bytes_to_bits(std::span<const std::uint8_t> bytes) {
    Bits out;
    out.reserve(bytes.size() * 8);
    for (auto b : bytes)
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((b >> i) & 1u));
    return out;
}

inline Bytes bits_to_bytes(std::span<const std::uint8_t> bits) {
    Bytes out(bits.size() / 8, 0);
    for (std::size_t i = 0; i < out.size() * 8; ++i) out[i / 8] |= static_cast<std::uint8_t>((bits[i] & 1u) << (i % 8));
    return out;
}

struct ReceivedBytes {
    Bytes bytes;
    LinkReport report;
};

// Sends `payload` as one channel frame (fading constant across it). The
// payload is zero-padded to whole codewords; the receiver knows its length.
inline ReceivedBytes transmit_bytes(std::span<const std::uint8_t> payload, const ChannelConfig& cfg, std::uint64_t frame_index,
                                    const LdpcCode& code = default_ldpc()) {
    Bits info = bytes_to_bits(payload);
    const std::size_t payload_bits = info.size();
    const std::size_t blocks = std::max<std::size_t>(1, (payload_bits + code.k() - 1) / code.k());
    info.resize(blocks * code.k(), 0);

    Bits coded;
    coded.reserve(blocks * code.n());
    for (std::size_t b = 0; b < blocks; ++b) {
        const Bits cw = code.encode(std::span(info).subspan(b * code.k(), code.k()));
        coded.insert(coded.end(), cw.begin(), cw.end());
    }

    ChannelState st;
    const Symbols x = modulate_bpsk(coded);
    const Symbols y = channel(x, cfg, frame_index, &st);
    std::vector<double> llr;
    if (cfg.family == ChannelFamily::multipath_tdl) {
        double var = 0.0;
        const Symbols eq = equalize_mmse(y, st.taps, st.noise_variance, x.size(), &var);
        llr = demod_llr(eq, var);
    } else {
        llr = demod_llr(y, st.taps.front().gain, st.noise_variance);
    }

    ReceivedBytes out;
    LinkReport& rep = out.report;
    rep.payload_bits = payload_bits;
    rep.coded_bits = coded.size();
    rep.codewords = blocks;
    for (std::size_t i = 0; i < coded.size(); ++i) rep.pre_errors += (llr[i] < 0.0 ? 1u : 0u) != coded[i];

    Bits decoded;
    decoded.reserve(blocks * code.k());
    for (std::size_t b = 0; b < blocks; ++b) {
        const auto r = code.decode(std::span<const double>(llr).subspan(b * code.n(), code.n()));
        rep.failed_codewords += !r.success;
        decoded.insert(decoded.end(), r.info.begin(), r.info.end());
    }
    for (std::size_t i = 0; i < payload_bits; ++i) rep.post_errors += decoded[i] != info[i];
    decoded.resize(payload_bits);
    out.bytes = bits_to_bytes(decoded);
    return out;
}

struct TransmitResult {
    std::optional<Frame> frame; // empty on CRC or parse failure (outage)
    LinkReport report;
};

// splice -> link -> unsplice. `original_params` (optional) feeds the
// decoder-parameter MSE in the report.
inline TransmitResult transmit(const Frame& f, const ChannelConfig& cfg, std::uint64_t frame_index,
                               std::span<const float> original_params = {}, const LdpcCode& code = default_ldpc()) {
    const Bytes wire = splice(f);
    ReceivedBytes rx = transmit_bytes(wire, cfg, frame_index, code);
    TransmitResult out{std::nullopt, rx.report};
    try {
        out.frame = unsplice(rx.bytes);
    } catch (const FrameError&) {
        out.report.crc_ok = false;
        return out;
    }
    if (!original_params.empty() && out.frame->params.size() == original_params.size()) {
        const auto got = out.frame->param_values();
        double acc = 0.0;
        for (std::size_t i = 0; i < got.size(); ++i) {
            const double d = double(got[i]) - original_params[i];
            acc += d * d;
        }
        out.report.param_mse = acc / double(got.size());
    }
    return out;
}

} // namespace aesc::phy
