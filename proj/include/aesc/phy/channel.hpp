#pragma once

// AWGN, slow flat Rayleigh and tapped-delay-line multipath channels. Noise and
// fading draw from separate streams derived from (seed, frame index), so the
// same seed yields the same noise whichever channel family is selected.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aesc/error.hpp"
#include "aesc/phy/modem.hpp"
#include "aesc/rng.hpp"

namespace aesc::phy {

enum class ChannelFamily : std::uint8_t { awgn, slow_rayleigh, multipath_tdl };

constexpr std::string_view channel_name(ChannelFamily f) {
    switch (f) {
    case ChannelFamily::awgn: return "awgn";
    case ChannelFamily::slow_rayleigh: return "slow_rayleigh";
    case ChannelFamily::multipath_tdl: return "multipath_tdl";
    }
    return "?";
}

inline ChannelFamily parse_channel(std::string_view s) {
    if (s == "awgn") return ChannelFamily::awgn;
    if (s == "slow_rayleigh" || s == "rayleigh") return ChannelFamily::slow_rayleigh;
    if (s == "multipath_tdl" || s == "multipath") return ChannelFamily::multipath_tdl;
    throw UsageError("unknown channel '" + std::string(s) + "' (expected awgn, slow_rayleigh or multipath_tdl)");
}

struct Tap {
    Complex gain{1.0, 0.0};
    std::size_t delay = 0;
};

// SNR at or above this is treated as a noiseless channel.
inline constexpr double kNoiselessSnrDb = 100.0;

struct ChannelConfig {
    ChannelFamily family = ChannelFamily::awgn;
    double snr_db = 10.0;
    std::vector<Tap> taps{Tap{}};
    // When set, each multipath tap is redrawn per frame as CN(0, |gain|^2).
    bool rayleigh_taps = false;
    std::uint64_t seed = 0;

    // Complex noise variance: sigma^2 = 10^(-snr/10), 0 at the noiseless guard.
    double noise_variance() const { return snr_db >= kNoiselessSnrDb ? 0.0 : std::pow(10.0, -snr_db / 10.0); }

    std::size_t memory() const {
        std::size_t m = 0;
        for (const auto& t : taps) m = std::max(m, t.delay);
        return m;
    }

    void validate() const {
        if (family == ChannelFamily::multipath_tdl) {
            if (taps.empty()) throw UsageError("multipath channel needs at least one tap");
            double power = 0.0;
            for (const auto& t : taps) power += std::norm(t.gain);
            if (std::abs(power - 1.0) > 1e-6) throw UsageError("multipath tap powers must sum to 1");
        }
    }
};

// Channel state known to the receiver for one frame.
struct ChannelState {
    std::vector<Tap> taps; // flat channels carry a single tap at delay 0
    double noise_variance = 0.0;
};

inline Complex complex_gaussian(Rng& rng, double variance) {
    std::normal_distribution<double> nd(0.0, std::sqrt(variance / 2.0));
    const double re = nd(rng);
    const double im = nd(rng);
    return {re, im};
}

inline std::uint64_t noise_seed(std::uint64_t seed, std::uint64_t frame) { return derive_seed(seed, {0x401Eu, frame}); }
inline std::uint64_t fading_seed(std::uint64_t seed, std::uint64_t frame) { return derive_seed(seed, {0xFADEu, frame}); }

// Fading realisation for one frame (no noise).
inline ChannelState draw_state(const ChannelConfig& cfg, std::uint64_t frame) {
    cfg.validate();
    ChannelState st{{}, cfg.noise_variance()};
    Rng rng(fading_seed(cfg.seed, frame));
    switch (cfg.family) {
    case ChannelFamily::awgn: st.taps = {Tap{}}; break;
    case ChannelFamily::slow_rayleigh: st.taps = {Tap{complex_gaussian(rng, 1.0), 0}}; break;
    case ChannelFamily::multipath_tdl:
        st.taps = cfg.taps;
        if (cfg.rayleigh_taps)
            for (auto& t : st.taps) t.gain = complex_gaussian(rng, std::norm(t.gain));
        break;
    }
    return st;
}

// y = sum_k a_k x[n - tau_k] + n[n]; the output keeps the tail, so it is
// memory() samples longer than x for multipath channels.
inline Symbols apply_channel(std::span<const Complex> x, const ChannelState& st, std::uint64_t noise_stream_seed) {
    std::size_t mem = 0;
    for (const auto& t : st.taps) mem = std::max(mem, t.delay);
    Symbols y(x.size() + mem, Complex{0.0, 0.0});
    for (const auto& t : st.taps)
        for (std::size_t i = 0; i < x.size(); ++i) y[i + t.delay] += t.gain * x[i];
    if (st.noise_variance > 0.0) {
        Rng rng(noise_stream_seed);
        std::normal_distribution<double> nd(0.0, std::sqrt(st.noise_variance / 2.0));
        for (auto& v : y) {
            const double re = nd(rng);
            const double im = nd(rng);
            v += Complex{re, im};
        }
    }
    return y;
}

inline Symbols channel(std::span<const Complex> x, const ChannelConfig& cfg, std::uint64_t frame, ChannelState* state = nullptr) {
    const ChannelState st = draw_state(cfg, frame);
    if (state) *state = st;
    return apply_channel(x, st, noise_seed(cfg.seed, frame));
}

} // namespace aesc::phy
