#pragma once

// BPSK mapping (bit 0 -> +1, bit 1 -> -1) and coherent LLR demodulation.

#include <algorithm>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace aesc::phy {

using Complex = std::complex<double>;
using Symbols = std::vector<Complex>;

// Smallest noise variance used in LLR scaling; keeps noiseless LLRs finite.
inline constexpr double kMinNoiseVariance = 1e-10;

inline Symbols modulate_bpsk(std::span<const std::uint8_t> bits) {
    Symbols out;
    out.reserve(bits.size());
    for (auto b : bits) out.emplace_back((b & 1u) ? -1.0 : 1.0, 0.0);
    return out;
}

// y = h x + n with n ~ CN(0, noise_var): LLR = 4 Re(conj(h) y) / noise_var.
// Equivalently 2 Re(conj(h) y) / s2 with s2 = noise_var / 2 the variance of
// the real component, the only one BPSK occupies.
inline std::vector<double> demod_llr(std::span<const Complex> y, Complex h, double noise_var) {
    const double scale = 4.0 / std::max(noise_var, kMinNoiseVariance);
    std::vector<double> out;
    out.reserve(y.size());
    for (const auto& v : y) out.push_back(scale * (std::conj(h) * v).real());
    return out;
}

inline std::vector<double> demod_llr(std::span<const Complex> y, double noise_var) { return demod_llr(y, Complex{1, 0}, noise_var); }

inline std::vector<std::uint8_t> hard_decision(std::span<const double> llr) {
    std::vector<std::uint8_t> out;
    out.reserve(llr.size());
    for (double l : llr) out.push_back(l < 0.0 ? 1 : 0);
    return out;
}

} // namespace aesc::phy
