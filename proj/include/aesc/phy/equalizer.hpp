#pragma once

// Linear MMSE FIR equalizer for a known tapped-delay-line channel. The
// estimate of x[n] uses y[n + D - L + 1 .. n + D] (L taps, decision delay
// D = L / 2). Outputs are bias-corrected so they feed demod_llr with h = 1.

#include <algorithm>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "aesc/phy/channel.hpp"

namespace aesc::phy {

inline constexpr double kEqualizerRidge = 1e-9;

// max(16, 4 * memory): at 4 * memory alone a one-tap-memory channel leaves
// residual interference far above the noiseless target.
inline std::size_t equalizer_length(std::size_t memory) { return std::max<std::size_t>(16, 4 * memory); }

struct MmseEqualizer {
    std::vector<Complex> weights; // applied as sum_j conj(w_j) * y[start + j]
    std::size_t delay = 0;
    double gain = 1.0;           // p^H R^-1 p
    double output_noise_var = 0; // variance of the bias-corrected estimate error
};

inline MmseEqualizer design_mmse(const std::vector<Tap>& taps, double noise_var) {
    std::size_t mem = 0;
    for (const auto& t : taps) mem = std::max(mem, t.delay);
    const std::size_t L = equalizer_length(mem), D = L / 2;
    const auto rows = static_cast<Eigen::Index>(L), cols = static_cast<Eigen::Index>(L + mem);
    // Window sample j sees symbol column j - tau + mem.
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(rows, cols);
    for (std::size_t j = 0; j < L; ++j)
        for (const auto& t : taps) H(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j + mem - t.delay)) += t.gain;
    const auto target = static_cast<Eigen::Index>(L - 1 - D + mem);
    Eigen::MatrixXcd R = H * H.adjoint();
    R.diagonal().array() += noise_var + kEqualizerRidge;
    const Eigen::VectorXcd p = H.col(target);
    const Eigen::VectorXcd w = R.ldlt().solve(p);
    MmseEqualizer eq;
    eq.weights.assign(w.data(), w.data() + w.size());
    eq.delay = D;
    eq.gain = std::clamp(p.dot(w).real(), 1e-12, 1.0);
    eq.output_noise_var = std::max(1.0 / eq.gain - 1.0, 0.0);
    return eq;
}

// Equalizes n_symbols symbols from y (samples outside y count as 0).
inline Symbols equalize(const MmseEqualizer& eq, std::span<const Complex> y, std::size_t n_symbols) {
    const std::size_t L = eq.weights.size();
    Symbols out(n_symbols);
    for (std::size_t n = 0; n < n_symbols; ++n) {
        Complex acc{0.0, 0.0};
        for (std::size_t j = 0; j < L; ++j) {
            const long idx = static_cast<long>(n + eq.delay + j) - static_cast<long>(L - 1);
            if (idx >= 0 && static_cast<std::size_t>(idx) < y.size()) acc += std::conj(eq.weights[j]) * y[static_cast<std::size_t>(idx)];
        }
        out[n] = acc / eq.gain;
    }
    return out;
}

inline Symbols equalize_mmse(std::span<const Complex> y, const std::vector<Tap>& taps, double noise_var, std::size_t n_symbols,
                             double* output_noise_var = nullptr) {
    const MmseEqualizer eq = design_mmse(taps, noise_var);
    if (output_noise_var) *output_noise_var = eq.output_noise_var;
    return equalize(eq, y, n_symbols);
}

} // namespace aesc::phy
