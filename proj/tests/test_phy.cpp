#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "aesc/phy/link.hpp"

using namespace aesc;
using namespace aesc::phy;

namespace {

std::vector<float> random_floats(std::size_t n, std::uint64_t seed, float lo, float hi) {
    Rng rng(seed);
    std::uniform_real_distribution<float> u(lo, hi);
    std::vector<float> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

Bits random_bits(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Bits b(n);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng() & 1u);
    return b;
}

Frame sample_frame(std::size_t params = 7409, int param_bits = 8) {
    return make_frame(random_floats(40, 1, 0, 5), 1, 40, random_floats(params, 2, -0.4f, 0.4f), 8, param_bits);
}

} // namespace

// ---- quantization ----

TEST(Quantize, ConstantTensorRoundTripsExactly) {
    const std::vector<float> v(10, 0.37f);
    const auto q = quantize(v, 8);
    for (auto c : q.codes) EXPECT_EQ(c, 0);
    for (float x : dequantize(q.codes, q.spec)) EXPECT_EQ(x, 0.37f);
}

TEST(Quantize, ThreeLevelExample) {
    const std::vector<float> v{0.0f, 0.5f, 1.0f};
    const auto q = quantize(v, 8);
    EXPECT_EQ(q.codes, (std::vector<std::uint16_t>{0, 128, 255}));
    const auto back = dequantize(q.codes, q.spec);
    // half a step, plus float32 rounding of the dequantized value
    for (std::size_t i = 0; i < 3; ++i) EXPECT_LE(std::abs(double(back[i]) - v[i]), 1.0 / 510.0 + 1e-7);
}

TEST(Quantize, ErrorBoundForBothWidths) {
    const auto v = random_floats(5000, 3, -2.0f, 3.0f);
    for (int bits : {8, 16}) {
        const auto q = quantize(v, bits);
        const auto back = dequantize(q.codes, q.spec);
        // Rounding to the nearest of 2^bits - 1 steps: at most half a step.
        const double bound = (double(q.spec.max_val) - q.spec.min_val) / (2.0 * q.spec.levels());
        for (std::size_t i = 0; i < v.size(); ++i) EXPECT_LE(std::abs(double(back[i]) - v[i]), bound + 1e-6);
        for (auto c : q.codes) EXPECT_LE(c, q.spec.levels());
    }
}

TEST(Quantize, RejectsUnsupportedWidths) {
    const std::vector<float> v{1.0f};
    EXPECT_THROW(quantize(v, 4), UsageError);
    EXPECT_THROW(quantize(v, 12), UsageError);
}

// ---- frames ----

TEST(Frame, SpliceUnspliceIsExactInverse) {
    for (int pb : {8, 16}) {
        const Frame f = sample_frame(1000, pb);
        EXPECT_EQ(unsplice(splice(f)), f);
    }
}

TEST(Frame, MnistZ40ByteCount) {
    const Frame f = sample_frame();
    // 4+2+2+4+1+1+16+4+4 header, 40 code bytes, 7409 parameter bytes, 4 CRC bytes
    EXPECT_EQ(splice(f).size(), 38u + 40u + 7409u + 4u);
    EXPECT_EQ(frame_bytes(f), splice(f).size());
    EXPECT_EQ(splice(sample_frame(7409, 16)).size(), 38u + 40u + 2u * 7409u + 4u);
}

TEST(Frame, WireLayoutFields) {
    const Frame f = sample_frame(3);
    const Bytes b = splice(f);
    EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "SFRM");
    ByteReader r(b, "t");
    r.get_bytes(4);
    EXPECT_EQ(r.get<std::uint16_t>(), 1);  // version
    EXPECT_EQ(r.get<std::uint16_t>(), 1);  // model id
    EXPECT_EQ(r.get<std::uint32_t>(), 40u);
    EXPECT_EQ(r.get<std::uint8_t>(), 8);
    EXPECT_EQ(r.get<std::uint8_t>(), 8);
    r.get_bytes(16);
    EXPECT_EQ(r.get<std::uint32_t>(), 40u);
    EXPECT_EQ(r.get<std::uint32_t>(), 3u);
    r.get_bytes(43);
    EXPECT_EQ(r.get<std::uint32_t>(), crc32_ieee(std::span(b).first(b.size() - 4)));
    EXPECT_EQ(r.remaining(), 0u);
}

TEST(Frame, CorruptionAndTruncationRejected) {
    Bytes b = splice(sample_frame(100));
    for (std::size_t pos : {std::size_t{0}, std::size_t{5}, std::size_t{20}, b.size() / 2, b.size() - 1}) {
        Bytes c = b;
        c[pos] ^= 0x10;
        EXPECT_THROW(unsplice(c), FrameError) << "byte " << pos;
    }
    EXPECT_THROW(unsplice(Bytes{}), FrameError);
    EXPECT_THROW(unsplice(std::span(b).first(b.size() - 1)), FrameError);
}

TEST(Frame, CrcCheckValue) {
    const std::string s = "123456789";
    EXPECT_EQ(crc32_ieee(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())), 0xCBF43926u);
}

// ---- LDPC ----

TEST(Ldpc, StructureIsRegularFullRankWithoutFourCycles) {
    const auto& code = default_ldpc();
    EXPECT_EQ(code.n(), 1024u);
    EXPECT_EQ(code.k(), 512u);
    EXPECT_EQ(code.rank(), 512u);
    std::vector<int> col(code.n(), 0);
    for (const auto& row : code.check_rows()) {
        EXPECT_EQ(row.size(), 6u);
        for (auto v : row) ++col[v];
    }
    for (int c : col) EXPECT_EQ(c, 3);
    // Two checks share at most one variable.
    const auto& rows = code.check_rows();
    for (std::size_t a = 0; a < rows.size(); ++a)
        for (std::size_t b = a + 1; b < rows.size(); ++b) {
            std::vector<std::uint32_t> common;
            std::set_intersection(rows[a].begin(), rows[a].end(), rows[b].begin(), rows[b].end(), std::back_inserter(common));
            ASSERT_LE(common.size(), 1u) << "checks " << a << "," << b;
        }
}

TEST(Ldpc, ConstructionDeterministicPerSeed) {
    const LdpcCode a(LdpcParams{}), b(LdpcParams{});
    EXPECT_EQ(a.check_rows(), b.check_rows());
    LdpcParams p;
    p.seed = 77;
    EXPECT_NE(LdpcCode(p).check_rows(), a.check_rows());
}

TEST(Ldpc, EveryCodewordSatisfiesParityAndIsSystematic) {
    const auto& code = default_ldpc();
    EXPECT_TRUE(code.syndrome_ok(code.encode(Bits(512, 0))));
    for (std::uint64_t s = 0; s < 50; ++s) {
        const Bits u = random_bits(512, s);
        const Bits c = code.encode(u);
        ASSERT_TRUE(code.syndrome_ok(c));
        EXPECT_EQ(code.extract_info(c), u);
    }
}

TEST(Ldpc, NoiselessDecodeExactWithinOneIteration) {
    const auto& code = default_ldpc();
    for (std::uint64_t s = 0; s < 10; ++s) {
        const Bits u = random_bits(512, 100 + s);
        const auto llr = demod_llr(modulate_bpsk(code.encode(u)), 0.0);
        const auto r = code.decode(llr);
        EXPECT_TRUE(r.success);
        EXPECT_LE(r.iterations, 1u);
        EXPECT_EQ(r.info, u);
    }
}

TEST(Ldpc, CorrectsScatteredErrorsAndSuccessImpliesZeroSyndrome) {
    const auto& code = default_ldpc();
    const Bits u = random_bits(512, 5);
    const Bits c = code.encode(u);
    std::vector<double> llr;
    for (auto b : c) llr.push_back(b ? -2.0 : 2.0);
    for (std::size_t i = 0; i < 1024; i += 97) llr[i] = -llr[i];
    const auto r = code.decode(llr);
    EXPECT_TRUE(r.success);
    EXPECT_EQ(r.info, u);

    Rng rng(3);
    std::normal_distribution<double> nd(0.0, 1.5);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> noisy;
        for (auto b : c) noisy.push_back((b ? -1.0 : 1.0) + nd(rng));
        const auto d = code.decode(noisy);
        EXPECT_EQ(d.success, code.syndrome_ok(d.codeword));
    }
}

// ---- modem ----

TEST(Modem, MappingAndSignConvention) {
    const Bits b{0, 1};
    const auto s = modulate_bpsk(b);
    EXPECT_EQ(s[0], Complex(1, 0));
    EXPECT_EQ(s[1], Complex(-1, 0));
    const std::vector<Complex> y{Complex(1, 0)};
    EXPECT_GT(demod_llr(y, 1e-6)[0], 1e5);
    EXPECT_DOUBLE_EQ(demod_llr(y, 0.5)[0], 8.0);
    for (const auto& x : s) EXPECT_EQ(std::norm(x), 1.0);
}

TEST(Modem, CoherentDemodCorrectsPhaseFlip) {
    const Bits b{0, 1, 1, 0};
    auto s = modulate_bpsk(b);
    for (auto& v : s) v *= Complex(-1, 0);
    EXPECT_EQ(hard_decision(demod_llr(s, Complex(-1, 0), 0.1)), b);
    auto r = modulate_bpsk(b);
    const Complex h = std::polar(0.7, 2.1);
    for (auto& v : r) v *= h;
    EXPECT_EQ(hard_decision(demod_llr(r, h, 0.1)), b);
}

// ---- channels ----

TEST(Channel, NoiseVarianceMatchesSnr) {
    const Symbols x(1000000, Complex(0, 0));
    for (double snr : {0.0, 7.0}) {
        ChannelConfig cfg;
        cfg.snr_db = snr;
        cfg.seed = 11;
        const auto y = channel(x, cfg, 0);
        double p = 0.0;
        for (const auto& v : y) p += std::norm(v);
        p /= double(y.size());
        EXPECT_NEAR(p / cfg.noise_variance(), 1.0, 0.01) << "snr " << snr;
    }
}

TEST(Channel, NoiselessGuardAt100Db) {
    const auto x = modulate_bpsk(random_bits(1000, 1));
    ChannelConfig cfg;
    cfg.snr_db = 100.0;
    const auto y = channel(x, cfg, 0);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_LE(std::abs(y[i] - x[i]), 1e-5);
}

TEST(Channel, SingleUnitTapMultipathEqualsAwgnBitExactly) {
    const auto x = modulate_bpsk(random_bits(4096, 2));
    ChannelConfig awgn;
    awgn.snr_db = 3.0;
    awgn.seed = 5;
    ChannelConfig mp = awgn;
    mp.family = ChannelFamily::multipath_tdl;
    mp.taps = {Tap{Complex(1, 0), 0}};
    for (std::uint64_t f = 0; f < 3; ++f) EXPECT_EQ(channel(x, awgn, f), channel(x, mp, f));
}

TEST(Channel, SlowFadingConstantWithinFrameVaryingAcross) {
    const auto x = modulate_bpsk(random_bits(2000, 3));
    ChannelConfig cfg;
    cfg.family = ChannelFamily::slow_rayleigh;
    cfg.snr_db = 100.0;
    cfg.seed = 9;
    std::vector<Complex> gains;
    for (std::uint64_t f = 0; f < 5; ++f) {
        ChannelState st;
        const auto y = channel(x, cfg, f, &st);
        const Complex h = y[0] / x[0];
        for (std::size_t i = 0; i < x.size(); ++i) ASSERT_EQ(y[i], h * x[i]);
        EXPECT_EQ(h, st.taps.front().gain);
        gains.push_back(h);
    }
    for (std::size_t i = 1; i < gains.size(); ++i) EXPECT_NE(gains[i], gains[0]);
}

TEST(Channel, RayleighGainHasUnitPower) {
    ChannelConfig cfg;
    cfg.family = ChannelFamily::slow_rayleigh;
    double p = 0.0;
    const int n = 20000;
    for (int f = 0; f < n; ++f) p += std::norm(draw_state(cfg, static_cast<std::uint64_t>(f)).taps.front().gain);
    EXPECT_NEAR(p / n, 1.0, 0.03);
}

TEST(Channel, MultipathValidation) {
    ChannelConfig cfg;
    cfg.family = ChannelFamily::multipath_tdl;
    cfg.taps.clear();
    EXPECT_THROW(cfg.validate(), UsageError);
    cfg.taps = {Tap{Complex(1, 0), 0}, Tap{Complex(0.5, 0), 1}};
    EXPECT_THROW(cfg.validate(), UsageError);
    EXPECT_EQ(parse_channel("awgn"), ChannelFamily::awgn);
    EXPECT_THROW(parse_channel("fiber"), UsageError);
}

TEST(Channel, SameSeedSameNoise) {
    const auto x = modulate_bpsk(random_bits(500, 4));
    ChannelConfig cfg;
    cfg.snr_db = 2.0;
    cfg.seed = 1;
    EXPECT_EQ(channel(x, cfg, 3), channel(x, cfg, 3));
    EXPECT_NE(channel(x, cfg, 3), channel(x, cfg, 4));
}

// ---- equalizer ----

TEST(Equalizer, SingleUnitTapIsIdentity) {
    Rng rng(1);
    Symbols y(300);
    for (auto& v : y) v = complex_gaussian(rng, 1.0);
    const auto out = equalize_mmse(y, {Tap{}}, 0.1, y.size());
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_LE(std::abs(out[i] - y[i]), 1e-6);
}

TEST(Equalizer, NoiselessTwoTapChannel) {
    const auto x = modulate_bpsk(random_bits(2000, 6));
    const std::vector<Tap> taps{Tap{Complex(1, 0), 0}, Tap{Complex(0.5, 0), 1}};
    const auto y = apply_channel(x, ChannelState{taps, 0.0}, 0);
    const auto out = equalize_mmse(y, taps, 0.0, x.size());
    for (std::size_t i = 0; i < x.size(); ++i) ASSERT_LE(std::abs(out[i] - x[i]), 1e-2) << "symbol " << i;
}

// Independent oracle: ridge-regularised MMSE weights w = (H H^H + s I)^-1 H e_t
// solved by Gaussian elimination, compared with the equalizer's weights.
TEST(Equalizer, WeightsMatchClosedFormSolve) {
    const std::vector<Tap> taps{Tap{Complex(0.8, 0.1), 0}, Tap{Complex(0.3, -0.4), 2}, Tap{Complex(0.2, 0.2), 3}};
    const double s2 = 0.05;
    const auto eq = design_mmse(taps, s2);
    const std::size_t mem = 3, L = equalizer_length(mem), cols = L + mem, t = L - 1 - L / 2 + mem;
    std::vector<std::vector<Complex>> H(L, std::vector<Complex>(cols));
    for (std::size_t j = 0; j < L; ++j)
        for (const auto& tp : taps) H[j][j + mem - tp.delay] += tp.gain;
    std::vector<std::vector<Complex>> A(L, std::vector<Complex>(L + 1));
    for (std::size_t a = 0; a < L; ++a) {
        for (std::size_t b = 0; b < L; ++b)
            for (std::size_t c = 0; c < cols; ++c) A[a][b] += H[a][c] * std::conj(H[b][c]);
        A[a][a] += s2 + kEqualizerRidge;
        A[a][L] = H[a][t];
    }
    for (std::size_t c = 0; c < L; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < L; ++r)
            if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
        std::swap(A[c], A[piv]);
        for (std::size_t r = 0; r < L; ++r) {
            if (r == c) continue;
            const Complex f = A[r][c] / A[c][c];
            for (std::size_t k = c; k <= L; ++k) A[r][k] -= f * A[c][k];
        }
    }
    ASSERT_EQ(eq.weights.size(), L);
    for (std::size_t i = 0; i < L; ++i) EXPECT_LE(std::abs(eq.weights[i] - A[i][L] / A[i][i]), 1e-9) << i;
}

TEST(Equalizer, OutputSnrNotBelowMatchedFilter) {
    Rng rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Tap> taps;
        double p = 0.0;
        for (std::size_t d = 0; d < 3; ++d) {
            taps.push_back({complex_gaussian(rng, 1.0), d});
            p += std::norm(taps.back().gain);
        }
        for (auto& t : taps) t.gain /= std::sqrt(p);
        const double s2 = 0.1;
        const auto x = modulate_bpsk(random_bits(50000, 300 + static_cast<std::uint64_t>(trial)));
        const auto y = apply_channel(x, ChannelState{taps, s2}, 77 + static_cast<std::uint64_t>(trial));
        const auto mmse = equalize_mmse(y, taps, s2, x.size());
        // Matched filter on the same window: weights = target column of H, unit-gain normalised.
        MmseEqualizer mf = design_mmse(taps, s2);
        const std::size_t mem = 2, L = equalizer_length(mem), t = L - 1 - L / 2 + mem;
        double energy = 0.0;
        for (std::size_t j = 0; j < L; ++j) {
            Complex w{0, 0};
            for (const auto& tp : taps)
                if (j + mem - tp.delay == t) w += tp.gain;
            mf.weights[j] = w;
            energy += std::norm(w);
        }
        mf.gain = energy;
        const auto matched = equalize(mf, y, x.size());
        auto err = [&](const Symbols& e) {
            double acc = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) acc += std::norm(e[i] - x[i]);
            return acc / double(x.size());
        };
        EXPECT_GE(1.0 / err(mmse), 1.0 / err(matched)) << "trial " << trial;
    }
}

// ---- end-to-end ----

TEST(Transmit, TransparentAt100DbIsBitExact) {
    const Frame f = sample_frame();
    for (auto fam : {ChannelFamily::awgn, ChannelFamily::slow_rayleigh}) {
        ChannelConfig cfg;
        cfg.family = fam;
        cfg.snr_db = 100.0;
        const auto r = transmit(f, cfg, 0, f.param_values());
        ASSERT_TRUE(r.frame.has_value());
        EXPECT_EQ(*r.frame, f);
        EXPECT_EQ(r.report.post_errors, 0u);
        EXPECT_EQ(r.report.pre_errors, 0u);
        EXPECT_EQ(r.report.param_mse, 0.0);
        EXPECT_TRUE(r.report.crc_ok);
    }
}

TEST(Transmit, MultipathWithEqualizerTransparentAtHighSnr) {
    const Frame f = sample_frame(500);
    ChannelConfig cfg;
    cfg.family = ChannelFamily::multipath_tdl;
    cfg.taps = {Tap{Complex(std::sqrt(0.8), 0), 0}, Tap{Complex(0, std::sqrt(0.2)), 2}};
    cfg.snr_db = 100.0;
    const auto r = transmit(f, cfg, 0);
    ASSERT_TRUE(r.frame.has_value());
    EXPECT_EQ(*r.frame, f);
}

TEST(Transmit, SameSeedIdenticalOutcome) {
    const Frame f = sample_frame(2000);
    ChannelConfig cfg;
    cfg.snr_db = -1.0;
    cfg.seed = 3;
    const auto a = transmit(f, cfg, 7), b = transmit(f, cfg, 7);
    EXPECT_EQ(a.frame.has_value(), b.frame.has_value());
    EXPECT_EQ(a.report.pre_errors, b.report.pre_errors);
    EXPECT_EQ(a.report.post_errors, b.report.post_errors);
}

TEST(Transmit, DeepCliffRegionCausesOutage) {
    const Frame f = sample_frame();
    ChannelConfig cfg;
    cfg.snr_db = -3.0;
    cfg.seed = 8;
    const auto r = transmit(f, cfg, 0);
    EXPECT_GT(r.report.post_errors, 0u);
    EXPECT_FALSE(r.frame.has_value());
    EXPECT_FALSE(r.report.crc_ok);
    EXPECT_GT(r.report.pre_ber(), 0.05);
}

TEST(Transmit, BytesBitsRoundTrip) {
    Bytes b(37);
    std::iota(b.begin(), b.end(), std::uint8_t{200});
    EXPECT_EQ(bits_to_bytes(bytes_to_bits(b)), b);
    EXPECT_EQ(bytes_to_bits(Bytes{0x01})[0], 1);
}
