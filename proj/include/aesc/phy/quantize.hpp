#pragma once

// Uniform min-max quantization to 8 or 16 bits.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "aesc/bytes.hpp"
#include "aesc/error.hpp"

namespace aesc::phy {

struct QuantSpec {
    std::uint8_t bits = 8;
    float min_val = 0.0f;
    float max_val = 0.0f;

    std::uint32_t levels() const { return (std::uint32_t{1} << bits) - 1; }
    std::size_t bytes_per_value() const { return bits / 8; }
    friend bool operator==(const QuantSpec&, const QuantSpec&) = default;
};

inline void check_bits(int bits) {
    if (bits != 8 && bits != 16) throw UsageError("quantization bits must be 8 or 16, got " + std::to_string(bits));
}

struct Quantized {
    std::vector<std::uint16_t> codes;
    QuantSpec spec;
};

inline std::uint16_t quantize_value(float v, const QuantSpec& s) {
    if (!(s.max_val > s.min_val)) return 0;
    const double x = (double(v) - s.min_val) / (double(s.max_val) - s.min_val) * s.levels();
    return static_cast<std::uint16_t>(std::clamp(std::lround(x), 0L, static_cast<long>(s.levels())));
}

inline float dequantize_value(std::uint16_t q, const QuantSpec& s) {
    if (!(s.max_val > s.min_val)) return s.min_val;
    return static_cast<float>(s.min_val + (double(q) / s.levels()) * (double(s.max_val) - s.min_val));
}

inline Quantized quantize(std::span<const float> values, int bits) {
    check_bits(bits);
    Quantized out;
    out.spec.bits = static_cast<std::uint8_t>(bits);
    if (values.empty()) return out;
    for (float v : values)
        if (!std::isfinite(v)) throw DivergenceError("cannot quantize a non-finite value");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    out.spec.min_val = *lo;
    out.spec.max_val = *hi;
    out.codes.reserve(values.size());
    for (float v : values) out.codes.push_back(quantize_value(v, out.spec));
    return out;
}

inline std::vector<float> dequantize(std::span<const std::uint16_t> codes, const QuantSpec& spec) {
    std::vector<float> out;
    out.reserve(codes.size());
    for (auto q : codes) out.push_back(dequantize_value(q, spec));
    return out;
}

// Little-endian packing: one byte per value at 8 bits, two at 16.
inline Bytes pack_codes(std::span<const std::uint16_t> codes, int bits) {
    check_bits(bits);
    Bytes out;
    out.reserve(codes.size() * static_cast<std::size_t>(bits / 8));
    for (auto q : codes) {
        out.push_back(static_cast<std::uint8_t>(q & 0xFF));
        if (bits == 16) out.push_back(static_cast<std::uint8_t>(q >> 8));
    }
    return out;
}

inline std::vector<std::uint16_t> unpack_codes(std::span<const std::uint8_t> bytes, int bits) {
    check_bits(bits);
    const std::size_t w = static_cast<std::size_t>(bits / 8);
    if (bytes.size() % w != 0) throw FormatError("payload length is not a multiple of the code width");
    std::vector<std::uint16_t> out;
    out.reserve(bytes.size() / w);
    for (std::size_t i = 0; i < bytes.size(); i += w)
        out.push_back(static_cast<std::uint16_t>(bytes[i] | (w == 2 ? bytes[i + 1] << 8 : 0)));
    return out;
}

} // namespace aesc::phy
