#pragma once

// Splicing of a quantized semantic code and quantized decoder parameters into
// one self-checking frame, and the inverse.
//
//   "SFRM" | version u16 | model_id u16 | z_dims u32 | code_bits u8 | param_bits u8 |
//   code min f32 | code max f32 | param min f32 | param max f32 |
//   code_len u32 | param_len u32 | code payload | param payload | CRC32 u32
//
// All integers little-endian. The CRC covers every preceding byte. A frame
// with param_len 0 carries no decoder parameters.

#include <bit>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "aesc/bytes.hpp"
#include "aesc/phy/quantize.hpp"

namespace aesc::phy {

static_assert(std::endian::native == std::endian::little, "wire formats assume a little-endian host");

inline constexpr std::uint16_t kFrameVersion = 1;
inline constexpr std::size_t kFrameHeaderBytes = 4 + 2 + 2 + 4 + 1 + 1 + 4 * 4 + 4 + 4;
inline constexpr std::size_t kFrameOverheadBytes = kFrameHeaderBytes + 4;

class FrameError : public FormatError {
public:
    using FormatError::FormatError;
};

struct Frame {
    std::uint16_t model_id = 0;
    std::uint32_t z_dims = 0;
    QuantSpec code_q;
    QuantSpec param_q;
    std::vector<std::uint16_t> code;
    std::vector<std::uint16_t> params;

    friend bool operator==(const Frame&, const Frame&) = default;

    std::vector<float> code_values() const { return dequantize(code, code_q); }
    std::vector<float> param_values() const { return dequantize(params, param_q); }
};

inline Frame make_frame(std::span<const float> code, std::uint16_t model_id, std::uint32_t z_dims,
                        std::span<const float> params, int code_bits, int param_bits) {
    Quantized c = quantize(code, code_bits);
    Quantized p = quantize(params, param_bits);
    return {model_id, z_dims, c.spec, p.spec, std::move(c.codes), std::move(p.codes)};
}

inline Bytes splice(const Frame& f) {
    const Bytes code = pack_codes(f.code, f.code_q.bits);
    const Bytes params = pack_codes(f.params, f.param_q.bits);
    constexpr auto u32max = std::numeric_limits<std::uint32_t>::max();
    if (code.size() > u32max || params.size() > u32max) throw UsageError("frame payload exceeds the u32 length field");
    ByteWriter w;
    w.put_tag("SFRM");
    w.put<std::uint16_t>(kFrameVersion);
    w.put<std::uint16_t>(f.model_id);
    w.put<std::uint32_t>(f.z_dims);
    w.put<std::uint8_t>(f.code_q.bits);
    w.put<std::uint8_t>(f.param_q.bits);
    w.put<float>(f.code_q.min_val);
    w.put<float>(f.code_q.max_val);
    w.put<float>(f.param_q.min_val);
    w.put<float>(f.param_q.max_val);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(code.size()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
    w.put_bytes(code);
    w.put_bytes(params);
    w.put<std::uint32_t>(crc32_ieee(w.bytes()));
    return w.take();
}

// Throws FrameError on any inconsistency; the CRC is checked before the
// header is trusted.
inline Frame unsplice(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kFrameOverheadBytes)
        throw FrameError("frame too short (" + std::to_string(bytes.size()) + " bytes)");
    ByteReader tail(bytes.subspan(bytes.size() - 4), "frame");
    const std::uint32_t stored = tail.get<std::uint32_t>();
    if (stored != crc32_ieee(bytes.first(bytes.size() - 4))) throw FrameError("frame CRC mismatch");
    try {
        ByteReader r(bytes.first(bytes.size() - 4), "frame");
        r.expect_tag("SFRM");
        if (r.get<std::uint16_t>() != kFrameVersion) throw FrameError("unsupported frame version");
        Frame f;
        f.model_id = r.get<std::uint16_t>();
        f.z_dims = r.get<std::uint32_t>();
        f.code_q.bits = r.get<std::uint8_t>();
        f.param_q.bits = r.get<std::uint8_t>();
        f.code_q.min_val = r.get<float>();
        f.code_q.max_val = r.get<float>();
        f.param_q.min_val = r.get<float>();
        f.param_q.max_val = r.get<float>();
        const std::uint32_t code_len = r.get<std::uint32_t>();
        const std::uint32_t param_len = r.get<std::uint32_t>();
        if (r.remaining() != std::size_t{code_len} + param_len) throw FrameError("frame payload lengths do not match");
        f.code = unpack_codes(r.get_bytes(code_len), f.code_q.bits);
        f.params = unpack_codes(r.get_bytes(param_len), f.param_q.bits);
        return f;
    } catch (const FrameError&) {
        throw;
    } catch (const Error& e) {
        throw FrameError(e.what());
    }
}

inline std::size_t frame_bytes(const Frame& f) {
    return kFrameOverheadBytes + f.code.size() * f.code_q.bytes_per_value() + f.params.size() * f.param_q.bytes_per_value();
}

} // namespace aesc::phy
