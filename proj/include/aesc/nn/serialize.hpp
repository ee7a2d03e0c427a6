#pragma once

// Parameter file layout (little-endian):
//   "AESC" | version u16 | entry count u32 |
//   per entry: name length u16 | UTF-8 name | rank u8 | extents u32[rank] | f32 payload (row-major)

#include <cstdint>
#include <string>

#include "aesc/bytes.hpp"
#include "aesc/nn/network.hpp"

namespace aesc::nn {

inline constexpr std::uint16_t kParamFormatVersion = 1;

inline Bytes serialize_params(const ParamSet<float>& params) {
    ByteWriter w;
    w.put_tag("AESC");
    w.put<std::uint16_t>(kParamFormatVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(params.entries.size()));
    for (const auto& e : params.entries) {
        if (e.name.size() > UINT16_MAX) throw FormatError("parameter name too long: " + e.name);
        w.put<std::uint16_t>(static_cast<std::uint16_t>(e.name.size()));
        w.put_tag(e.name);
        w.put<std::uint8_t>(static_cast<std::uint8_t>(e.tensor.rank()));
        for (std::size_t d : e.tensor.shape()) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
        for (float v : e.tensor.storage()) w.put<float>(v);
    }
    return w.take();
}

// Parses a parameter blob without reference to an architecture.
inline ParamSet<float> parse_params(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes, "parameter blob");
    r.expect_tag("AESC");
    if (const auto version = r.get<std::uint16_t>(); version != kParamFormatVersion)
        throw FormatError("parameter blob: unsupported version " + std::to_string(version));
    const auto count = r.get<std::uint32_t>();
    ParamSet<float> ps;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto len = r.get<std::uint16_t>();
        auto name_bytes = r.get_bytes(len);
        std::string name(name_bytes.begin(), name_bytes.end());
        const auto rank = r.get<std::uint8_t>();
        Shape shape(rank);
        for (auto& d : shape) d = r.get<std::uint32_t>();
        const std::size_t n = shape_size(shape);
        if (r.remaining() < n * sizeof(float))
            throw FormatError("parameter blob: payload of " + name + " truncated");
        std::vector<float> data(n);
        for (auto& v : data) v = r.get<float>();
        ps.entries.push_back({std::move(name), Tensor(std::move(shape), std::move(data))});
    }
    if (r.remaining() != 0)
        throw FormatError("parameter blob: " + std::to_string(r.remaining()) + " trailing bytes");
    return ps;
}

// Parses a parameter blob and checks it against `arch` (names, shapes and
// total byte count).
inline ParamSet<float> deserialize_params(std::span<const std::uint8_t> bytes, const Architecture& arch) {
    const ParamSet<float> expected = empty_params<float>(arch);
    const std::size_t expected_bytes = serialize_params(expected).size();
    if (bytes.size() != expected_bytes)
        throw FormatError("parameter blob for " + arch.name + " has " + std::to_string(bytes.size()) +
                          " bytes, architecture requires " + std::to_string(expected_bytes));
    ParamSet<float> ps = parse_params(bytes);
    if (ps.entries.size() != expected.entries.size())
        throw FormatError("parameter blob for " + arch.name + " has " + std::to_string(ps.entries.size()) + " entries");
    for (std::size_t i = 0; i < ps.entries.size(); ++i)
        if (ps.entries[i].name != expected.entries[i].name ||
            ps.entries[i].tensor.shape() != expected.entries[i].tensor.shape())
            throw FormatError("parameter blob entry " + ps.entries[i].name + " does not match architecture entry " +
                              expected.entries[i].name);
    return ps;
}

} // namespace aesc::nn
