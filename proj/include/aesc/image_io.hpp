#pragma once

// Binary PGM (P5) / PPM (P6) with maxval 255, for tensors (C, H, W) in [0, 1]
// with C = 1 or 3.

#include <cctype>
#include <filesystem>
#include <fstream>
#include <string>

#include "aesc/bytes.hpp"
#include "aesc/data.hpp"
#include "aesc/tensor.hpp"

namespace aesc::image {

inline Bytes encode_pnm(const Tensor& img) {
    if (img.rank() != 3 || (img.dim(0) != 1 && img.dim(0) != 3)) throw ShapeError("PNM needs a (1|3, H, W) tensor, got " + shape_str(img.shape()));
    const std::size_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
    const std::string header = std::string(c == 1 ? "P5" : "P6") + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    Bytes out(header.begin(), header.end());
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t ch = 0; ch < c; ++ch) out.push_back(data::denormalize_pixel(img.at(ch, y, x)));
    return out;
}

inline Tensor decode_pnm(std::span<const std::uint8_t> b, const std::string& what = "image") {
    std::size_t pos = 0;
    auto token = [&]() {
        while (pos < b.size()) {
            if (b[pos] == '#') {
                while (pos < b.size() && b[pos] != '\n') ++pos;
            } else if (std::isspace(b[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        std::string t;
        while (pos < b.size() && !std::isspace(b[pos])) t.push_back(static_cast<char>(b[pos++]));
        if (t.empty()) throw FormatError(what + ": truncated PNM header");
        return t;
    };
    const std::string magic = token();
    if (magic != "P5" && magic != "P6") throw FormatError(what + ": not a binary PGM/PPM");
    std::size_t w = 0, h = 0, maxval = 0;
    try {
        w = std::stoul(token());
        h = std::stoul(token());
        maxval = std::stoul(token());
    } catch (const std::logic_error&) {
        throw FormatError(what + ": malformed PNM header");
    }
    if (maxval != 255) throw FormatError(what + ": only maxval 255 is supported");
    ++pos; // single whitespace before the raster
    const std::size_t c = magic == "P5" ? 1 : 3;
    if (w == 0 || h == 0 || b.size() < pos + w * h * c) throw FormatError(what + ": truncated PNM raster");
    Tensor img({c, h, w});
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t ch = 0; ch < c; ++ch) img.at(ch, y, x) = data::normalize_pixel(b[pos++]);
    return img;
}

inline void write_pnm(const std::filesystem::path& path, const Tensor& img) {
    const Bytes b = encode_pnm(img);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path.string());
    f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

inline Tensor read_pnm(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot read " + path.string());
    const Bytes b((std::istreambuf_iterator<char>(f)), {});
    return decode_pnm(b, path.string());
}

} // namespace aesc::image
