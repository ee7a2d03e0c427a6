#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aesc/error.hpp"

namespace aesc {

static_assert(std::endian::native == std::endian::little, "wire formats assume a little-endian host");

using Bytes = std::vector<std::uint8_t>;

class ByteWriter {
public:
    template <typename T>
    void put(T value) {
        static_assert(std::is_trivially_copyable_v<T>);
        const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
        out_.insert(out_.end(), p, p + sizeof(T));
    }

    void put_bytes(std::span<const std::uint8_t> bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }
    void put_tag(std::string_view tag) { out_.insert(out_.end(), tag.begin(), tag.end()); }

    std::size_t size() const noexcept { return out_.size(); }
    Bytes& bytes() noexcept { return out_; }
    Bytes take() noexcept { return std::move(out_); }

private:
    Bytes out_;
};

class ByteReader {
public:
    ByteReader(std::span<const std::uint8_t> in, std::string what) : in_(in), what_(std::move(what)) {}

    template <typename T>
    T get() {
        static_assert(std::is_trivially_copyable_v<T>);
        need(sizeof(T));
        T value;
        std::memcpy(&value, in_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    std::span<const std::uint8_t> get_bytes(std::size_t n) {
        need(n);
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    void expect_tag(std::string_view tag) {
        auto s = get_bytes(tag.size());
        if (std::memcmp(s.data(), tag.data(), tag.size()) != 0)
            throw FormatError(what_ + ": bad magic, expected \"" + std::string(tag) + "\"");
    }

    std::size_t position() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return in_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n)
            throw FormatError(what_ + ": truncated at byte " + std::to_string(pos_) + " (need " + std::to_string(n) +
                              ", have " + std::to_string(in_.size() - pos_) + ")");
    }

    std::span<const std::uint8_t> in_;
    std::string what_;
    std::size_t pos_ = 0;
};

} // namespace aesc

#include <zlib.h>

namespace aesc {

// CRC-32 (IEEE 802.3 polynomial, reflected, as used by zlib/PNG/Ethernet).
inline std::uint32_t crc32_ieee(std::span<const std::uint8_t> bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
        crc = ::crc32(crc, bytes.data() + pos, chunk);
        pos += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

} // namespace aesc
