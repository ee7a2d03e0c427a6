#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "aesc/tensor.hpp"

namespace aesc::nn {

enum class LayerKind : std::uint8_t { conv2d = 0, convtranspose2d = 1, linear = 2, maxpool2d = 3, reshape = 4 };
enum class Activation : std::uint8_t { none = 0, relu = 1, sigmoid = 2 };

struct Pair {
    std::size_t h = 1;
    std::size_t w = 1;
    friend bool operator==(const Pair&, const Pair&) = default;
};

// One row of an architecture table. For linear layers `in`/`out` are feature
// counts, for (transposed) convolutions channel counts. `target` is only
// meaningful for reshape.
struct LayerSpec {
    LayerKind kind = LayerKind::linear;
    std::size_t in = 0;
    std::size_t out = 0;
    Pair kernel{};
    Pair stride{};
    Pair padding{0, 0};
    Pair output_padding{0, 0};
    Activation activation = Activation::none;
    Shape target{};

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

inline LayerSpec conv2d(std::size_t in, std::size_t out, std::size_t k, std::size_t s, std::size_t p, Activation act) {
    return {LayerKind::conv2d, in, out, {k, k}, {s, s}, {p, p}, {0, 0}, act, {}};
}

inline LayerSpec convtranspose2d(std::size_t in, std::size_t out, std::size_t k, std::size_t s, std::size_t p,
                                 std::size_t op, Activation act) {
    return {LayerKind::convtranspose2d, in, out, {k, k}, {s, s}, {p, p}, {op, op}, act, {}};
}

inline LayerSpec linear(std::size_t in, std::size_t out, Activation act) {
    return {LayerKind::linear, in, out, {1, 1}, {1, 1}, {0, 0}, {0, 0}, act, {}};
}

inline LayerSpec maxpool2d(std::size_t k) { return {LayerKind::maxpool2d, 0, 0, {k, k}, {k, k}, {0, 0}, {0, 0}, Activation::none, {}}; }

inline LayerSpec reshape(Shape target) {
    return {LayerKind::reshape, 0, 0, {1, 1}, {1, 1}, {0, 0}, {0, 0}, Activation::none, std::move(target)};
}

constexpr std::string_view kind_name(LayerKind k) {
    switch (k) {
    case LayerKind::conv2d: return "Conv2d";
    case LayerKind::convtranspose2d: return "ConvTranspose2d";
    case LayerKind::linear: return "Linear";
    case LayerKind::maxpool2d: return "MaxPool2d";
    case LayerKind::reshape: return "Reshape";
    }
    return "?";
}

constexpr std::string_view activation_name(Activation a) {
    switch (a) {
    case Activation::none: return "none";
    case Activation::relu: return "ReLU";
    case Activation::sigmoid: return "Sigmoid";
    }
    return "?";
}

constexpr bool has_params(LayerKind k) {
    return k == LayerKind::conv2d || k == LayerKind::convtranspose2d || k == LayerKind::linear;
}

// Output shape of `spec` applied to a single sample of shape `in`; `where`
// names the layer in diagnostics.
inline Shape infer_output_shape(const LayerSpec& spec, const Shape& in, const std::string& where) {
    auto fail = [&](const std::string& why) -> Shape {
        throw ShapeError(where + " (" + std::string(kind_name(spec.kind)) + "): " + why + ", input " + shape_str(in));
    };
    switch (spec.kind) {
    case LayerKind::conv2d:
    case LayerKind::maxpool2d: {
        if (in.size() != 3) return fail("expects a (C,H,W) input");
        if (spec.kind == LayerKind::conv2d && in[0] != spec.in)
            return fail("expects " + std::to_string(spec.in) + " input channels");
        if (spec.stride.h == 0 || spec.stride.w == 0) return fail("stride must be positive");
        const std::size_t ph = in[1] + 2 * spec.padding.h, pw = in[2] + 2 * spec.padding.w;
        if (ph < spec.kernel.h || pw < spec.kernel.w) return fail("non-positive output extent");
        const std::size_t c = spec.kind == LayerKind::conv2d ? spec.out : in[0];
        return {c, (ph - spec.kernel.h) / spec.stride.h + 1, (pw - spec.kernel.w) / spec.stride.w + 1};
    }
    case LayerKind::convtranspose2d: {
        if (in.size() != 3) return fail("expects a (C,H,W) input");
        if (in[0] != spec.in) return fail("expects " + std::to_string(spec.in) + " input channels");
        if (spec.output_padding.h >= spec.stride.h || spec.output_padding.w >= spec.stride.w)
            return fail("output_padding must be smaller than stride");
        const auto extent = [](std::size_t n, std::size_t s, std::size_t p, std::size_t k, std::size_t op) -> long long {
            return static_cast<long long>((n - 1) * s + k + op) - 2 * static_cast<long long>(p);
        };
        const long long h = extent(in[1], spec.stride.h, spec.padding.h, spec.kernel.h, spec.output_padding.h);
        const long long w = extent(in[2], spec.stride.w, spec.padding.w, spec.kernel.w, spec.output_padding.w);
        if (h < 1 || w < 1) return fail("non-positive output extent");
        return {spec.out, static_cast<std::size_t>(h), static_cast<std::size_t>(w)};
    }
    case LayerKind::linear:
        if (shape_size(in) != spec.in)
            return fail("expects " + std::to_string(spec.in) + " input features, got " + std::to_string(shape_size(in)));
        return {spec.out};
    case LayerKind::reshape:
        if (shape_size(spec.target) != shape_size(in)) return fail("cannot reshape to " + shape_str(spec.target));
        return spec.target;
    }
    return fail("unknown layer kind");
}

} // namespace aesc::nn
