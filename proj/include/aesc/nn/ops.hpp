#pragma once

// Single-sample forward/backward kernels. Convolutions lower to im2col + GEMM
// (Eigen); every routine is pure in its inputs and accumulates parameter
// gradients in a fixed order so batched training stays bit-reproducible.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "aesc/nn/layer.hpp"

namespace aesc::nn {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;
template <typename T>
using VecMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;
template <typename T>
using ConstVecMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;

// Geometry of a sliding window over an (channels, height, width) plane.
struct ConvGeometry {
    std::size_t channels, height, width;
    std::size_t kh, kw, sh, sw, ph, pw;
    std::size_t out_h, out_w;

    std::size_t patch() const { return channels * kh * kw; }
    std::size_t positions() const { return out_h * out_w; }
};

// cols is (channels*kh*kw) x (out_h*out_w), row-major; zero padding.
template <typename T>
void im2col(std::span<const T> image, const ConvGeometry& g, std::span<T> cols) {
    std::size_t row = 0;
    for (std::size_t c = 0; c < g.channels; ++c)
        for (std::size_t i = 0; i < g.kh; ++i)
            for (std::size_t j = 0; j < g.kw; ++j, ++row) {
                T* dst = cols.data() + row * g.positions();
                for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                    const long long y = static_cast<long long>(oy * g.sh + i) - static_cast<long long>(g.ph);
                    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                        const long long x = static_cast<long long>(ox * g.sw + j) - static_cast<long long>(g.pw);
                        const bool inside = y >= 0 && x >= 0 && y < static_cast<long long>(g.height) &&
                                            x < static_cast<long long>(g.width);
                        *dst++ = inside ? image[(c * g.height + static_cast<std::size_t>(y)) * g.width +
                                                static_cast<std::size_t>(x)]
                                        : T{};
                    }
                }
            }
}

// Adjoint of im2col: scatter-adds columns back onto the (zeroed by caller) image.
template <typename T>
void col2im(std::span<const T> cols, const ConvGeometry& g, std::span<T> image) {
    std::size_t row = 0;
    for (std::size_t c = 0; c < g.channels; ++c)
        for (std::size_t i = 0; i < g.kh; ++i)
            for (std::size_t j = 0; j < g.kw; ++j, ++row) {
                const T* src = cols.data() + row * g.positions();
                for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                    const long long y = static_cast<long long>(oy * g.sh + i) - static_cast<long long>(g.ph);
                    for (std::size_t ox = 0; ox < g.out_w; ++ox, ++src) {
                        const long long x = static_cast<long long>(ox * g.sw + j) - static_cast<long long>(g.pw);
                        if (y >= 0 && x >= 0 && y < static_cast<long long>(g.height) &&
                            x < static_cast<long long>(g.width))
                            image[(c * g.height + static_cast<std::size_t>(y)) * g.width + static_cast<std::size_t>(x)] +=
                                *src;
                    }
                }
            }
}

inline ConvGeometry conv_geometry(const LayerSpec& s, const Shape& in, const Shape& out) {
    return {in[0], in[1], in[2], s.kernel.h, s.kernel.w, s.stride.h, s.stride.w, s.padding.h, s.padding.w, out[1], out[2]};
}

// Transposed convolution is the adjoint of a convolution that maps the
// transposed layer's output plane back onto its input plane.
inline ConvGeometry convtranspose_geometry(const LayerSpec& s, const Shape& in, const Shape& out) {
    return {out[0], out[1], out[2], s.kernel.h, s.kernel.w, s.stride.h, s.stride.w, s.padding.h, s.padding.w, in[1], in[2]};
}

// Scratch buffer reused across samples by one worker.
template <typename T>
struct Workspace {
    std::vector<T> cols;
    std::vector<T> dcols;
    std::span<T> get(std::vector<T>& v, std::size_t n) {
        if (v.size() < n) v.resize(n);
        return {v.data(), n};
    }
};

// ---- conv2d: weight (out, in, kh, kw), bias (out) ----

template <typename T>
void conv2d_forward(const LayerSpec& s, const Shape& in_shape, const Shape& out_shape, std::span<const T> x,
                    std::span<const T> weight, std::span<const T> bias, std::span<T> y, Workspace<T>& ws) {
    const ConvGeometry g = conv_geometry(s, in_shape, out_shape);
    auto cols = ws.get(ws.cols, g.patch() * g.positions());
    im2col<T>(x, g, cols);
    ConstMatMap<T> w(weight.data(), static_cast<Eigen::Index>(s.out), static_cast<Eigen::Index>(g.patch()));
    ConstMatMap<T> c(cols.data(), static_cast<Eigen::Index>(g.patch()), static_cast<Eigen::Index>(g.positions()));
    MatMap<T> out(y.data(), static_cast<Eigen::Index>(s.out), static_cast<Eigen::Index>(g.positions()));
    out.noalias() = w * c;
    for (std::size_t k = 0; k < s.out; ++k) out.row(static_cast<Eigen::Index>(k)).array() += bias[k];
}

// dy is the gradient w.r.t. the pre-activation output. dx may be empty to skip it.
template <typename T>
void conv2d_backward(const LayerSpec& s, const Shape& in_shape, const Shape& out_shape, std::span<const T> x,
                     std::span<const T> weight, std::span<const T> dy, std::span<T> dx, std::span<T> dweight,
                     std::span<T> dbias, Workspace<T>& ws) {
    const ConvGeometry g = conv_geometry(s, in_shape, out_shape);
    const auto P = static_cast<Eigen::Index>(g.patch()), Q = static_cast<Eigen::Index>(g.positions()),
               K = static_cast<Eigen::Index>(s.out);
    ConstMatMap<T> d(dy.data(), K, Q);
    if (!dweight.empty()) {
        auto cols = ws.get(ws.cols, g.patch() * g.positions());
        im2col<T>(x, g, cols);
        ConstMatMap<T> c(cols.data(), P, Q);
        MatMap<T> dw(dweight.data(), K, P);
        dw.noalias() += d * c.transpose();
        // Plain loop: Eigen's vectorized sum() order depends on pointer alignment.
        for (Eigen::Index k = 0; k < K; ++k) {
            T acc = 0;
            const T* row = dy.data() + k * Q;
            for (Eigen::Index q = 0; q < Q; ++q) acc += row[q];
            dbias[static_cast<std::size_t>(k)] += acc;
        }
    }
    if (!dx.empty()) {
        auto dcols = ws.get(ws.dcols, g.patch() * g.positions());
        ConstMatMap<T> w(weight.data(), K, P);
        MatMap<T> dc(dcols.data(), P, Q);
        dc.noalias() = w.transpose() * d;
        std::fill(dx.begin(), dx.end(), T{});
        col2im<T>(dcols, g, dx);
    }
}

// ---- convtranspose2d: weight (in, out, kh, kw), bias (out) ----

template <typename T>
void convtranspose2d_forward(const LayerSpec& s, const Shape& in_shape, const Shape& out_shape, std::span<const T> x,
                             std::span<const T> weight, std::span<const T> bias, std::span<T> y, Workspace<T>& ws) {
    const ConvGeometry g = convtranspose_geometry(s, in_shape, out_shape);
    const auto P = static_cast<Eigen::Index>(g.patch()), Q = static_cast<Eigen::Index>(g.positions()),
               C = static_cast<Eigen::Index>(s.in);
    auto cols = ws.get(ws.cols, g.patch() * g.positions());
    ConstMatMap<T> w(weight.data(), C, P);
    ConstMatMap<T> xm(x.data(), C, Q);
    MatMap<T> c(cols.data(), P, Q);
    c.noalias() = w.transpose() * xm;
    std::fill(y.begin(), y.end(), T{});
    col2im<T>(cols, g, y);
    const std::size_t plane = out_shape[1] * out_shape[2];
    for (std::size_t k = 0; k < s.out; ++k)
        for (std::size_t i = 0; i < plane; ++i) y[k * plane + i] += bias[k];
}

template <typename T>
void convtranspose2d_backward(const LayerSpec& s, const Shape& in_shape, const Shape& out_shape,
                              std::span<const T> x, std::span<const T> weight, std::span<const T> dy,
                              std::span<T> dx, std::span<T> dweight, std::span<T> dbias, Workspace<T>& ws) {
    const ConvGeometry g = convtranspose_geometry(s, in_shape, out_shape);
    const auto P = static_cast<Eigen::Index>(g.patch()), Q = static_cast<Eigen::Index>(g.positions()),
               C = static_cast<Eigen::Index>(s.in);
    auto dcols = ws.get(ws.dcols, g.patch() * g.positions());
    im2col<T>(dy, g, dcols);
    ConstMatMap<T> dc(dcols.data(), P, Q);
    if (!dweight.empty()) {
        ConstMatMap<T> xm(x.data(), C, Q);
        MatMap<T> dw(dweight.data(), C, P);
        dw.noalias() += xm * dc.transpose();
        const std::size_t plane = out_shape[1] * out_shape[2];
        for (std::size_t k = 0; k < s.out; ++k) {
            T acc{};
            for (std::size_t i = 0; i < plane; ++i) acc += dy[k * plane + i];
            dbias[k] += acc;
        }
    }
    if (!dx.empty()) {
        ConstMatMap<T> w(weight.data(), C, P);
        MatMap<T> dxm(dx.data(), C, Q);
        dxm.noalias() = w * dc;
    }
}

// ---- linear: weight (out, in), bias (out) ----

template <typename T>
void linear_forward(const LayerSpec& s, std::span<const T> x, std::span<const T> weight, std::span<const T> bias,
                    std::span<T> y) {
    ConstMatMap<T> w(weight.data(), static_cast<Eigen::Index>(s.out), static_cast<Eigen::Index>(s.in));
    ConstVecMap<T> xv(x.data(), static_cast<Eigen::Index>(s.in));
    VecMap<T> yv(y.data(), static_cast<Eigen::Index>(s.out));
    yv.noalias() = w * xv;
    yv += ConstVecMap<T>(bias.data(), static_cast<Eigen::Index>(s.out));
}

template <typename T>
void linear_backward(const LayerSpec& s, std::span<const T> x, std::span<const T> weight, std::span<const T> dy,
                     std::span<T> dx, std::span<T> dweight, std::span<T> dbias) {
    const auto O = static_cast<Eigen::Index>(s.out), I = static_cast<Eigen::Index>(s.in);
    ConstVecMap<T> d(dy.data(), O);
    if (!dweight.empty()) {
        MatMap<T> dw(dweight.data(), O, I);
        dw.noalias() += d * ConstVecMap<T>(x.data(), I).transpose();
        VecMap<T>(dbias.data(), O) += d;
    }
    if (!dx.empty()) {
        ConstMatMap<T> w(weight.data(), O, I);
        VecMap<T>(dx.data(), I).noalias() = w.transpose() * d;
    }
}

// ---- max pooling; `argmax` records the winning input index per output ----

template <typename T>
void maxpool_forward(const LayerSpec& s, const Shape& in, const Shape& out, std::span<const T> x, std::span<T> y,
                     std::span<std::uint32_t> argmax) {
    std::size_t o = 0;
    for (std::size_t c = 0; c < out[0]; ++c)
        for (std::size_t oy = 0; oy < out[1]; ++oy)
            for (std::size_t ox = 0; ox < out[2]; ++ox, ++o) {
                T best = -std::numeric_limits<T>::infinity();
                std::size_t where = 0;
                for (std::size_t i = 0; i < s.kernel.h; ++i)
                    for (std::size_t j = 0; j < s.kernel.w; ++j) {
                        const std::size_t idx = (c * in[1] + oy * s.stride.h + i) * in[2] + ox * s.stride.w + j;
                        if (x[idx] > best) {
                            best = x[idx];
                            where = idx;
                        }
                    }
                y[o] = best;
                argmax[o] = static_cast<std::uint32_t>(where);
            }
}

template <typename T>
void maxpool_backward(std::span<const T> dy, std::span<const std::uint32_t> argmax, std::span<T> dx) {
    std::fill(dx.begin(), dx.end(), T{});
    for (std::size_t o = 0; o < dy.size(); ++o) dx[argmax[o]] += dy[o];
}

// ---- activations ----

template <typename T>
T sigmoid(T x) {
    if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
    const T e = std::exp(x);
    return e / (T{1} + e);
}

template <typename T>
T relu(T x) {
    return x > T{0} ? x : T{0};
}

template <typename T>
void activate(Activation a, std::span<T> v) {
    switch (a) {
    case Activation::none: return;
    case Activation::relu:
        for (T& x : v) x = relu(x);
        return;
    case Activation::sigmoid:
        for (T& x : v) x = sigmoid(x);
        return;
    }
}

// Converts dL/d(activation output) into dL/d(pre-activation) in place, using
// the stored activation output. relu'(0) is taken as 0.
template <typename T>
void activation_backward(Activation a, std::span<const T> out, std::span<T> grad) {
    switch (a) {
    case Activation::none: return;
    case Activation::relu:
        for (std::size_t i = 0; i < grad.size(); ++i)
            if (!(out[i] > T{0})) grad[i] = T{0};
        return;
    case Activation::sigmoid:
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= out[i] * (T{1} - out[i]);
        return;
    }
}

} // namespace aesc::nn
