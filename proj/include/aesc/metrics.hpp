#pragma once

// Reconstruction and semantic fidelity metrics.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "aesc/models.hpp"
#include "aesc/tensor.hpp"

namespace aesc::metrics {

inline double mse(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw ShapeError("mse: shape " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = double(a[i]) - double(b[i]);
        acc += d * d;
    }
    return acc / double(a.size());
}

// Peak 1: 10 log10(1 / mse); +infinity when mse == 0.
inline double psnr_from_mse(double m) {
    return m > 0.0 ? 10.0 * std::log10(1.0 / m) : std::numeric_limits<double>::infinity();
}

inline double psnr(const Tensor& a, const Tensor& b) { return psnr_from_mse(mse(a, b)); }

// ---- SSIM ----

inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

inline std::vector<double> gaussian_kernel(std::size_t size = kSsimWindow, double sigma = kSsimSigma) {
    std::vector<double> k(size);
    const double c = (double(size) - 1.0) / 2.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < size; ++i) sum += k[i] = std::exp(-(double(i) - c) * (double(i) - c) / (2 * sigma * sigma));
    for (auto& v : k) v /= sum;
    return k;
}

namespace detail {

// Separable valid-mode filtering of an H x W plane.
inline std::vector<double> filter_valid(const std::vector<double>& img, std::size_t h, std::size_t w, const std::vector<double>& k) {
    const std::size_t n = k.size(), ho = h - n + 1, wo = w - n + 1;
    std::vector<double> rows(h * wo, 0.0), out(ho * wo, 0.0);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < wo; ++x) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += k[i] * img[y * w + x + i];
            rows[y * wo + x] = acc;
        }
    for (std::size_t y = 0; y < ho; ++y)
        for (std::size_t x = 0; x < wo; ++x) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += k[i] * rows[(y + i) * wo + x];
            out[y * wo + x] = acc;
        }
    return out;
}

} // namespace detail

// Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5), K1 0.01,
// K2 0.03, dynamic range 1, population statistics, averaged over all valid
// window positions and channels. Accepts (C, H, W) or (H, W).
inline double ssim(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw ShapeError("ssim: shape " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    if (a.rank() != 2 && a.rank() != 3) throw ShapeError("ssim expects (C,H,W) or (H,W), got " + shape_str(a.shape()));
    const std::size_t c = a.rank() == 3 ? a.dim(0) : 1, h = a.dim(a.rank() - 2), w = a.dim(a.rank() - 1);
    if (h < kSsimWindow || w < kSsimWindow) throw ShapeError("ssim: image " + shape_str(a.shape()) + " smaller than the 11x11 window");
    const auto k = gaussian_kernel();
    const double c1 = kSsimK1 * kSsimK1, c2 = kSsimK2 * kSsimK2;
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t ch = 0; ch < c; ++ch) {
        std::vector<double> x(h * w), y(h * w), xx(h * w), yy(h * w), xy(h * w);
        for (std::size_t i = 0; i < h * w; ++i) {
            x[i] = a[ch * h * w + i];
            y[i] = b[ch * h * w + i];
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        const auto mx = detail::filter_valid(x, h, w, k), my = detail::filter_valid(y, h, w, k);
        const auto sxx = detail::filter_valid(xx, h, w, k), syy = detail::filter_valid(yy, h, w, k),
                   sxy = detail::filter_valid(xy, h, w, k);
        for (std::size_t i = 0; i < mx.size(); ++i) {
            const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cov = sxy[i] - mx[i] * my[i];
            total += ((2 * mx[i] * my[i] + c1) * (2 * cov + c2)) / ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
        }
        count += mx.size();
    }
    return total / double(count);
}

// ---- semantic metrics ----

inline double accuracy(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> labels) {
    if (predicted.size() != labels.size()) throw ShapeError("accuracy: prediction and label counts differ");
    if (labels.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i];
    return double(hits) / double(labels.size());
}

// acc(reconstructions) / acc(originals) against the true labels.
inline double rr_ratio_from_predictions(std::span<const std::uint8_t> pred_original, std::span<const std::uint8_t> pred_recon,
                                        std::span<const std::uint8_t> labels) {
    const double denom = accuracy(pred_original, labels);
    if (denom == 0.0) throw UsageError("recognition-rate ratio undefined: zero accuracy on the originals");
    return accuracy(pred_recon, labels) / denom;
}

inline double recognition_rate_ratio(const Tensor& originals, const Tensor& reconstructions, std::span<const std::uint8_t> labels,
                                     const models::Classifier& classifier) {
    classifier.require_trained("recognition_rate_ratio");
    if (originals.shape() != reconstructions.shape()) throw ShapeError("recognition_rate_ratio: batch shapes differ");
    return rr_ratio_from_predictions(models::classify_batch(originals, classifier), models::classify_batch(reconstructions, classifier),
                                     labels);
}

enum class ServiceMapping : std::uint8_t { identity, sigmoid };

inline ServiceMapping parse_mapping(std::string_view s) {
    if (s == "identity") return ServiceMapping::identity;
    if (s == "sigmoid") return ServiceMapping::sigmoid;
    throw UsageError("unknown semantic-service mapping '" + std::string(s) + "' (expected identity or sigmoid)");
}

// Logistic calibration for the sigmoid mapping: 1 / (1 + exp(-steepness (st - midpoint))).
struct SigmoidCalibration {
    double steepness = 10.0;
    double midpoint = 0.5;
};

inline double map_service(double st, ServiceMapping m, const SigmoidCalibration& cal = {}) {
    return m == ServiceMapping::identity ? st : 1.0 / (1.0 + std::exp(-cal.steepness * (st - cal.midpoint)));
}

// SS = map(ST(recon)) / map(ST(original)), clamped to [0, 1].
inline double semantic_service(double st_original, double st_reconstructed, ServiceMapping m = ServiceMapping::identity,
                               const SigmoidCalibration& cal = {}) {
    const double denom = map_service(st_original, m, cal);
    if (!(denom > 0.0)) throw UsageError("semantic service index undefined: mapped original score is not positive");
    return std::clamp(map_service(st_reconstructed, m, cal) / denom, 0.0, 1.0);
}

} // namespace aesc::metrics
