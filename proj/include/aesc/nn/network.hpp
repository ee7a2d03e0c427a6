#pragma once

#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "aesc/nn/layer.hpp"
#include "aesc/nn/ops.hpp"
#include "aesc/rng.hpp"
#include "aesc/tensor.hpp"

namespace aesc::nn {

// A feed-forward stack of layers applied to single samples of `input_shape`.
struct Architecture {
    std::string name;
    Shape input_shape;
    std::vector<LayerSpec> layers;

    // shapes()[0] is the input shape, shapes()[i + 1] the output of layer i.
    std::vector<Shape> shapes() const {
        std::vector<Shape> out{input_shape};
        out.reserve(layers.size() + 1);
        for (std::size_t i = 0; i < layers.size(); ++i)
            out.push_back(infer_output_shape(layers[i], out.back(), name + " layer " + std::to_string(i)));
        return out;
    }

    Shape output_shape() const { return shapes().back(); }

    friend bool operator==(const Architecture&, const Architecture&) = default;
};

template <typename T>
struct NamedTensor {
    std::string name;
    BasicTensor<T> tensor;
    friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

// Ordered named parameter tensors, in architecture order.
template <typename T>
struct ParamSet {
    std::vector<NamedTensor<T>> entries;

    std::size_t total_scalars() const {
        std::size_t n = 0;
        for (const auto& e : entries) n += e.tensor.size();
        return n;
    }

    const BasicTensor<T>* find(const std::string& name) const {
        for (const auto& e : entries)
            if (e.name == name) return &e.tensor;
        return nullptr;
    }

    // All scalars concatenated in entry order.
    std::vector<T> flatten() const {
        std::vector<T> out;
        out.reserve(total_scalars());
        for (const auto& e : entries) out.insert(out.end(), e.tensor.storage().begin(), e.tensor.storage().end());
        return out;
    }

    // Inverse of flatten(), keeping names and shapes.
    void assign(std::span<const T> flat) {
        if (flat.size() != total_scalars())
            throw ShapeError("parameter vector of " + std::to_string(flat.size()) + " scalars, expected " +
                             std::to_string(total_scalars()));
        std::size_t pos = 0;
        for (auto& e : entries)
            for (T& v : e.tensor.storage()) v = flat[pos++];
    }

    ParamSet zeros_like() const {
        ParamSet z;
        for (const auto& e : entries) z.entries.push_back({e.name, BasicTensor<T>(e.tensor.shape())});
        return z;
    }

    template <typename U>
    ParamSet<U> cast() const {
        ParamSet<U> out;
        for (const auto& e : entries) out.entries.push_back({e.name, e.tensor.template cast<U>()});
        return out;
    }

    friend bool operator==(const ParamSet&, const ParamSet&) = default;
};

inline std::string param_prefix(std::size_t layer, const LayerSpec& s) {
    std::string kind(kind_name(s.kind));
    for (char& c : kind) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return std::to_string(layer) + "." + kind;
}

inline std::pair<Shape, Shape> param_shapes(const LayerSpec& s) {
    switch (s.kind) {
    case LayerKind::conv2d: return {{s.out, s.in, s.kernel.h, s.kernel.w}, {s.out}};
    case LayerKind::convtranspose2d: return {{s.in, s.out, s.kernel.h, s.kernel.w}, {s.out}};
    case LayerKind::linear: return {{s.out, s.in}, {s.out}};
    default: return {};
    }
}

// Fan-in used for initialization; transposed convolutions follow the common
// convention of taking dimension 1 of the stored weight.
inline std::size_t fan_in(const LayerSpec& s) {
    switch (s.kind) {
    case LayerKind::conv2d: return s.in * s.kernel.h * s.kernel.w;
    case LayerKind::convtranspose2d: return s.out * s.kernel.h * s.kernel.w;
    case LayerKind::linear: return s.in;
    default: return 1;
    }
}

// Zero-valued parameters with the canonical names and shapes of `arch`.
template <typename T>
ParamSet<T> empty_params(const Architecture& arch) {
    arch.shapes();
    ParamSet<T> ps;
    for (std::size_t i = 0; i < arch.layers.size(); ++i) {
        const auto& s = arch.layers[i];
        if (!has_params(s.kind)) continue;
        auto [w, b] = param_shapes(s);
        ps.entries.push_back({param_prefix(i, s) + ".weight", BasicTensor<T>(w)});
        ps.entries.push_back({param_prefix(i, s) + ".bias", BasicTensor<T>(b)});
    }
    return ps;
}

// Uniform fan-in scaled initialization, U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
// one independent stream per layer.
template <typename T>
ParamSet<T> init_params(const Architecture& arch, std::uint64_t seed) {
    ParamSet<T> ps = empty_params<T>(arch);
    std::size_t entry = 0;
    for (std::size_t i = 0; i < arch.layers.size(); ++i) {
        const auto& s = arch.layers[i];
        if (!has_params(s.kind)) continue;
        Rng rng(derive_seed(seed, {i}));
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in(s)));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (int part = 0; part < 2; ++part)
            for (T& v : ps.entries[entry + part].tensor.storage()) v = static_cast<T>(u(rng));
        entry += 2;
    }
    return ps;
}

// Intermediate activations of a batched forward pass, needed by backward().
template <typename T>
struct Trace {
    std::vector<BasicTensor<T>> outputs; // outputs[0] = input batch, outputs[i + 1] = layer i output
    std::vector<std::vector<std::uint32_t>> argmax;
};

template <typename T>
class Network {
public:
    Network() = default;
    Network(Architecture arch, ParamSet<T> params) : arch_(std::move(arch)), params_(std::move(params)) { bind(); }

    const Architecture& architecture() const noexcept { return arch_; }
    const ParamSet<T>& params() const noexcept { return params_; }
    ParamSet<T>& params() noexcept { return params_; }
    const std::vector<Shape>& shapes() const noexcept { return shapes_; }
    std::size_t layer_count() const noexcept { return arch_.layers.size(); }

    void set_params(ParamSet<T> params) {
        params_ = std::move(params);
        bind();
    }

    // Batch forward over the first `upto` layers (all when nullopt). Input is
    // (N, ...input_shape) or a single sample of input_shape.
    BasicTensor<T> forward(const BasicTensor<T>& input, Trace<T>* trace = nullptr,
                           std::optional<std::size_t> upto = std::nullopt) const {
        const std::size_t stop = upto.value_or(arch_.layers.size());
        const bool single = input.shape() == shapes_.front();
        const std::size_t batch = single ? 1 : batch_size(input);
        Workspace<T> ws;
        BasicTensor<T> cur = input;
        if (trace) {
            trace->outputs.assign(1, cur);
            trace->argmax.assign(arch_.layers.size(), {});
        }
        for (std::size_t l = 0; l < stop; ++l) {
            const LayerSpec& s = arch_.layers[l];
            const Shape& in = shapes_[l];
            const Shape& out = shapes_[l + 1];
            const std::size_t in_n = shape_size(in), out_n = shape_size(out);
            Shape batched = out;
            batched.insert(batched.begin(), batch);
            BasicTensor<T> next(std::move(batched));
            std::vector<std::uint32_t> am;
            if (s.kind == LayerKind::maxpool2d) am.resize(batch * out_n);
            for (std::size_t b = 0; b < batch; ++b) {
                std::span<const T> x = cur.data().subspan(b * in_n, in_n);
                std::span<T> y = next.data().subspan(b * out_n, out_n);
                switch (s.kind) {
                case LayerKind::conv2d: conv2d_forward<T>(s, in, out, x, weight(l), bias(l), y, ws); break;
                case LayerKind::convtranspose2d:
                    convtranspose2d_forward<T>(s, in, out, x, weight(l), bias(l), y, ws);
                    break;
                case LayerKind::linear: linear_forward<T>(s, x, weight(l), bias(l), y); break;
                case LayerKind::maxpool2d:
                    maxpool_forward<T>(s, in, out, x, y, std::span<std::uint32_t>(am).subspan(b * out_n, out_n));
                    break;
                case LayerKind::reshape: std::copy(x.begin(), x.end(), y.begin()); break;
                }
                activate<T>(s.activation, y);
            }
            cur = std::move(next);
            if (trace) {
                trace->outputs.push_back(cur);
                trace->argmax[l] = std::move(am);
            }
        }
        if (single) {
            Shape s(cur.shape().begin() + 1, cur.shape().end());
            return cur.reshaped(s);
        }
        return cur;
    }

    // Backpropagates `grad_out` (w.r.t. the traced output) through the traced
    // layers. Parameter gradients are accumulated into `grads` when given;
    // returns the gradient w.r.t. the input batch (zeros if !input_grad).
    BasicTensor<T> backward(const Trace<T>& trace, const BasicTensor<T>& grad_out, ParamSet<T>* grads,
                            bool input_grad = true) const {
        const std::size_t depth = trace.outputs.size() - 1;
        const std::size_t batch = trace.outputs.front().size() / shape_size(shapes_.front());
        Workspace<T> ws;
        std::vector<T> g(grad_out.storage());
        if (g.size() != trace.outputs.back().size())
            throw ShapeError(arch_.name + ": gradient of " + std::to_string(g.size()) + " values for output of " +
                             std::to_string(trace.outputs.back().size()));
        std::vector<T> gin;
        for (std::size_t l = depth; l-- > 0;) {
            const LayerSpec& s = arch_.layers[l];
            const Shape& in = shapes_[l];
            const Shape& out = shapes_[l + 1];
            const std::size_t in_n = shape_size(in), out_n = shape_size(out);
            activation_backward<T>(s.activation, trace.outputs[l + 1].data(), g);
            const bool need_dx = l > 0 || input_grad;
            gin.assign(batch * in_n, T{});
            std::span<T> dw, db;
            if (grads && has_params(s.kind)) {
                dw = grads->entries[param_index_[l]].tensor.data();
                db = grads->entries[param_index_[l] + 1].tensor.data();
            }
            for (std::size_t b = 0; b < batch; ++b) {
                std::span<const T> x = trace.outputs[l].data().subspan(b * in_n, in_n);
                std::span<const T> dy(g.data() + b * out_n, out_n);
                std::span<T> dx = need_dx ? std::span<T>(gin.data() + b * in_n, in_n) : std::span<T>{};
                switch (s.kind) {
                case LayerKind::conv2d: conv2d_backward<T>(s, in, out, x, weight(l), dy, dx, dw, db, ws); break;
                case LayerKind::convtranspose2d:
                    convtranspose2d_backward<T>(s, in, out, x, weight(l), dy, dx, dw, db, ws);
                    break;
                case LayerKind::linear: linear_backward<T>(s, x, weight(l), dy, dx, dw, db); break;
                case LayerKind::maxpool2d:
                    maxpool_backward<T>(dy, std::span<const std::uint32_t>(trace.argmax[l]).subspan(b * out_n, out_n),
                                        dx);
                    break;
                case LayerKind::reshape: std::copy(dy.begin(), dy.end(), dx.begin()); break;
                }
            }
            g.swap(gin);
        }
        return BasicTensor<T>(trace.outputs.front().shape(), std::move(g));
    }

private:
    void bind() {
        shapes_ = arch_.shapes();
        const ParamSet<T> expected = empty_params<T>(arch_);
        if (expected.entries.size() != params_.entries.size())
            throw ShapeError(arch_.name + ": expected " + std::to_string(expected.entries.size()) +
                             " parameter tensors, got " + std::to_string(params_.entries.size()));
        for (std::size_t i = 0; i < expected.entries.size(); ++i)
            if (expected.entries[i].name != params_.entries[i].name ||
                expected.entries[i].tensor.shape() != params_.entries[i].tensor.shape())
                throw ShapeError(arch_.name + ": parameter " + params_.entries[i].name + " " +
                                 shape_str(params_.entries[i].tensor.shape()) + " does not match " +
                                 expected.entries[i].name + " " + shape_str(expected.entries[i].tensor.shape()));
        param_index_.assign(arch_.layers.size(), 0);
        std::size_t e = 0;
        for (std::size_t l = 0; l < arch_.layers.size(); ++l)
            if (has_params(arch_.layers[l].kind)) {
                param_index_[l] = e;
                e += 2;
            }
    }

    std::size_t batch_size(const BasicTensor<T>& input) const {
        Shape inner(input.shape().begin() + (input.rank() ? 1 : 0), input.shape().end());
        if (input.rank() == 0 || inner != shapes_.front())
            throw ShapeError(arch_.name + ": input " + shape_str(input.shape()) + " does not match (N," +
                             shape_str(shapes_.front()).substr(1));
        return input.dim(0);
    }

    std::span<const T> weight(std::size_t l) const { return params_.entries[param_index_[l]].tensor.data(); }
    std::span<const T> bias(std::size_t l) const { return params_.entries[param_index_[l] + 1].tensor.data(); }

    Architecture arch_;
    ParamSet<T> params_;
    std::vector<Shape> shapes_;
    std::vector<std::size_t> param_index_;
};

// Human-readable table of an architecture; used for structural audits.
inline std::string render_architecture(const Architecture& arch) {
    const auto shapes = arch.shapes();
    std::ostringstream os;
    os << arch.name << " input " << shape_str(arch.input_shape) << '\n';
    for (std::size_t i = 0; i < arch.layers.size(); ++i) {
        const auto& s = arch.layers[i];
        os << i << ' ' << kind_name(s.kind);
        switch (s.kind) {
        case LayerKind::conv2d:
        case LayerKind::convtranspose2d:
            os << " in=" << s.in << " out=" << s.out << " kernel=(" << s.kernel.h << ',' << s.kernel.w << ") stride=("
               << s.stride.h << ',' << s.stride.w << ") padding=(" << s.padding.h << ',' << s.padding.w << ')';
            if (s.kind == LayerKind::convtranspose2d)
                os << " output_padding=(" << s.output_padding.h << ',' << s.output_padding.w << ')';
            break;
        case LayerKind::linear: os << " in=" << s.in << " out=" << s.out; break;
        case LayerKind::maxpool2d: os << " kernel=(" << s.kernel.h << ',' << s.kernel.w << ')'; break;
        case LayerKind::reshape: os << " to=" << shape_str(s.target); break;
        }
        os << ' ' << activation_name(s.activation) << " -> " << shape_str(shapes[i + 1]) << '\n';
    }
    return os.str();
}

} // namespace aesc::nn
