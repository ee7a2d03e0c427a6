#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "aesc/error.hpp"

namespace aesc {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ']';
    return os.str();
}

// Dense row-major array. Images are (C, H, W), batches (N, C, H, W), vectors flat.
template <typename T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;

    explicit BasicTensor(Shape shape, T fill = T{}) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
        check_extents();
    }

    BasicTensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        check_extents();
        if (data_.size() != shape_size(shape_))
            throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                             shape_str(shape_));
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    std::vector<T>& storage() noexcept { return data_; }
    const std::vector<T>& storage() const noexcept { return data_; }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    T& at(std::size_t c, std::size_t h, std::size_t w) { return data_[(c * shape_[1] + h) * shape_[2] + w]; }
    const T& at(std::size_t c, std::size_t h, std::size_t w) const {
        return data_[(c * shape_[1] + h) * shape_[2] + w];
    }

    BasicTensor reshaped(Shape shape) const {
        if (shape_size(shape) != size())
            throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
        return BasicTensor(std::move(shape), data_);
    }

    // Sample i of a batch (leading dimension).
    BasicTensor slice(std::size_t i) const {
        Shape inner(shape_.begin() + 1, shape_.end());
        const std::size_t n = shape_size(inner);
        return BasicTensor(std::move(inner),
                           std::vector<T>(data_.begin() + static_cast<std::ptrdiff_t>(i * n),
                                          data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * n)));
    }

    template <typename U>
    BasicTensor<U> cast() const {
        return BasicTensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
    }

    bool all_finite() const {
        for (const T& v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

private:
    void check_extents() const {
        for (std::size_t e : shape_)
            if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape_));
    }

    Shape shape_;
    std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

// Stacks equally shaped tensors along a new leading dimension.
template <typename T>
BasicTensor<T> stack(std::span<const BasicTensor<T>> items) {
    if (items.empty()) throw ShapeError("cannot stack zero tensors");
    Shape shape = items.front().shape();
    std::vector<T> data;
    data.reserve(items.size() * items.front().size());
    for (const auto& t : items) {
        if (t.shape() != shape) throw ShapeError("stack: mismatched shapes " + shape_str(shape) + " vs " + shape_str(t.shape()));
        data.insert(data.end(), t.storage().begin(), t.storage().end());
    }
    shape.insert(shape.begin(), items.size());
    return BasicTensor<T>(std::move(shape), std::move(data));
}

} // namespace aesc
