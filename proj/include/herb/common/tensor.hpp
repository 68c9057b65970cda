#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace herb {

// Dense float32 array, rank <= 4, row-major. Images use N x C x H x W.
class Tensor {
public:
    using Shape = std::vector<std::int64_t>;

    Tensor() = default;
    explicit Tensor(Shape shape, float fill = 0.0f);
    Tensor(Shape shape, std::vector<float> data);

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::int64_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::span<float> values() { return data_; }
    std::span<const float> values() const { return data_; }
    std::vector<float>& storage() { return data_; }
    const std::vector<float>& storage() const { return data_; }

    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    // 4-d accessors (N, C, H, W).
    float& at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w);
    float at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const;

    // Returns a copy with a new shape of identical element count.
    Tensor reshaped(Shape shape) const;

    bool operator==(const Tensor& other) const = default;

private:
    Shape shape_;
    std::vector<float> data_;
};

// Product of dims; throws std::invalid_argument on negative dims, rank > 4 or overflow.
std::size_t element_count(const Tensor::Shape& shape);

std::string shape_to_string(const Tensor::Shape& shape);

bool all_finite(const Tensor& t);

}  // namespace herb
