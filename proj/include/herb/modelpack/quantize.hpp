#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "herb/common/tensor.hpp"

namespace herb::modelpack {

enum class DType { f32, f16, i8 };
enum class QuantMode { none, f16, i8_per_tensor_affine };

std::string_view to_string(DType dtype);
DType parse_dtype(std::string_view text);
std::size_t dtype_size(DType dtype);
std::string_view to_string(QuantMode mode);
QuantMode parse_quant_mode(std::string_view text);
DType storage_dtype(QuantMode mode);

// IEEE binary16 conversion, round to nearest even. Throws std::domain_error for
// non-finite input or values that overflow binary16.
std::uint16_t float_to_half(float value);
float half_to_float(std::uint16_t bits);

// Affine int8: x ~= (q - zero_point) * scale, with min -> -128.
struct AffineParams {
    double scale = 1.0;
    std::int64_t zero_point = 0;
    bool constant = false;  // min == max; scale floored at kMinScale
};

inline constexpr double kMinScale = 1e-12;

// Throws std::domain_error for non-finite values or an unrepresentable range.
AffineParams choose_affine(const float* values, std::size_t count);
std::int8_t quantize_value(float value, const AffineParams& params);
float dequantize_value(std::int8_t q, const AffineParams& params);

struct QuantizedBlob {
    DType dtype = DType::f32;
    std::vector<std::uint8_t> bytes;  // little-endian payload
    AffineParams affine;              // i8 only
};

QuantizedBlob quantize_tensor(const Tensor& t, QuantMode mode);
// Throws std::invalid_argument if the payload length does not match the shape.
Tensor dequantize(const QuantizedBlob& blob, const Tensor::Shape& shape);

}  // namespace herb::modelpack
