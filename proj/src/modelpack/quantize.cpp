#include "herb/modelpack/quantize.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

#include "herb/common/le_bytes.hpp"

namespace herb::modelpack {

std::string_view to_string(DType dtype) {
    switch (dtype) {
        case DType::f32: return "f32";
        case DType::f16: return "f16";
        case DType::i8: return "i8";
    }
    return "?";
}

DType parse_dtype(std::string_view text) {
    if (text == "f32") return DType::f32;
    if (text == "f16") return DType::f16;
    if (text == "i8") return DType::i8;
    throw std::invalid_argument("unknown dtype '" + std::string(text) + "'");
}

std::size_t dtype_size(DType dtype) {
    switch (dtype) {
        case DType::f32: return 4;
        case DType::f16: return 2;
        case DType::i8: return 1;
    }
    return 0;
}

std::string_view to_string(QuantMode mode) {
    switch (mode) {
        case QuantMode::none: return "none";
        case QuantMode::f16: return "f16";
        case QuantMode::i8_per_tensor_affine: return "i8_per_tensor_affine";
    }
    return "?";
}

QuantMode parse_quant_mode(std::string_view text) {
    if (text == "none") return QuantMode::none;
    if (text == "f16") return QuantMode::f16;
    if (text == "i8_per_tensor_affine" || text == "i8") return QuantMode::i8_per_tensor_affine;
    throw std::invalid_argument("unknown quantization mode '" + std::string(text) + "'");
}

DType storage_dtype(QuantMode mode) {
    switch (mode) {
        case QuantMode::none: return DType::f32;
        case QuantMode::f16: return DType::f16;
        case QuantMode::i8_per_tensor_affine: return DType::i8;
    }
    return DType::f32;
}

std::uint16_t float_to_half(float value) {
    const auto bits = std::bit_cast<std::uint32_t>(value);
    const auto sign = static_cast<std::uint16_t>((bits >> 16) & 0x8000u);
    const std::uint32_t exponent = (bits >> 23) & 0xffu;
    const std::uint32_t mantissa = bits & 0x7fffffu;
    if (exponent == 0xff) throw std::domain_error("cannot convert a non-finite value to f16");
    if (exponent == 0) return sign;  // f32 subnormals are far below the f16 range

    const int e = static_cast<int>(exponent) - 127 + 15;
    if (e >= 31) throw std::domain_error("value " + std::to_string(value) + " overflows f16");
    if (e <= 0) {
        const int shift = 14 - e;
        if (shift > 24) return sign;
        const std::uint32_t full = mantissa | 0x800000u;
        std::uint32_t h = full >> shift;
        const std::uint32_t rem = full & ((1u << shift) - 1u);
        const std::uint32_t half = 1u << (shift - 1);
        if (rem > half || (rem == half && (h & 1u))) ++h;
        return static_cast<std::uint16_t>(sign | h);
    }
    std::uint32_t h = (static_cast<std::uint32_t>(e) << 10) | (mantissa >> 13);
    const std::uint32_t rem = mantissa & 0x1fffu;
    if (rem > 0x1000u || (rem == 0x1000u && (h & 1u))) ++h;
    if (h >= 0x7c00u) throw std::domain_error("value " + std::to_string(value) + " overflows f16");
    return static_cast<std::uint16_t>(sign | h);
}

float half_to_float(std::uint16_t h) {
    const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
    const std::uint32_t exponent = (h >> 10) & 0x1fu;
    std::uint32_t mantissa = h & 0x3ffu;
    std::uint32_t bits;
    if (exponent == 0) {
        if (mantissa == 0) {
            bits = sign;
        } else {
            int e = -1;
            do {
                ++e;
                mantissa <<= 1;
            } while ((mantissa & 0x400u) == 0);
            bits = sign | (static_cast<std::uint32_t>(127 - 15 - e) << 23) | ((mantissa & 0x3ffu) << 13);
        }
    } else if (exponent == 0x1f) {
        bits = sign | 0x7f800000u | (mantissa << 13);
    } else {
        bits = sign | ((exponent + 127 - 15) << 23) | (mantissa << 13);
    }
    return std::bit_cast<float>(bits);
}

AffineParams choose_affine(const float* values, std::size_t count) {
    AffineParams p;
    if (count == 0) {
        p.scale = kMinScale;
        p.zero_point = -128;
        p.constant = true;
        return p;
    }
    double lo = values[0], hi = values[0];
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::isfinite(values[i])) throw std::domain_error("cannot quantize a non-finite value");
        lo = std::min(lo, static_cast<double>(values[i]));
        hi = std::max(hi, static_cast<double>(values[i]));
    }
    if (hi == lo) {
        p.scale = kMinScale;
        p.constant = true;
    } else {
        p.scale = std::max((hi - lo) / 255.0, kMinScale);
    }
    for (int i = 0; std::round(hi / p.scale) - std::round(lo / p.scale) > 255.0; ++i) {
        p.scale = i < 64 ? std::nextafter(p.scale, INFINITY) : p.scale * (1.0 + 1e-12);
    }
    const double low_step = std::round(lo / p.scale);
    if (std::abs(low_step) > 0x1p52) throw std::domain_error("tensor range is too wide for i8 zero point");
    p.zero_point = -128 - static_cast<std::int64_t>(low_step);
    return p;
}

std::int8_t quantize_value(float value, const AffineParams& params) {
    const double q = std::round(static_cast<double>(value) / params.scale) + static_cast<double>(params.zero_point);
    return static_cast<std::int8_t>(std::clamp(q, -128.0, 127.0));
}

float dequantize_value(std::int8_t q, const AffineParams& params) {
    return static_cast<float>((static_cast<double>(q) - static_cast<double>(params.zero_point)) * params.scale);
}

QuantizedBlob quantize_tensor(const Tensor& t, QuantMode mode) {
    QuantizedBlob blob;
    blob.dtype = storage_dtype(mode);
    blob.bytes.reserve(t.size() * dtype_size(blob.dtype));
    switch (blob.dtype) {
        case DType::f32:
            for (float v : t.values()) put_f32(blob.bytes, v);
            break;
        case DType::f16:
            for (float v : t.values()) {
                const std::uint16_t h = float_to_half(v);
                blob.bytes.push_back(static_cast<std::uint8_t>(h & 0xff));
                blob.bytes.push_back(static_cast<std::uint8_t>(h >> 8));
            }
            break;
        case DType::i8:
            blob.affine = choose_affine(t.data(), t.size());
            for (float v : t.values()) blob.bytes.push_back(static_cast<std::uint8_t>(quantize_value(v, blob.affine)));
            break;
    }
    return blob;
}

Tensor dequantize(const QuantizedBlob& blob, const Tensor::Shape& shape) {
    Tensor out(shape);
    if (blob.bytes.size() != out.size() * dtype_size(blob.dtype)) {
        throw std::invalid_argument("payload of " + std::to_string(blob.bytes.size()) + " bytes does not match " +
                                    std::string(to_string(blob.dtype)) + " shape " + shape_to_string(shape));
    }
    const std::uint8_t* p = blob.bytes.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        switch (blob.dtype) {
            case DType::f32: out[i] = get_f32(p + 4 * i); break;
            case DType::f16: out[i] = half_to_float(static_cast<std::uint16_t>(p[2 * i] | (p[2 * i + 1] << 8))); break;
            case DType::i8: out[i] = dequantize_value(static_cast<std::int8_t>(p[i]), blob.affine); break;
        }
    }
    return out;
}

}  // namespace herb::modelpack
