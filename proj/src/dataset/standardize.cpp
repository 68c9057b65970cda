#include "herb/dataset/standardize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace herb::dataset {

namespace {

struct Tap {
    int lo;
    int hi;
    double frac;
};

std::vector<Tap> axis_taps(int in, int out) {
    std::vector<Tap> taps(static_cast<std::size_t>(out));
    for (int i = 0; i < out; ++i) {
        const double s = aligned_source_coordinate(i, in, out);
        int lo = static_cast<int>(std::floor(s));
        lo = std::clamp(lo, 0, in - 1);
        const int hi = std::min(lo + 1, in - 1);
        taps[static_cast<std::size_t>(i)] = {lo, hi, s - lo};
    }
    return taps;
}

double lerp(double a, double b, double t) {
    return a + (b - a) * t;
}

}  // namespace

StandardImage::StandardImage() : tensor_({kChannels, kSize, kSize}) {}

StandardImage::StandardImage(Tensor chw) : tensor_(std::move(chw)) {
    if (!is_standard_shape(tensor_)) {
        throw std::invalid_argument("standard image must be 3x256x256, got " + shape_to_string(tensor_.shape()));
    }
    if (!values_in_unit_range(tensor_)) {
        throw std::invalid_argument("standard image values must lie in [0, 1]");
    }
}

bool is_standard_shape(const Tensor& chw) {
    return chw.shape() == Tensor::Shape{StandardImage::kChannels, StandardImage::kSize, StandardImage::kSize};
}

bool values_in_unit_range(const Tensor& t) {
    return std::all_of(t.values().begin(), t.values().end(), [](float v) { return v >= 0.0f && v <= 1.0f; });
}

double aligned_source_coordinate(int dst, int in, int out) {
    if (out <= 1 || in <= 1) return 0.0;
    return static_cast<double>(dst) * (in - 1) / (out - 1);
}

Tensor resize_bilinear(const Tensor& chw, int out_height, int out_width) {
    if (chw.rank() != 3) throw std::invalid_argument("resize_bilinear expects a C x H x W tensor");
    if (out_height < 1 || out_width < 1) throw std::invalid_argument("resize target must be at least 1x1");
    const auto channels = chw.dim(0);
    const int in_h = static_cast<int>(chw.dim(1));
    const int in_w = static_cast<int>(chw.dim(2));
    if (in_h < 1 || in_w < 1) throw std::invalid_argument("resize source must be at least 1x1");

    const auto ys = axis_taps(in_h, out_height);
    const auto xs = axis_taps(in_w, out_width);
    Tensor out({channels, out_height, out_width});
    const float* src = chw.data();
    float* dst = out.data();
    for (std::int64_t c = 0; c < channels; ++c) {
        const float* plane = src + c * in_h * in_w;
        for (const auto& ty : ys) {
            const float* r0 = plane + static_cast<std::size_t>(ty.lo) * in_w;
            const float* r1 = plane + static_cast<std::size_t>(ty.hi) * in_w;
            for (const auto& tx : xs) {
                const double top = lerp(r0[tx.lo], r0[tx.hi], tx.frac);
                const double bottom = lerp(r1[tx.lo], r1[tx.hi], tx.frac);
                *dst++ = static_cast<float>(lerp(top, bottom, ty.frac));
            }
        }
    }
    return out;
}

StandardImage standardize(const RawImage& raw) {
    if (raw.channels != 3) {
        throw std::invalid_argument("standardize expects an RGB image, got " + std::to_string(raw.channels) +
                                    " channel(s)");
    }
    if (raw.width < 1 || raw.height < 1) throw std::invalid_argument("standardize expects at least a 1x1 image");
    if (raw.pixels.size() != static_cast<std::size_t>(raw.width) * raw.height * 3) {
        throw std::invalid_argument("image pixel buffer does not match its dimensions");
    }

    constexpr int size = StandardImage::kSize;
    const auto ys = axis_taps(raw.height, size);
    const auto xs = axis_taps(raw.width, size);
    Tensor out({3, size, size});
    float* dst = out.data();
    for (int c = 0; c < 3; ++c) {
        for (const auto& ty : ys) {
            for (const auto& tx : xs) {
                const double top = lerp(raw.at(ty.lo, tx.lo, c), raw.at(ty.lo, tx.hi, c), tx.frac);
                const double bottom = lerp(raw.at(ty.hi, tx.lo, c), raw.at(ty.hi, tx.hi, c), tx.frac);
                const double v = lerp(top, bottom, ty.frac) / 255.0;
                *dst++ = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return StandardImage(std::move(out));
}

RawImage to_raw_image(const StandardImage& image) {
    constexpr int size = StandardImage::kSize;
    RawImage raw = make_image(size, size, 3);
    const Tensor& t = image.tensor();
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                const float v = t[(static_cast<std::size_t>(c) * size + y) * size + x];
                raw.pixels[(static_cast<std::size_t>(y) * size + x) * 3 + c] =
                    static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
            }
        }
    }
    return raw;
}

Tensor make_batch(const std::vector<StandardImage>& images) {
    constexpr std::int64_t per = 3LL * StandardImage::kSize * StandardImage::kSize;
    Tensor batch({static_cast<std::int64_t>(images.size()), 3, StandardImage::kSize, StandardImage::kSize});
    for (std::size_t i = 0; i < images.size(); ++i) {
        std::copy(images[i].tensor().values().begin(), images[i].tensor().values().end(),
                  batch.data() + static_cast<std::int64_t>(i) * per);
    }
    return batch;
}

}  // namespace herb::dataset
