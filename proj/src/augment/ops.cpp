#include "herb/augment/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "herb/dataset/standardize.hpp"

namespace herb::augment {

namespace {

struct Dims {
    std::int64_t c, h, w;
};

Dims dims_of(const Tensor& img) {
    if (img.rank() != 3) throw std::invalid_argument("expected a C x H x W image, got " + shape_to_string(img.shape()));
    return {img.dim(0), img.dim(1), img.dim(2)};
}

double lerp(double a, double b, double t) {
    return a + (b - a) * t;
}

float clip01(double v) {
    return static_cast<float>(std::clamp(v, 0.0, 1.0));
}

std::vector<double> gaussian_kernel(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (auto& v : k) v /= sum;
    return k;
}

std::vector<double> blur(const std::vector<double>& src, int h, int w, const std::vector<double>& kernel) {
    const int radius = static_cast<int>(kernel.size() / 2);
    std::vector<double> tmp(src.size()), out(src.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int xx = std::clamp(x + k, 0, w - 1);
                acc += kernel[static_cast<std::size_t>(k + radius)] * src[static_cast<std::size_t>(y) * w + xx];
            }
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int yy = std::clamp(y + k, 0, h - 1);
                acc += kernel[static_cast<std::size_t>(k + radius)] * tmp[static_cast<std::size_t>(yy) * w + x];
            }
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    return out;
}

}  // namespace

Tensor flip(const Tensor& img, FlipAxis axis) {
    const auto [c, h, w] = dims_of(img);
    Tensor out(img.shape());
    const float* src = img.data();
    float* dst = out.data();
    for (std::int64_t ch = 0; ch < c; ++ch) {
        for (std::int64_t y = 0; y < h; ++y) {
            const std::int64_t sy = axis == FlipAxis::vertical ? h - 1 - y : y;
            const float* srow = src + (ch * h + sy) * w;
            float* drow = dst + (ch * h + y) * w;
            if (axis == FlipAxis::horizontal) {
                std::reverse_copy(srow, srow + w, drow);
            } else {
                std::copy(srow, srow + w, drow);
            }
        }
    }
    return out;
}

Tensor rotate(const Tensor& img, double angle_deg) {
    if (!(std::abs(angle_deg) <= kMaxRotationDeg)) {
        throw std::invalid_argument("rotation angle " + std::to_string(angle_deg) + " outside [-45, 45]");
    }
    const auto [c, h, w] = dims_of(img);
    if (angle_deg == 0.0) return img;

    const double theta = angle_deg * std::numbers::pi / 180.0;
    const double cs = std::cos(theta);
    const double sn = std::sin(theta);
    const double cx = (static_cast<double>(w) - 1.0) / 2.0;
    const double cy = (static_cast<double>(h) - 1.0) / 2.0;

    Tensor out(img.shape());
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            // Inverse map: rotate the output coordinate by -theta (y axis points down).
            const double px = static_cast<double>(x) - cx;
            const double py = static_cast<double>(y) - cy;
            const double sx = cs * px - sn * py + cx;
            const double sy = sn * px + cs * py + cy;
            const double fx0 = std::floor(sx);
            const double fy0 = std::floor(sy);
            const auto x0 = static_cast<std::int64_t>(fx0);
            const auto y0 = static_cast<std::int64_t>(fy0);
            const double tx = sx - fx0;
            const double ty = sy - fy0;
            if (x0 < -1 || y0 < -1 || x0 >= w || y0 >= h) continue;
            for (std::int64_t ch = 0; ch < c; ++ch) {
                const float* plane = img.data() + ch * h * w;
                auto tap = [&](std::int64_t yy, std::int64_t xx) -> double {
                    if (xx < 0 || yy < 0 || xx >= w || yy >= h) return 0.0;
                    return plane[yy * w + xx];
                };
                const double top = lerp(tap(y0, x0), tap(y0, x0 + 1), tx);
                const double bottom = lerp(tap(y0 + 1, x0), tap(y0 + 1, x0 + 1), tx);
                out.data()[(ch * h + y) * w + x] = clip01(lerp(top, bottom, ty));
            }
        }
    }
    return out;
}

Tensor add_gaussian_noise(const Tensor& img, double std_dev, Rng& rng) {
    dims_of(img);
    if (!(std_dev >= 0.0)) throw std::invalid_argument("noise standard deviation must be non-negative");
    if (std_dev == 0.0) return img;
    Tensor out(img.shape());
    for (std::size_t i = 0; i < img.size(); ++i) {
        out[i] = clip01(static_cast<double>(img[i]) + std_dev * rng.normal());
    }
    return out;
}

Tensor multiply(const Tensor& img, double factor) {
    dims_of(img);
    if (!(factor >= 0.0)) throw std::invalid_argument("multiply factor must be non-negative");
    if (factor == 1.0) return img;
    Tensor out(img.shape());
    for (std::size_t i = 0; i < img.size(); ++i) out[i] = clip01(static_cast<double>(img[i]) * factor);
    return out;
}

CropWindow crop_window(int height, int width, const CropFractions& f) {
    for (double v : {f.top, f.bottom, f.left, f.right}) {
        if (!(v >= 0.0 && v < 1.0)) throw std::invalid_argument("crop fraction outside [0, 1)");
    }
    CropWindow win{};
    win.y0 = static_cast<int>(std::floor(f.top * height));
    win.y1 = height - 1 - static_cast<int>(std::floor(f.bottom * height));
    win.x0 = static_cast<int>(std::floor(f.left * width));
    win.x1 = width - 1 - static_cast<int>(std::floor(f.right * width));
    if (win.y1 < win.y0 || win.x1 < win.x0) throw std::invalid_argument("crop window is empty");
    return win;
}

Tensor crop_resize(const Tensor& img, const CropFractions& fractions) {
    const auto [c, h, w] = dims_of(img);
    const auto win = crop_window(static_cast<int>(h), static_cast<int>(w), fractions);
    if (win.y0 == 0 && win.x0 == 0 && win.y1 == h - 1 && win.x1 == w - 1) return img;
    const std::int64_t ch_h = win.y1 - win.y0 + 1;
    const std::int64_t ch_w = win.x1 - win.x0 + 1;
    Tensor cropped({c, ch_h, ch_w});
    for (std::int64_t ch = 0; ch < c; ++ch) {
        for (std::int64_t y = 0; y < ch_h; ++y) {
            const float* src = img.data() + (ch * h + win.y0 + y) * w + win.x0;
            std::copy(src, src + ch_w, cropped.data() + (ch * ch_h + y) * ch_w);
        }
    }
    return dataset::resize_bilinear(cropped, static_cast<int>(h), static_cast<int>(w));
}

DisplacementField elastic_field(int height, int width, double alpha, double sigma, Rng& rng) {
    if (!(sigma > 0.0)) throw std::invalid_argument("elastic sigma must be positive");
    if (!(alpha >= 0.0)) throw std::invalid_argument("elastic alpha must be non-negative");
    const std::size_t n = static_cast<std::size_t>(height) * width;
    std::vector<double> nx(n), ny(n);
    for (auto& v : nx) v = rng.uniform(-1.0, 1.0);
    for (auto& v : ny) v = rng.uniform(-1.0, 1.0);
    const auto kernel = gaussian_kernel(sigma);
    DisplacementField field{height, width, blur(nx, height, width, kernel), blur(ny, height, width, kernel)};
    for (auto& v : field.dx) v *= alpha;
    for (auto& v : field.dy) v *= alpha;
    return field;
}

Tensor warp(const Tensor& img, const DisplacementField& field) {
    const auto [c, h, w] = dims_of(img);
    if (field.height != h || field.width != w) throw std::invalid_argument("displacement field size mismatch");
    Tensor out(img.shape());
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            const auto i = static_cast<std::size_t>(y * w + x);
            const double sx = std::clamp(static_cast<double>(x) + field.dx[i], 0.0, static_cast<double>(w - 1));
            const double sy = std::clamp(static_cast<double>(y) + field.dy[i], 0.0, static_cast<double>(h - 1));
            const auto x0 = static_cast<std::int64_t>(std::floor(sx));
            const auto y0 = static_cast<std::int64_t>(std::floor(sy));
            const std::int64_t x1 = std::min(x0 + 1, w - 1);
            const std::int64_t y1 = std::min(y0 + 1, h - 1);
            const double tx = sx - static_cast<double>(x0);
            const double ty = sy - static_cast<double>(y0);
            for (std::int64_t ch = 0; ch < c; ++ch) {
                const float* p = img.data() + ch * h * w;
                const double top = lerp(p[y0 * w + x0], p[y0 * w + x1], tx);
                const double bottom = lerp(p[y1 * w + x0], p[y1 * w + x1], tx);
                out.data()[(ch * h + y) * w + x] = clip01(lerp(top, bottom, ty));
            }
        }
    }
    return out;
}

Tensor elastic(const Tensor& img, double alpha, double sigma, Rng& rng) {
    const auto [c, h, w] = dims_of(img);
    (void)c;
    return warp(img, elastic_field(static_cast<int>(h), static_cast<int>(w), alpha, sigma, rng));
}

}  // namespace herb::augment
