#pragma once

#include "herb/common/rng.hpp"
#include "herb/common/tensor.hpp"

// Image operators on C x H x W float tensors with values in [0, 1]. Each is a
// pure function of its inputs (and RNG state where one is taken).
namespace herb::augment {

enum class FlipAxis { vertical, horizontal };

// vertical: (c, y, x) <- (c, H-1-y, x); horizontal: (c, y, x) <- (c, y, W-1-x).
Tensor flip(const Tensor& img, FlipAxis axis);

inline constexpr double kMaxRotationDeg = 45.0;

// Rotation by `angle_deg` about the image centre ((W-1)/2, (H-1)/2) with
// bilinear interpolation. Source taps outside the frame contribute 0.
// Throws std::invalid_argument if |angle_deg| > 45.
Tensor rotate(const Tensor& img, double angle_deg);

// clip(img + N(0, std^2), 0, 1), one normal draw per element in C,H,W order.
Tensor add_gaussian_noise(const Tensor& img, double std_dev, Rng& rng);

// clip(img * factor, 0, 1).
Tensor multiply(const Tensor& img, double factor);

struct CropFractions {
    double top = 0.0;
    double bottom = 0.0;
    double left = 0.0;
    double right = 0.0;

    bool operator==(const CropFractions&) const = default;
};

struct CropWindow {
    int y0, y1, x0, x1;  // inclusive bounds
};

// Rows [floor(top*H), H-1-floor(bottom*H)], columns likewise.
// Throws std::invalid_argument if the window is empty or a fraction is outside [0, 1).
CropWindow crop_window(int height, int width, const CropFractions& f);

// Crops the window then resizes back to the input size (corner-aligned bilinear).
Tensor crop_resize(const Tensor& img, const CropFractions& fractions);

struct DisplacementField {
    int height = 0;
    int width = 0;
    std::vector<double> dx;  // row-major H x W
    std::vector<double> dy;
};

// alpha * gaussian_blur(U(-1, 1), sigma) for dx then dy. The noise for dx is
// drawn row-major first, then dy. The blur kernel has radius max(1, ceil(3 sigma)),
// is normalized, separable (horizontal then vertical) and border-replicated.
DisplacementField elastic_field(int height, int width, double alpha, double sigma, Rng& rng);

// Each output pixel is sampled bilinearly at (x + dx, y + dy), coordinates clamped to the frame.
Tensor warp(const Tensor& img, const DisplacementField& field);

Tensor elastic(const Tensor& img, double alpha, double sigma, Rng& rng);

}  // namespace herb::augment
