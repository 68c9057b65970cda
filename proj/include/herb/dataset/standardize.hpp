#pragma once

#include "herb/common/image.hpp"
#include "herb/common/tensor.hpp"

namespace herb::dataset {

// Network input: 3 x 256 x 256 float tensor with every value in [0, 1].
class StandardImage {
public:
    static constexpr int kChannels = 3;
    static constexpr int kSize = 256;

    StandardImage();
    // Throws std::invalid_argument unless `chw` has shape 3x256x256 and values in [0, 1].
    explicit StandardImage(Tensor chw);

    const Tensor& tensor() const { return tensor_; }
    Tensor&& take() && { return std::move(tensor_); }

    bool operator==(const StandardImage&) const = default;

private:
    Tensor tensor_;
};

bool is_standard_shape(const Tensor& chw);
bool values_in_unit_range(const Tensor& t);

// Corner-aligned bilinear sampling coordinate: maps output index `dst` in
// [0, out) onto the source axis so that both end pixels coincide.
double aligned_source_coordinate(int dst, int in, int out);

// Corner-aligned bilinear resize of a C x H x W tensor.
Tensor resize_bilinear(const Tensor& chw, int out_height, int out_width);

// RGB8 -> 3x256x256 in [0, 1]: bilinear resize then divide by 255.
StandardImage standardize(const RawImage& raw);

// Inverse for previews: value * 255, rounded, as RGB8.
RawImage to_raw_image(const StandardImage& image);

// Stacks images into an N x 3 x 256 x 256 batch.
Tensor make_batch(const std::vector<StandardImage>& images);

}  // namespace herb::dataset
