#pragma once

#include <span>
#include <vector>

#include "herb/common/rng.hpp"
#include "herb/common/tensor.hpp"

// Batch kernels. Spatial tensors are N x C x H x W, vectors N x D.
namespace herb::nnrt {

enum class Padding { valid, same };
enum class PoolKind { max, avg };

struct ConvGeometry {
    std::int64_t out_h, out_w;
    std::int64_t pad_top, pad_left;
};

// valid: out = (in - k) / stride + 1 (requires in >= k).
// same:  out = ceil(in / stride), total padding max((out - 1) * stride + k - in, 0)
//        split with the smaller half on top/left.
ConvGeometry conv_geometry(std::int64_t in_h, std::int64_t in_w, std::int64_t kernel, std::int64_t stride,
                           Padding padding);

// Cross-correlation (no kernel flip); kernel is O x I x k x k (square).
// `bias` may be empty.
Tensor conv2d_forward(const Tensor& x, const Tensor& kernel, std::int64_t stride, Padding padding,
                      const Tensor& bias = {});

// Inference-mode batch normalization with running statistics.
Tensor batchnorm_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta, const Tensor& mean,
                         const Tensor& variance, double epsilon = 1e-5);

Tensor relu_forward(const Tensor& x);

// Valid-padding pooling.
Tensor pool_forward(const Tensor& x, PoolKind kind, std::int64_t window, std::int64_t stride);

Tensor concat_channels(std::span<const Tensor* const> xs);
Tensor concat_channels(const std::vector<Tensor>& xs);

// N x C x H x W -> N x C
Tensor global_avg_pool(const Tensor& x);

// x: N x D, weight: K x D, bias: K (may be empty) -> N x K
Tensor dense_forward(const Tensor& x, const Tensor& weight, const Tensor& bias);

// Row-wise exp(z - max z) / sum.
Tensor softmax(const Tensor& z);

// Inverted dropout: each element kept with probability 1 - rate and scaled by 1 / (1 - rate).
Tensor dropout_forward(const Tensor& x, double rate, Rng& rng);

}  // namespace herb::nnrt
