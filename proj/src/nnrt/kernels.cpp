#include "herb/nnrt/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Core>

namespace herb::nnrt {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
    if (t.rank() != rank) {
        throw std::invalid_argument(std::string(what) + " expects a rank-" + std::to_string(rank) + " tensor, got " +
                                    shape_to_string(t.shape()));
    }
}

void require_vector(const Tensor& t, std::int64_t n, const char* what) {
    if (t.rank() != 1 || t.dim(0) != n) {
        throw std::invalid_argument(std::string(what) + " must have shape [" + std::to_string(n) + "], got " +
                                    shape_to_string(t.shape()));
    }
}

// Direct convolution over a zero-padded input (cin x ph x pw), one output row
// at a time. Output channels are processed in groups of kGroup so each input
// row load feeds several accumulators; the summation order per output element
// is fixed (c, ky, kx), so results are deterministic.
constexpr std::int64_t kGroup = 8;

template <int K>
void conv_rows_stride1(const float* padded, const float* kernel, std::int64_t cin, std::int64_t cout, std::int64_t ph,
                       std::int64_t pw, std::int64_t out_h, std::int64_t out_w, float* out) {
    std::vector<float> acc(static_cast<std::size_t>(kGroup * out_w));
    for (std::int64_t o0 = 0; o0 < cout; o0 += kGroup) {
        const std::int64_t group = std::min(kGroup, cout - o0);
        for (std::int64_t oy = 0; oy < out_h; ++oy) {
            std::fill(acc.begin(), acc.end(), 0.0f);
            for (std::int64_t c = 0; c < cin; ++c) {
                for (int ky = 0; ky < K; ++ky) {
                    const float* r = padded + (c * ph + oy + ky) * pw;
                    for (std::int64_t g = 0; g < group; ++g) {
                        const float* wk = kernel + (((o0 + g) * cin + c) * K + ky) * K;
                        float w[K];
                        for (int kx = 0; kx < K; ++kx) w[kx] = wk[kx];
                        float* a = acc.data() + g * out_w;
                        for (std::int64_t ox = 0; ox < out_w; ++ox) {
                            float sum = a[ox];
                            for (int kx = 0; kx < K; ++kx) sum += w[kx] * r[ox + kx];
                            a[ox] = sum;
                        }
                    }
                }
            }
            for (std::int64_t g = 0; g < group; ++g) {
                std::copy(acc.begin() + g * out_w, acc.begin() + (g + 1) * out_w,
                          out + ((o0 + g) * out_h + oy) * out_w);
            }
        }
    }
}

void conv_rows_generic(const float* padded, const float* kernel, std::int64_t cin, std::int64_t cout, std::int64_t k,
                       std::int64_t stride, std::int64_t ph, std::int64_t pw, std::int64_t out_h, std::int64_t out_w,
                       float* out) {
    std::vector<float> acc(static_cast<std::size_t>(out_w));
    for (std::int64_t o = 0; o < cout; ++o) {
        for (std::int64_t oy = 0; oy < out_h; ++oy) {
            std::fill(acc.begin(), acc.end(), 0.0f);
            for (std::int64_t c = 0; c < cin; ++c) {
                for (std::int64_t ky = 0; ky < k; ++ky) {
                    const float* row = padded + (c * ph + oy * stride + ky) * pw;
                    for (std::int64_t kx = 0; kx < k; ++kx) {
                        const float wv = kernel[((o * cin + c) * k + ky) * k + kx];
                        for (std::int64_t ox = 0; ox < out_w; ++ox) acc[ox] += wv * row[ox * stride + kx];
                    }
                }
            }
            std::copy(acc.begin(), acc.end(), out + (o * out_h + oy) * out_w);
        }
    }
}

}  // namespace

ConvGeometry conv_geometry(std::int64_t in_h, std::int64_t in_w, std::int64_t kernel, std::int64_t stride,
                           Padding padding) {
    if (kernel < 1 || stride < 1) throw std::invalid_argument("kernel and stride must be >= 1");
    ConvGeometry g{};
    if (padding == Padding::valid) {
        if (in_h < kernel || in_w < kernel) {
            throw std::invalid_argument("valid convolution window " + std::to_string(kernel) + " exceeds input " +
                                        std::to_string(in_h) + "x" + std::to_string(in_w));
        }
        g.out_h = (in_h - kernel) / stride + 1;
        g.out_w = (in_w - kernel) / stride + 1;
    } else {
        g.out_h = (in_h + stride - 1) / stride;
        g.out_w = (in_w + stride - 1) / stride;
        g.pad_top = std::max<std::int64_t>((g.out_h - 1) * stride + kernel - in_h, 0) / 2;
        g.pad_left = std::max<std::int64_t>((g.out_w - 1) * stride + kernel - in_w, 0) / 2;
    }
    return g;
}

Tensor conv2d_forward(const Tensor& x, const Tensor& kernel, std::int64_t stride, Padding padding, const Tensor& bias) {
    require_rank(x, 4, "conv2d input");
    require_rank(kernel, 4, "conv2d kernel");
    const auto n = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
    const auto cout = kernel.dim(0), k = kernel.dim(2);
    if (kernel.dim(1) != cin || kernel.dim(3) != k) {
        throw std::invalid_argument("conv2d shape mismatch: input " + shape_to_string(x.shape()) + " vs kernel " +
                                    shape_to_string(kernel.shape()));
    }
    if (!bias.empty()) require_vector(bias, cout, "conv2d bias");
    const auto g = conv_geometry(h, w, k, stride, padding);

    // Zero-padded copy covering exactly the receptive field of the output.
    const std::int64_t ph = (g.out_h - 1) * stride + k;
    const std::int64_t pw = (g.out_w - 1) * stride + k;
    std::vector<float> padded(static_cast<std::size_t>(cin * ph * pw));

    Tensor out({n, cout, g.out_h, g.out_w});
    for (std::int64_t b = 0; b < n; ++b) {
        std::fill(padded.begin(), padded.end(), 0.0f);
        for (std::int64_t c = 0; c < cin; ++c) {
            for (std::int64_t y = 0; y < h; ++y) {
                const std::int64_t py = y + g.pad_top;
                if (py >= ph) break;
                const float* src = x.data() + ((b * cin + c) * h + y) * w;
                float* dst = padded.data() + (c * ph + py) * pw + g.pad_left;
                std::copy(src, src + std::min(w, pw - g.pad_left), dst);
            }
        }
        float* dst = out.data() + b * cout * g.out_h * g.out_w;
        if (stride == 1 && k == 3) {
            conv_rows_stride1<3>(padded.data(), kernel.data(), cin, cout, ph, pw, g.out_h, g.out_w, dst);
        } else if (stride == 1 && k == 1) {
            conv_rows_stride1<1>(padded.data(), kernel.data(), cin, cout, ph, pw, g.out_h, g.out_w, dst);
        } else {
            conv_rows_generic(padded.data(), kernel.data(), cin, cout, k, stride, ph, pw, g.out_h, g.out_w, dst);
        }
        if (!bias.empty()) {
            const std::int64_t plane = g.out_h * g.out_w;
            for (std::int64_t o = 0; o < cout; ++o) {
                const float bo = bias[static_cast<std::size_t>(o)];
                std::for_each(dst + o * plane, dst + (o + 1) * plane, [bo](float& v) { v += bo; });
            }
        }
    }
    return out;
}

Tensor batchnorm_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta, const Tensor& mean,
                         const Tensor& variance, double epsilon) {
    if (x.rank() != 4 && x.rank() != 2) {
        throw std::invalid_argument("batchnorm expects N x C x H x W or N x C input, got " +
                                    shape_to_string(x.shape()));
    }
    const auto n = x.dim(0), c = x.dim(1);
    const std::int64_t spatial = x.rank() == 4 ? x.dim(2) * x.dim(3) : 1;
    require_vector(gamma, c, "batchnorm gamma");
    require_vector(beta, c, "batchnorm beta");
    require_vector(mean, c, "batchnorm mean");
    require_vector(variance, c, "batchnorm variance");

    std::vector<float> scale(static_cast<std::size_t>(c)), shift(static_cast<std::size_t>(c));
    for (std::int64_t i = 0; i < c; ++i) {
        const auto u = static_cast<std::size_t>(i);
        if (variance[u] < 0.0f) throw std::invalid_argument("batchnorm variance is negative in channel " + std::to_string(i));
        const double s = gamma[u] / std::sqrt(static_cast<double>(variance[u]) + epsilon);
        scale[u] = static_cast<float>(s);
        shift[u] = static_cast<float>(beta[u] - s * mean[u]);
    }
    Tensor out(x.shape());
    for (std::int64_t b = 0; b < n; ++b) {
        for (std::int64_t ch = 0; ch < c; ++ch) {
            const auto u = static_cast<std::size_t>(ch);
            const float* src = x.data() + (b * c + ch) * spatial;
            float* dst = out.data() + (b * c + ch) * spatial;
            for (std::int64_t i = 0; i < spatial; ++i) dst[i] = src[i] * scale[u] + shift[u];
        }
    }
    return out;
}

Tensor relu_forward(const Tensor& x) {
    Tensor out(x.shape());
    std::transform(x.values().begin(), x.values().end(), out.data(), [](float v) { return v > 0.0f ? v : 0.0f; });
    return out;
}

Tensor pool_forward(const Tensor& x, PoolKind kind, std::int64_t window, std::int64_t stride) {
    require_rank(x, 4, "pool");
    const auto n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (window < 1 || stride < 1) throw std::invalid_argument("pool window and stride must be >= 1");
    if (window > h || window > w) {
        throw std::invalid_argument("pool window " + std::to_string(window) + " exceeds input " +
                                    std::to_string(h) + "x" + std::to_string(w));
    }
    const auto oh = (h - window) / stride + 1;
    const auto ow = (w - window) / stride + 1;
    const double inv_area = 1.0 / static_cast<double>(window * window);
    Tensor out({n, c, oh, ow});
    float* dst = out.data();
    for (std::int64_t p = 0; p < n * c; ++p) {
        const float* src = x.data() + p * h * w;
        for (std::int64_t oy = 0; oy < oh; ++oy) {
            for (std::int64_t ox = 0; ox < ow; ++ox) {
                double acc = kind == PoolKind::max ? -std::numeric_limits<double>::infinity() : 0.0;
                for (std::int64_t ky = 0; ky < window; ++ky) {
                    const float* row = src + (oy * stride + ky) * w + ox * stride;
                    for (std::int64_t kx = 0; kx < window; ++kx) {
                        acc = kind == PoolKind::max ? std::max(acc, static_cast<double>(row[kx])) : acc + row[kx];
                    }
                }
                *dst++ = static_cast<float>(kind == PoolKind::max ? acc : acc * inv_area);
            }
        }
    }
    return out;
}

Tensor concat_channels(std::span<const Tensor* const> xs) {
    if (xs.empty()) throw std::invalid_argument("concat needs at least one input");
    const Tensor& first = *xs.front();
    if (first.rank() != 4 && first.rank() != 2) throw std::invalid_argument("concat expects rank-4 or rank-2 inputs");
    std::int64_t channels = 0;
    for (const Tensor* t : xs) {
        bool ok = t->rank() == first.rank() && t->dim(0) == first.dim(0);
        if (ok && first.rank() == 4) ok = t->dim(2) == first.dim(2) && t->dim(3) == first.dim(3);
        if (!ok) {
            throw std::invalid_argument("concat shape mismatch: " + shape_to_string(first.shape()) + " vs " +
                                        shape_to_string(t->shape()));
        }
        channels += t->dim(1);
    }
    auto shape = first.shape();
    shape[1] = channels;
    Tensor out(shape);
    const std::int64_t spatial = first.rank() == 4 ? first.dim(2) * first.dim(3) : 1;
    float* dst = out.data();
    for (std::int64_t b = 0; b < first.dim(0); ++b) {
        for (const Tensor* t : xs) {
            const std::int64_t block = t->dim(1) * spatial;
            const float* src = t->data() + b * block;
            dst = std::copy(src, src + block, dst);
        }
    }
    return out;
}

Tensor concat_channels(const std::vector<Tensor>& xs) {
    std::vector<const Tensor*> ptrs;
    for (const auto& t : xs) ptrs.push_back(&t);
    return concat_channels(std::span<const Tensor* const>(ptrs));
}

Tensor global_avg_pool(const Tensor& x) {
    require_rank(x, 4, "global_avg_pool");
    const auto n = x.dim(0), c = x.dim(1);
    const std::int64_t spatial = x.dim(2) * x.dim(3);
    Tensor out({n, c});
    for (std::int64_t p = 0; p < n * c; ++p) {
        const float* src = x.data() + p * spatial;
        double acc = 0.0;
        for (std::int64_t i = 0; i < spatial; ++i) acc += src[i];
        out[static_cast<std::size_t>(p)] = static_cast<float>(acc / static_cast<double>(spatial));
    }
    return out;
}

Tensor dense_forward(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    require_rank(x, 2, "dense input");
    require_rank(weight, 2, "dense weight");
    const auto n = x.dim(0), d = x.dim(1), k = weight.dim(0);
    if (weight.dim(1) != d) {
        throw std::invalid_argument("dense shape mismatch: input " + shape_to_string(x.shape()) + " vs weight " +
                                    shape_to_string(weight.shape()));
    }
    if (!bias.empty()) require_vector(bias, k, "dense bias");
    Tensor out({n, k});
    const ConstRowMap xm(x.data(), n, d);
    const ConstRowMap wm(weight.data(), k, d);
    Eigen::Map<RowMatrix> om(out.data(), n, k);
    om.noalias() = xm * wm.transpose();
    if (!bias.empty()) {
        for (std::int64_t i = 0; i < n; ++i) {
            for (std::int64_t j = 0; j < k; ++j) om(i, j) += bias[static_cast<std::size_t>(j)];
        }
    }
    return out;
}

Tensor softmax(const Tensor& z) {
    require_rank(z, 2, "softmax");
    const auto n = z.dim(0), k = z.dim(1);
    Tensor out(z.shape());
    std::vector<double> e(static_cast<std::size_t>(k));
    for (std::int64_t i = 0; i < n; ++i) {
        const float* row = z.data() + i * k;
        const float m = *std::max_element(row, row + k);
        double sum = 0.0;
        for (std::int64_t j = 0; j < k; ++j) {
            const float shifted = row[j] - m;
            e[static_cast<std::size_t>(j)] = std::exp(static_cast<double>(shifted));
            sum += e[static_cast<std::size_t>(j)];
        }
        for (std::int64_t j = 0; j < k; ++j) {
            out.data()[i * k + j] = static_cast<float>(e[static_cast<std::size_t>(j)] / sum);
        }
    }
    return out;
}

Tensor dropout_forward(const Tensor& x, double rate, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must lie in [0, 1)");
    if (rate == 0.0) return x;
    const float keep_scale = static_cast<float>(1.0 / (1.0 - rate));
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = rng.uniform01() < rate ? 0.0f : x[i] * keep_scale;
    }
    return out;
}

}  // namespace herb::nnrt
