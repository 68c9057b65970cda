#pragma once

#include <filesystem>
#include <vector>

#include "herb/common/image.hpp"
#include "herb/nnrt/forward.hpp"

namespace herb::nnrt {

struct GridLayout {
    std::int64_t tiles = 0;
    std::int64_t columns = 0;
    std::int64_t rows = 0;
    std::int64_t tile_height = 0;
    std::int64_t tile_width = 0;
    static constexpr std::int64_t kGap = 1;
    // Vector outputs render each element as a block of this many pixels.
    static constexpr std::int64_t kVectorTile = 8;

    std::int64_t image_width() const { return columns * tile_width + (columns + 1) * kGap; }
    std::int64_t image_height() const { return rows * tile_height + (rows + 1) * kGap; }
};

// Layout for one sample's activation: C x H x W gives C tiles of H x W;
// a D vector gives D square tiles. Columns = ceil(sqrt(tiles)).
GridLayout grid_layout(const Tensor::Shape& per_sample_shape);

// Renders sample 0 of `activation` (N x C x H x W or N x D) as a grayscale
// grid. Each tile is min-max normalized; constant tiles are mid-gray (128).
RawImage render_activation_grid(const Tensor& activation);

// Runs `image` (1 x C x H x W) in infer mode and writes one PNG per layer,
// named "<layer>.png". Returns the written paths in layer order.
std::vector<std::filesystem::path> dump_activations(const ModelGraph& graph, const WeightStore& weights,
                                                    const Tensor& image, const std::filesystem::path& out_dir);

}  // namespace herb::nnrt
