#include "herb/nnrt/activations.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace herb::nnrt {

namespace fs = std::filesystem;

GridLayout grid_layout(const Tensor::Shape& s) {
    GridLayout g;
    if (s.size() == 3) {
        g.tiles = s[0];
        g.tile_height = s[1];
        g.tile_width = s[2];
    } else if (s.size() == 1) {
        g.tiles = s[0];
        g.tile_height = g.tile_width = GridLayout::kVectorTile;
    } else {
        throw std::invalid_argument("cannot lay out activation of shape " + shape_to_string(s));
    }
    g.columns = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(g.tiles)))));
    g.rows = (g.tiles + g.columns - 1) / g.columns;
    return g;
}

RawImage render_activation_grid(const Tensor& activation) {
    if (activation.rank() != 4 && activation.rank() != 2) {
        throw std::invalid_argument("activation must be N x C x H x W or N x D");
    }
    const Tensor::Shape per_sample(activation.shape().begin() + 1, activation.shape().end());
    const GridLayout g = grid_layout(per_sample);
    const bool vector = activation.rank() == 2;
    const std::int64_t map_h = vector ? 1 : g.tile_height;
    const std::int64_t map_w = vector ? 1 : g.tile_width;
    const std::int64_t map_size = map_h * map_w;

    RawImage img = make_image(static_cast<int>(g.image_width()), static_cast<int>(g.image_height()), 1, 0);
    for (std::int64_t t = 0; t < g.tiles; ++t) {
        const float* map = activation.data() + t * map_size;
        const auto [lo, hi] = std::minmax_element(map, map + map_size);
        const double range = static_cast<double>(*hi) - *lo;
        const std::int64_t oy = (t / g.columns) * (g.tile_height + GridLayout::kGap) + GridLayout::kGap;
        const std::int64_t ox = (t % g.columns) * (g.tile_width + GridLayout::kGap) + GridLayout::kGap;
        for (std::int64_t y = 0; y < g.tile_height; ++y) {
            for (std::int64_t x = 0; x < g.tile_width; ++x) {
                const float v = vector ? map[0] : map[y * map_w + x];
                std::uint8_t px = 128;
                if (range > 0.0 && std::isfinite(range)) {
                    px = static_cast<std::uint8_t>(std::lround(255.0 * (v - *lo) / range));
                }
                img.at(static_cast<int>(oy + y), static_cast<int>(ox + x), 0) = px;
            }
        }
    }
    return img;
}

std::vector<fs::path> dump_activations(const ModelGraph& graph, const WeightStore& weights, const Tensor& image,
                                       const fs::path& out_dir) {
    if (image.rank() != 4 || image.dim(0) != 1) {
        throw std::invalid_argument("dump_activations expects a single image batch (1 x C x H x W)");
    }
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir)) throw std::runtime_error("cannot create output directory " + out_dir.string());

    ForwardOptions options;
    options.capture_all = true;
    const auto result = forward(graph, weights, image, options);
    std::vector<fs::path> written;
    for (const auto& layer : graph.layers) {
        std::string file = layer.name;
        std::replace(file.begin(), file.end(), '/', '_');
        const fs::path path = out_dir / (file + ".png");
        write_png(path, render_activation_grid(result.intermediates.at(layer.name)));
        written.push_back(path);
    }
    return written;
}

}  // namespace herb::nnrt
