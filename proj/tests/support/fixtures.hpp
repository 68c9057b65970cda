#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "herb/common/image.hpp"
#include "herb/common/rng.hpp"
#include "herb/common/tensor.hpp"
#include "herb/dataset/manifest.hpp"

namespace herb::fixtures {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// Colored-shape images: class k has a distinct dominant color and shape
// (disk, square, triangle, cycling) on a random gray background, with random
// size, position, and color jitter.
RawImage shape_image(std::size_t cls, Rng& rng, int width = 256, int height = 256);

// Writes root/<class>/<index>.{png,jpg} (alternating formats).
void write_shape_corpus(const std::filesystem::path& root, const std::vector<std::string>& classes,
                        std::size_t per_class, std::uint64_t seed);

// Manifest without files: classes "class_000".., ids "<label>/<i>", 64x48 records.
dataset::DatasetManifest synthetic_manifest(std::size_t classes, std::size_t per_class);
std::vector<std::string> class_names(std::size_t count);

// Uniform values in [lo, hi).
Tensor random_tensor(Tensor::Shape shape, Rng& rng, double lo = 0.0, double hi = 1.0);

// Empty result means `doc` satisfies the evaluation report schema.
std::vector<std::string> eval_report_schema_errors(const nlohmann::json& doc);

}  // namespace herb::fixtures
