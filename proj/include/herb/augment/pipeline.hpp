#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "herb/augment/ops.hpp"
#include "herb/dataset/standardize.hpp"

namespace herb::augment {

struct Range {
    double lo = 0.0;
    double hi = 0.0;

    bool operator==(const Range&) const = default;
};

// Training-time augmentation parameters. Each operator is included
// independently with its probability; parameters are then drawn uniformly
// from the operator's range.
struct AugmentSpec {
    double flip_vertical_p = 0.5;
    double flip_horizontal_p = 0.5;
    double rotate_p = 0.5;
    Range rotate_range_deg{-45.0, 45.0};
    double noise_p = 0.5;
    Range noise_std_range{0.0, 0.1};
    double multiply_p = 0.5;
    Range multiply_range{0.8, 1.2};
    double crop_p = 0.5;
    Range crop_fraction_range{0.0, 0.1};
    double elastic_p = 0.5;
    Range elastic_alpha_range{0.5, 3.5};
    double elastic_sigma = 0.25;

    bool operator==(const AugmentSpec&) const = default;
};

// Throws std::invalid_argument describing the first violated constraint.
void validate(const AugmentSpec& spec);

// All probabilities 0, all ranges collapsed to identity values.
AugmentSpec identity_spec();

void to_json(nlohmann::json& j, const AugmentSpec& spec);
void from_json(const nlohmann::json& j, AugmentSpec& spec);

struct FlipOp {
    FlipAxis axis;
    bool operator==(const FlipOp&) const = default;
};
struct RotateOp {
    double angle_deg;
    bool operator==(const RotateOp&) const = default;
};
struct NoiseOp {
    double std_dev;
    std::uint64_t seed;  // noise replays from Rng(seed, 0)
    bool operator==(const NoiseOp&) const = default;
};
struct MultiplyOp {
    double factor;
    bool operator==(const MultiplyOp&) const = default;
};
struct CropOp {
    CropFractions fractions;
    bool operator==(const CropOp&) const = default;
};
struct ElasticOp {
    double alpha;
    double sigma;
    std::uint64_t seed;  // field replays from Rng(seed, 0)
    bool operator==(const ElasticOp&) const = default;
};

using AugmentOp = std::variant<FlipOp, RotateOp, NoiseOp, MultiplyOp, CropOp, ElasticOp>;

struct ConcreteAugmentation {
    std::vector<AugmentOp> ops;

    bool empty() const { return ops.empty(); }
    bool operator==(const ConcreteAugmentation&) const = default;
};

nlohmann::json to_json(const ConcreteAugmentation& aug);

// Draw order: flip_v, flip_h, rotate, noise, multiply, crop, elastic. For each
// operator one Bernoulli draw decides inclusion; parameters are drawn only for
// included operators (crop: top, bottom, left, right; noise/elastic also draw
// a 64-bit replay seed after their parameters).
ConcreteAugmentation sample_pipeline(const AugmentSpec& spec, Rng& rng);

// Applies ops in order. Works on any C x H x W image in [0, 1].
Tensor apply(const ConcreteAugmentation& aug, const Tensor& img);
dataset::StandardImage apply(const ConcreteAugmentation& aug, const dataset::StandardImage& img);

}  // namespace herb::augment
