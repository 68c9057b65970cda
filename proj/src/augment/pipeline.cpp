#include "herb/augment/pipeline.hpp"

#include <stdexcept>

namespace herb::augment {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

void check_probability(double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
}

void check_range(const Range& r, double min, double max, const char* name) {
    if (!(r.lo <= r.hi)) throw std::invalid_argument(std::string(name) + " must be ordered low <= high");
    if (r.lo < min || r.hi > max) {
        throw std::invalid_argument(std::string(name) + " must lie within [" + std::to_string(min) + ", " +
                                    std::to_string(max) + "]");
    }
}

json range_json(const Range& r) {
    return json::array({r.lo, r.hi});
}

Range range_from(const json& j) {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 2) throw std::invalid_argument("range must have two elements");
    return {v[0], v[1]};
}

}  // namespace

void validate(const AugmentSpec& s) {
    check_probability(s.flip_vertical_p, "flip_vertical_p");
    check_probability(s.flip_horizontal_p, "flip_horizontal_p");
    check_probability(s.rotate_p, "rotate_p");
    check_probability(s.noise_p, "noise_p");
    check_probability(s.multiply_p, "multiply_p");
    check_probability(s.crop_p, "crop_p");
    check_probability(s.elastic_p, "elastic_p");
    check_range(s.rotate_range_deg, -kMaxRotationDeg, kMaxRotationDeg, "rotate_range_deg");
    check_range(s.noise_std_range, 0.0, 0.1, "noise_std_range");
    check_range(s.multiply_range, 0.0, 1e9, "multiply_range");
    check_range(s.crop_fraction_range, 0.0, 0.1, "crop_fraction_range");
    check_range(s.elastic_alpha_range, 0.0, 1e9, "elastic_alpha_range");
    if (!(s.elastic_sigma > 0.0)) throw std::invalid_argument("elastic_sigma must be positive");
}

AugmentSpec identity_spec() {
    AugmentSpec s;
    s.flip_vertical_p = s.flip_horizontal_p = 0.0;
    s.rotate_p = s.noise_p = s.multiply_p = s.crop_p = s.elastic_p = 0.0;
    s.rotate_range_deg = {0.0, 0.0};
    s.noise_std_range = {0.0, 0.0};
    s.multiply_range = {1.0, 1.0};
    s.crop_fraction_range = {0.0, 0.0};
    s.elastic_alpha_range = {0.0, 0.0};
    return s;
}

void to_json(json& j, const AugmentSpec& s) {
    j = json{{"flip_vertical_p", s.flip_vertical_p},
             {"flip_horizontal_p", s.flip_horizontal_p},
             {"rotate_p", s.rotate_p},
             {"rotate_range_deg", range_json(s.rotate_range_deg)},
             {"noise_p", s.noise_p},
             {"noise_std_range", range_json(s.noise_std_range)},
             {"multiply_p", s.multiply_p},
             {"multiply_range", range_json(s.multiply_range)},
             {"crop_p", s.crop_p},
             {"crop_fraction_range", range_json(s.crop_fraction_range)},
             {"elastic_p", s.elastic_p},
             {"elastic_alpha_range", range_json(s.elastic_alpha_range)},
             {"elastic_sigma", s.elastic_sigma}};
}

void from_json(const json& j, AugmentSpec& s) {
    s = AugmentSpec{};
    auto prob = [&](const char* key, double& field) {
        if (j.contains(key)) field = j.at(key).get<double>();
    };
    auto range = [&](const char* key, Range& field) {
        if (j.contains(key)) field = range_from(j.at(key));
    };
    prob("flip_vertical_p", s.flip_vertical_p);
    prob("flip_horizontal_p", s.flip_horizontal_p);
    prob("rotate_p", s.rotate_p);
    range("rotate_range_deg", s.rotate_range_deg);
    prob("noise_p", s.noise_p);
    range("noise_std_range", s.noise_std_range);
    prob("multiply_p", s.multiply_p);
    range("multiply_range", s.multiply_range);
    prob("crop_p", s.crop_p);
    range("crop_fraction_range", s.crop_fraction_range);
    prob("elastic_p", s.elastic_p);
    range("elastic_alpha_range", s.elastic_alpha_range);
    prob("elastic_sigma", s.elastic_sigma);
    validate(s);
}

json to_json(const ConcreteAugmentation& aug) {
    json ops = json::array();
    for (const auto& op : aug.ops) {
        ops.push_back(std::visit(
            overloaded{
                [](const FlipOp& o) {
                    return json{{"op", o.axis == FlipAxis::vertical ? "flip_vertical" : "flip_horizontal"}};
                },
                [](const RotateOp& o) { return json{{"op", "rotate"}, {"angle_deg", o.angle_deg}}; },
                [](const NoiseOp& o) { return json{{"op", "noise"}, {"std", o.std_dev}, {"seed", o.seed}}; },
                [](const MultiplyOp& o) { return json{{"op", "multiply"}, {"factor", o.factor}}; },
                [](const CropOp& o) {
                    return json{{"op", "crop"},
                                {"fractions",
                                 {o.fractions.top, o.fractions.bottom, o.fractions.left, o.fractions.right}}};
                },
                [](const ElasticOp& o) {
                    return json{{"op", "elastic"}, {"alpha", o.alpha}, {"sigma", o.sigma}, {"seed", o.seed}};
                },
            },
            op));
    }
    return ops;
}

ConcreteAugmentation sample_pipeline(const AugmentSpec& spec, Rng& rng) {
    validate(spec);
    ConcreteAugmentation aug;
    auto draw = [&](const Range& r) { return rng.uniform(r.lo, r.hi); };

    if (rng.bernoulli(spec.flip_vertical_p)) aug.ops.emplace_back(FlipOp{FlipAxis::vertical});
    if (rng.bernoulli(spec.flip_horizontal_p)) aug.ops.emplace_back(FlipOp{FlipAxis::horizontal});
    if (rng.bernoulli(spec.rotate_p)) aug.ops.emplace_back(RotateOp{draw(spec.rotate_range_deg)});
    if (rng.bernoulli(spec.noise_p)) {
        const double std_dev = draw(spec.noise_std_range);
        aug.ops.emplace_back(NoiseOp{std_dev, rng.next_u64()});
    }
    if (rng.bernoulli(spec.multiply_p)) aug.ops.emplace_back(MultiplyOp{draw(spec.multiply_range)});
    if (rng.bernoulli(spec.crop_p)) {
        CropFractions f;
        f.top = draw(spec.crop_fraction_range);
        f.bottom = draw(spec.crop_fraction_range);
        f.left = draw(spec.crop_fraction_range);
        f.right = draw(spec.crop_fraction_range);
        aug.ops.emplace_back(CropOp{f});
    }
    if (rng.bernoulli(spec.elastic_p)) {
        const double alpha = draw(spec.elastic_alpha_range);
        aug.ops.emplace_back(ElasticOp{alpha, spec.elastic_sigma, rng.next_u64()});
    }
    return aug;
}

Tensor apply(const ConcreteAugmentation& aug, const Tensor& img) {
    Tensor current = img;
    for (const auto& op : aug.ops) {
        current = std::visit(overloaded{
                                 [&](const FlipOp& o) { return flip(current, o.axis); },
                                 [&](const RotateOp& o) { return rotate(current, o.angle_deg); },
                                 [&](const NoiseOp& o) {
                                     Rng rng(o.seed, 0);
                                     return add_gaussian_noise(current, o.std_dev, rng);
                                 },
                                 [&](const MultiplyOp& o) { return multiply(current, o.factor); },
                                 [&](const CropOp& o) { return crop_resize(current, o.fractions); },
                                 [&](const ElasticOp& o) {
                                     Rng rng(o.seed, 0);
                                     return elastic(current, o.alpha, o.sigma, rng);
                                 },
                             },
                             op);
    }
    return current;
}

dataset::StandardImage apply(const ConcreteAugmentation& aug, const dataset::StandardImage& img) {
    return dataset::StandardImage(apply(aug, img.tensor()));
}

}  // namespace herb::augment
