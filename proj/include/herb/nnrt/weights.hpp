#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "herb/common/tensor.hpp"
#include "herb/nnrt/graph.hpp"

namespace herb::nnrt {

// layer name -> parameter name -> tensor.
// conv2d: kernel (O x I x k x k), bias; batchnorm: gamma, beta, mean, variance;
// dense: weight (K x D), bias.
class WeightStore {
public:
    using ParamMap = std::map<std::string, Tensor, std::less<>>;

    void set(const std::string& layer, const std::string& param, Tensor value);
    // Throws std::out_of_range naming the layer and parameter.
    const Tensor& get(std::string_view layer, std::string_view param) const;
    const Tensor* find(std::string_view layer, std::string_view param) const;
    bool contains(std::string_view layer, std::string_view param) const { return find(layer, param) != nullptr; }

    const std::map<std::string, ParamMap, std::less<>>& layers() const { return layers_; }
    std::size_t parameter_count() const;

    bool operator==(const WeightStore&) const = default;

private:
    std::map<std::string, ParamMap, std::less<>> layers_;
};

// Throws std::invalid_argument for a missing or mis-shaped parameter, naming the layer.
void check_weights(const ModelGraph& graph, const WeightStore& weights);

}  // namespace herb::nnrt
