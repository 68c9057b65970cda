#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "herb/common/rng.hpp"
#include "herb/common/tensor.hpp"
#include "herb/nnrt/forward.hpp"

namespace herb::train {

struct TrainConfig {
    double learning_rate = 0.01;
    double momentum = 0.9;
    double l2_lambda = 1e-4;
    double dropout_p = 0.2;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 100;
    std::size_t patience = 10;
    std::uint64_t seed = 0;
    // Train on per-feature z-scores (statistics from the training split) and
    // fold the affine map back into the returned head.
    bool standardize_features = true;

    bool operator==(const TrainConfig&) const = default;
};

// Throws std::invalid_argument naming the offending field.
void validate(const TrainConfig& config);
nlohmann::json to_json(const TrainConfig& config);
// Missing fields keep their defaults.
TrainConfig train_config_from_json(const nlohmann::json& doc);

// Dense softmax head: logits = features * W^T + b, W is classes x dim row-major.
struct HeadParams {
    std::size_t classes = 0;
    std::size_t dim = 0;
    std::vector<double> weight;
    std::vector<double> bias;

    static HeadParams zeros(std::size_t classes, std::size_t dim);
    double& w(std::size_t c, std::size_t d) { return weight[c * dim + d]; }
    double w(std::size_t c, std::size_t d) const { return weight[c * dim + d]; }
    double squared_norm() const;

    bool operator==(const HeadParams&) const = default;
};

nlohmann::json to_json(const HeadParams& head);
HeadParams head_from_json(const nlohmann::json& doc);

// Copies the head into / out of the graph's final dense layer.
void install_head(const nnrt::ModelGraph& graph, nnrt::WeightStore& weights, const HeadParams& head);
HeadParams head_from_weights(const nnrt::ModelGraph& graph, const nnrt::WeightStore& weights);

inline constexpr double kLogClamp = 1e-12;

// -(1/N) sum log max(p[n][y_n], 1e-12) + l2_lambda * ||W||_F^2.
// Throws std::invalid_argument if a row does not sum to 1 within 1e-6 or a label is >= C.
double cross_entropy_loss(const Tensor& probs, std::span<const std::size_t> labels, const HeadParams& head,
                          double l2_lambda);
double cross_entropy_loss(const Tensor& probs, std::span<const std::size_t> labels);

// Softmax probabilities of the head on an N x D feature matrix, computed in double.
std::vector<double> head_probabilities(const Tensor& features, const HeadParams& head);
Tensor head_predict(const Tensor& features, const HeadParams& head);

struct HeadGradients {
    std::vector<double> d_weight;  // classes x dim
    std::vector<double> d_bias;
    double loss = 0.0;
};

// Exact gradient of the regularized loss for the given features (no dropout).
HeadGradients head_gradients(const Tensor& features, std::span<const std::size_t> labels, const HeadParams& head,
                             double l2_lambda);

// Train mode draws an inverted-dropout keep mask from `rng` (one Bernoulli per
// feature, row-major) and differentiates through the masked features.
HeadGradients head_gradients(const Tensor& features, std::span<const std::size_t> labels, const HeadParams& head,
                             const TrainConfig& config, nnrt::Mode mode, Rng& rng);

// Inverted dropout: kept entries are scaled by 1/(1-p).
Tensor apply_dropout(const Tensor& features, double p, Rng& rng);

// train_loss includes the L2 term; val_loss is the plain cross-entropy.
struct TrainReport {
    std::vector<double> train_loss;
    std::vector<double> train_accuracy;
    std::vector<double> val_loss;
    std::vector<double> val_accuracy;
    std::size_t best_epoch = 0;  // 1-based; 0 means no epoch ran
    bool stopped_early = false;

    std::size_t epochs() const { return train_loss.size(); }
    bool operator==(const TrainReport&) const = default;
};

nlohmann::json to_json(const TrainReport& report);

struct TrainResult {
    HeadParams head;
    TrainReport report;
};

// Mini-batch SGD with momentum from a zero head. Epoch e shuffles and draws
// dropout masks from Rng(seed, e). Stops after `patience` epochs without a
// validation-loss improvement and returns the best epoch's parameters.
// Throws std::runtime_error if the loss becomes non-finite.
TrainResult train_head(const Tensor& train_features, std::span<const std::size_t> train_labels,
                       const Tensor& val_features, std::span<const std::size_t> val_labels, std::size_t num_classes,
                       const TrainConfig& config);

double accuracy(const Tensor& probs, std::span<const std::size_t> labels);

}  // namespace herb::train
