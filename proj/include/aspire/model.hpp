#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace aspire {

struct NetConfig {
    int height = 32, width = 32, channels = 3;
    int conv1 = 8, conv2 = 16;
    int n_classes = 2;

    int pooled_h() const { return height / 4; }
    int pooled_w() const { return width / 4; }
    int feature_dim() const { return conv2 * pooled_h() * pooled_w(); }
};

/// Two 3x3 conv blocks (ReLU + 2x2 max-pool) and a linear head. Single
/// threaded, seed-deterministic, trained with plain SGD + weight decay.
/// Inputs are HWC float buffers already normalized to [-0.5, 0.5].
class ConvNet {
  public:
    ConvNet(const NetConfig& cfg, std::uint64_t seed);

    const NetConfig& config() const { return cfg_; }

    Eigen::VectorXf predict_proba(const float* image) const;

    /// One SGD step over the batch. `weights` scale each sample's gradient
    /// and are used as-is (callers normalize). Returns sum_i w_i * CE_i.
    double train_batch(const std::vector<const float*>& images, const std::vector<int>& labels,
                       const std::vector<float>& weights, float lr, float weight_decay);

    /// Forward-only per-sample cross-entropies (for loss-aware strategies).
    std::vector<double> sample_losses(const std::vector<const float*>& images,
                                      const std::vector<int>& labels) const;

    /// When frozen, train_batch updates only the linear head.
    void set_features_frozen(bool frozen) { features_frozen_ = frozen; }

    /// Re-draw the linear head from the init distribution (used by
    /// last-layer retraining).
    void reinit_head(std::uint64_t seed);

    /// Fixed-order named tensors, for checkpoints and byte-level diffing.
    std::map<std::string, std::vector<float>> named_params() const;
    void set_params(const std::map<std::string, std::vector<float>>& params);

  private:
    struct Cache;
    void forward(const float* image, Cache& cache) const;

    NetConfig cfg_;
    bool features_frozen_ = false;

    Eigen::MatrixXf w1_, w2_, wfc_;  // conv kernels as (C_out, C_in*9), head (K, D)
    Eigen::VectorXf b1_, b2_, bfc_;
};

/// HWC bytes -> normalized float buffer for ConvNet.
std::vector<float> normalize_image(const std::uint8_t* data, std::size_t n);

}  // namespace aspire
