#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aspire/core.hpp"
#include "aspire/model.hpp"

namespace aspire {

enum class Strategy { ERM, GroupDRO, JTT, SUBG, DFR };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

struct TrainConfig {
    Strategy strategy = Strategy::ERM;
    int epochs = 100;
    double learning_rate = 1e-3;
    double weight_decay = 1e-4;
    std::uint64_t seed = 0;
    // Strategy and model knobs, e.g. {"jtt_lambda": 20, "jtt_stage1_epochs": 0,
    // "dro_eta": 0.01, "dfr_stage2_epochs": 0, "batch_size": 32,
    // "conv1": 8, "conv2": 16}. Zero means "derive the default".
    nlohmann::json strategy_params = nlohmann::json::object();

    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
    std::string hash() const;
};

struct TrainReport {
    std::vector<double> epoch_losses;
    // GroupDRO: one row per weight update, ordered like group_order.
    std::vector<std::string> group_order;
    std::vector<std::vector<double>> group_weight_history;
    std::vector<std::string> jtt_error_ids;
    std::vector<std::string> subg_subset_ids;
};

struct Prediction {
    std::string label;
    std::vector<double> scores;  // softmax over classes, dataset class order
};

class TrainedClassifier {
  public:
    TrainedClassifier(std::shared_ptr<ConvNet> net, std::vector<std::string> classes,
                      std::string config_hash, std::string dataset_hash, TrainReport report);

    const std::vector<std::string>& classes() const { return classes_; }
    const std::string& config_hash() const { return config_hash_; }
    const std::string& dataset_hash() const { return dataset_hash_; }
    const TrainReport& report() const { return report_; }

    Prediction predict_one(const LabeledImage& image) const;
    std::map<std::string, Prediction> predict(const std::vector<const LabeledImage*>& images) const;
    std::map<std::string, Prediction> predict(const GroupedDataset& dataset) const;
    std::map<std::string, std::string> predict_labels(const GroupedDataset& dataset) const;

    std::map<std::string, std::vector<float>> named_params() const { return net_->named_params(); }

    /// Versioned checkpoint: magic + JSON header (classes, architecture,
    /// provenance hashes) + raw float32 tensors in fixed order.
    void save(const std::filesystem::path& path) const;
    static TrainedClassifier load(const std::filesystem::path& path);

  private:
    std::shared_ptr<ConvNet> net_;
    std::vector<std::string> classes_;
    std::string config_hash_;
    std::string dataset_hash_;
    TrainReport report_;
};

TrainedClassifier train(const GroupedDataset& dataset, const TrainConfig& cfg);

/// Trains with augmentations inserted where the strategy expects them:
/// ERM / GroupDRO / SUBG add them to the initial training set, JTT and DFR
/// add them to the second-stage set only.
TrainedClassifier train_with_aug(const GroupedDataset& dataset, const GroupedDataset* aug,
                                 const TrainConfig& cfg);

}  // namespace aspire
