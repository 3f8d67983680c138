#include "aspire/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <set>

#include "aspire/common.hpp"

namespace aspire {

using nlohmann::json;

std::string strategy_name(Strategy s) {
    switch (s) {
        case Strategy::ERM: return "erm";
        case Strategy::GroupDRO: return "group_dro";
        case Strategy::JTT: return "jtt";
        case Strategy::SUBG: return "subg";
        case Strategy::DFR: return "dfr";
    }
    return "erm";
}

Strategy strategy_from_name(const std::string& name) {
    std::string n = name;
    std::transform(n.begin(), n.end(), n.begin(), ::tolower);
    if (n == "erm") return Strategy::ERM;
    if (n == "group_dro" || n == "groupdro" || n == "dro") return Strategy::GroupDRO;
    if (n == "jtt") return Strategy::JTT;
    if (n == "subg") return Strategy::SUBG;
    if (n == "dfr") return Strategy::DFR;
    throw ConfigError("unknown strategy: " + name);
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
}

json TrainConfig::to_json() const {
    return json{{"strategy", strategy_name(strategy)},
                {"epochs", epochs},
                {"learning_rate", learning_rate},
                {"weight_decay", weight_decay},
                {"seed", seed},
                {"strategy_params", strategy_params}};
}

TrainConfig TrainConfig::from_json(const json& j) {
    TrainConfig cfg;
    if (j.contains("strategy")) cfg.strategy = strategy_from_name(j.at("strategy").get<std::string>());
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("strategy_params")) cfg.strategy_params = j.at("strategy_params");
    return cfg;
}

std::string TrainConfig::hash() const {
    return sha256_hex(to_json().dump());
}

namespace {

struct Sample {
    const LabeledImage* item;
    std::vector<float> pixels;
    int label_index;
    std::string group;
    float upweight = 1.0f;  // JTT
};

struct Corpus {
    std::vector<Sample> samples;
    std::vector<std::string> classes;
    std::vector<std::string> groups;  // sorted distinct group names
    NetConfig net_cfg;
};

int param_int(const TrainConfig& cfg, const char* key, int fallback) {
    int v = cfg.strategy_params.value(key, 0);
    return v > 0 ? v : fallback;
}

double param_double(const TrainConfig& cfg, const char* key, double fallback) {
    double v = cfg.strategy_params.value(key, 0.0);
    return v > 0.0 ? v : fallback;
}

Corpus build_corpus(const std::vector<const GroupedDataset*>& parts, const TrainConfig& cfg,
                    bool need_groups) {
    const GroupedDataset& head = *parts.front();
    if (head.items.empty()) throw DataError("cannot train on an empty dataset");

    Corpus corpus;
    corpus.classes = head.classes;
    corpus.net_cfg.height = head.height;
    corpus.net_cfg.width = head.width;
    corpus.net_cfg.channels = head.channels;
    corpus.net_cfg.conv1 = param_int(cfg, "conv1", 8);
    corpus.net_cfg.conv2 = param_int(cfg, "conv2", 16);
    corpus.net_cfg.n_classes = static_cast<int>(head.classes.size());

    std::set<std::string> group_names;
    for (const GroupedDataset* part : parts) {
        if (part->classes != head.classes)
            throw DataError("training parts have different class sets");
        for (const auto& item : part->items) {
            Sample s;
            s.item = &item;
            s.pixels = normalize_image(item.pixels.data.data(), item.pixels.data.size());
            s.label_index = static_cast<int>(
                std::find(head.classes.begin(), head.classes.end(), item.label) -
                head.classes.begin());
            if (need_groups) {
                if (!item.group)
                    throw ConfigError("strategy '" + strategy_name(cfg.strategy) +
                                      "' requires group labels (item " + item.id +
                                      " has none)");
                s.group = *item.group;
                group_names.insert(s.group);
            } else if (item.group) {
                s.group = *item.group;
                group_names.insert(s.group);
            }
            corpus.samples.push_back(std::move(s));
        }
    }
    corpus.groups.assign(group_names.begin(), group_names.end());
    return corpus;
}

std::vector<std::size_t> epoch_order(std::size_t n, Rng& rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    return order;
}

void check_finite(double loss, int epoch) {
    if (!std::isfinite(loss))
        throw DataError("NaN loss at epoch " + std::to_string(epoch));
}

// Plain SGD epochs over `active` sample indices; per-sample weights come
// from Sample::upweight, normalized within each batch.
void run_erm_epochs(ConvNet& net, const Corpus& corpus, const std::vector<std::size_t>& active,
                    const TrainConfig& cfg, int epochs, Rng& rng, TrainReport& report) {
    const int batch_size = param_int(cfg, "batch_size", 32);
    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::vector<std::size_t> order(active);
        rng.shuffle(order);
        double epoch_loss = 0.0;
        double weight_total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t stop = std::min(order.size(), start + batch_size);
            std::vector<const float*> images;
            std::vector<int> labels;
            std::vector<float> weights;
            float wsum = 0.0f;
            for (std::size_t i = start; i < stop; ++i) {
                const Sample& s = corpus.samples[order[i]];
                images.push_back(s.pixels.data());
                labels.push_back(s.label_index);
                weights.push_back(s.upweight);
                wsum += s.upweight;
            }
            for (float& w : weights) w /= wsum;
            epoch_loss += net.train_batch(images, labels, weights,
                                          static_cast<float>(cfg.learning_rate),
                                          static_cast<float>(cfg.weight_decay)) *
                          wsum;
            weight_total += wsum;
        }
        const double mean_loss = epoch_loss / std::max(1.0, weight_total);
        check_finite(mean_loss, epoch);
        report.epoch_losses.push_back(mean_loss);
    }
}

void run_group_dro(ConvNet& net, const Corpus& corpus, const TrainConfig& cfg, Rng& rng,
                   TrainReport& report) {
    const int batch_size = param_int(cfg, "batch_size", 32);
    const double eta = param_double(cfg, "dro_eta", 0.01);
    const std::size_t n_groups = corpus.groups.size();
    std::map<std::string, std::size_t> group_index;
    for (std::size_t g = 0; g < n_groups; ++g) group_index[corpus.groups[g]] = g;
    report.group_order = corpus.groups;

    std::vector<double> q(n_groups, 1.0 / static_cast<double>(n_groups));
    std::vector<std::size_t> all(corpus.samples.size());
    std::iota(all.begin(), all.end(), std::size_t{0});

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<std::size_t> order(all);
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t stop = std::min(order.size(), start + batch_size);
            std::vector<const float*> images;
            std::vector<int> labels;
            std::vector<std::size_t> groups;
            for (std::size_t i = start; i < stop; ++i) {
                const Sample& s = corpus.samples[order[i]];
                images.push_back(s.pixels.data());
                labels.push_back(s.label_index);
                groups.push_back(group_index.at(s.group));
            }

            // Exponentiated-gradient ascent on group weights from the current
            // batch's per-group mean losses, then a descent step on the
            // reweighted loss.
            std::vector<double> losses = net.sample_losses(images, labels);
            std::vector<double> group_loss(n_groups, 0.0);
            std::vector<int> group_count(n_groups, 0);
            for (std::size_t i = 0; i < losses.size(); ++i) {
                group_loss[groups[i]] += losses[i];
                group_count[groups[i]]++;
            }
            double z = 0.0;
            for (std::size_t g = 0; g < n_groups; ++g) {
                if (group_count[g] > 0) group_loss[g] /= group_count[g];
                q[g] *= std::exp(eta * group_loss[g]);
                z += q[g];
            }
            for (double& v : q) v /= z;
            report.group_weight_history.push_back(q);

            std::vector<float> weights(images.size(), 0.0f);
            for (std::size_t i = 0; i < weights.size(); ++i)
                weights[i] = static_cast<float>(q[groups[i]] / group_count[groups[i]]);
            double batch_loss = net.train_batch(images, labels, weights,
                                                static_cast<float>(cfg.learning_rate),
                                                static_cast<float>(cfg.weight_decay));
            epoch_loss += batch_loss;
            ++seen;
        }
        const double mean_loss = epoch_loss / std::max<std::size_t>(1, seen);
        check_finite(mean_loss, epoch);
        report.epoch_losses.push_back(mean_loss);
    }
}

// Equal-count subsample: min group size from each group, seed-deterministic.
std::vector<std::size_t> balanced_subset(const Corpus& corpus,
                                         const std::vector<std::size_t>& pool, Rng& rng) {
    std::map<std::string, std::vector<std::size_t>> by_group;
    for (std::size_t idx : pool) by_group[corpus.samples[idx].group].push_back(idx);
    std::size_t smallest = corpus.samples.size();
    for (const auto& [g, members] : by_group) smallest = std::min(smallest, members.size());

    std::vector<std::size_t> subset;
    for (auto& [g, members] : by_group) {
        rng.shuffle(members);
        subset.insert(subset.end(), members.begin(), members.begin() + smallest);
    }
    std::sort(subset.begin(), subset.end());
    return subset;
}

}  // namespace

TrainedClassifier train(const GroupedDataset& dataset, const TrainConfig& cfg) {
    return train_with_aug(dataset, nullptr, cfg);
}

TrainedClassifier train_with_aug(const GroupedDataset& dataset, const GroupedDataset* aug,
                                 const TrainConfig& cfg) {
    cfg.validate();
    const bool need_groups = cfg.strategy == Strategy::GroupDRO ||
                             cfg.strategy == Strategy::SUBG || cfg.strategy == Strategy::DFR;
    const bool aug_in_stage2 = cfg.strategy == Strategy::JTT || cfg.strategy == Strategy::DFR;

    std::vector<const GroupedDataset*> parts{&dataset};
    if (aug) parts.push_back(aug);
    Corpus corpus = build_corpus(parts, cfg, need_groups);

    // Index ranges: base samples first, then augmentation samples.
    const std::size_t n_base = dataset.items.size();
    std::vector<std::size_t> base_indices(n_base);
    std::iota(base_indices.begin(), base_indices.end(), std::size_t{0});
    std::vector<std::size_t> all_indices(corpus.samples.size());
    std::iota(all_indices.begin(), all_indices.end(), std::size_t{0});
    std::vector<std::size_t> initial_indices =
        (aug && !aug_in_stage2) ? all_indices : base_indices;

    auto net = std::make_shared<ConvNet>(corpus.net_cfg, cfg.seed);
    Rng rng(cfg.seed ^ fnv1a64("train-order"));
    TrainReport report;

    switch (cfg.strategy) {
        case Strategy::ERM:
            run_erm_epochs(*net, corpus, initial_indices, cfg, cfg.epochs, rng, report);
            break;

        case Strategy::GroupDRO:
            run_group_dro(*net, corpus, cfg, rng, report);
            break;

        case Strategy::JTT: {
            // Stage 1: a short plain-ERM run on the base set collects the
            // error set (reproducible through the public train() surface).
            TrainConfig stage1_cfg = cfg;
            stage1_cfg.strategy = Strategy::ERM;
            stage1_cfg.epochs = param_int(cfg, "jtt_stage1_epochs", std::max(1, cfg.epochs / 10));
            stage1_cfg.seed = cfg.seed ^ fnv1a64("jtt-stage1");
            TrainedClassifier stage1 = train(dataset, stage1_cfg);

            const double lambda = param_double(cfg, "jtt_lambda", 20.0);
            for (std::size_t idx : base_indices) {
                Sample& s = corpus.samples[idx];
                if (stage1.predict_one(*s.item).label != s.item->label) {
                    s.upweight = static_cast<float>(lambda);
                    report.jtt_error_ids.push_back(s.item->id);
                }
            }
            std::sort(report.jtt_error_ids.begin(), report.jtt_error_ids.end());

            // Stage 2: full run from scratch, errors upweighted,
            // augmentations included.
            run_erm_epochs(*net, corpus, all_indices, cfg, cfg.epochs, rng, report);
            break;
        }

        case Strategy::SUBG: {
            std::vector<std::size_t> subset = balanced_subset(corpus, initial_indices, rng);
            for (std::size_t idx : subset) report.subg_subset_ids.push_back(corpus.samples[idx].item->id);
            std::sort(report.subg_subset_ids.begin(), report.subg_subset_ids.end());
            run_erm_epochs(*net, corpus, subset, cfg, cfg.epochs, rng, report);
            break;
        }

        case Strategy::DFR: {
            // Stage 1: ERM on the base set; stage 2: re-drawn linear head
            // trained on a group-balanced subset of base + augmentations.
            run_erm_epochs(*net, corpus, base_indices, cfg, cfg.epochs, rng, report);
            std::vector<std::size_t> balanced = balanced_subset(corpus, all_indices, rng);
            const int stage2_epochs = param_int(cfg, "dfr_stage2_epochs",
                                                std::max(1, cfg.epochs / 2));
            net->reinit_head(cfg.seed ^ fnv1a64("dfr-head"));
            net->set_features_frozen(true);
            run_erm_epochs(*net, corpus, balanced, cfg, stage2_epochs, rng, report);
            net->set_features_frozen(false);
            break;
        }
    }

    if (report.epoch_losses.empty()) throw DataError("training produced no epochs");

    const std::string ds_hash =
        aug ? sha256_hex(dataset_hash(dataset) + dataset_hash(*aug)) : dataset_hash(dataset);
    return TrainedClassifier(net, corpus.classes, cfg.hash(), ds_hash, std::move(report));
}

TrainedClassifier::TrainedClassifier(std::shared_ptr<ConvNet> net,
                                     std::vector<std::string> classes, std::string config_hash,
                                     std::string dataset_hash, TrainReport report)
    : net_(std::move(net)),
      classes_(std::move(classes)),
      config_hash_(std::move(config_hash)),
      dataset_hash_(std::move(dataset_hash)),
      report_(std::move(report)) {}

Prediction TrainedClassifier::predict_one(const LabeledImage& image) const {
    const NetConfig& nc = net_->config();
    if (image.pixels.height != nc.height || image.pixels.width != nc.width ||
        image.pixels.channels != nc.channels)
        throw DataError("image " + image.id + " dimensions do not match the trained model");

    std::vector<float> buf = normalize_image(image.pixels.data.data(), image.pixels.data.size());
    Eigen::VectorXf probs = net_->predict_proba(buf.data());
    int argmax = 0;
    probs.maxCoeff(&argmax);

    Prediction p;
    p.label = classes_[argmax];
    p.scores.assign(probs.data(), probs.data() + probs.size());
    return p;
}

std::map<std::string, Prediction> TrainedClassifier::predict(
    const std::vector<const LabeledImage*>& images) const {
    std::map<std::string, Prediction> out;
    for (const LabeledImage* img : images) out[img->id] = predict_one(*img);
    return out;
}

std::map<std::string, Prediction> TrainedClassifier::predict(const GroupedDataset& dataset) const {
    std::vector<const LabeledImage*> ptrs;
    ptrs.reserve(dataset.items.size());
    for (const auto& item : dataset.items) ptrs.push_back(&item);
    return predict(ptrs);
}

std::map<std::string, std::string> TrainedClassifier::predict_labels(
    const GroupedDataset& dataset) const {
    std::map<std::string, std::string> out;
    for (const auto& [id, pred] : predict(dataset)) out[id] = pred.label;
    return out;
}

namespace {
constexpr char kCheckpointMagic[] = "ASPIREMODEL1\n";
}

void TrainedClassifier::save(const std::filesystem::path& path) const {
    const NetConfig& nc = net_->config();
    json header{{"classes", classes_},
                {"net", {{"height", nc.height},
                          {"width", nc.width},
                          {"channels", nc.channels},
                          {"conv1", nc.conv1},
                          {"conv2", nc.conv2},
                          {"n_classes", nc.n_classes}}},
                {"config_hash", config_hash_},
                {"dataset_hash", dataset_hash_}};
    std::string header_str = header.dump();

    std::string bytes(kCheckpointMagic);
    std::uint32_t hlen = static_cast<std::uint32_t>(header_str.size());
    bytes.append(reinterpret_cast<const char*>(&hlen), 4);
    bytes += header_str;
    for (const auto& [name, values] : net_->named_params()) {
        bytes.append(reinterpret_cast<const char*>(values.data()),
                     values.size() * sizeof(float));
    }
    atomic_write(path, bytes);
}

TrainedClassifier TrainedClassifier::load(const std::filesystem::path& path) {
    std::string bytes = read_file(path);
    const std::size_t magic_len = std::strlen(kCheckpointMagic);
    if (bytes.size() < magic_len + 4 || bytes.compare(0, magic_len, kCheckpointMagic) != 0)
        throw DataError("not a model checkpoint: " + path.string());

    std::uint32_t hlen = 0;
    std::memcpy(&hlen, bytes.data() + magic_len, 4);
    json header = json::parse(bytes.substr(magic_len + 4, hlen));

    NetConfig nc;
    nc.height = header.at("net").at("height").get<int>();
    nc.width = header.at("net").at("width").get<int>();
    nc.channels = header.at("net").at("channels").get<int>();
    nc.conv1 = header.at("net").at("conv1").get<int>();
    nc.conv2 = header.at("net").at("conv2").get<int>();
    nc.n_classes = header.at("net").at("n_classes").get<int>();

    auto net = std::make_shared<ConvNet>(nc, 0);
    std::map<std::string, std::vector<float>> params = net->named_params();
    std::size_t offset = magic_len + 4 + hlen;
    for (auto& [name, values] : params) {
        const std::size_t nbytes = values.size() * sizeof(float);
        if (offset + nbytes > bytes.size())
            throw DataError("truncated checkpoint: " + path.string());
        std::memcpy(values.data(), bytes.data() + offset, nbytes);
        offset += nbytes;
    }
    net->set_params(params);

    return TrainedClassifier(net, header.at("classes").get<std::vector<std::string>>(),
                             header.at("config_hash").get<std::string>(),
                             header.at("dataset_hash").get<std::string>(), TrainReport{});
}

}  // namespace aspire
