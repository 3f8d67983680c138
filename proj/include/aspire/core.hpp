#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "aspire/image.hpp"

namespace aspire {

enum class Origin { train, holdout, edited, generated };

std::string origin_name(Origin o);
Origin origin_from_name(const std::string& s);

/// One labelled image. `id` is the SHA-256 of the raw pixel bytes (row-major,
/// channel-last) followed by the UTF-8 label, so identical pixels+label always
/// hash to the same id regardless of group or origin.
struct LabeledImage {
    std::string id;
    Image pixels;
    std::string label;
    std::optional<std::string> group;
    Origin origin = Origin::train;

    static std::string content_id(const Image& pixels, const std::string& label);
    static LabeledImage make(Image pixels, std::string label,
                             std::optional<std::string> group = std::nullopt,
                             Origin origin = Origin::train);
};

struct GroupedDataset {
    std::string name;
    std::vector<std::string> classes;
    int height = 0, width = 0, channels = 0;
    std::vector<LabeledImage> items;
    /// class -> valid group identifiers; present iff the dataset is grouped.
    std::optional<std::map<std::string, std::vector<std::string>>> group_schema;

    bool has_group_labels() const { return group_schema.has_value(); }
    bool has_class(const std::string& c) const;
    const LabeledImage* find(const std::string& id) const;

    /// Enforces the type invariants: labels in class set, unique ids, pixel
    /// dims match the declared size, groups valid under the schema.
    void validate() const;

    /// Distinct labels actually present, in class-set order.
    std::vector<std::string> class_counts_keys() const;
    std::map<std::string, int> per_class_counts() const;
    std::map<std::string, int> per_group_counts() const;
};

struct Metrics {
    double average_accuracy = 0.0;
    std::map<std::string, double> per_group_accuracy;
    double worst_group_accuracy = 0.0;

    nlohmann::json to_json() const;
    static Metrics from_json(const nlohmann::json& j);
};

/// Per-group accuracies over a group-labelled dataset; worst-group is the
/// minimum, average is overall correct/total (not group-reweighted).
Metrics evaluate(const std::map<std::string, std::string>& predictions,
                 const GroupedDataset& dataset);

/// Same contract for datasets without group labels; per-group accuracy is
/// keyed by class.
Metrics evaluate_ungrouped(const std::map<std::string, std::string>& predictions,
                           const GroupedDataset& dataset);

/// Concatenates items (duplicate ids keep the first occurrence, with a
/// warning to stderr); class sets and image dims must match, group schemas
/// are unioned.
GroupedDataset merge(const GroupedDataset& a, const GroupedDataset& b);

/// Manifest + PNG store. `dir/manifest.json` lists
/// {name, classes, image_size, items:[{id,file,label,group?,origin}]};
/// pixels live as lossless PNGs under `dir/images/`. Writing the same
/// dataset twice produces byte-identical files.
void save_dataset(const GroupedDataset& ds, const std::filesystem::path& dir);
GroupedDataset load_dataset(const std::filesystem::path& dir);

/// Order-insensitive content hash of (classes, item ids + labels + groups).
std::string dataset_hash(const GroupedDataset& ds);

}  // namespace aspire
