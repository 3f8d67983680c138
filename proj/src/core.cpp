#include "aspire/core.hpp"

#include <algorithm>
#include <iostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "aspire/common.hpp"

namespace aspire {

using nlohmann::json;

std::string origin_name(Origin o) {
    switch (o) {
        case Origin::train: return "train";
        case Origin::holdout: return "holdout";
        case Origin::edited: return "edited";
        case Origin::generated: return "generated";
    }
    return "train";
}

Origin origin_from_name(const std::string& s) {
    if (s == "train") return Origin::train;
    if (s == "holdout") return Origin::holdout;
    if (s == "edited") return Origin::edited;
    if (s == "generated") return Origin::generated;
    throw DataError("unknown origin: " + s);
}

std::string LabeledImage::content_id(const Image& pixels, const std::string& label) {
    std::string bytes(reinterpret_cast<const char*>(pixels.data.data()), pixels.data.size());
    bytes += label;
    return sha256_hex(bytes);
}

LabeledImage LabeledImage::make(Image pixels, std::string label,
                                std::optional<std::string> group, Origin origin) {
    LabeledImage img;
    img.id = content_id(pixels, label);
    img.pixels = std::move(pixels);
    img.label = std::move(label);
    img.group = std::move(group);
    img.origin = origin;
    return img;
}

bool GroupedDataset::has_class(const std::string& c) const {
    return std::find(classes.begin(), classes.end(), c) != classes.end();
}

const LabeledImage* GroupedDataset::find(const std::string& id) const {
    for (const auto& item : items)
        if (item.id == id) return &item;
    return nullptr;
}

void GroupedDataset::validate() const {
    std::set<std::string> seen;
    for (const auto& item : items) {
        if (!has_class(item.label))
            throw DataError("item " + item.id + " has label '" + item.label +
                            "' outside the class set of dataset '" + name + "'");
        if (!seen.insert(item.id).second)
            throw DataError("duplicate item id " + item.id + " in dataset '" + name + "'");
        if (item.pixels.height != height || item.pixels.width != width ||
            item.pixels.channels != channels)
            throw DataError("item " + item.id + " dimensions do not match dataset '" + name + "'");
        if (group_schema) {
            if (!item.group)
                throw DataError("item " + item.id + " missing group label in grouped dataset '" +
                                name + "'");
            auto it = group_schema->find(item.label);
            if (it == group_schema->end() ||
                std::find(it->second.begin(), it->second.end(), *item.group) == it->second.end())
                throw DataError("item " + item.id + " group '" + *item.group +
                                "' not valid for class '" + item.label + "'");
        }
    }
}

std::map<std::string, int> GroupedDataset::per_class_counts() const {
    std::map<std::string, int> counts;
    for (const auto& item : items) counts[item.label]++;
    return counts;
}

std::map<std::string, int> GroupedDataset::per_group_counts() const {
    std::map<std::string, int> counts;
    for (const auto& item : items)
        if (item.group) counts[*item.group]++;
    return counts;
}

json Metrics::to_json() const {
    json per = json::object();
    for (const auto& [g, acc] : per_group_accuracy) per[g] = acc;
    return json{{"average_accuracy", average_accuracy},
                {"per_group_accuracy", per},
                {"worst_group_accuracy", worst_group_accuracy}};
}

Metrics Metrics::from_json(const json& j) {
    Metrics m;
    m.average_accuracy = j.at("average_accuracy").get<double>();
    for (const auto& [g, acc] : j.at("per_group_accuracy").items())
        m.per_group_accuracy[g] = acc.get<double>();
    m.worst_group_accuracy = j.at("worst_group_accuracy").get<double>();
    return m;
}

namespace {

Metrics tally(const std::map<std::string, std::string>& predictions, const GroupedDataset& dataset,
              bool by_group) {
    std::map<std::string, int> correct, total;
    int all_correct = 0;
    for (const auto& item : dataset.items) {
        auto it = predictions.find(item.id);
        if (it == predictions.end())
            throw DataError("missing prediction for item " + item.id);
        const std::string key = by_group ? *item.group : item.label;
        total[key]++;
        if (it->second == item.label) {
            correct[key]++;
            all_correct++;
        }
    }

    Metrics m;
    m.average_accuracy =
        dataset.items.empty() ? 0.0 : static_cast<double>(all_correct) / dataset.items.size();
    m.worst_group_accuracy = dataset.items.empty() ? 0.0 : 1.0;
    for (const auto& [key, n] : total) {
        double acc = static_cast<double>(correct[key]) / n;
        m.per_group_accuracy[key] = acc;
        m.worst_group_accuracy = std::min(m.worst_group_accuracy, acc);
    }
    return m;
}

}  // namespace

Metrics evaluate(const std::map<std::string, std::string>& predictions,
                 const GroupedDataset& dataset) {
    if (!dataset.has_group_labels())
        throw DataError("dataset '" + dataset.name +
                        "' has no group labels; use evaluate_ungrouped");
    return tally(predictions, dataset, /*by_group=*/true);
}

Metrics evaluate_ungrouped(const std::map<std::string, std::string>& predictions,
                           const GroupedDataset& dataset) {
    return tally(predictions, dataset, /*by_group=*/false);
}

GroupedDataset merge(const GroupedDataset& a, const GroupedDataset& b) {
    if (a.classes != b.classes)
        throw DataError("merge: class sets differ ('" + a.name + "' vs '" + b.name + "')");
    if (!b.items.empty() && (a.height != b.height || a.width != b.width || a.channels != b.channels))
        throw DataError("merge: image dimensions differ ('" + a.name + "' vs '" + b.name + "')");

    GroupedDataset out = a;
    out.name = a.name;
    std::set<std::string> seen;
    for (const auto& item : a.items) seen.insert(item.id);
    int dropped = 0;
    for (const auto& item : b.items) {
        if (!seen.insert(item.id).second) {
            ++dropped;
            continue;
        }
        out.items.push_back(item);
    }
    if (dropped > 0)
        std::cerr << "[aspire] merge: dropped " << dropped
                  << " duplicate item(s), first occurrence kept\n";

    if (a.group_schema || b.group_schema) {
        std::map<std::string, std::vector<std::string>> schema;
        auto absorb = [&](const std::optional<std::map<std::string, std::vector<std::string>>>& s) {
            if (!s) return;
            for (const auto& [cls, groups] : *s) {
                auto& dst = schema[cls];
                for (const auto& g : groups)
                    if (std::find(dst.begin(), dst.end(), g) == dst.end()) dst.push_back(g);
            }
        };
        absorb(a.group_schema);
        absorb(b.group_schema);
        out.group_schema = std::move(schema);
    }
    return out;
}

void save_dataset(const GroupedDataset& ds, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "images");

    json items = json::array();
    for (const auto& item : ds.items) {
        const std::string file = "images/" + item.id + ".png";
        write_png(dir / file, item.pixels);
        json entry{{"id", item.id},
                   {"file", file},
                   {"label", item.label},
                   {"origin", origin_name(item.origin)}};
        if (item.group) entry["group"] = *item.group;
        items.push_back(std::move(entry));
    }

    json manifest{{"name", ds.name},
                  {"classes", ds.classes},
                  {"image_size", {ds.height, ds.width, ds.channels}},
                  {"items", std::move(items)}};
    if (ds.group_schema) {
        json schema = json::object();
        for (const auto& [cls, groups] : *ds.group_schema) schema[cls] = groups;
        manifest["group_schema"] = std::move(schema);
    }
    atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");
}

GroupedDataset load_dataset(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::path manifest_path = fs::is_directory(dir) ? dir / "manifest.json" : dir;
    json manifest = json::parse(read_file(manifest_path));
    fs::path root = manifest_path.parent_path();

    GroupedDataset ds;
    ds.name = manifest.at("name").get<std::string>();
    ds.classes = manifest.at("classes").get<std::vector<std::string>>();
    auto size = manifest.at("image_size");
    ds.height = size.at(0).get<int>();
    ds.width = size.at(1).get<int>();
    ds.channels = size.at(2).get<int>();
    if (manifest.contains("group_schema")) {
        std::map<std::string, std::vector<std::string>> schema;
        for (const auto& [cls, groups] : manifest.at("group_schema").items())
            schema[cls] = groups.get<std::vector<std::string>>();
        ds.group_schema = std::move(schema);
    }

    for (const auto& entry : manifest.at("items")) {
        LabeledImage item;
        item.id = entry.at("id").get<std::string>();
        item.label = entry.at("label").get<std::string>();
        item.origin = origin_from_name(entry.at("origin").get<std::string>());
        if (entry.contains("group")) item.group = entry.at("group").get<std::string>();
        item.pixels = read_png(root / entry.at("file").get<std::string>());
        const std::string expect = LabeledImage::content_id(item.pixels, item.label);
        if (expect != item.id)
            throw DataError("content hash mismatch for item " + item.id + " in " +
                            manifest_path.string());
        ds.items.push_back(std::move(item));
    }
    ds.validate();
    return ds;
}

std::string dataset_hash(const GroupedDataset& ds) {
    std::vector<std::string> lines;
    lines.reserve(ds.items.size());
    for (const auto& item : ds.items)
        lines.push_back(item.id + "|" + item.label + "|" + item.group.value_or(""));
    std::sort(lines.begin(), lines.end());

    std::ostringstream ss;
    for (const auto& c : ds.classes) ss << c << ";";
    ss << "\n";
    for (const auto& l : lines) ss << l << "\n";
    return sha256_hex(ss.str());
}

}  // namespace aspire
