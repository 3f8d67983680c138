#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "aspire/common.hpp"
#include "aspire/core.hpp"

namespace aspire::testing {

/// Tiny image whose pixels encode `tag` (and an optional salt), so every
/// (salt, tag) pair yields a distinct id.
inline Image tagged_image(int tag, int h = 2, int w = 2, int c = 3, std::uint64_t salt = 0) {
    Image img(h, w, c);
    std::uint64_t code = fnv1a64(std::to_string(tag) + ":" + std::to_string(salt));
    for (std::size_t i = 0; i < img.data.size(); ++i)
        img.data[i] = static_cast<std::uint8_t>((code >> ((i % 8) * 8)) ^ (i * 7));
    return img;
}

struct ItemSpec {
    std::string label;
    std::string group;  // empty = ungrouped item
    int count = 1;
};

/// Small dataset of 2x2 images; group schema inferred when any spec names a
/// group.
inline GroupedDataset make_fixture(const std::string& name, std::vector<std::string> classes,
                                   const std::vector<ItemSpec>& specs, int h = 2, int w = 2) {
    GroupedDataset ds;
    ds.name = name;
    ds.classes = std::move(classes);
    ds.height = h;
    ds.width = w;
    ds.channels = 3;

    bool grouped = false;
    for (const auto& spec : specs)
        if (!spec.group.empty()) grouped = true;
    if (grouped) {
        std::map<std::string, std::vector<std::string>> schema;
        for (const auto& spec : specs) {
            if (spec.group.empty()) continue;
            auto& groups = schema[spec.label];
            if (std::find(groups.begin(), groups.end(), spec.group) == groups.end())
                groups.push_back(spec.group);
        }
        ds.group_schema = std::move(schema);
    }

    int tag = 0;
    const std::uint64_t salt = fnv1a64(name);
    for (const auto& spec : specs) {
        for (int i = 0; i < spec.count; ++i) {
            ds.items.push_back(LabeledImage::make(
                tagged_image(tag++, h, w, 3, salt), spec.label,
                spec.group.empty() ? std::optional<std::string>{} : spec.group));
        }
    }
    ds.validate();
    return ds;
}

/// Unique scratch directory under the system temp root.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() /
               ("aspire-test-" + tag + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace aspire::testing
