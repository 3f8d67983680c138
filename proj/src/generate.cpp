#include "aspire/generate.hpp"

#include <algorithm>
#include <iostream>

#include <nlohmann/json.hpp>

#include "aspire/common.hpp"
#include "aspire/text.hpp"

namespace aspire {

std::string budget_mode_name(BudgetMode m) {
    return m == BudgetMode::minority_match ? "minority_match" : "class_match";
}

BudgetMode budget_mode_from_name(const std::string& s) {
    if (s == "minority_match") return BudgetMode::minority_match;
    if (s == "class_match") return BudgetMode::class_match;
    throw ConfigError("unknown budget mode: " + s);
}

int AugmentBudget::total() const {
    int sum = 0;
    for (const auto& [cls, count] : per_class) sum += count;
    return sum;
}

AugmentBudget compute_budget(const GroupedDataset& train, int multiplier, BudgetMode mode) {
    if (multiplier < 1) throw ConfigError("augmentation multiplier must be >= 1");

    AugmentBudget budget;
    budget.mode = mode;
    budget.multiplier = multiplier;

    const std::map<std::string, int> class_counts = train.per_class_counts();
    if (mode == BudgetMode::class_match) {
        for (const auto& cls : train.classes) {
            auto it = class_counts.find(cls);
            budget.per_class[cls] = multiplier * (it == class_counts.end() ? 0 : it->second);
        }
        return budget;
    }

    if (!train.has_group_labels())
        throw ConfigError(
            "minority_match needs group labels; use class_match for ungrouped datasets");

    // Minority size per class = the smallest group of that class.
    std::map<std::string, std::map<std::string, int>> group_counts;
    for (const auto& item : train.items) group_counts[item.label][*item.group]++;
    for (const auto& cls : train.classes) {
        int smallest = 0;
        auto it = group_counts.find(cls);
        if (it != group_counts.end() && !it->second.empty()) {
            smallest = it->second.begin()->second;
            for (const auto& [group, count] : it->second) smallest = std::min(smallest, count);
        }
        budget.per_class[cls] = multiplier * smallest;
    }
    return budget;
}

std::string PersonalizationJob::job_hash() const {
    std::string bytes = cls + "|" + token + "|" + adapter_id + "|" + std::to_string(seed);
    for (const auto& rid : training_record_ids) bytes += "|" + rid;
    return sha256_hex(bytes);
}

std::vector<PersonalizationJob> build_jobs(const SpuriousCatalog& catalog,
                                           const std::vector<std::string>& classes,
                                           const std::string& adapter_id, std::uint64_t seed,
                                           int max_training_images) {
    std::vector<PersonalizationJob> jobs;
    for (const auto& cls : classes) {
        std::vector<std::string> record_ids = catalog.selected_record_ids(cls);
        if (record_ids.empty()) {
            std::cerr << "[aspire] class '" << cls
                      << "' has an empty top-k; skipping personalization\n";
            continue;
        }
        std::sort(record_ids.begin(), record_ids.end());
        record_ids.erase(std::unique(record_ids.begin(), record_ids.end()), record_ids.end());
        if (static_cast<int>(record_ids.size()) > max_training_images) {
            Rng rng(seed ^ fnv1a64("personalize-sample:" + cls));
            rng.shuffle(record_ids);
            record_ids.resize(max_training_images);
            std::sort(record_ids.begin(), record_ids.end());
        }

        PersonalizationJob job;
        job.cls = cls;
        job.token = cls;  // textual inversion on the class label itself
        job.training_record_ids = std::move(record_ids);
        job.adapter_id = adapter_id;
        job.seed = seed ^ fnv1a64("personalize:" + cls);
        jobs.push_back(std::move(job));
    }
    return jobs;
}

PersonalizedGenerator personalize(const PersonalizationJob& job, GeneratorAdapter& adapter,
                                  const std::vector<const EditRecord*>& images) {
    if (job.training_record_ids.empty() || images.empty())
        throw ConfigError("personalization job for class '" + job.cls +
                          "' has no training images");
    if (job.token != job.cls)
        throw ConfigError("personalization token must equal the class label");
    try {
        return adapter.personalize(job, images);
    } catch (const std::exception& e) {
        throw AdapterError("personalization failed for job " + job.job_hash() + ": " + e.what());
    }
}

PersonalizedGenerator OracleGenerator::personalize(const PersonalizationJob& job,
                                                   const std::vector<const EditRecord*>& images) {
    // The flagged phrases that match the class's planted features become the
    // excluded set for generation.
    const auto& truth = bench_->ground_truth();
    auto it = truth.find(job.cls);
    if (it == truth.end()) throw AdapterError("unknown class: " + job.cls);

    std::set<std::string> excluded;
    for (const EditRecord* record : images) {
        const std::string root = phrase_root(record->phrase);
        if (root == phrase_root(it->second.patch_phrase)) excluded.insert(it->second.patch_phrase);
        if (root == phrase_root(it->second.background_phrase))
            excluded.insert(it->second.background_phrase);
    }

    PersonalizedGenerator handle;
    handle.cls = job.cls;
    handle.token = job.token;
    handle.adapter_id = id();
    handle.seed = job.seed;
    handle.handle_hash = sha256_hex(job.job_hash() + "|" + id());
    excluded_by_handle_[handle.handle_hash] = std::move(excluded);
    return handle;
}

std::vector<LabeledImage> OracleGenerator::generate(const PersonalizedGenerator& handle,
                                                    int count) {
    auto it = excluded_by_handle_.find(handle.handle_hash);
    if (it == excluded_by_handle_.end())
        throw AdapterError("unknown generator handle: " + handle.handle_hash);
    return bench_->oracle_generate(handle.cls, count, it->second, handle.seed);
}

GroupedDataset generate_augmentations(const std::vector<PersonalizedGenerator>& handles,
                                      const AugmentBudget& budget, GeneratorAdapter& adapter,
                                      const GroupedDataset& train) {
    GroupedDataset aug;
    aug.name = train.name + "-augmentations";
    aug.classes = train.classes;
    aug.height = train.height;
    aug.width = train.width;
    aug.channels = train.channels;

    std::map<std::string, std::vector<std::string>> schema;
    if (train.group_schema) schema = *train.group_schema;

    for (const PersonalizedGenerator& handle : handles) {
        auto it = budget.per_class.find(handle.cls);
        if (it == budget.per_class.end())
            throw ConfigError("class '" + handle.cls + "' is absent from the budget");
        const int count = it->second;
        if (count <= 0) continue;

        std::optional<std::string> group;
        if (train.group_schema) {
            // Generated images are non-spurious by construction.
            const std::string minority_group = handle.cls + ":minority";
            auto& groups = schema[handle.cls];
            if (std::find(groups.begin(), groups.end(), minority_group) == groups.end())
                groups.push_back(minority_group);
            group = minority_group;
        }

        for (LabeledImage& img : adapter.generate(handle, count)) {
            img.origin = Origin::generated;
            img.group = group;
            aug.items.push_back(std::move(img));
        }
    }

    if (train.group_schema) aug.group_schema = std::move(schema);
    aug.validate();
    return aug;
}

}  // namespace aspire
