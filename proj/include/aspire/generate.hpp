#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "aspire/attribute.hpp"
#include "aspire/core.hpp"
#include "aspire/edit.hpp"
#include "aspire/synthbench.hpp"

namespace aspire {

enum class BudgetMode { minority_match, class_match };

std::string budget_mode_name(BudgetMode m);
BudgetMode budget_mode_from_name(const std::string& s);

struct AugmentBudget {
    BudgetMode mode = BudgetMode::minority_match;
    int multiplier = 1;
    std::map<std::string, int> per_class;

    int total() const;
};

/// minority_match: n x the class's smallest-group size (requires group
/// labels); class_match: n x the class's training size.
AugmentBudget compute_budget(const GroupedDataset& train, int multiplier, BudgetMode mode);

/// One per-class personalization: the token is the class label itself,
/// trained on flagged records from the selected top-k groups.
struct PersonalizationJob {
    std::string cls;
    std::string token;  // equals cls
    std::vector<std::string> training_record_ids;
    std::string adapter_id;
    std::uint64_t seed = 0;

    std::string job_hash() const;
};

/// Opaque handle to a personalized generator, bound to
/// (class, token, image-set hash).
struct PersonalizedGenerator {
    std::string cls;
    std::string token;
    std::string handle_hash;
    std::string adapter_id;
    std::uint64_t seed = 0;
};

class GeneratorAdapter {
  public:
    virtual ~GeneratorAdapter() = default;
    virtual PersonalizedGenerator personalize(const PersonalizationJob& job,
                                              const std::vector<const EditRecord*>& images) = 0;
    virtual std::vector<LabeledImage> generate(const PersonalizedGenerator& handle, int count) = 0;
    virtual std::string id() const = 0;
};

/// Exact-oracle generator: derives the excluded feature set from the phrases
/// of the personalization images that match the class's planted ground
/// truth, then renders fresh class images without those features.
class OracleGenerator : public GeneratorAdapter {
  public:
    explicit OracleGenerator(std::shared_ptr<synth::Benchmark> bench) : bench_(std::move(bench)) {}
    PersonalizedGenerator personalize(const PersonalizationJob& job,
                                      const std::vector<const EditRecord*>& images) override;
    std::vector<LabeledImage> generate(const PersonalizedGenerator& handle, int count) override;
    std::string id() const override { return "synthbench-generator"; }

  private:
    std::shared_ptr<synth::Benchmark> bench_;
    std::map<std::string, std::set<std::string>> excluded_by_handle_;
};

/// Builds one job per class from the catalog's selected groups; classes with
/// an empty top-k are skipped with a warning. Training images are capped
/// (default 32), sampled seed-deterministically from the flagged records.
std::vector<PersonalizationJob> build_jobs(const SpuriousCatalog& catalog,
                                           const std::vector<std::string>& classes,
                                           const std::string& adapter_id, std::uint64_t seed,
                                           int max_training_images = 32);

PersonalizedGenerator personalize(const PersonalizationJob& job, GeneratorAdapter& adapter,
                                  const std::vector<const EditRecord*>& images);

/// Exactly budget.per_class[class] images, labelled with the class, origin
/// generated; group label "<class>:minority" when the training set is
/// grouped.
GroupedDataset generate_augmentations(const std::vector<PersonalizedGenerator>& handles,
                                      const AugmentBudget& budget, GeneratorAdapter& adapter,
                                      const GroupedDataset& train);

}  // namespace aspire
