#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "aspire/classifier.hpp"
#include "aspire/describe.hpp"
#include "aspire/edit.hpp"
#include "aspire/embedding.hpp"

namespace aspire {

/// Phrase variants collapsed to one canonical root, with the number of
/// flagged records they account for. Foreground and background groups never
/// merge (kind is part of the identity).
struct PhraseGroup {
    std::string canonical_root;
    EditKind kind = EditKind::remove_foreground;
    std::map<std::string, int> members;  // original phrase -> flagged count
    int frequency = 0;

    nlohmann::json to_json() const;
};

struct CatalogEntry {
    std::vector<PhraseGroup> groups;    // sorted by rank
    std::vector<std::size_t> selected;  // indices of the top-k
    // "kind|root" -> flagged record ids backing that group
    std::map<std::string, std::vector<std::string>> record_ids;
};

/// Per-class phrase groups with the selected top-k: the machine-readable
/// spurious-correlation table for a run.
struct SpuriousCatalog {
    int k = 3;
    std::map<std::string, CatalogEntry> per_class;

    nlohmann::json to_json() const;
    static SpuriousCatalog from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static SpuriousCatalog load(const std::filesystem::path& path);

    std::vector<const PhraseGroup*> selected_groups(const std::string& cls) const;
    std::vector<std::string> selected_phrases(const std::string& cls) const;
    std::vector<std::string> selected_record_ids(const std::string& cls) const;
};

/// Runs every probe for the holdout: one remove_foreground per extracted
/// foreground phrase, one swap_background when a background is present (the
/// alternate comes from the extraction or, failing that, the suggester).
/// Verdicts: flagged_spurious iff the classifier mispredicts the edited
/// image; edit failures pass through unmodified.
std::vector<EditRecord> probe(const GroupedDataset& holdout,
                              const std::map<std::string, FeatureExtraction>& extractions,
                              const TrainedClassifier& clf, ForegroundEditor& fg_editor,
                              BackgroundEditor& bg_editor, AltBackgroundAdapter& alt_adapter);

/// Collapses a phrase multiset: stem-root merge first, then transitive
/// closure of cosine >= 0.90 between root embeddings. Group frequency is the
/// sum of member counts; canonical root comes from the highest-frequency
/// member (ties broken lexicographically).
std::vector<PhraseGroup> collapse(const std::vector<std::pair<std::string, int>>& phrases,
                                  const Embedder& embedder, EditKind kind,
                                  double threshold = 0.90);

/// Builds the catalog from flagged records: per class, collapse foreground
/// and background phrases separately, rank all groups jointly by frequency
/// (descending, ties by canonical root ascending), select the first k.
SpuriousCatalog build_catalog(const std::vector<EditRecord>& records,
                              const std::vector<std::string>& classes, int k,
                              const Embedder& embedder, double threshold = 0.90);

}  // namespace aspire
