#include "aspire/attribute.hpp"

#include <algorithm>
#include <functional>
#include <iostream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "aspire/common.hpp"
#include "aspire/text.hpp"

namespace aspire {

using nlohmann::json;

json PhraseGroup::to_json() const {
    json members_json = json::object();
    for (const auto& [phrase, count] : members) members_json[phrase] = count;
    return json{{"canonical_root", canonical_root},
                {"kind", edit_kind_name(kind)},
                {"members", members_json},
                {"frequency", frequency}};
}

json SpuriousCatalog::to_json() const {
    json classes = json::object();
    for (const auto& [cls, entry] : per_class) {
        json groups = json::array();
        for (std::size_t i = 0; i < entry.groups.size(); ++i) {
            json g = entry.groups[i].to_json();
            g["selected"] =
                std::find(entry.selected.begin(), entry.selected.end(), i) != entry.selected.end();
            auto it = entry.record_ids.find(edit_kind_name(entry.groups[i].kind) + "|" +
                                            entry.groups[i].canonical_root);
            g["record_ids"] = it == entry.record_ids.end() ? std::vector<std::string>{} : it->second;
            groups.push_back(std::move(g));
        }
        classes[cls] = std::move(groups);
    }
    return json{{"k", k}, {"classes", classes}};
}

SpuriousCatalog SpuriousCatalog::from_json(const json& j) {
    SpuriousCatalog catalog;
    catalog.k = j.at("k").get<int>();
    for (const auto& [cls, groups] : j.at("classes").items()) {
        CatalogEntry entry;
        for (const auto& g : groups) {
            PhraseGroup group;
            group.canonical_root = g.at("canonical_root").get<std::string>();
            group.kind = edit_kind_from_name(g.at("kind").get<std::string>());
            group.frequency = g.at("frequency").get<int>();
            for (const auto& [phrase, count] : g.at("members").items())
                group.members[phrase] = count.get<int>();
            if (g.value("selected", false)) entry.selected.push_back(entry.groups.size());
            entry.record_ids[edit_kind_name(group.kind) + "|" + group.canonical_root] =
                g.at("record_ids").get<std::vector<std::string>>();
            entry.groups.push_back(std::move(group));
        }
        catalog.per_class[cls] = std::move(entry);
    }
    return catalog;
}

void SpuriousCatalog::save(const std::filesystem::path& path) const {
    atomic_write(path, to_json().dump(2) + "\n");
}

SpuriousCatalog SpuriousCatalog::load(const std::filesystem::path& path) {
    return from_json(json::parse(read_file(path)));
}

std::vector<const PhraseGroup*> SpuriousCatalog::selected_groups(const std::string& cls) const {
    std::vector<const PhraseGroup*> out;
    auto it = per_class.find(cls);
    if (it == per_class.end()) return out;
    for (std::size_t idx : it->second.selected) out.push_back(&it->second.groups[idx]);
    return out;
}

std::vector<std::string> SpuriousCatalog::selected_phrases(const std::string& cls) const {
    std::vector<std::string> out;
    for (const PhraseGroup* g : selected_groups(cls))
        for (const auto& [phrase, count] : g->members) out.push_back(phrase);
    return out;
}

std::vector<std::string> SpuriousCatalog::selected_record_ids(const std::string& cls) const {
    std::vector<std::string> out;
    auto it = per_class.find(cls);
    if (it == per_class.end()) return out;
    for (std::size_t idx : it->second.selected) {
        const PhraseGroup& g = it->second.groups[idx];
        auto rit = it->second.record_ids.find(edit_kind_name(g.kind) + "|" + g.canonical_root);
        if (rit == it->second.record_ids.end()) continue;
        out.insert(out.end(), rit->second.begin(), rit->second.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<EditRecord> probe(const GroupedDataset& holdout,
                              const std::map<std::string, FeatureExtraction>& extractions,
                              const TrainedClassifier& clf, ForegroundEditor& fg_editor,
                              BackgroundEditor& bg_editor, AltBackgroundAdapter& alt_adapter) {
    std::vector<EditRecord> records;
    if (holdout.items.empty()) {
        std::cerr << "[aspire] probe: holdout is empty, no probes to run\n";
        return records;
    }

    auto judge = [&](EditRecord record) {
        if (record.verdict == Verdict::edit_failed) {
            records.push_back(std::move(record));
            return;
        }
        Prediction pred = clf.predict_one(*record.edited);
        record.verdict = pred.label == record.source_label ? Verdict::kept_correct
                                                           : Verdict::flagged_spurious;
        records.push_back(std::move(record));
    };

    for (const auto& item : holdout.items) {
        auto fx_it = extractions.find(item.id);
        if (fx_it == extractions.end())
            throw DataError("probe: no extraction for holdout item " + item.id);
        const FeatureExtraction& fx = fx_it->second;

        for (const auto& phrase : fx.foreground)
            judge(remove_foreground(item, phrase, fg_editor));

        if (!fx.background.empty()) {
            const std::string& background = fx.background.front();
            std::string alt = fx.alt_background.empty()
                                  ? suggest_alt_background(background, alt_adapter)
                                  : fx.alt_background.front();
            judge(swap_background(item, background, alt, bg_editor));
        }
    }
    return records;
}

std::vector<PhraseGroup> collapse(const std::vector<std::pair<std::string, int>>& phrases,
                                  const Embedder& embedder, EditKind kind, double threshold) {
    // Step 1: merge phrases sharing a stemmed root.
    std::map<std::string, std::map<std::string, int>> by_root;
    for (const auto& [raw, count] : phrases) {
        const std::string phrase = normalize_phrase(raw);
        if (phrase.empty() || count <= 0) continue;
        by_root[phrase_root(phrase)][phrase] += count;
    }

    std::vector<std::string> roots;
    roots.reserve(by_root.size());
    for (const auto& [root, members] : by_root) roots.push_back(root);

    // Step 2: union roots whose embeddings reach the cosine threshold; the
    // final grouping is the transitive closure of that relation.
    std::vector<std::vector<double>> vectors;
    vectors.reserve(roots.size());
    for (const auto& root : roots) vectors.push_back(embedder.embed_root(root));

    std::vector<std::size_t> parent(roots.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (std::size_t i = 0; i < roots.size(); ++i)
        for (std::size_t j = i + 1; j < roots.size(); ++j)
            if (cosine(vectors[i], vectors[j]) >= threshold) parent[find(i)] = find(j);

    std::map<std::size_t, PhraseGroup> merged;
    for (std::size_t i = 0; i < roots.size(); ++i) {
        PhraseGroup& group = merged[find(i)];
        group.kind = kind;
        for (const auto& [phrase, count] : by_root[roots[i]]) {
            group.members[phrase] += count;
            group.frequency += count;
        }
    }

    std::vector<PhraseGroup> out;
    for (auto& [rep, group] : merged) {
        // Canonical root: stem of the highest-frequency member phrase.
        std::string best;
        int best_count = -1;
        for (const auto& [phrase, count] : group.members) {
            if (count > best_count || (count == best_count && phrase < best)) {
                best = phrase;
                best_count = count;
            }
        }
        group.canonical_root = phrase_root(best);
        out.push_back(std::move(group));
    }
    std::sort(out.begin(), out.end(), [](const PhraseGroup& a, const PhraseGroup& b) {
        if (a.frequency != b.frequency) return a.frequency > b.frequency;
        return a.canonical_root < b.canonical_root;
    });
    return out;
}

SpuriousCatalog build_catalog(const std::vector<EditRecord>& records,
                              const std::vector<std::string>& classes, int k,
                              const Embedder& embedder, double threshold) {
    if (k < 1) throw ConfigError("top-k selection requires k >= 1");

    SpuriousCatalog catalog;
    catalog.k = k;

    for (const std::string& cls : classes) {
        std::map<EditKind, std::vector<std::pair<std::string, int>>> phrases;
        std::map<std::pair<EditKind, std::string>, std::vector<std::string>> phrase_records;
        for (const auto& record : records) {
            if (record.source_label != cls || record.verdict != Verdict::flagged_spurious)
                continue;
            phrases[record.kind].push_back({record.phrase, 1});
            phrase_records[{record.kind, normalize_phrase(record.phrase)}].push_back(
                record.record_id());
        }

        CatalogEntry entry;
        for (EditKind kind : {EditKind::remove_foreground, EditKind::swap_background}) {
            auto it = phrases.find(kind);
            if (it == phrases.end()) continue;
            for (PhraseGroup& group : collapse(it->second, embedder, kind, threshold)) {
                std::vector<std::string>& ids =
                    entry.record_ids[edit_kind_name(kind) + "|" + group.canonical_root];
                for (const auto& [phrase, count] : group.members) {
                    const auto& rids = phrase_records[{kind, phrase}];
                    ids.insert(ids.end(), rids.begin(), rids.end());
                }
                std::sort(ids.begin(), ids.end());
                entry.groups.push_back(std::move(group));
            }
        }

        // Foreground and background groups are ranked jointly.
        std::sort(entry.groups.begin(), entry.groups.end(),
                  [](const PhraseGroup& a, const PhraseGroup& b) {
                      if (a.frequency != b.frequency) return a.frequency > b.frequency;
                      if (a.canonical_root != b.canonical_root)
                          return a.canonical_root < b.canonical_root;
                      return edit_kind_name(a.kind) < edit_kind_name(b.kind);
                  });
        for (std::size_t i = 0; i < entry.groups.size() && i < static_cast<std::size_t>(k); ++i)
            entry.selected.push_back(i);

        if (entry.groups.empty())
            std::cerr << "[aspire] class '" << cls
                      << "' has no flagged records; it will receive no augmentations\n";
        catalog.per_class[cls] = std::move(entry);
    }
    return catalog;
}

}  // namespace aspire
