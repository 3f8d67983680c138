#include "aspire/edit.hpp"

#include <nlohmann/json.hpp>

#include "aspire/common.hpp"
#include "aspire/text.hpp"

namespace aspire {

using nlohmann::json;

std::string edit_kind_name(EditKind k) {
    return k == EditKind::remove_foreground ? "remove_foreground" : "swap_background";
}

EditKind edit_kind_from_name(const std::string& s) {
    if (s == "remove_foreground") return EditKind::remove_foreground;
    if (s == "swap_background") return EditKind::swap_background;
    throw DataError("unknown edit kind: " + s);
}

std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::pending: return "pending";
        case Verdict::kept_correct: return "kept_correct";
        case Verdict::flagged_spurious: return "flagged_spurious";
        case Verdict::edit_failed: return "edit_failed";
    }
    return "pending";
}

Verdict verdict_from_name(const std::string& s) {
    if (s == "pending") return Verdict::pending;
    if (s == "kept_correct") return Verdict::kept_correct;
    if (s == "flagged_spurious") return Verdict::flagged_spurious;
    if (s == "edit_failed") return Verdict::edit_failed;
    throw DataError("unknown verdict: " + s);
}

std::string EditRecord::record_id() const {
    return sha256_hex(source_id + "|" + edit_kind_name(kind) + "|" + phrase + "|" +
                      alt_phrase.value_or("") + "|" + adapter_id + "|" + std::to_string(seed));
}

json EditRecord::to_json(bool include_pixels_ref) const {
    json j{{"record_id", record_id()},
           {"source_id", source_id},
           {"source_label", source_label},
           {"kind", edit_kind_name(kind)},
           {"phrase", phrase},
           {"verdict", verdict_name(verdict)},
           {"adapter_id", adapter_id},
           {"seed", seed}};
    if (alt_phrase) j["alt_phrase"] = *alt_phrase;
    if (!fail_reason.empty()) j["fail_reason"] = fail_reason;
    if (bbox) j["bbox"] = {bbox->x, bbox->y, bbox->width, bbox->height};
    if (include_pixels_ref && edited) j["edited_id"] = edited->id;
    return j;
}

EditOutcome OracleForegroundEditor::remove(const LabeledImage& image, const std::string& phrase) {
    EditOutcome outcome;
    try {
        auto edited = bench_->oracle_remove(image.id, phrase);
        if (!edited) {
            outcome.fail_reason = "not_found";
            return outcome;
        }
        outcome.edited = std::move(*edited);
    } catch (const std::exception& e) {
        outcome.fail_reason = std::string("inpaint_error: ") + e.what();
    }
    return outcome;
}

EditOutcome OracleBackgroundEditor::swap(const LabeledImage& image, const std::string& background,
                                         const std::string& alt_background) {
    EditOutcome outcome;
    try {
        outcome.edited = bench_->oracle_swap_background(image.id, background, alt_background);
    } catch (const std::exception& e) {
        outcome.fail_reason = std::string("edit_error: ") + e.what();
    }
    return outcome;
}

std::string editing_instruction(const std::string& background, const std::string& alt_background) {
    return "turn the background from " + background + " to " + alt_background;
}

EditRecord remove_foreground(const LabeledImage& image, const std::string& phrase,
                             ForegroundEditor& editor, std::uint64_t seed) {
    EditRecord record;
    record.source_id = image.id;
    record.source_label = image.label;
    record.kind = EditKind::remove_foreground;
    record.phrase = normalize_phrase(phrase);
    record.adapter_id = editor.id();
    record.seed = seed;

    EditOutcome outcome = editor.remove(image, record.phrase);
    if (!outcome.fail_reason.empty() || !outcome.edited) {
        record.verdict = Verdict::edit_failed;
        record.fail_reason = outcome.fail_reason.empty() ? "no_edit" : outcome.fail_reason;
        return record;
    }
    record.edited = std::move(outcome.edited);
    record.edited->origin = Origin::edited;
    record.bbox = outcome.bbox;
    record.mask = outcome.mask;
    if (record.edited->label != image.label)
        throw DataError("editing must never relabel (source " + image.id + ")");
    return record;
}

EditRecord swap_background(const LabeledImage& image, const std::string& background,
                           const std::string& alt_background, BackgroundEditor& editor,
                           std::uint64_t seed) {
    const std::string b = normalize_phrase(background);
    const std::string alt = normalize_phrase(alt_background);
    if (b == alt)
        throw ConfigError("swap_background: alternate equals the original ('" + b + "')");

    EditRecord record;
    record.source_id = image.id;
    record.source_label = image.label;
    record.kind = EditKind::swap_background;
    record.phrase = b;
    record.alt_phrase = alt;
    record.adapter_id = editor.id();
    record.seed = seed;

    EditOutcome outcome = editor.swap(image, b, alt);
    if (!outcome.fail_reason.empty() || !outcome.edited) {
        record.verdict = Verdict::edit_failed;
        record.fail_reason = outcome.fail_reason.empty() ? "no_edit" : outcome.fail_reason;
        return record;
    }
    record.edited = std::move(outcome.edited);
    record.edited->origin = Origin::edited;
    if (record.edited->label != image.label)
        throw DataError("editing must never relabel (source " + image.id + ")");
    return record;
}

void EditStore::save(const EditRecord& record) const {
    const std::string rid = record.record_id();
    json j = record.to_json();
    if (record.edited) {
        const std::string file = rid + ".png";
        write_png(dir_ / file, record.edited->pixels);
        j["edited_file"] = file;
        j["edited_label"] = record.edited->label;
    }
    atomic_write(dir_ / (rid + ".json"), j.dump(2) + "\n");
}

std::optional<EditRecord> EditStore::load(const std::string& record_id) const {
    const std::filesystem::path sidecar = dir_ / (record_id + ".json");
    if (!std::filesystem::exists(sidecar)) return std::nullopt;
    json j = json::parse(read_file(sidecar));

    EditRecord record;
    record.source_id = j.at("source_id").get<std::string>();
    record.source_label = j.value("source_label", "");
    record.kind = edit_kind_from_name(j.at("kind").get<std::string>());
    record.phrase = j.at("phrase").get<std::string>();
    if (j.contains("alt_phrase")) record.alt_phrase = j.at("alt_phrase").get<std::string>();
    record.verdict = verdict_from_name(j.at("verdict").get<std::string>());
    record.fail_reason = j.value("fail_reason", "");
    record.adapter_id = j.at("adapter_id").get<std::string>();
    record.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("bbox")) {
        auto b = j.at("bbox");
        record.bbox = BBox{b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(),
                           b.at(3).get<int>()};
    }
    if (j.contains("edited_file")) {
        LabeledImage edited;
        edited.pixels = read_png(dir_ / j.at("edited_file").get<std::string>());
        edited.label = j.at("edited_label").get<std::string>();
        edited.id = LabeledImage::content_id(edited.pixels, edited.label);
        edited.origin = Origin::edited;
        record.edited = std::move(edited);
    }
    return record;
}

std::vector<EditRecord> EditStore::load_all() const {
    std::vector<EditRecord> records;
    if (!std::filesystem::exists(dir_)) return records;
    std::vector<std::string> ids;
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
        if (entry.path().extension() == ".json") ids.push_back(entry.path().stem().string());
    }
    std::sort(ids.begin(), ids.end());
    for (const auto& rid : ids) {
        if (auto record = load(rid)) records.push_back(std::move(*record));
    }
    return records;
}

}  // namespace aspire
