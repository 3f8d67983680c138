#include "aspire/describe.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "aspire/common.hpp"
#include "aspire/text.hpp"

namespace aspire {

using nlohmann::json;

std::string OracleCaptioner::caption(const LabeledImage& image) {
    try {
        return bench_->oracle_caption(image.id);
    } catch (const DataError& e) {
        throw AdapterError(e.what());
    }
}

namespace {
constexpr char kSep = '\x1f';
}

CaptionCache::CaptionCache(std::filesystem::path file) : file_(std::move(file)) {
    std::ifstream in(file_);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) continue;
        entries_[j.at("image_id").get<std::string>() + kSep +
                 j.at("captioner_id").get<std::string>()] = j.at("caption").get<std::string>();
    }
}

std::optional<std::string> CaptionCache::get(const std::string& image_id,
                                             const std::string& captioner_id) const {
    auto it = entries_.find(image_id + kSep + captioner_id);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void CaptionCache::put(const CaptionRecord& record) {
    entries_[record.image_id + kSep + record.captioner_id] = record.caption;
    if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
    std::ofstream out(file_, std::ios::app);
    out << json{{"image_id", record.image_id},
                {"captioner_id", record.captioner_id},
                {"caption", record.caption}}
               .dump()
        << "\n";
}

CaptionBatch caption_images(const std::vector<const LabeledImage*>& images, Captioner& captioner,
                            CaptionCache* cache) {
    CaptionBatch batch;
    for (const LabeledImage* image : images) {
        if (cache) {
            if (auto hit = cache->get(image->id, captioner.id())) {
                batch.records.push_back({image->id, *hit, captioner.id()});
                continue;
            }
        }
        std::string caption;
        try {
            caption = captioner.caption(*image);
        } catch (const AdapterError& e) {
            batch.failures.push_back({image->id, e.what()});
            continue;
        }
        if (caption.empty()) {
            batch.failures.push_back({image->id, "empty caption"});
            continue;
        }
        CaptionRecord record{image->id, caption, captioner.id()};
        if (cache) cache->put(record);
        batch.records.push_back(std::move(record));
    }
    return batch;
}

json FeatureExtraction::to_json() const {
    return json{{"image_id", image_id},
                {"foreground", foreground},
                {"background", background},
                {"alt_background", alt_background}};
}

FeatureExtraction FeatureExtraction::from_json(const json& j) {
    FeatureExtraction fx;
    fx.image_id = j.value("image_id", "");
    fx.foreground = j.at("foreground").get<std::vector<std::string>>();
    fx.background = j.at("background").get<std::vector<std::string>>();
    fx.alt_background = j.at("alt_background").get<std::vector<std::string>>();
    return fx;
}

FeatureExtraction finalize_extraction(FeatureExtraction raw, const std::string& label) {
    FeatureExtraction out;
    out.image_id = raw.image_id;

    std::set<std::string> seen;
    for (const auto& phrase : raw.foreground) {
        const std::string p = normalize_phrase(phrase);
        if (p.empty() || phrase_matches_label(p, label)) continue;
        if (seen.insert(p).second) out.foreground.push_back(p);
    }
    for (const auto& phrase : raw.background) {
        const std::string p = normalize_phrase(phrase);
        if (p.empty()) continue;
        out.background.push_back(p);
        break;  // single predominant background
    }
    if (!out.background.empty()) {
        for (const auto& phrase : raw.alt_background) {
            const std::string p = normalize_phrase(phrase);
            if (p.empty() || phrase_root(p) == phrase_root(out.background.front())) continue;
            out.alt_background.push_back(p);
            break;
        }
    }
    return out;
}

namespace {

const std::set<std::string>& scene_nouns() {
    static const std::set<std::string> nouns = {
        "background", "snow",    "desert", "beach",  "field",  "forest",   "water",   "ocean",
        "sea",        "lake",    "river",  "pond",   "stream", "mountain", "hill",    "street",
        "road",       "room",    "kitchen", "office", "city",  "sky",      "grass",   "sand",
        "ground",     "floor",   "landscape", "park", "garden", "pool",    "court",   "stadium",
        "rink",       "ice",     "meadow", "slope",  "woods",  "indoors",  "outdoors", "plain",
        "valley",     "cave",
    };
    return nouns;
}

const std::set<std::string>& location_prepositions() {
    static const std::set<std::string> preps = {
        "in",   "on",    "at",    "under", "inside", "within", "near",  "against",
        "amid", "amidst", "over", "above", "below",  "beside", "along", "upon",
        "behind", "across",
    };
    return preps;
}

struct Chunk {
    std::string opener;  // splitter token that started the chunk ("" for the first)
    std::vector<std::string> tokens;
};

// Token runs separated by prepositions, conjunctions and clause punctuation.
std::vector<Chunk> chunk_caption(const std::string& caption) {
    std::vector<Chunk> chunks;
    Chunk current;
    auto flush = [&](const std::string& next_opener) {
        if (!current.tokens.empty()) chunks.push_back(current);
        current = Chunk{next_opener, {}};
    };

    std::string token;
    auto emit_token = [&] {
        if (token.empty()) return;
        std::string t = to_lower(token);
        token.clear();
        if (location_prepositions().count(t) || t == "with" || t == "and" || t == "or" ||
            t == "from" || t == "to" || t == "into" || t == "onto" || t == "by") {
            flush(t);
            return;
        }
        current.tokens.push_back(std::move(t));
    };

    for (char raw : caption) {
        unsigned char c = static_cast<unsigned char>(raw);
        if (std::isalpha(c) || ((raw == '-' || raw == '\'') && !token.empty())) {
            token.push_back(raw);
        } else if (raw == ',' || raw == '.' || raw == ';' || raw == ':') {
            emit_token();
            flush("");
        } else {
            emit_token();
        }
    }
    emit_token();
    flush("");
    return chunks;
}

std::string chunk_phrase(const Chunk& chunk) {
    std::string phrase;
    for (const auto& t : chunk.tokens) {
        if (is_stopword(t) || is_number_word(t)) continue;
        if (!phrase.empty()) phrase.push_back(' ');
        phrase += t;
    }
    return phrase;
}

bool is_background_chunk(const Chunk& chunk) {
    if (!location_prepositions().count(chunk.opener)) return false;
    for (auto it = chunk.tokens.rbegin(); it != chunk.tokens.rend(); ++it) {
        if (is_stopword(*it) || is_number_word(*it)) continue;
        return scene_nouns().count(*it) > 0;
    }
    return false;
}

}  // namespace

FeatureExtraction RuleBasedExtractor::extract(const std::string& caption,
                                              const std::string& label) {
    FeatureExtraction raw;
    bool have_background = false;
    for (const Chunk& chunk : chunk_caption(caption)) {
        const std::string phrase = chunk_phrase(chunk);
        if (phrase.empty()) continue;
        if (!have_background && is_background_chunk(chunk)) {
            raw.background.push_back(phrase);
            have_background = true;
            continue;
        }
        raw.foreground.push_back(phrase);
    }
    return finalize_extraction(std::move(raw), label);
}

ReplayStructuredAdapter::ReplayStructuredAdapter(
    std::map<std::pair<std::string, std::string>, std::string> responses)
    : responses_(std::move(responses)) {}

ReplayStructuredAdapter ReplayStructuredAdapter::load(const std::filesystem::path& file) {
    std::map<std::pair<std::string, std::string>, std::string> responses;
    std::ifstream in(file);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        responses[{j.at("caption").get<std::string>(), j.at("label").get<std::string>()}] =
            j.at("response").is_string() ? j.at("response").get<std::string>()
                                         : j.at("response").dump();
    }
    return ReplayStructuredAdapter(std::move(responses));
}

std::string ReplayStructuredAdapter::complete(const std::string& caption,
                                              const std::string& label) {
    auto it = responses_.find({caption, label});
    if (it == responses_.end())
        throw AdapterError("no recorded response for caption: " + caption);
    return it->second;
}

FeatureExtraction StructuredExtractor::extract(const std::string& caption,
                                               const std::string& label) {
    const std::string payload = adapter_->complete(caption, label);
    json j = json::parse(payload, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw AdapterError("malformed structured extraction (raw payload: " + payload + ")");
    for (const char* key : {"foreground", "background", "alt"}) {
        if (!j.contains(key) || !j.at(key).is_array())
            throw AdapterError(std::string("structured extraction missing '") + key +
                               "' (raw payload: " + payload + ")");
    }

    FeatureExtraction raw;
    raw.foreground = j.at("foreground").get<std::vector<std::string>>();
    raw.background = j.at("background").get<std::vector<std::string>>();
    raw.alt_background = j.at("alt").get<std::vector<std::string>>();
    return finalize_extraction(std::move(raw), label);
}

ExtractionCache::ExtractionCache(std::filesystem::path file) : file_(std::move(file)) {
    std::ifstream in(file_);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) continue;
        entries_[j.at("key").get<std::string>()] = j.at("extraction");
    }
}

std::optional<FeatureExtraction> ExtractionCache::get(const std::string& caption,
                                                      const std::string& label,
                                                      const std::string& extractor_id) const {
    auto it = entries_.find(sha256_hex(caption) + kSep + label + kSep + extractor_id);
    if (it == entries_.end()) return std::nullopt;
    return FeatureExtraction::from_json(it->second);
}

void ExtractionCache::put(const std::string& caption, const std::string& label,
                          const std::string& extractor_id, const FeatureExtraction& extraction) {
    const std::string key = sha256_hex(caption) + kSep + label + kSep + extractor_id;
    entries_[key] = extraction.to_json();
    if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
    std::ofstream out(file_, std::ios::app);
    out << json{{"key", key}, {"extraction", extraction.to_json()}}.dump() << "\n";
}

FeatureExtraction extract_cached(const std::string& caption, const std::string& label,
                                 const std::string& image_id, Extractor& extractor,
                                 ExtractionCache* cache) {
    if (cache) {
        if (auto hit = cache->get(caption, label, extractor.id())) {
            hit->image_id = image_id;
            return *hit;
        }
    }
    FeatureExtraction fx = extractor.extract(caption, label);
    fx.image_id = image_id;
    if (cache) cache->put(caption, label, extractor.id(), fx);
    return fx;
}

std::string TableAltBackground::suggest(const std::string& background) {
    static const std::map<std::string, std::string> table = {
        {"snow", "desert"},     {"desert", "jungle"},    {"water", "desert"},
        {"ocean", "desert"},    {"sea", "desert"},       {"lake", "desert"},
        {"beach", "mountain meadow"}, {"field", "city street"}, {"forest", "open desert"},
        {"mountain", "grassy plain"}, {"street", "forest"},     {"room", "open field"},
        {"indoors", "outdoors"}, {"outdoors", "indoors"}, {"ice", "sandy beach"},
        {"pool", "meadow"},      {"sky", "cave"},         {"grass", "paved lot"},
    };
    const std::string head = head_token(background);
    auto it = table.find(head);
    if (it != table.end()) return it->second;
    return phrase_root(background) == "desert" ? "forest" : "desert";
}

std::string suggest_alt_background(const std::string& background, AltBackgroundAdapter& adapter) {
    const std::string bg = normalize_phrase(background);
    if (bg.empty()) throw ConfigError("cannot suggest an alternate for an empty background");

    for (int attempt = 0; attempt < 2; ++attempt) {
        const std::string candidate = normalize_phrase(adapter.suggest(bg));
        if (!candidate.empty() && phrase_root(candidate) != phrase_root(bg)) return candidate;
    }
    throw AdapterError("adapter '" + adapter.id() +
                       "' kept returning the original background for '" + bg + "'");
}

}  // namespace aspire
