#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "aspire/core.hpp"
#include "aspire/synthbench.hpp"

namespace aspire {

struct CaptionRecord {
    std::string image_id;
    std::string caption;
    std::string captioner_id;
};

struct CaptionFailure {
    std::string image_id;
    std::string reason;
};

struct CaptionBatch {
    std::vector<CaptionRecord> records;
    std::vector<CaptionFailure> failures;  // per-image, never batch-fatal
};

class Captioner {
  public:
    virtual ~Captioner() = default;
    /// Throws AdapterError on transport failure; the orchestrator converts
    /// that (and empty captions) into per-image failure records.
    virtual std::string caption(const LabeledImage& image) = 0;
    virtual std::string id() const = 0;
};

class OracleCaptioner : public Captioner {
  public:
    explicit OracleCaptioner(std::shared_ptr<synth::Benchmark> bench) : bench_(std::move(bench)) {}
    std::string caption(const LabeledImage& image) override;
    std::string id() const override { return "synthbench-captioner"; }

  private:
    std::shared_ptr<synth::Benchmark> bench_;
};

/// JSON-lines cache keyed by (image id, captioner id).
class CaptionCache {
  public:
    explicit CaptionCache(std::filesystem::path file);
    std::optional<std::string> get(const std::string& image_id, const std::string& captioner_id) const;
    void put(const CaptionRecord& record);

  private:
    std::filesystem::path file_;
    std::map<std::string, std::string> entries_;
};

CaptionBatch caption_images(const std::vector<const LabeledImage*>& images, Captioner& captioner,
                            CaptionCache* cache = nullptr);

struct FeatureExtraction {
    std::string image_id;
    std::vector<std::string> foreground;      // label-excluded, normalized
    std::vector<std::string> background;      // 0 or 1 phrase
    std::vector<std::string> alt_background;  // 0 or 1 phrase; empty when background empty

    nlohmann::json to_json() const;
    static FeatureExtraction from_json(const nlohmann::json& j);
};

class Extractor {
  public:
    virtual ~Extractor() = default;
    virtual FeatureExtraction extract(const std::string& caption, const std::string& label) = 0;
    virtual std::string id() const = 0;
};

/// Deterministic fallback extractor: noun-phrase chunks become foreground
/// candidates; a prepositional chunk headed by a scene/location noun becomes
/// the single predominant background; no alternate suggestion. Never errors.
class RuleBasedExtractor : public Extractor {
  public:
    FeatureExtraction extract(const std::string& caption, const std::string& label) override;
    std::string id() const override { return "rule-based-v1"; }
};

/// Raw completion endpoint for the structured-prompt extractor (an LLM in
/// production, canned JSON in tests).
class StructuredAdapter {
  public:
    virtual ~StructuredAdapter() = default;
    virtual std::string complete(const std::string& caption, const std::string& label) = 0;
    virtual std::string id() const = 0;
};

/// Replays responses recorded per (caption, label); used for tests and
/// offline runs.
class ReplayStructuredAdapter : public StructuredAdapter {
  public:
    explicit ReplayStructuredAdapter(std::map<std::pair<std::string, std::string>, std::string> responses);
    static ReplayStructuredAdapter load(const std::filesystem::path& file);

    std::string complete(const std::string& caption, const std::string& label) override;
    std::string id() const override { return "structured-replay"; }

  private:
    std::map<std::pair<std::string, std::string>, std::string> responses_;
};

/// Parses the adapter's JSON ({"foreground": [...], "background": [...],
/// "alt": [...]}; unknown keys ignored, missing keys malformed) and applies
/// normalization plus label exclusion.
class StructuredExtractor : public Extractor {
  public:
    explicit StructuredExtractor(std::shared_ptr<StructuredAdapter> adapter)
        : adapter_(std::move(adapter)) {}
    FeatureExtraction extract(const std::string& caption, const std::string& label) override;
    std::string id() const override { return "structured:" + adapter_->id(); }

  private:
    std::shared_ptr<StructuredAdapter> adapter_;
};

/// JSON-lines cache keyed by (caption hash, label, extractor id).
class ExtractionCache {
  public:
    explicit ExtractionCache(std::filesystem::path file);
    std::optional<FeatureExtraction> get(const std::string& caption, const std::string& label,
                                         const std::string& extractor_id) const;
    void put(const std::string& caption, const std::string& label,
             const std::string& extractor_id, const FeatureExtraction& extraction);

  private:
    std::filesystem::path file_;
    std::map<std::string, nlohmann::json> entries_;
};

FeatureExtraction extract_cached(const std::string& caption, const std::string& label,
                                 const std::string& image_id, Extractor& extractor,
                                 ExtractionCache* cache = nullptr);

class AltBackgroundAdapter {
  public:
    virtual ~AltBackgroundAdapter() = default;
    virtual std::string suggest(const std::string& background) = 0;
    virtual std::string id() const = 0;
};

class OracleAltBackground : public AltBackgroundAdapter {
  public:
    explicit OracleAltBackground(std::shared_ptr<synth::Benchmark> bench) : bench_(std::move(bench)) {}
    std::string suggest(const std::string& background) override {
        return bench_->suggest_alt_background(background);
    }
    std::string id() const override { return "synthbench-alt"; }

  private:
    std::shared_ptr<synth::Benchmark> bench_;
};

/// Small fixed contrast table ("snow" -> "desert"); falls back to a generic
/// contrasting scene.
class TableAltBackground : public AltBackgroundAdapter {
  public:
    std::string suggest(const std::string& background) override;
    std::string id() const override { return "contrast-table"; }
};

/// Asks the adapter for a phrase distinct from `background`
/// (stem-insensitive); one retry, then AdapterError.
std::string suggest_alt_background(const std::string& background, AltBackgroundAdapter& adapter);

/// Normalization + label exclusion + the "single predominant background"
/// cap, shared by all extractors.
FeatureExtraction finalize_extraction(FeatureExtraction raw, const std::string& label);

}  // namespace aspire
