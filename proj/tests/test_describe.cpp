#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aspire/adapters.hpp"
#include "aspire/describe.hpp"
#include "aspire/text.hpp"
#include "helpers.hpp"

using namespace aspire;

namespace {

std::shared_ptr<synth::Benchmark> small_bench() {
    synth::BenchConfig cfg;
    cfg.n_classes = 2;
    cfg.per_class_train = 20;
    cfg.spurious_rate = 0.9;
    cfg.seed = 21;
    return synth::make_benchmark(cfg);
}

class FlakyCaptioner : public Captioner {
  public:
    explicit FlakyCaptioner(std::string fail_id) : fail_id_(std::move(fail_id)) {}
    std::string caption(const LabeledImage& image) override {
        if (image.id == fail_id_) throw AdapterError("timeout");
        return "an image of something";
    }
    std::string id() const override { return "flaky"; }

  private:
    std::string fail_id_;
};

class EchoAlt : public AltBackgroundAdapter {
  public:
    std::string suggest(const std::string& background) override { return background; }
    std::string id() const override { return "echo"; }
};

class CannedAdapter : public StructuredAdapter {
  public:
    explicit CannedAdapter(std::string payload) : payload_(std::move(payload)) {}
    std::string complete(const std::string&, const std::string&) override { return payload_; }
    std::string id() const override { return "canned"; }

  private:
    std::string payload_;
};

}  // namespace

TEST_CASE("rule-based extractor reproduces the dog-sled example") {
    RuleBasedExtractor extractor;
    FeatureExtraction fx =
        extractor.extract("A man with two dogs and a sled in the snow.", "Dog Sled");
    CHECK(fx.foreground == std::vector<std::string>{"man", "dogs"});
    CHECK(fx.background == std::vector<std::string>{"snow"});
    CHECK(fx.alt_background.empty());  // the fallback never suggests
}

TEST_CASE("structured extractor accepts the adapter JSON schema") {
    auto adapter = std::make_shared<CannedAdapter>(
        R"({"foreground": ["man", "dogs"], "background": ["snow"], "alt": ["desert"], "extra": 1})");
    StructuredExtractor extractor(adapter);
    FeatureExtraction fx =
        extractor.extract("A man with two dogs and a sled in the snow.", "Dog Sled");
    CHECK(fx.foreground == std::vector<std::string>{"man", "dogs"});
    CHECK(fx.background == std::vector<std::string>{"snow"});
    CHECK(fx.alt_background == std::vector<std::string>{"desert"});
}

TEST_CASE("structured extractor rejects malformed payloads with the raw text") {
    StructuredExtractor broken(std::make_shared<CannedAdapter>("not json at all"));
    CHECK_THROWS_WITH_AS(broken.extract("c", "l"), doctest::Contains("not json at all"),
                         AdapterError);

    StructuredExtractor missing(
        std::make_shared<CannedAdapter>(R"({"foreground": [], "background": []})"));
    CHECK_THROWS_AS(missing.extract("c", "l"), AdapterError);
}

TEST_CASE("captions naming only the class object extract to nothing") {
    RuleBasedExtractor extractor;
    FeatureExtraction fx = extractor.extract("a photo of a triangle", "triangle");
    CHECK(fx.foreground.empty());
    CHECK(fx.background.empty());
    CHECK(fx.alt_background.empty());
}

TEST_CASE("template captions extract to the exact scene graph") {
    auto bench = small_bench();
    RuleBasedExtractor extractor;
    int checked = 0;
    for (const auto& item : bench->train().items) {
        const synth::SceneSpec spec = bench->scene(item.id);
        FeatureExtraction fx = extractor.extract(bench->oracle_caption(item.id), item.label);

        std::vector<std::string> expected_fg;
        if (spec.patch) expected_fg.push_back(*spec.patch);
        CHECK(fx.foreground == expected_fg);
        CHECK(fx.background == std::vector<std::string>{spec.background + " background"});
        if (++checked == 20) break;
    }
    CHECK(checked == 20);
}

TEST_CASE("label exclusion holds for every extraction") {
    auto bench = small_bench();
    RuleBasedExtractor extractor;
    for (const auto& item : bench->train().items) {
        FeatureExtraction fx = extractor.extract(bench->oracle_caption(item.id), item.label);
        for (const auto& phrase : fx.foreground) {
            CHECK_FALSE(phrase_matches_label(phrase, item.label));
            CHECK(phrase == normalize_phrase(phrase));
        }
        CHECK(fx.background.size() <= 1);
        CHECK(fx.alt_background.size() <= 1);
        if (fx.background.empty()) CHECK(fx.alt_background.empty());
    }
}

TEST_CASE("per-image caption failures do not poison the batch") {
    auto bench = small_bench();
    std::vector<const LabeledImage*> images;
    for (std::size_t i = 0; i < 10; ++i) images.push_back(&bench->train().items[i]);

    FlakyCaptioner captioner(images[3]->id);
    CaptionBatch batch = caption_images(images, captioner);
    CHECK(batch.records.size() == 9);
    REQUIRE(batch.failures.size() == 1);
    CHECK(batch.failures[0].image_id == images[3]->id);
}

TEST_CASE("caption cache short-circuits the adapter") {
    auto bench = small_bench();
    std::vector<const LabeledImage*> images;
    for (std::size_t i = 0; i < 6; ++i) images.push_back(&bench->train().items[i]);

    auto counters = std::make_shared<AdapterCallCounters>();
    CountingCaptioner captioner(std::make_shared<OracleCaptioner>(bench), counters);

    auto dir = aspire::testing::scratch_dir("capcache");
    CaptionCache cache(dir / "captions.jsonl");
    caption_images(images, captioner, &cache);
    CHECK(counters->count(captioner.id()) == 6);

    CaptionCache reopened(dir / "captions.jsonl");
    CaptionBatch warm = caption_images(images, captioner, &reopened);
    CHECK(warm.records.size() == 6);
    CHECK(counters->count(captioner.id()) == 6);  // zero new adapter calls
    std::filesystem::remove_all(dir);
}

TEST_CASE("extraction cache is keyed by caption, label and extractor") {
    auto counters = std::make_shared<AdapterCallCounters>();
    CountingExtractor extractor(std::make_shared<RuleBasedExtractor>(), counters);

    auto dir = aspire::testing::scratch_dir("fxcache");
    ExtractionCache cache(dir / "extractions.jsonl");

    extract_cached("a circle on a red background", "circle", "img1", extractor, &cache);
    CHECK(counters->count(extractor.id()) == 1);
    FeatureExtraction fx =
        extract_cached("a circle on a red background", "circle", "img1", extractor, &cache);
    CHECK(counters->count(extractor.id()) == 1);
    CHECK(fx.background == std::vector<std::string>{"red background"});

    // different label -> cache miss
    extract_cached("a circle on a red background", "square", "img2", extractor, &cache);
    CHECK(counters->count(extractor.id()) == 2);
    std::filesystem::remove_all(dir);
}

TEST_CASE("alternate background suggestions never echo the input") {
    auto bench = small_bench();
    OracleAltBackground oracle(bench);
    for (int i = 0; i < 100; ++i) {
        const auto& color = synth::full_palette()[i % synth::full_palette().size()];
        std::string alt = suggest_alt_background(color.name + " background", oracle);
        CHECK(phrase_root(alt) != phrase_root(color.name + " background"));
    }

    TableAltBackground table;
    CHECK(table.suggest("snow") == "desert");
    CHECK(suggest_alt_background("snow", table) == "desert");

    EchoAlt echo;
    CHECK_THROWS_AS(suggest_alt_background("snow", echo), AdapterError);
    CHECK_THROWS_AS(suggest_alt_background("", echo), ConfigError);
}

TEST_CASE("rule-based extraction is deterministic") {
    RuleBasedExtractor extractor;
    const std::string caption = "a girl on a balance beam in a gym";
    FeatureExtraction a = extractor.extract(caption, "Balance Beam");
    FeatureExtraction b = extractor.extract(caption, "Balance Beam");
    CHECK(a.foreground == b.foreground);
    CHECK(a.background == b.background);
}
