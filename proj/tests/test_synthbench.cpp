#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "aspire/common.hpp"
#include "aspire/synthbench.hpp"
#include "helpers.hpp"

using namespace aspire;
using namespace aspire::synth;

namespace {

BenchConfig small_cfg() {
    BenchConfig cfg;
    cfg.n_classes = 2;
    cfg.per_class_train = 100;
    cfg.spurious_rate = 0.95;
    cfg.seed = 7;
    return cfg;
}

int count_group(const GroupedDataset& ds, const std::string& group) {
    int n = 0;
    for (const auto& item : ds.items)
        if (item.group == group) ++n;
    return n;
}

}  // namespace

TEST_CASE("make_benchmark: rho 0.95 splits 95/5 and balances the test 25/25") {
    auto bench = make_benchmark(small_cfg());
    const auto& train = bench->train();
    const auto& test = bench->test();

    for (const auto& cls : train.classes) {
        CHECK(count_group(train, cls + ":majority") == 95);
        CHECK(count_group(train, cls + ":minority") == 5);
        CHECK(count_group(test, cls + ":majority") == 25);
        CHECK(count_group(test, cls + ":minority") == 25);
    }
    CHECK(train.items.size() == 200);
    CHECK(test.items.size() == 100);

    // Ground truth names exactly the planted decal and background per class.
    for (const auto& cls : train.classes) {
        const ClassTruth& truth = bench->ground_truth().at(cls);
        CHECK_FALSE(truth.patch_phrase.empty());
        CHECK(truth.background_phrase.find("background") != std::string::npos);
    }
}

TEST_CASE("make_benchmark: rho boundaries") {
    BenchConfig cfg = small_cfg();
    cfg.spurious_rate = 0.0;
    auto all_minority = make_benchmark(cfg);
    for (const auto& item : all_minority->train().items)
        CHECK(item.group->find(":minority") != std::string::npos);
    CHECK(all_minority->ground_truth().size() == 2);  // features still planted/named

    cfg.spurious_rate = 1.0;
    auto no_minority = make_benchmark(cfg);
    for (const auto& cls : no_minority->train().classes)
        CHECK(count_group(no_minority->train(), cls + ":minority") == 0);
}

TEST_CASE("make_benchmark: degenerate configs are rejected") {
    BenchConfig cfg = small_cfg();
    cfg.n_classes = 0;
    CHECK_THROWS_AS(make_benchmark(cfg), ConfigError);
    cfg = small_cfg();
    cfg.per_class_train = 0;
    CHECK_THROWS_AS(make_benchmark(cfg), ConfigError);
    cfg = small_cfg();
    cfg.per_class_train = 10;
    cfg.spurious_rate = 0.05;  // leaves an empty majority group
    CHECK_THROWS_AS(make_benchmark(cfg), ConfigError);
}

TEST_CASE("scene rendering is deterministic and the core shape is always drawn") {
    SceneSpec spec{"triangle", "dot cluster", "red", 1234};
    Image a = render(spec, 32, 32);
    Image b = render(spec, 32, 32);
    CHECK(a == b);

    // Some pixels differ from the background: the shape is present.
    SceneSpec no_patch = spec;
    no_patch.patch.reset();
    Image c = render(no_patch, 32, 32);
    int non_background = 0;
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            if (c.at(y, x, 0) != 220) ++non_background;
    CHECK(non_background > 20);
}

TEST_CASE("oracle captions follow the template") {
    auto bench = make_benchmark(small_cfg());
    for (const auto& item : bench->train().items) {
        const SceneSpec spec = bench->scene(item.id);
        const std::string caption = bench->oracle_caption(item.id);
        CHECK(caption == bench->oracle_caption(item.id));  // determinism
        CHECK(caption.find(spec.shape) != std::string::npos);
        CHECK(caption.find(spec.background + " background") != std::string::npos);
        if (spec.patch) {
            CHECK(caption.find(*spec.patch) != std::string::npos);
        } else {
            CHECK(caption.find("with") == std::string::npos);
        }
    }
    CHECK_THROWS_AS(bench->oracle_caption("nope"), DataError);
}

TEST_CASE("oracle_remove re-renders exactly the minority scene") {
    auto bench = make_benchmark(small_cfg());
    const auto& train = bench->train();
    int checked = 0;
    for (const auto& item : train.items) {
        const SceneSpec spec = bench->scene(item.id);
        if (!spec.patch) continue;
        auto edited = bench->oracle_remove(item.id, *spec.patch);
        REQUIRE(edited.has_value());

        SceneSpec minority = spec;
        minority.patch.reset();
        CHECK(edited->pixels == render(minority, 32, 32));
        CHECK(edited->label == item.label);
        if (++checked == 8) break;
    }
    CHECK(checked == 8);
}

TEST_CASE("oracle_remove refuses the class shape and reports unknown phrases") {
    auto bench = make_benchmark(small_cfg());
    const auto& item = bench->train().items.front();
    CHECK_THROWS_AS(bench->oracle_remove(item.id, item.label), DataError);
    CHECK_FALSE(bench->oracle_remove(item.id, "flying saucer").has_value());
}

TEST_CASE("background swap is an involution") {
    auto bench = make_benchmark(small_cfg());
    const auto& item = bench->train().items.front();
    const SceneSpec spec = bench->scene(item.id);
    REQUIRE(spec.background == "red");

    LabeledImage swapped = bench->oracle_swap_background(item.id, "red background", "blue background");
    CHECK(swapped.pixels != item.pixels);
    LabeledImage back = bench->oracle_swap_background(swapped.id, "blue", "red");
    CHECK(back.pixels == item.pixels);
    CHECK(back.id == item.id);

    CHECK_THROWS_AS(bench->oracle_swap_background(item.id, "green background", "blue background"),
                    DataError);
    CHECK_THROWS_AS(bench->oracle_swap_background(item.id, "red", "red background"), DataError);
}

TEST_CASE("suggest_alt_background always differs from the input") {
    auto bench = make_benchmark(small_cfg());
    for (const auto& color : full_palette()) {
        std::string alt = bench->suggest_alt_background(color.name + " background");
        CHECK(color_from_phrase(alt).has_value());
        CHECK(*color_from_phrase(alt) != color.name);
    }
}

TEST_CASE("oracle_generate respects exclusions and stays diverse") {
    auto bench = make_benchmark(small_cfg());
    const std::string cls = bench->train().classes.front();
    const ClassTruth& truth = bench->ground_truth().at(cls);

    auto generated =
        bench->oracle_generate(cls, 100, {truth.patch_phrase, truth.background_phrase}, 5);
    REQUIRE(generated.size() == 100);

    std::set<std::string> ids, backgrounds;
    for (const auto& img : generated) {
        CHECK(img.origin == Origin::generated);
        CHECK(img.label == cls);
        const SceneSpec spec = bench->scene(img.id);
        CHECK_FALSE(spec.patch.has_value());
        CHECK(spec.background + " background" != truth.background_phrase);
        ids.insert(img.id);
        backgrounds.insert(spec.background);
    }
    CHECK(ids.size() == 100);
    CHECK(backgrounds.size() >= 2);

    CHECK_THROWS_AS(bench->oracle_generate(cls, 0, {}, 1), ConfigError);
    CHECK_THROWS_AS(bench->oracle_generate("nope", 3, {}, 1), ConfigError);
}

TEST_CASE("benchmarks are reproducible and survive a save/load round trip") {
    auto a = make_benchmark(small_cfg());
    auto b = make_benchmark(small_cfg());
    REQUIRE(a->train().items.size() == b->train().items.size());
    for (std::size_t i = 0; i < a->train().items.size(); ++i)
        CHECK(a->train().items[i].id == b->train().items[i].id);

    auto dir = aspire::testing::scratch_dir("bench");
    a->save(dir);
    auto loaded = Benchmark::load(dir);
    CHECK(loaded->train().items.size() == a->train().items.size());
    const auto& item = loaded->train().items.front();
    CHECK(loaded->oracle_caption(item.id) == a->oracle_caption(item.id));
    const SceneSpec spec = loaded->scene(item.id);
    if (spec.patch) CHECK(loaded->oracle_remove(item.id, *spec.patch).has_value());
    std::filesystem::remove_all(dir);
}
