#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <set>

#include "aspire/classifier.hpp"
#include "aspire/synthbench.hpp"
#include "helpers.hpp"

using namespace aspire;

namespace {

std::shared_ptr<synth::Benchmark> shared_bench() {
    static std::shared_ptr<synth::Benchmark> bench = [] {
        synth::BenchConfig cfg;
        cfg.n_classes = 2;
        cfg.per_class_train = 60;
        cfg.spurious_rate = 0.9;
        cfg.seed = 11;
        return synth::make_benchmark(cfg);
    }();
    return bench;
}

TrainConfig quick_cfg(Strategy strategy = Strategy::ERM, int epochs = 14, std::uint64_t seed = 3) {
    TrainConfig cfg;
    cfg.strategy = strategy;
    cfg.epochs = epochs;
    cfg.learning_rate = 0.02;
    cfg.seed = seed;
    cfg.strategy_params = {{"conv1", 6}, {"conv2", 12}};
    return cfg;
}

}  // namespace

TEST_CASE("TrainConfig defaults follow the reference recipe") {
    TrainConfig cfg;
    CHECK(cfg.strategy == Strategy::ERM);
    CHECK(cfg.epochs == 100);
    CHECK(cfg.learning_rate == doctest::Approx(1e-3));
    CHECK(cfg.weight_decay == doctest::Approx(1e-4));
}

TEST_CASE("TrainConfig validation") {
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("ERM training loss decreases and train accuracy converges") {
    auto bench = shared_bench();
    TrainedClassifier clf = train(bench->train(), quick_cfg(Strategy::ERM, 40));
    const auto& losses = clf.report().epoch_losses;
    REQUIRE(losses.size() == 40);
    CHECK(losses.back() < losses.front());

    auto preds = clf.predict_labels(bench->train());
    int correct = 0;
    for (const auto& item : bench->train().items)
        if (preds.at(item.id) == item.label) ++correct;
    CHECK(double(correct) / bench->train().items.size() >= 0.95);
}

TEST_CASE("prediction is deterministic, normalized, and dimension-checked") {
    auto bench = shared_bench();
    TrainedClassifier clf = train(bench->train(), quick_cfg());

    const LabeledImage& img = bench->test().items.front();
    Prediction a = clf.predict_one(img);
    Prediction b = clf.predict_one(img);
    CHECK(a.label == b.label);
    CHECK(a.scores == b.scores);

    double sum = std::accumulate(a.scores.begin(), a.scores.end(), 0.0);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));

    LabeledImage wrong_dims =
        LabeledImage::make(aspire::testing::tagged_image(1, 8, 8), bench->train().classes[0]);
    CHECK_THROWS_AS(clf.predict_one(wrong_dims), DataError);
}

TEST_CASE("group-dependent strategies reject ungrouped data") {
    auto bench = shared_bench();
    GroupedDataset ungrouped = bench->train();
    ungrouped.group_schema.reset();
    for (auto& item : ungrouped.items) item.group.reset();

    for (Strategy s : {Strategy::GroupDRO, Strategy::SUBG, Strategy::DFR})
        CHECK_THROWS_AS(train(ungrouped, quick_cfg(s, 2)), ConfigError);
    CHECK_NOTHROW(train(ungrouped, quick_cfg(Strategy::ERM, 2)));
}

TEST_CASE("SUBG subsamples exactly min-group-size items per group") {
    auto bench = shared_bench();  // groups sized 54/6 per class
    TrainedClassifier clf = train(bench->train(), quick_cfg(Strategy::SUBG, 6));
    const auto& ids = clf.report().subg_subset_ids;
    REQUIRE_FALSE(ids.empty());

    std::map<std::string, int> per_group;
    for (const auto& id : ids) {
        const LabeledImage* item = bench->train().find(id);
        REQUIRE(item != nullptr);
        per_group[*item->group]++;
    }
    REQUIRE(per_group.size() == 4);
    for (const auto& [group, count] : per_group) CHECK(count == 6);
}

TEST_CASE("JTT stage-1 error set equals the brute-force misclassified set") {
    auto bench = shared_bench();
    TrainConfig cfg = quick_cfg(Strategy::JTT, 10, 17);
    cfg.strategy_params["jtt_stage1_epochs"] = 3;
    TrainedClassifier jtt = train(bench->train(), cfg);

    // Independent check: reproduce stage 1 through the public ERM surface
    // and collect its errors directly.
    TrainConfig stage1_cfg = cfg;
    stage1_cfg.strategy = Strategy::ERM;
    stage1_cfg.epochs = 3;
    stage1_cfg.seed = cfg.seed ^ fnv1a64("jtt-stage1");
    TrainedClassifier stage1 = train(bench->train(), stage1_cfg);

    std::vector<std::string> expected;
    for (const auto& item : bench->train().items)
        if (stage1.predict_one(item).label != item.label) expected.push_back(item.id);
    std::sort(expected.begin(), expected.end());

    CHECK(jtt.report().jtt_error_ids == expected);
}

TEST_CASE("GroupDRO keeps its group weights on the probability simplex") {
    auto bench = shared_bench();
    TrainConfig cfg = quick_cfg(Strategy::GroupDRO, 5);
    cfg.strategy_params["dro_eta"] = 0.05;
    TrainedClassifier clf = train(bench->train(), cfg);

    const auto& history = clf.report().group_weight_history;
    REQUIRE_FALSE(history.empty());
    CHECK(clf.report().group_order.size() == 4);
    for (const auto& weights : history) {
        double sum = 0.0;
        for (double w : weights) {
            CHECK(w >= 0.0);
            sum += w;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("DFR touches only the linear head") {
    auto bench = shared_bench();
    TrainConfig erm_cfg = quick_cfg(Strategy::ERM, 8, 23);
    TrainConfig dfr_cfg = quick_cfg(Strategy::DFR, 8, 23);
    dfr_cfg.strategy_params["dfr_stage2_epochs"] = 4;

    TrainedClassifier erm = train(bench->train(), erm_cfg);
    TrainedClassifier dfr = train(bench->train(), dfr_cfg);

    auto erm_params = erm.named_params();
    auto dfr_params = dfr.named_params();
    // Feature tensors byte-identical to the stage-1 ERM run...
    CHECK(erm_params.at("conv1.weight") == dfr_params.at("conv1.weight"));
    CHECK(erm_params.at("conv1.bias") == dfr_params.at("conv1.bias"));
    CHECK(erm_params.at("conv2.weight") == dfr_params.at("conv2.weight"));
    CHECK(erm_params.at("conv2.bias") == dfr_params.at("conv2.bias"));
    // ...while the head was retrained.
    CHECK(erm_params.at("head.weight") != dfr_params.at("head.weight"));
}

TEST_CASE("checkpoints round-trip with provenance") {
    auto bench = shared_bench();
    TrainedClassifier clf = train(bench->train(), quick_cfg(Strategy::ERM, 4));
    auto dir = aspire::testing::scratch_dir("ckpt");
    clf.save(dir / "model.bin");

    TrainedClassifier loaded = TrainedClassifier::load(dir / "model.bin");
    CHECK(loaded.classes() == clf.classes());
    CHECK(loaded.config_hash() == clf.config_hash());
    CHECK(loaded.dataset_hash() == clf.dataset_hash());

    const LabeledImage& img = bench->test().items.front();
    CHECK(loaded.predict_one(img).label == clf.predict_one(img).label);
    CHECK(loaded.predict_one(img).scores == clf.predict_one(img).scores);
    std::filesystem::remove_all(dir);
}

TEST_CASE("training twice with the same seed gives identical models") {
    auto bench = shared_bench();
    TrainedClassifier a = train(bench->train(), quick_cfg(Strategy::ERM, 4, 5));
    TrainedClassifier b = train(bench->train(), quick_cfg(Strategy::ERM, 4, 5));
    CHECK(a.named_params() == b.named_params());
}

TEST_CASE("empty dataset is rejected") {
    GroupedDataset empty;
    empty.name = "empty";
    empty.classes = {"a"};
    empty.height = empty.width = 32;
    empty.channels = 3;
    CHECK_THROWS_AS(train(empty, quick_cfg()), DataError);
}
