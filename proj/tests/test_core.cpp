#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "aspire/common.hpp"
#include "aspire/core.hpp"
#include "helpers.hpp"

using namespace aspire;
using aspire::testing::make_fixture;
using aspire::testing::scratch_dir;
using aspire::testing::tagged_image;

namespace {

std::map<std::string, std::string> predictions_with_errors(const GroupedDataset& ds,
                                                           std::size_t wrong_every = 0) {
    std::map<std::string, std::string> preds;
    std::size_t i = 0;
    for (const auto& item : ds.items) {
        bool wrong = wrong_every > 0 && (i % wrong_every == wrong_every - 1);
        preds[item.id] = wrong ? "##wrong##" : item.label;
        ++i;
    }
    return preds;
}

}  // namespace

TEST_CASE("evaluate: three groups 9/10, 4/10, 8/10") {
    GroupedDataset ds = make_fixture("m", {"a", "b"},
                                     {{"a", "g1", 10}, {"a", "g2", 10}, {"a", "g3", 10}});
    std::map<std::string, std::string> preds;
    const int correct_per_group[] = {9, 4, 8};
    for (int g = 0; g < 3; ++g)
        for (int i = 0; i < 10; ++i)
            preds[ds.items[g * 10 + i].id] = i < correct_per_group[g] ? "a" : "b";

    Metrics m = evaluate(preds, ds);
    CHECK(m.worst_group_accuracy == doctest::Approx(0.4));
    CHECK(m.average_accuracy == doctest::Approx(0.7));
    CHECK(m.per_group_accuracy.at("g1") == doctest::Approx(0.9));
}

TEST_CASE("evaluate: all correct is exactly 1.0") {
    GroupedDataset ds = make_fixture("m", {"a"}, {{"a", "g1", 4}, {"a", "g2", 4}});
    Metrics m = evaluate(predictions_with_errors(ds), ds);
    CHECK(m.worst_group_accuracy == 1.0);
    CHECK(m.average_accuracy == 1.0);
}

TEST_CASE("evaluate: 12-item 4-group fixture equals the hand-computed table") {
    // Groups of 3; correct counts 3, 2, 1, 0.
    // Hand table: g1 3/3=1.0, g2 2/3, g3 1/3, g4 0/3; worst 0; average 6/12.
    GroupedDataset ds = make_fixture(
        "m", {"a", "b"}, {{"a", "g1", 3}, {"a", "g2", 3}, {"b", "g3", 3}, {"b", "g4", 3}});
    std::map<std::string, std::string> preds;
    const int correct[] = {3, 2, 1, 0};
    for (int g = 0; g < 4; ++g)
        for (int i = 0; i < 3; ++i) {
            const auto& item = ds.items[g * 3 + i];
            preds[item.id] = i < correct[g] ? item.label : "##wrong##";
        }

    Metrics m = evaluate(preds, ds);
    CHECK(m.per_group_accuracy.at("g1") == doctest::Approx(1.0));
    CHECK(m.per_group_accuracy.at("g2") == doctest::Approx(2.0 / 3));
    CHECK(m.per_group_accuracy.at("g3") == doctest::Approx(1.0 / 3));
    CHECK(m.per_group_accuracy.at("g4") == doctest::Approx(0.0));
    CHECK(m.worst_group_accuracy == doctest::Approx(0.0));
    CHECK(m.average_accuracy == doctest::Approx(0.5));
}

TEST_CASE("evaluate: a small best group does not cap worst-group at average") {
    // Smallest group has the best accuracy; worst-group > average would be
    // the wrong assertion here, min(per_group) is the contract.
    GroupedDataset ds = make_fixture("m", {"a"}, {{"a", "big", 8}, {"a", "tiny", 2}});
    std::map<std::string, std::string> preds;
    for (int i = 0; i < 8; ++i) preds[ds.items[i].id] = i < 4 ? "a" : "##wrong##";
    preds[ds.items[8].id] = "a";
    preds[ds.items[9].id] = "a";

    Metrics m = evaluate(preds, ds);
    CHECK(m.per_group_accuracy.at("tiny") == doctest::Approx(1.0));
    CHECK(m.worst_group_accuracy == doctest::Approx(0.5));
    CHECK(m.average_accuracy == doctest::Approx(0.6));
    CHECK(m.worst_group_accuracy ==
          std::min_element(m.per_group_accuracy.begin(), m.per_group_accuracy.end(),
                           [](auto& a, auto& b) { return a.second < b.second; })
              ->second);
}

TEST_CASE("evaluate: permutation invariance over item order") {
    GroupedDataset ds = make_fixture("m", {"a", "b"}, {{"a", "g1", 5}, {"b", "g2", 5}});
    auto preds = predictions_with_errors(ds, 3);
    Metrics before = evaluate(preds, ds);

    GroupedDataset shuffled = ds;
    std::reverse(shuffled.items.begin(), shuffled.items.end());
    Metrics after = evaluate(preds, shuffled);
    CHECK(before.average_accuracy == after.average_accuracy);
    CHECK(before.worst_group_accuracy == after.worst_group_accuracy);
    CHECK(before.per_group_accuracy == after.per_group_accuracy);
}

TEST_CASE("evaluate errors") {
    GroupedDataset ds = make_fixture("m", {"a"}, {{"a", "g1", 3}});
    auto preds = predictions_with_errors(ds);
    preds.erase(ds.items[1].id);
    CHECK_THROWS_WITH_AS(evaluate(preds, ds), doctest::Contains(ds.items[1].id.c_str()),
                         DataError);

    GroupedDataset ungrouped = make_fixture("m", {"a"}, {{"a", "", 3}});
    CHECK_THROWS_AS(evaluate(predictions_with_errors(ungrouped), ungrouped), DataError);
}

TEST_CASE("evaluate_ungrouped keys per-group accuracy by class") {
    GroupedDataset ds = make_fixture("m", {"a", "b"}, {{"a", "", 4}, {"b", "", 4}});
    std::map<std::string, std::string> preds;
    for (int i = 0; i < 4; ++i) preds[ds.items[i].id] = "a";                  // all correct
    for (int i = 4; i < 8; ++i) preds[ds.items[i].id] = i < 6 ? "b" : "a";    // half correct

    Metrics m = evaluate_ungrouped(preds, ds);
    CHECK(m.per_group_accuracy.at("a") == doctest::Approx(1.0));
    CHECK(m.per_group_accuracy.at("b") == doctest::Approx(0.5));
    CHECK(m.worst_group_accuracy == doctest::Approx(0.5));

    GroupedDataset single = make_fixture("m", {"a"}, {{"a", "", 5}});
    Metrics s = evaluate_ungrouped(predictions_with_errors(single, 2), single);
    CHECK(s.worst_group_accuracy == s.average_accuracy);
}

TEST_CASE("evaluate_ungrouped equals a brute-force per-class tally on 15 classes") {
    std::vector<std::string> classes;
    std::vector<aspire::testing::ItemSpec> specs;
    for (int c = 0; c < 15; ++c) {
        classes.push_back("c" + std::to_string(c));
        specs.push_back({classes.back(), "", 4 + c % 3});
    }
    GroupedDataset ds = make_fixture("m", classes, specs);

    Rng rng(99);
    std::map<std::string, std::string> preds;
    for (const auto& item : ds.items)
        preds[item.id] = classes[rng.below(classes.size())];

    // Independent oracle: direct per-class tally.
    std::map<std::string, int> total, correct;
    int all = 0, all_correct = 0;
    for (const auto& item : ds.items) {
        total[item.label]++;
        ++all;
        if (preds.at(item.id) == item.label) {
            correct[item.label]++;
            ++all_correct;
        }
    }

    Metrics m = evaluate_ungrouped(preds, ds);
    CHECK(m.average_accuracy == doctest::Approx(double(all_correct) / all));
    double worst = 1.0;
    for (const auto& [cls, n] : total) {
        double acc = double(correct[cls]) / n;
        worst = std::min(worst, acc);
        CHECK(m.per_group_accuracy.at(cls) == doctest::Approx(acc));
    }
    CHECK(m.worst_group_accuracy == doctest::Approx(worst));
}

TEST_CASE("merge: waterbirds-shaped counts 4555 + 240 = 4795") {
    std::vector<std::string> classes = {"landbird", "waterbird"};
    GroupedDataset majority = make_fixture(
        "train", classes, {{"landbird", "landbird:majority", 3694}, {"waterbird", "waterbird:majority", 861}});
    GroupedDataset generated = make_fixture(
        "aug", classes, {{"landbird", "landbird:minority", 184}, {"waterbird", "waterbird:minority", 56}});
    // Distinct pixel tags across the two fixtures.
    for (auto& item : generated.items) {
        item.pixels.data[0] ^= 0xa5;
        item.id = LabeledImage::content_id(item.pixels, item.label);
    }

    REQUIRE(majority.items.size() == 4555);
    REQUIRE(generated.items.size() == 240);
    GroupedDataset merged = merge(majority, generated);
    CHECK(merged.items.size() == 4795);
    CHECK(merged.group_schema->at("landbird").size() == 2);
}

TEST_CASE("merge: identity, duplicates, and errors") {
    GroupedDataset ds = make_fixture("d", {"a", "b"}, {{"a", "", 5}, {"b", "", 5}});
    GroupedDataset empty;
    empty.name = "empty";
    empty.classes = ds.classes;
    empty.height = ds.height;
    empty.width = ds.width;
    empty.channels = ds.channels;

    GroupedDataset same = merge(ds, empty);
    CHECK(same.items.size() == ds.items.size());

    // 3 shared ids -> |a| + |b| - 3
    GroupedDataset other = make_fixture("o", {"a", "b"}, {{"a", "", 6}, {"b", "", 1}});
    for (int i = 0; i < 3; ++i) other.items[i] = ds.items[i];
    CHECK(merge(ds, other).items.size() == ds.items.size() + other.items.size() - 3);

    // idempotent on identical inputs
    CHECK(merge(ds, ds).items.size() == ds.items.size());

    // associative up to item order
    GroupedDataset third = make_fixture("t", {"a", "b"}, {{"b", "", 4}});
    for (auto& item : third.items) {
        item.pixels.data[1] ^= 0x3c;
        item.id = LabeledImage::content_id(item.pixels, item.label);
    }
    auto ids_of = [](const GroupedDataset& d) {
        std::vector<std::string> ids;
        for (const auto& i : d.items) ids.push_back(i.id);
        std::sort(ids.begin(), ids.end());
        return ids;
    };
    CHECK(ids_of(merge(merge(ds, other), third)) == ids_of(merge(ds, merge(other, third))));

    GroupedDataset wrong_classes = make_fixture("w", {"a", "c"}, {{"a", "", 2}});
    CHECK_THROWS_AS(merge(ds, wrong_classes), DataError);

    GroupedDataset wrong_dims = make_fixture("w", {"a", "b"}, {{"a", "", 2}}, 4, 4);
    CHECK_THROWS_AS(merge(ds, wrong_dims), DataError);
}

TEST_CASE("content id is deterministic and label-sensitive") {
    Image img = tagged_image(7);
    CHECK(LabeledImage::content_id(img, "a") == LabeledImage::content_id(img, "a"));
    CHECK(LabeledImage::content_id(img, "a") != LabeledImage::content_id(img, "b"));
    Image other = tagged_image(8);
    CHECK(LabeledImage::content_id(img, "a") != LabeledImage::content_id(other, "a"));
}

TEST_CASE("dataset manifest round-trip is byte-stable and id-preserving") {
    GroupedDataset ds = make_fixture("roundtrip", {"a", "b"},
                                     {{"a", "a:g", 3}, {"b", "b:g", 2}}, 4, 4);
    auto dir1 = scratch_dir("manifest1");
    auto dir2 = scratch_dir("manifest2");
    save_dataset(ds, dir1);
    GroupedDataset loaded = load_dataset(dir1);

    REQUIRE(loaded.items.size() == ds.items.size());
    for (std::size_t i = 0; i < ds.items.size(); ++i) {
        CHECK(loaded.items[i].id == ds.items[i].id);
        CHECK(loaded.items[i].pixels == ds.items[i].pixels);
        CHECK(loaded.items[i].origin == ds.items[i].origin);
    }

    save_dataset(loaded, dir2);
    CHECK(read_file(dir1 / "manifest.json") == read_file(dir2 / "manifest.json"));
    CHECK(read_file(dir1 / "images" / (ds.items[0].id + ".png")) ==
          read_file(dir2 / "images" / (ds.items[0].id + ".png")));

    std::filesystem::remove_all(dir1);
    std::filesystem::remove_all(dir2);
}

TEST_CASE("validate rejects contract violations") {
    GroupedDataset ds = make_fixture("v", {"a"}, {{"a", "g", 2}});
    GroupedDataset bad_label = ds;
    bad_label.items[0].label = "zz";
    CHECK_THROWS_AS(bad_label.validate(), DataError);

    GroupedDataset dup = ds;
    dup.items.push_back(dup.items[0]);
    CHECK_THROWS_AS(dup.validate(), DataError);

    GroupedDataset bad_group = ds;
    bad_group.items[0].group = "nope";
    CHECK_THROWS_AS(bad_group.validate(), DataError);
}
