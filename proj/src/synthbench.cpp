#include "aspire/synthbench.hpp"

#include <algorithm>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include "aspire/common.hpp"
#include "aspire/text.hpp"

namespace aspire::synth {

using nlohmann::json;

const std::vector<PaletteColor>& class_colors() {
    static const std::vector<PaletteColor> colors = {
        {"red", {220, 50, 47}},    {"blue", {38, 110, 220}},   {"green", {50, 160, 70}},
        {"yellow", {235, 200, 40}}, {"purple", {140, 80, 200}}, {"orange", {230, 130, 30}},
        {"teal", {30, 170, 170}},  {"magenta", {210, 60, 160}},
    };
    return colors;
}

const std::vector<PaletteColor>& neutral_colors() {
    static const std::vector<PaletteColor> colors = {
        {"slate", {115, 125, 140}},
        {"tan", {205, 180, 140}},
    };
    return colors;
}

const std::vector<PaletteColor>& reserve_colors() {
    static const std::vector<PaletteColor> colors = {
        {"charcoal", {52, 56, 60}},
        {"ivory", {242, 238, 220}},
    };
    return colors;
}

const std::vector<PaletteColor>& full_palette() {
    static const std::vector<PaletteColor> all = [] {
        std::vector<PaletteColor> v = class_colors();
        for (const auto& c : neutral_colors()) v.push_back(c);
        for (const auto& c : reserve_colors()) v.push_back(c);
        return v;
    }();
    return all;
}

const std::vector<std::string>& shape_catalog() {
    static const std::vector<std::string> shapes = {
        "triangle", "square", "circle", "cross", "diamond",
        "ring",     "bar",    "wedge",  "arrow", "hexagon",
    };
    return shapes;
}

const std::vector<std::string>& decal_catalog() {
    static const std::vector<std::string> decals = {
        "dot cluster", "stripe tag", "ring mark", "corner studs",
        "tick marks",  "checker chip", "pip trio", "bar code",
    };
    return decals;
}

std::optional<PaletteColor> color_by_name(const std::string& name) {
    for (const auto& c : full_palette())
        if (c.name == name) return c;
    return std::nullopt;
}

std::optional<std::string> color_from_phrase(const std::string& phrase) {
    for (const auto& tok : tokenize_words(phrase))
        if (color_by_name(tok)) return tok;
    return std::nullopt;
}

namespace {

bool inside_shape(const std::string& shape, int dx, int dy, int r) {
    const int ax = std::abs(dx), ay = std::abs(dy);
    const long d2 = static_cast<long>(dx) * dx + static_cast<long>(dy) * dy;
    const long r2 = static_cast<long>(r) * r;
    if (shape == "triangle") return dy >= -r && dy <= r && 2 * ax <= dy + r;
    if (shape == "square") return 4 * ax <= 3 * r && 4 * ay <= 3 * r;
    if (shape == "circle") return 25 * d2 <= 16 * r2;
    if (shape == "cross") return (3 * ax <= r && ay <= r) || (3 * ay <= r && ax <= r);
    if (shape == "diamond") return ax + ay <= r;
    if (shape == "ring") return 25 * d2 <= 16 * r2 && 400 * d2 >= 81 * r2;
    if (shape == "bar") return ax <= r && 3 * ay <= r;
    if (shape == "wedge") return 4 * ax <= 3 * r && 4 * ay <= 3 * r && dx + dy >= 0;
    if (shape == "arrow")
        return (dy >= -r && dy <= 0 && 2 * ax <= dy + r) || (dy > 0 && dy <= r && 4 * ax <= r);
    if (shape == "hexagon") return ay <= r && 8 * ax <= 7 * r && 2 * ax + ay <= (3 * r) / 2;
    throw DataError("unknown shape: " + shape);
}

const std::vector<std::pair<int, int>>& decal_pattern(const std::string& decal) {
    static const std::map<std::string, std::vector<std::pair<int, int>>> patterns = [] {
        std::map<std::string, std::vector<std::pair<int, int>>> p;
        p["dot cluster"] = {{0, 1}, {2, 0}, {4, 1}, {1, 3}, {3, 3}, {5, 4}, {2, 5}};
        std::vector<std::pair<int, int>> stripes, checker;
        for (int y = 0; y < 6; ++y)
            for (int x = 0; x < 6; ++x) {
                if ((x + y) % 3 == 0) stripes.push_back({x, y});
                if ((x + y) % 2 == 0) checker.push_back({x, y});
            }
        p["stripe tag"] = stripes;
        p["checker chip"] = checker;
        std::vector<std::pair<int, int>> ring;
        for (int i = 0; i < 6; ++i) {
            ring.push_back({i, 0});
            ring.push_back({i, 5});
            ring.push_back({0, i});
            ring.push_back({5, i});
        }
        p["ring mark"] = ring;
        p["corner studs"] = {{0, 0}, {1, 0}, {0, 1}, {4, 0}, {5, 0}, {5, 1},
                             {0, 4}, {0, 5}, {1, 5}, {4, 5}, {5, 5}, {5, 4}};
        p["tick marks"] = {{1, 0}, {1, 1}, {1, 2}, {4, 3}, {4, 4}, {4, 5}};
        p["pip trio"] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}, {4, 0}, {5, 0},
                         {4, 1}, {5, 1}, {2, 4}, {3, 4}, {2, 5}, {3, 5}};
        p["bar code"] = {{0, 0}, {0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}, {2, 0}, {2, 1}, {2, 2},
                         {2, 3}, {2, 4}, {2, 5}, {5, 0}, {5, 1}, {5, 2}, {5, 3}, {5, 4}, {5, 5}};
        return p;
    }();
    auto it = patterns.find(decal);
    if (it == patterns.end()) throw DataError("unknown decal: " + decal);
    return it->second;
}

constexpr int kDecalSize = 6;

}  // namespace

Image render(const SceneSpec& spec, int height, int width) {
    auto bg = color_by_name(spec.background);
    if (!bg) throw DataError("unknown background color: " + spec.background);

    Image img(height, width, 3);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = bg->rgb[c];

    Rng base(spec.jitter_seed);
    Rng shape_rng = base.fork("shape");
    const int margin = 8;
    const int cx = static_cast<int>(shape_rng.between(margin, width - margin - 1));
    const int cy = static_cast<int>(shape_rng.between(margin, height - margin - 1));
    const int r = static_cast<int>(shape_rng.between(4, 9));
    const int gray = static_cast<int>(shape_rng.between(125, 180));
    for (int y = std::max(0, cy - r); y <= std::min(height - 1, cy + r); ++y)
        for (int x = std::max(0, cx - r); x <= std::min(width - 1, cx + r); ++x)
            if (inside_shape(spec.shape, x - cx, y - cy, r))
                for (int c = 0; c < 3; ++c) img.at(y, x, c) = static_cast<std::uint8_t>(gray);

    if (spec.patch) {
        Rng patch_rng = base.fork("patch");
        const int corner = static_cast<int>(patch_rng.below(4));
        const int jx = static_cast<int>(patch_rng.below(3));
        const int jy = static_cast<int>(patch_rng.below(3));
        const int x0 = (corner % 2 == 0) ? 2 + jx : width - 2 - kDecalSize - jx;
        const int y0 = (corner / 2 == 0) ? 2 + jy : height - 2 - kDecalSize - jy;
        for (const auto& [dx, dy] : decal_pattern(*spec.patch)) {
            int x = x0 + dx, y = y0 + dy;
            if (x >= 0 && x < width && y >= 0 && y < height)
                for (int c = 0; c < 3; ++c) img.at(y, x, c) = 250;
        }
    }
    return img;
}

std::string caption_for(const SceneSpec& spec) {
    auto article = [](const std::string& word) {
        if (word.empty()) return std::string("a");
        char c = word.front();
        return (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') ? std::string("an")
                                                                          : std::string("a");
    };
    std::string caption = article(spec.shape) + " " + spec.shape;
    if (spec.patch) caption += " with " + article(*spec.patch) + " " + *spec.patch;
    caption += " on " + article(spec.background) + " " + spec.background + " background";
    return caption;
}

json BenchConfig::to_json() const {
    return json{{"n_classes", n_classes},
                {"per_class_train", per_class_train},
                {"spurious_rate", spurious_rate},
                {"height", height},
                {"width", width},
                {"seed", seed}};
}

BenchConfig BenchConfig::from_json(const json& j) {
    BenchConfig cfg;
    cfg.n_classes = j.at("n_classes").get<int>();
    cfg.per_class_train = j.at("per_class_train").get<int>();
    cfg.spurious_rate = j.at("spurious_rate").get<double>();
    cfg.height = j.value("height", 32);
    cfg.width = j.value("width", 32);
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

LabeledImage Benchmark::materialize(const SceneSpec& spec, const std::string& label,
                                    std::optional<std::string> group, Origin origin) {
    LabeledImage img =
        LabeledImage::make(render(spec, cfg_.height, cfg_.width), label, std::move(group), origin);
    std::lock_guard<std::mutex> lock(mutex_);
    scenes_[img.id] = spec;
    label_of_[img.id] = label;
    return img;
}

std::shared_ptr<Benchmark> Benchmark::make(const BenchConfig& cfg) {
    if (cfg.n_classes < 2) throw ConfigError("benchmark needs at least 2 classes");
    if (cfg.n_classes > static_cast<int>(class_colors().size()))
        throw ConfigError("benchmark supports at most " +
                          std::to_string(class_colors().size()) + " classes");
    if (cfg.per_class_train < 1) throw ConfigError("per_class_train must be >= 1");
    if (cfg.spurious_rate < 0.0 || cfg.spurious_rate > 1.0)
        throw ConfigError("spurious_rate must be in [0, 1]");
    if (cfg.height < 24 || cfg.width < 24 || cfg.height > 256 || cfg.width > 256)
        throw ConfigError("image size must be between 24 and 256 pixels");

    const int n_majority = static_cast<int>(cfg.spurious_rate * cfg.per_class_train);
    const int n_minority = cfg.per_class_train - n_majority;
    if (cfg.spurious_rate > 0.0 && cfg.spurious_rate < 1.0 && (n_majority < 1 || n_minority < 1))
        throw ConfigError("spurious_rate " + std::to_string(cfg.spurious_rate) +
                          " leaves an empty group at per_class_train " +
                          std::to_string(cfg.per_class_train));

    auto bench = std::shared_ptr<Benchmark>(new Benchmark());
    bench->cfg_ = cfg;

    auto& train = bench->train_;
    auto& test = bench->test_;
    for (GroupedDataset* ds : {&train, &test}) {
        ds->height = cfg.height;
        ds->width = cfg.width;
        ds->channels = 3;
    }
    train.name = "synthbench-train";
    test.name = "synthbench-test";

    std::map<std::string, std::vector<std::string>> schema;
    Rng rng(cfg.seed ^ fnv1a64("synthbench"));
    std::set<std::string> seen_ids;

    for (int i = 0; i < cfg.n_classes; ++i) {
        const std::string label = shape_catalog()[i];
        const std::string decal = decal_catalog()[i];
        const std::string color = class_colors()[i].name;
        train.classes.push_back(label);
        test.classes.push_back(label);
        schema[label] = {label + ":majority", label + ":minority"};
        bench->truth_[label] = ClassTruth{decal, color + " background"};

        // Training minorities sit on the OTHER classes' correlated colors
        // (the waterbird-on-land structure): the planted background is then
        // genuinely anti-predictive without its decal, which is what an edit
        // probe exploits. Test minorities wear neutral colors, so a
        // color-reliant classifier has nothing to fall back on there.
        std::vector<std::string> train_minority_pool;
        for (int j = 0; j < cfg.n_classes; ++j)
            if (j != i) train_minority_pool.push_back(class_colors()[j].name);
        std::vector<std::string> test_minority_pool;
        for (const auto& c : neutral_colors()) test_minority_pool.push_back(c.name);

        auto emit = [&](GroupedDataset& ds, bool majority, int count, Origin origin,
                        const std::vector<std::string>& pool) {
            const std::string group = label + (majority ? ":majority" : ":minority");
            for (int k = 0; k < count; ++k) {
                for (;;) {
                    SceneSpec spec;
                    spec.shape = label;
                    spec.jitter_seed = rng.next_u64();
                    if (majority) {
                        spec.patch = decal;
                        spec.background = color;
                    } else {
                        spec.background = pool[rng.below(pool.size())];
                    }
                    LabeledImage img = bench->materialize(spec, label, group, origin);
                    if (seen_ids.insert(img.id).second) {
                        ds.items.push_back(std::move(img));
                        break;
                    }
                }
            }
        };

        emit(train, true, n_majority, Origin::train, train_minority_pool);
        emit(train, false, n_minority, Origin::train, train_minority_pool);
        const int per_test_group = std::max(1, cfg.per_class_train / 4);
        emit(test, true, per_test_group, Origin::train, train_minority_pool);
        emit(test, false, per_test_group, Origin::train, test_minority_pool);
    }

    train.group_schema = schema;
    test.group_schema = schema;
    train.validate();
    test.validate();
    return bench;
}

std::map<std::string, std::vector<std::string>> Benchmark::ground_truth_phrases() const {
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& [cls, truth] : truth_)
        out[cls] = {truth.patch_phrase, truth.background_phrase};
    return out;
}

bool Benchmark::knows(const std::string& image_id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return scenes_.count(image_id) > 0;
}

SceneSpec Benchmark::scene(const std::string& image_id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = scenes_.find(image_id);
    if (it == scenes_.end()) throw DataError("unknown image id: " + image_id);
    return it->second;
}

std::string Benchmark::oracle_caption(const std::string& image_id) const {
    return caption_for(scene(image_id));
}

std::optional<LabeledImage> Benchmark::oracle_remove(const std::string& image_id,
                                                     const std::string& phrase) {
    SceneSpec spec = scene(image_id);
    const std::string root = phrase_root(phrase);
    if (root == phrase_root(spec.shape))
        throw DataError("refusing to remove the class object '" + spec.shape + "' from " +
                        image_id);
    if (!spec.patch || root != phrase_root(*spec.patch)) return std::nullopt;

    std::string label;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        label = label_of_.at(image_id);
    }
    SceneSpec edited = spec;
    edited.patch.reset();
    return materialize(edited, label, std::nullopt, Origin::edited);
}

LabeledImage Benchmark::oracle_swap_background(const std::string& image_id,
                                               const std::string& from, const std::string& to) {
    SceneSpec spec = scene(image_id);
    auto from_color = color_from_phrase(from);
    if (!from_color || *from_color != spec.background)
        throw DataError("background '" + from + "' does not match the scene (" + spec.background +
                        ") for " + image_id);
    auto to_color = color_from_phrase(to);
    if (!to_color) throw DataError("unknown target background: " + to);
    if (*to_color == spec.background)
        throw DataError("target background equals the current background: " + to);

    std::string label;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        label = label_of_.at(image_id);
    }
    SceneSpec edited = spec;
    edited.background = *to_color;
    return materialize(edited, label, std::nullopt, Origin::edited);
}

std::string Benchmark::suggest_alt_background(const std::string& background_phrase) const {
    auto current = color_from_phrase(background_phrase);
    // A contrasting background is another class's typical one (water -> land);
    // colors outside the rendered distribution fall back to the reserves.
    if (current) {
        for (int i = 0; i < cfg_.n_classes; ++i) {
            if (class_colors()[i].name == *current)
                return class_colors()[(i + 1) % cfg_.n_classes].name + " background";
        }
    }
    for (const auto& c : reserve_colors())
        if (!current || c.name != *current) return c.name + " background";
    return neutral_colors().front().name + " background";
}

std::vector<LabeledImage> Benchmark::oracle_generate(const std::string& cls, int count,
                                                     const std::set<std::string>& excluded_phrases,
                                                     std::uint64_t stream_seed) {
    if (count <= 0) throw ConfigError("generation count must be positive, got " +
                                      std::to_string(count));
    if (!train_.has_class(cls)) throw ConfigError("unknown class: " + cls);

    std::set<std::string> excluded_colors;
    bool patch_excluded = false;
    const ClassTruth& truth = truth_.at(cls);
    for (const auto& raw : excluded_phrases) {
        const std::string phrase = normalize_phrase(raw);
        if (phrase_root(phrase) == phrase_root(truth.patch_phrase)) patch_excluded = true;
        if (auto color = color_from_phrase(phrase)) excluded_colors.insert(*color);
    }

    std::vector<std::string> pool;
    for (const auto& c : full_palette())
        if (!excluded_colors.count(c.name)) pool.push_back(c.name);
    if (pool.empty()) throw ConfigError("every palette color is excluded");

    Rng rng(cfg_.seed ^ stream_seed ^ fnv1a64("generate:" + cls));
    std::set<std::string> ids;
    std::vector<LabeledImage> out;
    out.reserve(count);
    while (static_cast<int>(out.size()) < count) {
        SceneSpec spec;
        spec.shape = cls;
        spec.background = pool[rng.below(pool.size())];
        if (!patch_excluded) spec.patch = decal_catalog()[static_cast<std::size_t>(
            std::find(train_.classes.begin(), train_.classes.end(), cls) -
            train_.classes.begin())];
        spec.jitter_seed = rng.next_u64();
        LabeledImage img = materialize(spec, cls, std::nullopt, Origin::generated);
        if (ids.insert(img.id).second) out.push_back(std::move(img));
    }
    return out;
}

void Benchmark::save(const std::filesystem::path& dir) const {
    save_dataset(train_, dir / "train");
    save_dataset(test_, dir / "test");

    json truth = json::object();
    for (const auto& [cls, t] : truth_)
        truth[cls] = json{{"patch", t.patch_phrase}, {"background", t.background_phrase}};
    atomic_write(dir / "ground_truth.json", json{{"classes", truth}}.dump(2) + "\n");

    json scenes = json::object();
    {
        std::lock_guard<std::mutex> lock(mutex_);
        for (const auto& [id, spec] : scenes_) {
            json s{{"shape", spec.shape},
                   {"background", spec.background},
                   {"jitter_seed", spec.jitter_seed},
                   {"label", label_of_.at(id)}};
            if (spec.patch) s["patch"] = *spec.patch;
            scenes[id] = std::move(s);
        }
    }
    atomic_write(dir / "bench.json",
                 json{{"config", cfg_.to_json()}, {"scenes", scenes}}.dump() + "\n");
}

std::shared_ptr<Benchmark> Benchmark::load(const std::filesystem::path& dir) {
    json bench_json = json::parse(read_file(dir / "bench.json"));
    auto bench = std::shared_ptr<Benchmark>(new Benchmark());
    bench->cfg_ = BenchConfig::from_json(bench_json.at("config"));
    bench->train_ = load_dataset(dir / "train");
    bench->test_ = load_dataset(dir / "test");

    json truth = json::parse(read_file(dir / "ground_truth.json"));
    for (const auto& [cls, t] : truth.at("classes").items())
        bench->truth_[cls] =
            ClassTruth{t.at("patch").get<std::string>(), t.at("background").get<std::string>()};

    for (const auto& [id, s] : bench_json.at("scenes").items()) {
        SceneSpec spec;
        spec.shape = s.at("shape").get<std::string>();
        spec.background = s.at("background").get<std::string>();
        spec.jitter_seed = s.at("jitter_seed").get<std::uint64_t>();
        if (s.contains("patch")) spec.patch = s.at("patch").get<std::string>();
        bench->scenes_[id] = spec;
        bench->label_of_[id] = s.at("label").get<std::string>();
    }
    return bench;
}

std::shared_ptr<Benchmark> make_benchmark(const BenchConfig& cfg) {
    return Benchmark::make(cfg);
}

}  // namespace aspire::synth
