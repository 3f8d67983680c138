#pragma once

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "aspire/core.hpp"

namespace aspire::synth {

struct PaletteColor {
    std::string name;
    std::array<std::uint8_t, 3> rgb;
};

// Class-correlated colors, neutral fillers, and reserve colors that never
// appear in rendered datasets (kept for contrasting-background suggestions).
const std::vector<PaletteColor>& class_colors();
const std::vector<PaletteColor>& neutral_colors();
const std::vector<PaletteColor>& reserve_colors();
const std::vector<PaletteColor>& full_palette();

const std::vector<std::string>& shape_catalog();
const std::vector<std::string>& decal_catalog();

std::optional<PaletteColor> color_by_name(const std::string& name);
/// "red background" -> "red"; returns the first palette color named in the
/// phrase.
std::optional<std::string> color_from_phrase(const std::string& phrase);

/// Full description of one renderable scene. Rendering is a pure function of
/// the spec: the class shape is always drawn, the decal (when present) is
/// drawn last in its own jitter stream, so re-rendering without the decal
/// reproduces the remaining pixels exactly.
struct SceneSpec {
    std::string shape;
    std::optional<std::string> patch;
    std::string background;
    std::uint64_t jitter_seed = 0;

    bool operator==(const SceneSpec&) const = default;
};

Image render(const SceneSpec& spec, int height, int width);

/// Template caption: "a {shape} with a {patch} on a {color} background".
std::string caption_for(const SceneSpec& spec);

struct BenchConfig {
    int n_classes = 2;
    int per_class_train = 100;
    double spurious_rate = 0.95;  // fraction of training items with both planted features
    int height = 32, width = 32;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
    static BenchConfig from_json(const nlohmann::json& j);
};

struct ClassTruth {
    std::string patch_phrase;
    std::string background_phrase;
};

/// The benchmark instance: datasets plus the scene registry backing the
/// exact captioning / editing / generation oracles. Majority items carry
/// the class decal and the class-correlated background; minority items
/// carry neither and sit on another class's color or a neutral (the
/// structure that makes background shortcuts harmful). The test split is
/// exactly group-balanced.
class Benchmark {
  public:
    static std::shared_ptr<Benchmark> make(const BenchConfig& cfg);

    const BenchConfig& config() const { return cfg_; }
    const GroupedDataset& train() const { return train_; }
    const GroupedDataset& test() const { return test_; }
    const std::map<std::string, ClassTruth>& ground_truth() const { return truth_; }
    std::map<std::string, std::vector<std::string>> ground_truth_phrases() const;

    bool knows(const std::string& image_id) const;
    SceneSpec scene(const std::string& image_id) const;

    std::string oracle_caption(const std::string& image_id) const;

    /// Re-renders without the named element. nullopt when the phrase names
    /// nothing in the scene; refuses (throws DataError) when asked to remove
    /// the class shape itself.
    std::optional<LabeledImage> oracle_remove(const std::string& image_id,
                                              const std::string& phrase);

    /// Re-renders with the background recolored. `from` must match the
    /// scene's background and `to` must name a palette color.
    LabeledImage oracle_swap_background(const std::string& image_id, const std::string& from,
                                        const std::string& to);

    /// Deterministic contrasting suggestion; always a palette color distinct
    /// from the input, drawn from the reserve colors when possible.
    std::string suggest_alt_background(const std::string& background_phrase) const;

    /// Fresh class renderings that never contain any excluded feature;
    /// backgrounds drawn from the non-excluded palette, decal drawn only if
    /// its phrase is not excluded. Ids are guaranteed distinct.
    std::vector<LabeledImage> oracle_generate(const std::string& cls, int count,
                                              const std::set<std::string>& excluded_phrases,
                                              std::uint64_t stream_seed = 1);

    void save(const std::filesystem::path& dir) const;
    static std::shared_ptr<Benchmark> load(const std::filesystem::path& dir);

  private:
    Benchmark() = default;
    LabeledImage materialize(const SceneSpec& spec, const std::string& label,
                             std::optional<std::string> group, Origin origin);

    BenchConfig cfg_;
    GroupedDataset train_;
    GroupedDataset test_;
    std::map<std::string, ClassTruth> truth_;
    std::map<std::string, std::string> label_of_;  // image id -> class
    std::map<std::string, SceneSpec> scenes_;
    mutable std::mutex mutex_;
};

std::shared_ptr<Benchmark> make_benchmark(const BenchConfig& cfg);

}  // namespace aspire::synth
