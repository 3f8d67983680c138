#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aspire/adapters.hpp"
#include "aspire/attribute.hpp"
#include "aspire/classifier.hpp"
#include "aspire/core.hpp"
#include "aspire/generate.hpp"

namespace aspire {

/// Which adapter family a run uses. "synthbench" wires the exact oracles of
/// a benchmark directory (or an in-memory benchmark); extractor may be
/// "rule_based" or "structured-replay" (with a recorded-responses file).
struct AdapterConfig {
    std::string suite = "synthbench";
    std::string bench_dir;
    std::string extractor = "rule_based";
    std::string replay_file;

    nlohmann::json to_json() const;
    static AdapterConfig from_json(const nlohmann::json& j);
};

struct RunConfig {
    std::string name = "run";
    std::string train_manifest;
    std::string test_manifest;
    double holdout_fraction = 0.20;  // p; the probe budget knob
    int k = 3;
    int multiplier = 1;  // n
    BudgetMode budget_mode = BudgetMode::minority_match;
    bool augment = true;  // false = baseline-only run (no probe/augment stages)
    TrainConfig train;        // strategy under test (base and retrain phases)
    TrainConfig probe_train;  // step-1 ERM probe classifier
    AdapterConfig adapters;
    std::uint64_t seed = 0;
    std::string cache_dir = "cache";
    int personalization_cap = 32;

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::filesystem::path& path);
    std::string hash() const;

    void validate() const;
};

struct StageArtifact {
    std::string path;    // relative to the run's cache directory
    std::string sha256;  // content hash of the artifact file
};

struct RunManifest {
    std::string config_hash;
    std::string dataset_hash;
    std::string strategy;
    bool augmented = false;
    std::map<std::string, StageArtifact> stages;
    std::optional<Metrics> base_metrics;
    std::optional<Metrics> retrain_metrics;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static RunManifest load(const std::filesystem::path& path);
};

/// Datasets plus the adapter instances a run works against. Adapter calls
/// are routed through counting wrappers sharing `counters`.
struct PipelineEnv {
    GroupedDataset train;
    GroupedDataset test;
    std::shared_ptr<Captioner> captioner;
    std::shared_ptr<Extractor> extractor;
    std::shared_ptr<ForegroundEditor> fg_editor;
    std::shared_ptr<BackgroundEditor> bg_editor;
    std::shared_ptr<AltBackgroundAdapter> alt_adapter;
    std::shared_ptr<GeneratorAdapter> generator;
    std::shared_ptr<Embedder> embedder;
    std::shared_ptr<AdapterCallCounters> counters;

    /// Oracle adapters over an in-memory benchmark.
    static PipelineEnv for_benchmark(const std::shared_ptr<synth::Benchmark>& bench,
                                     const AdapterConfig& adapters = {});
    /// Resolves datasets and adapters from the config (disk mode).
    static PipelineEnv from_config(const RunConfig& cfg);
};

/// D_hold: a p-sample of the items the classifier already gets right.
/// |result| = floor(p * |correct|), uniform and seed-deterministic; items
/// keep their ids, origin becomes holdout.
GroupedDataset extract_holdout(const GroupedDataset& train, const TrainedClassifier& clf,
                               double p, std::uint64_t seed);

/// Executes the full sequence (train -> holdout -> caption -> extract ->
/// probe -> collapse/top-k -> personalize/generate -> merge -> retrain ->
/// evaluate) against a content-addressed stage cache under
/// cache_dir/<config-hash>/. Re-running an identical config replays
/// artifacts without touching any adapter and reproduces the manifest
/// byte-for-byte. Stage timings go to a sidecar (timings.json), not the
/// manifest.
RunManifest run(const RunConfig& cfg, PipelineEnv& env);

/// Resolves the cache root (ASPIRE_CACHE_ROOT overrides the config).
std::filesystem::path resolve_cache_dir(const RunConfig& cfg);

struct ReportRow {
    std::string strategy;
    bool aspire = false;
    double worst_group = 0.0;
    double average = 0.0;
    std::optional<double> delta_points;  // vs the non-augmented counterpart

    nlohmann::json to_json() const;
    static ReportRow from_json(const nlohmann::json& j);
};

struct ComparisonReport {
    std::string dataset_hash;
    std::vector<ReportRow> rows;

    nlohmann::json to_json() const;
    static ComparisonReport from_json(const nlohmann::json& j);
    std::string to_text() const;
};

/// Comparison table across manifests of the same dataset; rows pair each
/// strategy's augmented run with its non-augmented counterpart and render
/// the worst-group delta in points.
ComparisonReport report(const std::vector<RunManifest>& manifests);

}  // namespace aspire
