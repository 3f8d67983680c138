#include "aspire/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <numeric>

#include "aspire/common.hpp"

namespace aspire {

using nlohmann::json;
namespace fs = std::filesystem;

json AdapterConfig::to_json() const {
    return json{{"suite", suite},
                {"bench_dir", bench_dir},
                {"extractor", extractor},
                {"replay_file", replay_file}};
}

AdapterConfig AdapterConfig::from_json(const json& j) {
    AdapterConfig cfg;
    cfg.suite = j.value("suite", cfg.suite);
    cfg.bench_dir = j.value("bench_dir", cfg.bench_dir);
    cfg.extractor = j.value("extractor", cfg.extractor);
    cfg.replay_file = j.value("replay_file", cfg.replay_file);
    return cfg;
}

json RunConfig::to_json() const {
    return json{{"name", name},
                {"train_manifest", train_manifest},
                {"test_manifest", test_manifest},
                {"holdout_fraction", holdout_fraction},
                {"k", k},
                {"multiplier", multiplier},
                {"budget_mode", budget_mode_name(budget_mode)},
                {"augment", augment},
                {"train", train.to_json()},
                {"probe_train", probe_train.to_json()},
                {"adapters", adapters.to_json()},
                {"seed", seed},
                {"cache_dir", cache_dir},
                {"personalization_cap", personalization_cap}};
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig cfg;
    cfg.name = j.value("name", cfg.name);
    cfg.train_manifest = j.value("train_manifest", cfg.train_manifest);
    cfg.test_manifest = j.value("test_manifest", cfg.test_manifest);
    cfg.holdout_fraction = j.value("holdout_fraction", cfg.holdout_fraction);
    cfg.k = j.value("k", cfg.k);
    cfg.multiplier = j.value("multiplier", cfg.multiplier);
    if (j.contains("budget_mode"))
        cfg.budget_mode = budget_mode_from_name(j.at("budget_mode").get<std::string>());
    cfg.augment = j.value("augment", cfg.augment);
    if (j.contains("train")) cfg.train = TrainConfig::from_json(j.at("train"));
    if (j.contains("probe_train")) cfg.probe_train = TrainConfig::from_json(j.at("probe_train"));
    else cfg.probe_train = cfg.train.strategy == Strategy::ERM ? cfg.train : TrainConfig{};
    if (j.contains("adapters")) cfg.adapters = AdapterConfig::from_json(j.at("adapters"));
    cfg.seed = j.value("seed", cfg.seed);
    cfg.cache_dir = j.value("cache_dir", cfg.cache_dir);
    cfg.personalization_cap = j.value("personalization_cap", cfg.personalization_cap);
    return cfg;
}

RunConfig RunConfig::load(const fs::path& path) {
    json j = json::parse(read_file(path), nullptr, true, /*ignore_comments=*/true);
    return from_json(j);
}

std::string RunConfig::hash() const {
    return sha256_hex(to_json().dump());
}

void RunConfig::validate() const {
    if (!(holdout_fraction > 0.0 && holdout_fraction <= 1.0))
        throw ConfigError("holdout_fraction must be in (0, 1]");
    if (k < 1) throw ConfigError("k must be >= 1");
    if (multiplier < 1) throw ConfigError("multiplier must be >= 1");
    if (personalization_cap < 1) throw ConfigError("personalization_cap must be >= 1");
    train.validate();
    probe_train.validate();
    if (probe_train.strategy != Strategy::ERM)
        throw ConfigError("the probe classifier must be trained with ERM");
}

json RunManifest::to_json() const {
    json stages_json = json::object();
    for (const auto& [stage, artifact] : stages)
        stages_json[stage] = json{{"path", artifact.path}, {"sha256", artifact.sha256}};
    json j{{"config_hash", config_hash},
           {"dataset_hash", dataset_hash},
           {"strategy", strategy},
           {"augmented", augmented},
           {"stages", stages_json},
           {"warnings", warnings}};
    if (base_metrics) j["base_metrics"] = base_metrics->to_json();
    if (retrain_metrics) j["retrain_metrics"] = retrain_metrics->to_json();
    return j;
}

RunManifest RunManifest::from_json(const json& j) {
    RunManifest m;
    m.config_hash = j.at("config_hash").get<std::string>();
    m.dataset_hash = j.at("dataset_hash").get<std::string>();
    m.strategy = j.at("strategy").get<std::string>();
    m.augmented = j.at("augmented").get<bool>();
    for (const auto& [stage, artifact] : j.at("stages").items())
        m.stages[stage] = StageArtifact{artifact.at("path").get<std::string>(),
                                        artifact.at("sha256").get<std::string>()};
    m.warnings = j.at("warnings").get<std::vector<std::string>>();
    if (j.contains("base_metrics")) m.base_metrics = Metrics::from_json(j.at("base_metrics"));
    if (j.contains("retrain_metrics"))
        m.retrain_metrics = Metrics::from_json(j.at("retrain_metrics"));
    return m;
}

void RunManifest::save(const fs::path& path) const {
    atomic_write(path, to_json().dump(2) + "\n");
}

RunManifest RunManifest::load(const fs::path& path) {
    return from_json(json::parse(read_file(path)));
}

PipelineEnv PipelineEnv::for_benchmark(const std::shared_ptr<synth::Benchmark>& bench,
                                       const AdapterConfig& adapters) {
    PipelineEnv env;
    env.train = bench->train();
    env.test = bench->test();
    env.counters = std::make_shared<AdapterCallCounters>();

    env.captioner = std::make_shared<CountingCaptioner>(std::make_shared<OracleCaptioner>(bench),
                                                        env.counters);
    std::shared_ptr<Extractor> extractor;
    if (adapters.extractor == "rule_based") {
        extractor = std::make_shared<RuleBasedExtractor>();
    } else if (adapters.extractor == "structured-replay") {
        if (adapters.replay_file.empty())
            throw ConfigError("structured-replay extractor needs a replay_file");
        extractor = std::make_shared<StructuredExtractor>(std::make_shared<ReplayStructuredAdapter>(
            ReplayStructuredAdapter::load(adapters.replay_file)));
    } else {
        throw ConfigError("unknown extractor: " + adapters.extractor);
    }
    env.extractor = std::make_shared<CountingExtractor>(extractor, env.counters);
    env.fg_editor = std::make_shared<CountingForegroundEditor>(
        std::make_shared<OracleForegroundEditor>(bench), env.counters);
    env.bg_editor = std::make_shared<CountingBackgroundEditor>(
        std::make_shared<OracleBackgroundEditor>(bench), env.counters);
    env.alt_adapter = std::make_shared<CountingAltBackground>(
        std::make_shared<OracleAltBackground>(bench), env.counters);
    env.generator = std::make_shared<CountingGenerator>(std::make_shared<OracleGenerator>(bench),
                                                        env.counters);
    env.embedder = std::make_shared<HashEmbedder>(HashEmbedder::with_builtin_synonyms());
    return env;
}

PipelineEnv PipelineEnv::from_config(const RunConfig& cfg) {
    if (cfg.adapters.suite != "synthbench")
        throw ConfigError("unknown adapter suite: " + cfg.adapters.suite);
    if (cfg.adapters.bench_dir.empty())
        throw ConfigError("synthbench adapters need adapters.bench_dir");

    auto bench = synth::Benchmark::load(cfg.adapters.bench_dir);
    PipelineEnv env = for_benchmark(bench, cfg.adapters);
    if (!cfg.train_manifest.empty()) env.train = load_dataset(cfg.train_manifest);
    if (!cfg.test_manifest.empty()) env.test = load_dataset(cfg.test_manifest);
    return env;
}

GroupedDataset extract_holdout(const GroupedDataset& train, const TrainedClassifier& clf,
                               double p, std::uint64_t seed) {
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("holdout fraction p must be in (0, 1]");

    std::map<std::string, std::string> predictions = clf.predict_labels(train);
    std::vector<std::size_t> correct;
    for (std::size_t i = 0; i < train.items.size(); ++i)
        if (predictions.at(train.items[i].id) == train.items[i].label) correct.push_back(i);
    if (correct.empty()) throw DataError("base classifier failed to learn (no correct items)");

    const std::size_t target = static_cast<std::size_t>(p * static_cast<double>(correct.size()));
    Rng rng(seed ^ fnv1a64("holdout"));
    rng.shuffle(correct);
    correct.resize(target);
    std::sort(correct.begin(), correct.end());

    GroupedDataset holdout;
    holdout.name = train.name + "-holdout";
    holdout.classes = train.classes;
    holdout.height = train.height;
    holdout.width = train.width;
    holdout.channels = train.channels;
    holdout.group_schema = train.group_schema;
    for (std::size_t i : correct) {
        LabeledImage item = train.items[i];
        item.origin = Origin::holdout;
        holdout.items.push_back(std::move(item));
    }
    return holdout;
}

fs::path resolve_cache_dir(const RunConfig& cfg) {
    if (const char* env = std::getenv("ASPIRE_CACHE_ROOT"); env && *env) return fs::path(env);
    return fs::path(cfg.cache_dir);
}

namespace {

class StageCache {
  public:
    explicit StageCache(fs::path root) : root_(std::move(root)) {}

    const fs::path& root() const { return root_; }

    fs::path path_for(const std::string& stage, const std::string& key,
                      const std::string& ext) const {
        return root_ / stage / (key + ext);
    }

    std::optional<json> load_json(const std::string& stage, const std::string& key) const {
        fs::path p = path_for(stage, key, ".json");
        if (!fs::exists(p)) return std::nullopt;
        return json::parse(read_file(p));
    }

    StageArtifact store_json(const std::string& stage, const std::string& key, const json& j) const {
        fs::path p = path_for(stage, key, ".json");
        atomic_write(p, j.dump(2) + "\n");
        return artifact(stage, key, ".json");
    }

    StageArtifact artifact(const std::string& stage, const std::string& key,
                           const std::string& ext) const {
        fs::path p = path_for(stage, key, ext);
        return StageArtifact{fs::relative(p, root_).string(), sha256_file(p)};
    }

  private:
    fs::path root_;
};

struct StageTimer {
    std::vector<std::pair<std::string, double>> entries;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    void mark(const std::string& stage) {
        auto now = std::chrono::steady_clock::now();
        entries.push_back(
            {stage, std::chrono::duration<double, std::milli>(now - started).count()});
        started = now;
    }

    void save(const fs::path& path) const {
        json j = json::object();
        for (const auto& [stage, ms] : entries) j[stage] = ms;
        atomic_write(path, j.dump(2) + "\n");
    }
};

TrainedClassifier train_cached(const StageCache& cache, const std::string& key,
                               const GroupedDataset& train, const GroupedDataset* aug,
                               const TrainConfig& cfg) {
    fs::path ckpt = cache.path_for("checkpoints", key, ".bin");
    if (fs::exists(ckpt)) return TrainedClassifier::load(ckpt);
    TrainedClassifier clf = train_with_aug(train, aug, cfg);
    clf.save(ckpt);
    return clf;
}

Metrics evaluate_dataset(const TrainedClassifier& clf, const GroupedDataset& test) {
    std::map<std::string, std::string> predictions = clf.predict_labels(test);
    return test.has_group_labels() ? evaluate(predictions, test)
                                   : evaluate_ungrouped(predictions, test);
}

Metrics eval_cached(const StageCache& cache, const std::string& stage, const std::string& key,
                    const TrainedClassifier& clf, const GroupedDataset& test,
                    StageArtifact& artifact_out) {
    if (auto cached = cache.load_json(stage, key)) {
        artifact_out = cache.artifact(stage, key, ".json");
        return Metrics::from_json(*cached);
    }
    Metrics metrics = evaluate_dataset(clf, test);
    artifact_out = cache.store_json(stage, key, metrics.to_json());
    return metrics;
}

}  // namespace

RunManifest run(const RunConfig& cfg, PipelineEnv& env) {
    cfg.validate();
    const std::string config_hash = cfg.hash();
    const fs::path root = resolve_cache_dir(cfg) / config_hash;
    StageCache cache(root);
    StageTimer timer;

    RunManifest manifest;
    manifest.config_hash = config_hash;
    manifest.dataset_hash = dataset_hash(env.train);
    manifest.strategy = strategy_name(cfg.train.strategy);
    manifest.augmented = cfg.augment;

    const std::string train_hash = manifest.dataset_hash;
    const std::string test_hash = dataset_hash(env.test);

    std::string current_stage = "init";
    std::string last_good_stage = "none";
    std::string last_good_hash;
    auto enter = [&](const char* stage) { current_stage = stage; };
    auto done = [&](const std::string& stage, const StageArtifact& artifact) {
        manifest.stages[stage] = artifact;
        last_good_stage = stage;
        last_good_hash = artifact.sha256;
        timer.mark(stage);
    };

    try {
        // Base phase: the strategy under test on the raw training set.
        enter("base_train");
        const std::string base_key = sha256_hex(train_hash + "|" + cfg.train.hash());
        TrainedClassifier base_clf = train_cached(cache, base_key, env.train, nullptr, cfg.train);
        done("base_train", cache.artifact("checkpoints", base_key, ".bin"));

        enter("base_eval");
        StageArtifact base_eval_artifact;
        const std::string base_eval_key = sha256_hex(base_key + "|" + test_hash);
        manifest.base_metrics =
            eval_cached(cache, "evals", base_eval_key, base_clf, env.test, base_eval_artifact);
        done("base_eval", base_eval_artifact);

        if (!cfg.augment) {
            manifest.save(root / "manifest.json");
            timer.save(root / "timings.json");
            return manifest;
        }

        // Step-1 probe classifier (ERM).
        enter("probe_classifier");
        const std::string probe_key = sha256_hex(train_hash + "|" + cfg.probe_train.hash());
        TrainedClassifier probe_clf =
            train_cached(cache, probe_key, env.train, nullptr, cfg.probe_train);
        done("probe_classifier", cache.artifact("checkpoints", probe_key, ".bin"));

        // Holdout extraction.
        enter("holdout");
        const std::string holdout_key = sha256_hex(
            probe_key + "|" + std::to_string(cfg.holdout_fraction) + "|" + std::to_string(cfg.seed));
        GroupedDataset holdout;
        if (auto cached = cache.load_json("holdout", holdout_key)) {
            holdout.name = env.train.name + "-holdout";
            holdout.classes = env.train.classes;
            holdout.height = env.train.height;
            holdout.width = env.train.width;
            holdout.channels = env.train.channels;
            holdout.group_schema = env.train.group_schema;
            for (const auto& id : cached->at("ids").get<std::vector<std::string>>()) {
                const LabeledImage* item = env.train.find(id);
                if (!item) throw DataError("cached holdout id missing from train: " + id);
                LabeledImage copy = *item;
                copy.origin = Origin::holdout;
                holdout.items.push_back(std::move(copy));
            }
            done("holdout", cache.artifact("holdout", holdout_key, ".json"));
        } else {
            holdout = extract_holdout(env.train, probe_clf, cfg.holdout_fraction, cfg.seed);
            std::vector<std::string> ids;
            for (const auto& item : holdout.items) ids.push_back(item.id);
            done("holdout", cache.store_json("holdout", holdout_key, json{{"ids", ids}}));
        }
        if (holdout.items.empty())
            manifest.warnings.push_back("holdout is empty; no probes were run");

        // Captioning.
        enter("captions");
        const std::string captions_key = sha256_hex(holdout_key + "|" + env.captioner->id());
        CaptionBatch captions;
        if (auto cached = cache.load_json("captions", captions_key)) {
            for (const auto& r : cached->at("records"))
                captions.records.push_back({r.at("image_id").get<std::string>(),
                                            r.at("caption").get<std::string>(),
                                            r.at("captioner_id").get<std::string>()});
            for (const auto& f : cached->at("failures"))
                captions.failures.push_back(
                    {f.at("image_id").get<std::string>(), f.at("reason").get<std::string>()});
            done("captions", cache.artifact("captions", captions_key, ".json"));
        } else {
            std::vector<const LabeledImage*> images;
            for (const auto& item : holdout.items) images.push_back(&item);
            captions = caption_images(images, *env.captioner);
            json records = json::array();
            for (const auto& r : captions.records)
                records.push_back(json{{"image_id", r.image_id},
                                       {"caption", r.caption},
                                       {"captioner_id", r.captioner_id}});
            json failures = json::array();
            for (const auto& f : captions.failures)
                failures.push_back(json{{"image_id", f.image_id}, {"reason", f.reason}});
            done("captions", cache.store_json("captions", captions_key,
                                              json{{"records", records}, {"failures", failures}}));
        }
        for (const auto& f : captions.failures)
            manifest.warnings.push_back("caption failed for " + f.image_id + ": " + f.reason);

        // Foreground/background extraction.
        enter("extractions");
        const std::string extractions_key = sha256_hex(captions_key + "|" + env.extractor->id());
        std::map<std::string, FeatureExtraction> extractions;
        if (auto cached = cache.load_json("extractions", extractions_key)) {
            for (const auto& e : *cached) {
                FeatureExtraction fx = FeatureExtraction::from_json(e);
                extractions[fx.image_id] = std::move(fx);
            }
            done("extractions", cache.artifact("extractions", extractions_key, ".json"));
        } else {
            json list = json::array();
            for (const auto& record : captions.records) {
                const LabeledImage* item = env.train.find(record.image_id);
                if (!item) throw DataError("captioned image missing from train: " + record.image_id);
                FeatureExtraction fx = env.extractor->extract(record.caption, item->label);
                fx.image_id = record.image_id;
                list.push_back(fx.to_json());
                extractions[record.image_id] = std::move(fx);
            }
            done("extractions", cache.store_json("extractions", extractions_key, list));
        }

        // Edit probes + verdicts.
        enter("probe");
        const std::string probe_stage_key = sha256_hex(
            extractions_key + "|" + env.fg_editor->id() + "|" + env.bg_editor->id() + "|" +
            env.alt_adapter->id() + "|" + probe_key);
        EditStore store(root / "probe" / "records");
        std::vector<EditRecord> records;
        if (auto cached = cache.load_json("probe", probe_stage_key)) {
            for (const auto& rid : cached->at("record_ids").get<std::vector<std::string>>()) {
                auto record = store.load(rid);
                if (!record) throw DataError("probe record missing from store: " + rid);
                records.push_back(std::move(*record));
            }
            done("probe", cache.artifact("probe", probe_stage_key, ".json"));
        } else {
            GroupedDataset probe_holdout = holdout;
            probe_holdout.items.clear();
            for (const auto& item : holdout.items)
                if (extractions.count(item.id)) probe_holdout.items.push_back(item);
            records = probe(probe_holdout, extractions, probe_clf, *env.fg_editor, *env.bg_editor,
                            *env.alt_adapter);
            std::vector<std::string> record_ids;
            for (const auto& record : records) {
                store.save(record);
                record_ids.push_back(record.record_id());
            }
            done("probe", cache.store_json("probe", probe_stage_key,
                                           json{{"record_ids", record_ids}}));
        }
        int edit_failures = 0;
        for (const auto& record : records)
            if (record.verdict == Verdict::edit_failed) ++edit_failures;
        if (edit_failures > 0)
            manifest.warnings.push_back(std::to_string(edit_failures) +
                                        " edit probe(s) failed and were excluded from attribution");

        // Phrase collapsing + top-k selection.
        enter("catalog");
        const std::string catalog_key = sha256_hex(probe_stage_key + "|k=" + std::to_string(cfg.k) +
                                                   "|" + env.embedder->id());
        SpuriousCatalog catalog;
        if (auto cached = cache.load_json("catalog", catalog_key)) {
            catalog = SpuriousCatalog::from_json(*cached);
            done("catalog", cache.artifact("catalog", catalog_key, ".json"));
        } else {
            catalog = build_catalog(records, env.train.classes, cfg.k, *env.embedder);
            done("catalog", cache.store_json("catalog", catalog_key, catalog.to_json()));
        }
        atomic_write(root / "spurious_catalog.json", catalog.to_json().dump(2) + "\n");
        for (const auto& cls : env.train.classes)
            if (catalog.selected_groups(cls).empty())
                manifest.warnings.push_back("class '" + cls +
                                            "' has an empty top-k and receives no augmentations");

        // Personalization + augmentation generation.
        enter("augment");
        AugmentBudget budget = compute_budget(env.train, cfg.multiplier, cfg.budget_mode);
        const std::string augment_key = sha256_hex(
            catalog_key + "|" + budget_mode_name(cfg.budget_mode) + "|" +
            std::to_string(cfg.multiplier) + "|" + env.generator->id() + "|" +
            std::to_string(cfg.seed) + "|" + std::to_string(cfg.personalization_cap));
        GroupedDataset aug;
        if (auto cached = cache.load_json("augment", augment_key)) {
            const std::string dir = cached->at("dataset_dir").get<std::string>();
            if (!dir.empty()) aug = load_dataset(root / dir);
            done("augment", cache.artifact("augment", augment_key, ".json"));
        } else {
            std::vector<PersonalizationJob> jobs = build_jobs(
                catalog, env.train.classes, env.generator->id(), cfg.seed, cfg.personalization_cap);
            std::map<std::string, const EditRecord*> by_id;
            for (const auto& record : records) by_id[record.record_id()] = &record;

            std::vector<PersonalizedGenerator> handles;
            json jobs_json = json::array();
            for (const auto& job : jobs) {
                std::vector<const EditRecord*> images;
                for (const auto& rid : job.training_record_ids) {
                    auto it = by_id.find(rid);
                    if (it != by_id.end() && it->second->edited) images.push_back(it->second);
                }
                if (images.empty()) continue;
                PersonalizedGenerator handle = personalize(job, *env.generator, images);
                jobs_json.push_back(json{{"class", job.cls},
                                         {"job_hash", job.job_hash()},
                                         {"handle_hash", handle.handle_hash},
                                         {"training_records", job.training_record_ids.size()}});
                handles.push_back(std::move(handle));
            }

            std::string dataset_dir;
            if (!handles.empty()) {
                aug = generate_augmentations(handles, budget, *env.generator, env.train);
                dataset_dir = "augment/" + augment_key + ".data";
                save_dataset(aug, root / dataset_dir);
            }
            json budget_json = json::object();
            for (const auto& [cls, count] : budget.per_class) budget_json[cls] = count;
            done("augment",
                 cache.store_json("augment", augment_key,
                                  json{{"budget", budget_json},
                                       {"budget_mode", budget_mode_name(budget.mode)},
                                       {"multiplier", budget.multiplier},
                                       {"jobs", jobs_json},
                                       {"dataset_dir", dataset_dir}}));
        }
        if (aug.items.empty())
            manifest.warnings.push_back("no augmentations were generated");

        // Retrain (from scratch, fresh seed) and evaluate.
        enter("retrain");
        TrainConfig retrain_cfg = cfg.train;
        retrain_cfg.seed = cfg.train.seed ^ fnv1a64("retrain-phase");
        const std::string retrain_key = sha256_hex(
            train_hash + "|" + (aug.items.empty() ? "noaug" : dataset_hash(aug)) + "|" +
            retrain_cfg.hash());
        TrainedClassifier retrained = train_cached(cache, retrain_key, env.train,
                                                   aug.items.empty() ? nullptr : &aug, retrain_cfg);
        done("retrain", cache.artifact("checkpoints", retrain_key, ".bin"));

        enter("retrain_eval");
        StageArtifact retrain_eval_artifact;
        const std::string retrain_eval_key = sha256_hex(retrain_key + "|" + test_hash);
        manifest.retrain_metrics = eval_cached(cache, "evals", retrain_eval_key, retrained,
                                               env.test, retrain_eval_artifact);
        done("retrain_eval", retrain_eval_artifact);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw DataError("stage '" + current_stage + "' failed (last good stage: " +
                        last_good_stage +
                        (last_good_hash.empty() ? "" : ", artifact " + last_good_hash) +
                        "): " + e.what());
    }

    manifest.save(root / "manifest.json");
    timer.save(root / "timings.json");
    return manifest;
}

json ReportRow::to_json() const {
    json j{{"strategy", strategy},
           {"aspire", aspire},
           {"worst_group", worst_group},
           {"average", average}};
    if (delta_points) j["delta_points"] = *delta_points;
    return j;
}

ReportRow ReportRow::from_json(const json& j) {
    ReportRow row;
    row.strategy = j.at("strategy").get<std::string>();
    row.aspire = j.at("aspire").get<bool>();
    row.worst_group = j.at("worst_group").get<double>();
    row.average = j.at("average").get<double>();
    if (j.contains("delta_points")) row.delta_points = j.at("delta_points").get<double>();
    return row;
}

json ComparisonReport::to_json() const {
    json rows_json = json::array();
    for (const auto& row : rows) rows_json.push_back(row.to_json());
    return json{{"dataset_hash", dataset_hash}, {"rows", rows_json}};
}

ComparisonReport ComparisonReport::from_json(const json& j) {
    ComparisonReport report;
    report.dataset_hash = j.at("dataset_hash").get<std::string>();
    for (const auto& r : j.at("rows")) report.rows.push_back(ReportRow::from_json(r));
    return report;
}

std::string ComparisonReport::to_text() const {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-22s %16s %12s\n", "Strategy", "Worst-group", "Avg");
    out += line;
    out += std::string(52, '-') + "\n";
    for (const auto& row : rows) {
        std::string name = row.strategy + (row.aspire ? " + aspire" : "");
        std::string worst;
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.1f", row.worst_group * 100.0);
        worst = buf;
        if (row.delta_points) {
            std::snprintf(buf, sizeof(buf), " (%+.1f)", *row.delta_points);
            worst += buf;
        }
        std::snprintf(line, sizeof(line), "%-22s %16s %12.1f\n", name.c_str(), worst.c_str(),
                      row.average * 100.0);
        out += line;
    }
    return out;
}

ComparisonReport report(const std::vector<RunManifest>& manifests) {
    if (manifests.empty()) throw ConfigError("report needs at least one completed manifest");

    ComparisonReport out;
    out.dataset_hash = manifests.front().dataset_hash;

    struct Entry {
        double worst, avg;
    };
    std::map<std::pair<std::string, bool>, Entry> entries;
    for (const auto& manifest : manifests) {
        if (manifest.dataset_hash != out.dataset_hash)
            throw DataError("manifests compare different datasets (" + manifest.dataset_hash +
                            " vs " + out.dataset_hash + ")");
        if (manifest.base_metrics && !entries.count({manifest.strategy, false}))
            entries[{manifest.strategy, false}] = Entry{
                manifest.base_metrics->worst_group_accuracy, manifest.base_metrics->average_accuracy};
        if (manifest.augmented && manifest.retrain_metrics &&
            !entries.count({manifest.strategy, true}))
            entries[{manifest.strategy, true}] =
                Entry{manifest.retrain_metrics->worst_group_accuracy,
                      manifest.retrain_metrics->average_accuracy};
    }

    for (const auto& [key, entry] : entries) {
        ReportRow row;
        row.strategy = key.first;
        row.aspire = key.second;
        row.worst_group = entry.worst;
        row.average = entry.avg;
        if (row.aspire) {
            auto base = entries.find({row.strategy, false});
            if (base != entries.end())
                row.delta_points = (entry.worst - base->second.worst) * 100.0;
        }
        out.rows.push_back(std::move(row));
    }
    std::sort(out.rows.begin(), out.rows.end(), [](const ReportRow& a, const ReportRow& b) {
        if (a.strategy != b.strategy) return a.strategy < b.strategy;
        return a.aspire < b.aspire;
    });
    return out;
}

}  // namespace aspire
