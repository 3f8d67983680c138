#include <CLI11.hpp>

#include <iostream>

#include "aspire/common.hpp"
#include "aspire/pipeline.hpp"

namespace {

int run_command(const std::string& config_path) {
    aspire::RunConfig cfg = aspire::RunConfig::load(config_path);
    aspire::PipelineEnv env = aspire::PipelineEnv::from_config(cfg);
    aspire::RunManifest manifest = aspire::run(cfg, env);

    std::cout << "run " << manifest.config_hash.substr(0, 12) << " complete ("
              << manifest.strategy << (manifest.augmented ? " + aspire" : "") << ")\n";
    if (manifest.base_metrics)
        std::cout << "  base     worst-group " << manifest.base_metrics->worst_group_accuracy
                  << "  avg " << manifest.base_metrics->average_accuracy << "\n";
    if (manifest.retrain_metrics)
        std::cout << "  retrain  worst-group " << manifest.retrain_metrics->worst_group_accuracy
                  << "  avg " << manifest.retrain_metrics->average_accuracy << "\n";
    for (const auto& w : manifest.warnings) std::cout << "  warning: " << w << "\n";
    std::cout << "manifest: "
              << (aspire::resolve_cache_dir(cfg) / manifest.config_hash / "manifest.json").string()
              << "\n";
    return 0;
}

int report_command(const std::vector<std::string>& manifest_paths, const std::string& json_out) {
    std::vector<aspire::RunManifest> manifests;
    for (const auto& path : manifest_paths)
        manifests.push_back(aspire::RunManifest::load(path));
    aspire::ComparisonReport rep = aspire::report(manifests);
    std::cout << rep.to_text();
    if (!json_out.empty()) aspire::atomic_write(json_out, rep.to_json().dump(2) + "\n");
    return 0;
}

int train_command(const std::string& config_path, const std::string& strategy,
                  const std::string& checkpoint_out) {
    aspire::RunConfig cfg = aspire::RunConfig::load(config_path);
    if (!strategy.empty()) cfg.train.strategy = aspire::strategy_from_name(strategy);
    aspire::PipelineEnv env = aspire::PipelineEnv::from_config(cfg);

    aspire::TrainedClassifier clf = aspire::train(env.train, cfg.train);
    std::cout << "trained " << aspire::strategy_name(cfg.train.strategy) << " for "
              << cfg.train.epochs << " epochs; final loss "
              << clf.report().epoch_losses.back() << "\n";

    std::map<std::string, std::string> predictions = clf.predict_labels(env.test);
    aspire::Metrics metrics = env.test.has_group_labels()
                                  ? aspire::evaluate(predictions, env.test)
                                  : aspire::evaluate_ungrouped(predictions, env.test);
    std::cout << "test worst-group " << metrics.worst_group_accuracy << "  avg "
              << metrics.average_accuracy << "\n";
    if (!checkpoint_out.empty()) {
        clf.save(checkpoint_out);
        std::cout << "checkpoint: " << checkpoint_out << "\n";
    }
    return 0;
}

int generate_command(const std::string& config_path, const std::string& catalog_path,
                     const std::string& budget_mode, int multiplier, const std::string& out_dir) {
    aspire::RunConfig cfg = aspire::RunConfig::load(config_path);
    if (!budget_mode.empty()) cfg.budget_mode = aspire::budget_mode_from_name(budget_mode);
    if (multiplier > 0) cfg.multiplier = multiplier;
    aspire::PipelineEnv env = aspire::PipelineEnv::from_config(cfg);

    aspire::SpuriousCatalog catalog = aspire::SpuriousCatalog::load(catalog_path);

    // Flagged records live in the run cache written by `aspire run`.
    aspire::EditStore store(aspire::resolve_cache_dir(cfg) / cfg.hash() / "probe" / "records");
    std::vector<aspire::EditRecord> records = store.load_all();
    if (records.empty())
        throw aspire::DataError("no probe records found in the cache; run `aspire run` first");

    std::map<std::string, const aspire::EditRecord*> by_id;
    for (const auto& record : records) by_id[record.record_id()] = &record;

    aspire::AugmentBudget budget =
        aspire::compute_budget(env.train, cfg.multiplier, cfg.budget_mode);
    std::vector<aspire::PersonalizationJob> jobs = aspire::build_jobs(
        catalog, env.train.classes, env.generator->id(), cfg.seed, cfg.personalization_cap);

    std::vector<aspire::PersonalizedGenerator> handles;
    nlohmann::json provenance = nlohmann::json::array();
    for (const auto& job : jobs) {
        std::vector<const aspire::EditRecord*> images;
        for (const auto& rid : job.training_record_ids) {
            auto it = by_id.find(rid);
            if (it != by_id.end() && it->second->edited) images.push_back(it->second);
        }
        if (images.empty()) continue;
        handles.push_back(aspire::personalize(job, *env.generator, images));
        provenance.push_back(nlohmann::json{{"class", job.cls}, {"job_hash", job.job_hash()}});
    }
    if (handles.empty()) throw aspire::DataError("no personalization jobs could be built");

    aspire::GroupedDataset aug =
        aspire::generate_augmentations(handles, budget, *env.generator, env.train);
    aspire::save_dataset(aug, out_dir);
    aspire::atomic_write(std::filesystem::path(out_dir) / "provenance.json",
                         nlohmann::json{{"jobs", provenance}}.dump(2) + "\n");
    std::cout << "wrote " << aug.items.size() << " augmentations to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Language-guided spurious-correlation removal pipeline"};
    app.require_subcommand(1);

    std::string config_path, strategy, checkpoint_out, catalog_path, budget_mode, json_out, out_dir;
    int multiplier = 0;
    std::vector<std::string> manifest_paths;

    auto* run_cmd = app.add_subcommand("run", "Execute the full pipeline for a config");
    run_cmd->add_option("--config", config_path, "Run config JSON")->required();

    auto* report_cmd = app.add_subcommand("report", "Comparison table across run manifests");
    report_cmd->add_option("manifests", manifest_paths, "manifest.json paths")->required();
    report_cmd->add_option("--json", json_out, "Also write the machine-readable report here");

    auto* train_cmd = app.add_subcommand("train", "Train one classifier from a config");
    train_cmd->add_option("--config", config_path, "Run config JSON")->required();
    train_cmd->add_option("--strategy", strategy, "Override the strategy (erm, group_dro, jtt, subg, dfr)");
    train_cmd->add_option("--checkpoint", checkpoint_out, "Write the model checkpoint here");

    auto* gen_cmd = app.add_subcommand("generate", "Generate augmentations from a catalog");
    gen_cmd->add_option("--config", config_path, "Run config JSON")->required();
    gen_cmd->add_option("--catalog", catalog_path, "spurious_catalog.json")->required();
    gen_cmd->add_option("--budget-mode", budget_mode, "minority_match or class_match");
    gen_cmd->add_option("--multiplier", multiplier, "Augmentation multiplier n");
    gen_cmd->add_option("--out", out_dir, "Output dataset directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return run_command(config_path);
        if (report_cmd->parsed()) return report_command(manifest_paths, json_out);
        if (train_cmd->parsed()) return train_command(config_path, strategy, checkpoint_out);
        if (gen_cmd->parsed())
            return generate_command(config_path, catalog_path, budget_mode, multiplier, out_dir);
    } catch (const aspire::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
