#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "aspire/common.hpp"
#include "aspire/pipeline.hpp"
#include "aspire/synthbench.hpp"
#include "aspire/text.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

// JSON strings cross the boundary; callers json.loads() them. Keeps the
// binding thin and mirrors the on-disk artifact formats exactly.
std::string make_benchmark_py(int n_classes, int per_class_train, double spurious_rate,
                              std::uint64_t seed, const std::string& out_dir) {
    aspire::synth::BenchConfig cfg;
    cfg.n_classes = n_classes;
    cfg.per_class_train = per_class_train;
    cfg.spurious_rate = spurious_rate;
    cfg.seed = seed;
    auto bench = aspire::synth::make_benchmark(cfg);
    bench->save(out_dir);

    json truth = json::object();
    for (const auto& [cls, t] : bench->ground_truth())
        truth[cls] = json{{"patch", t.patch_phrase}, {"background", t.background_phrase}};
    return json{{"train_items", bench->train().items.size()},
                {"test_items", bench->test().items.size()},
                {"classes", bench->train().classes},
                {"ground_truth", truth}}
        .dump();
}

std::string run_pipeline_py(const std::string& config_json) {
    aspire::RunConfig cfg = aspire::RunConfig::from_json(json::parse(config_json));
    aspire::PipelineEnv env = aspire::PipelineEnv::from_config(cfg);
    aspire::RunManifest manifest = aspire::run(cfg, env);
    return manifest.to_json().dump();
}

std::string train_py(const std::string& dataset_dir, const std::string& train_config_json,
                     const std::string& checkpoint_out) {
    aspire::GroupedDataset ds = aspire::load_dataset(dataset_dir);
    aspire::TrainConfig cfg = aspire::TrainConfig::from_json(json::parse(train_config_json));
    aspire::TrainedClassifier clf = aspire::train(ds, cfg);
    if (!checkpoint_out.empty()) clf.save(checkpoint_out);
    return json{{"classes", clf.classes()},
                {"config_hash", clf.config_hash()},
                {"dataset_hash", clf.dataset_hash()},
                {"epoch_losses", clf.report().epoch_losses}}
        .dump();
}

std::string evaluate_py(const std::string& checkpoint, const std::string& dataset_dir) {
    aspire::TrainedClassifier clf = aspire::TrainedClassifier::load(checkpoint);
    aspire::GroupedDataset ds = aspire::load_dataset(dataset_dir);
    auto predictions = clf.predict_labels(ds);
    aspire::Metrics metrics = ds.has_group_labels()
                                  ? aspire::evaluate(predictions, ds)
                                  : aspire::evaluate_ungrouped(predictions, ds);
    return metrics.to_json().dump();
}

std::vector<std::string> collapse_py(const std::vector<std::pair<std::string, int>>& phrases,
                                     double threshold) {
    aspire::HashEmbedder embedder = aspire::HashEmbedder::with_builtin_synonyms();
    std::vector<std::string> out;
    for (const auto& group :
         aspire::collapse(phrases, embedder, aspire::EditKind::remove_foreground, threshold))
        out.push_back(group.to_json().dump());
    return out;
}

std::string report_py(const std::vector<std::string>& manifest_paths) {
    std::vector<aspire::RunManifest> manifests;
    for (const auto& path : manifest_paths)
        manifests.push_back(aspire::RunManifest::load(path));
    return aspire::report(manifests).to_json().dump();
}

}  // namespace

PYBIND11_MODULE(_aspire, m) {
    m.doc() = "Spurious-correlation discovery and augmentation pipeline";

    py::register_exception<aspire::ConfigError>(m, "ConfigError");
    py::register_exception<aspire::DataError>(m, "DataError");
    py::register_exception<aspire::AdapterError>(m, "AdapterError");

    m.def("make_benchmark", &make_benchmark_py, py::arg("n_classes"), py::arg("per_class_train"),
          py::arg("spurious_rate"), py::arg("seed"), py::arg("out_dir"),
          "Render a synthetic benchmark into out_dir; returns a JSON summary.");
    m.def("run_pipeline", &run_pipeline_py, py::arg("config_json"),
          "Execute the full pipeline; returns the run manifest as JSON.");
    m.def("train", &train_py, py::arg("dataset_dir"), py::arg("train_config_json"),
          py::arg("checkpoint_out") = "",
          "Train a classifier on a dataset directory; returns a JSON summary.");
    m.def("evaluate", &evaluate_py, py::arg("checkpoint"), py::arg("dataset_dir"),
          "Evaluate a checkpoint on a dataset; returns metrics JSON.");
    m.def("collapse", &collapse_py, py::arg("phrases"), py::arg("threshold") = 0.90,
          "Collapse (phrase, count) pairs into variant groups; returns group JSON strings.");
    m.def("report", &report_py, py::arg("manifest_paths"),
          "Comparison report across run manifests; returns JSON.");
    m.def("porter_stem", &aspire::porter_stem, py::arg("word"));
    m.def("phrase_root", &aspire::phrase_root, py::arg("phrase"));

#ifdef VERSION_INFO
#define ASPIRE_STR(x) #x
#define ASPIRE_XSTR(x) ASPIRE_STR(x)
    m.attr("__version__") = ASPIRE_XSTR(VERSION_INFO);
#else
    m.attr("__version__") = "dev";
#endif
}
