#include <CLI11.hpp>

#include <iostream>

#include "aspire/common.hpp"
#include "aspire/synthbench.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Deterministic synthetic spurious-correlation benchmark"};
    app.require_subcommand(1);

    auto* make = app.add_subcommand("make", "Render a benchmark and write its dataset manifests");
    aspire::synth::BenchConfig cfg;
    std::string out_dir;
    int size = 32;
    make->add_option("--classes", cfg.n_classes, "Number of classes")->default_val(2);
    make->add_option("--per-class", cfg.per_class_train, "Training items per class")
        ->default_val(100);
    make->add_option("--rho", cfg.spurious_rate, "Fraction of training items with both planted features")
        ->default_val(0.95);
    make->add_option("--seed", cfg.seed, "Benchmark seed")->default_val(0);
    make->add_option("--size", size, "Image side length")->default_val(32);
    make->add_option("--out", out_dir, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        cfg.height = size;
        cfg.width = size;
        auto bench = aspire::synth::make_benchmark(cfg);
        bench->save(out_dir);
        std::cout << "wrote " << bench->train().items.size() << " train / "
                  << bench->test().items.size() << " test items to " << out_dir << "\n";
        std::cout << "planted features per class:\n";
        for (const auto& [cls, truth] : bench->ground_truth())
            std::cout << "  " << cls << ": '" << truth.patch_phrase << "', '"
                      << truth.background_phrase << "'\n";
    } catch (const aspire::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
