#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qawv/run.hpp"
#include "qawv/scenario.hpp"

int main(int argc, char** argv) {
    using qawv::cli::RunConfig;

    CLI::App app{"qawv: pointer statistics of pre- and post-selected measurements"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string preset, config, figure;
    std::size_t grid_n = 0;
    double grid_span = 0.0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--preset", preset, "named scenario preset");
        sub->add_option("--config", config, "JSON scenario file")->check(CLI::ExistingFile);
        sub->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
        sub->add_option("--grid-n", grid_n, "grid points (power of two)");
        sub->add_option("--grid-span", grid_span, "grid span in q");
        sub->add_option("--seed", cfg.seed, "seed for randomized scenarios")->capture_default_str();
        sub->add_option("--tol-scale", cfg.tol_scale, "multiplier on check tolerances")->capture_default_str();
    };

    const char* help[] = {
        "weak-value orbit CSV",
        "conditional (post-selected) pointer distributions",
        "pre-selected pointer distribution",
        "sum-rule, covering and pooling residuals",
        "figure data for a preset",
        "weak-limit convergence sweep",
        "weak-to-strong transition sweep",
        "classical vs quantum correspondence table",
    };
    const auto names = qawv::cli::commands();
    for (std::size_t i = 0; i < names.size(); ++i) {
        CLI::App* sub = app.add_subcommand(names[i], help[i]);
        add_common(sub);
        if (names[i] == "spin-figure") sub->add_option("figure", figure, "preset name");
        sub->callback([&cfg, name = names[i]] { cfg.command = name; });
    }
    app.footer([] {
        std::string s = "presets:";
        for (const auto& n : qawv::scenario::preset_names()) s += " " + n;
        return s;
    }());

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : qawv::cli::kExitConfig;
    }

    if (!preset.empty()) cfg.preset = preset;
    if (!config.empty()) cfg.config_path = config;
    if (!figure.empty()) cfg.positional = figure;
    if (grid_n > 0) cfg.grid_n = grid_n;
    if (grid_span > 0.0) cfg.grid_span = grid_span;
    return qawv::cli::run(cfg, std::cerr);
}
