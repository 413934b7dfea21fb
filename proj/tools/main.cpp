// carmwf: two-microphone in-car pickup simulator with an adaptive
// multichannel Wiener filter front end.
//
//   carmwf run <config.json> [--out DIR] [--seed N] [--experiment notch|noise|head]
//
// Runs the configured experiment and writes metrics.csv, psd_*.dat plot data
// and config.resolved into the output directory.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "carmwf/scenario.hpp"

int main(int argc, char** argv) {
    CLI::App app{"In-car sound pick-up simulation with an adaptive multichannel Wiener filter"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string experiment;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool dump_aux = false;

    CLI::App* run = app.add_subcommand("run", "Run an experiment described by a config file");
    run->add_option("config", config_path, "Path to the JSON scenario config")->required();
    run->add_option("--out", out_dir, "Output directory (overrides the config)");
    run->add_option("--seed", seed, "Noise seed (overrides the config)")
        ->each([&](const std::string&) { seed_set = true; });
    run->add_option("--experiment", experiment, "Experiment kind (overrides the config)")
        ->check(CLI::IsMember({"notch", "noise", "head"}));
    run->add_flag("--dump-aux", dump_aux,
                  "Also write impulse responses, the activity timeline and filter diagnostics");

    CLI11_PARSE(app, argc, argv);

    try {
        carmwf::ScenarioConfig cfg = carmwf::parse_scenario(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (seed_set) cfg.seed = seed;
        if (dump_aux) cfg.dump_aux = true;
        if (!experiment.empty()) {
            if (experiment == "notch") cfg.experiment = carmwf::ExperimentKind::Notch;
            if (experiment == "noise") cfg.experiment = carmwf::ExperimentKind::NoiseReduction;
            if (experiment == "head") cfg.experiment = carmwf::ExperimentKind::HeadMovement;
            cfg.validate();
        }

        const carmwf::RunReport report = carmwf::run_experiment(cfg);
        carmwf::emit_report(report, cfg, cfg.out_dir);

        std::size_t failed = 0;
        for (const auto& row : report.rows) {
            if (!row.error.empty()) {
                std::fprintf(stderr, "cell %s failed: %s\n", row.cell.c_str(), row.error.c_str());
                ++failed;
            }
        }
        std::printf("%s: %zu rows, %zu failed, %.1f s (seed %llu, config %s)\n",
                    carmwf::to_string(cfg.experiment), report.rows.size(), failed,
                    report.wall_time_s, static_cast<unsigned long long>(report.seed),
                    report.config_hash.c_str());
        std::printf("report written to %s\n", cfg.out_dir.c_str());
        return failed == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
