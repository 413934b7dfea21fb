#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "carmwf/metrics.hpp"
#include "carmwf/mwf.hpp"
#include "carmwf/room.hpp"
#include "carmwf/speechgen.hpp"

namespace carmwf {

enum class ExperimentKind { Notch, NoiseReduction, HeadMovement };

const char* to_string(ExperimentKind kind);

/// Fully resolved experiment configuration; every field has a documented
/// default matching the simulated-cabin setup.
struct ScenarioConfig {
    ExperimentKind experiment = ExperimentKind::NoiseReduction;
    std::uint64_t seed = 1234;
    std::string out_dir = "out";
    bool dump_aux = false;

    Scene scene = Scene::default_cabin();
    std::optional<double> cross_side_attenuation_db;  // unset: natural IR ratio

    SpeechProgramSpec speech;

    std::string noise_color = "white";
    double input_snr_db = 5.0;

    MwfConfig mwf;
    bool delta_schedule_explicit = false;  // config overrode the per-color default

    // notch study grid
    std::vector<double> notch_frame_sizes_ms{100.0, 20.0, 8.0};
    std::vector<double> notch_cross_attenuations_db{2.0, 10.0};
    double notch_source_snr_db = 30.0;

    // noise-reduction sweep
    std::vector<std::string> sweep_colors{"white", "red", "pink", "green", "hoth"};
    std::vector<double> sweep_input_snrs_db{10.0, 5.0, 0.0};

    // head-movement study
    std::vector<double> head_displacements_m{0.10, 0.15};
    double head_move_start_s = 36.0;
    double head_move_end_s = 52.0;
    double head_eval_end_s = 68.0;
    /// The frozen-adaptation variant stops updates this long after the move,
    /// once the filters have re-converged on the displaced position.
    double head_readapt_window_s = 2.0;

    void validate() const;
    /// Canonical JSON echo of every effective field.
    std::string resolved_json() const;
    /// FNV-1a hash of resolved_json(), hex.
    std::string config_hash() const;
};

/// Parses a JSON scenario file. Missing fields take defaults; unknown keys are
/// rejected with their path; an empty file yields the all-defaults config.
ScenarioConfig parse_scenario(const std::string& path);
ScenarioConfig parse_scenario_text(const std::string& text);

struct RunRow {
    std::string experiment;
    std::string cell;
    std::string signal;  // "micsum" or "mwfsum"
    std::string noise_color;
    std::optional<double> input_snr_db;
    std::optional<double> frame_ms;
    std::optional<double> cross_attenuation_db;
    std::optional<double> displacement_m;
    std::string adaptation;  // "continuous" / "frozen" for head runs
    std::string interval;    // "0-36" style for head runs
    std::optional<double> snr_gain_driver_db;
    std::optional<double> snr_gain_passenger_db;
    std::optional<double> sir_gain_driver_db;
    std::optional<double> sir_gain_passenger_db;
    std::optional<double> max_notch_depth_db;
    std::optional<double> first_null_hz;
    std::optional<double> first_null_depth_db;
    std::string error;
};

struct RunReport {
    std::vector<RunRow> rows;
    std::vector<std::pair<std::string, Psd>> psds;  // tag -> PSD, written as psd_<tag>.dat
    std::uint64_t seed = 0;
    std::string config_hash;
    double wall_time_s = 0.0;  // informational; never serialized

    bool all_ok() const;
};

/// Runs the configured experiment. Failures of individual sweep cells are
/// recorded in their rows rather than aborting the run.
RunReport run_experiment(const ScenarioConfig& config);

/// Writes metrics.csv, psd_<tag>.dat files and config.resolved under dir.
/// Output bytes are deterministic for a fixed (config, seed).
void emit_report(const RunReport& report, const ScenarioConfig& config, const std::string& dir);

}  // namespace carmwf
