#include "carmwf/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "carmwf/activity.hpp"
#include "carmwf/noise.hpp"

namespace carmwf {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const char* to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::Notch: return "notch";
        case ExperimentKind::NoiseReduction: return "noise";
        case ExperimentKind::HeadMovement: return "head";
    }
    return "noise";
}

namespace {

ExperimentKind experiment_from_name(const std::string& name) {
    if (name == "notch") return ExperimentKind::Notch;
    if (name == "noise") return ExperimentKind::NoiseReduction;
    if (name == "head") return ExperimentKind::HeadMovement;
    throw std::invalid_argument("experiment must be one of notch|noise|head, got '" + name + "'");
}

std::string fmt(double v, const char* f = "%.4f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

std::string fmt_opt(const std::optional<double>& v, const char* f = "%.4f") {
    return v ? fmt(*v, f) : std::string();
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// parsing helpers

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* k) { return key == k; }) == allowed.end()) {
            throw std::invalid_argument("unknown config key '" +
                                        (path.empty() ? key : path + "." + key) + "'");
        }
    }
}

bool has(const json& obj, const char* key) {
    return obj.contains(key) && !obj.at(key).is_null();
}

Vec3 parse_vec3(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 3) {
        throw std::invalid_argument(path + " must be an array of 3 numbers");
    }
    return {v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>()};
}

void check_inside_room(const Vec3& p, const Vec3& room, const std::string& path) {
    const char axes[3] = {'x', 'y', 'z'};
    const double coords[3] = {p.x, p.y, p.z};
    const double limits[3] = {room.x, room.y, room.z};
    for (int i = 0; i < 3; ++i) {
        if (coords[i] <= 0.0 || coords[i] >= limits[i]) {
            throw std::invalid_argument(path + ": coordinate " + axes[i] + "=" +
                                        fmt(coords[i], "%g") + " is outside the room (0, " +
                                        fmt(limits[i], "%g") + ")");
        }
    }
}

void parse_scene(const json& j, ScenarioConfig& cfg) {
    check_keys(j, "scene",
               {"room_m", "rt60_s", "driver_m", "passenger_m", "mic_primary_m", "mic_secondary_m",
                "mic_pattern", "speed_of_sound", "ir_length", "sample_rate_hz",
                "cross_side_attenuation_db"});
    Scene& s = cfg.scene;
    if (has(j, "room_m")) s.room_dims = parse_vec3(j.at("room_m"), "scene.room_m");
    if (has(j, "rt60_s")) s.rt60_s = j.at("rt60_s").get<double>();
    if (has(j, "speed_of_sound")) s.speed_of_sound = j.at("speed_of_sound").get<double>();
    if (has(j, "ir_length")) s.ir_length = j.at("ir_length").get<std::size_t>();
    if (has(j, "sample_rate_hz")) s.sample_rate = j.at("sample_rate_hz").get<double>();
    if (has(j, "driver_m")) s.sources.at(0).position = parse_vec3(j.at("driver_m"), "scene.driver_m");
    if (has(j, "passenger_m")) {
        s.sources.at(1).position = parse_vec3(j.at("passenger_m"), "scene.passenger_m");
    }
    if (has(j, "mic_primary_m")) {
        s.mics.at(0).position = parse_vec3(j.at("mic_primary_m"), "scene.mic_primary_m");
    }
    if (has(j, "mic_secondary_m")) {
        s.mics.at(1).position = parse_vec3(j.at("mic_secondary_m"), "scene.mic_secondary_m");
    }
    if (has(j, "mic_pattern")) {
        const std::string p = j.at("mic_pattern").get<std::string>();
        if (p != "cardioid" && p != "omni") {
            throw std::invalid_argument("scene.mic_pattern must be cardioid or omni");
        }
        for (auto& mic : s.mics) {
            mic.pattern = p == "cardioid" ? MicPattern::Cardioid : MicPattern::Omni;
        }
    }
    if (has(j, "cross_side_attenuation_db")) {
        cfg.cross_side_attenuation_db = j.at("cross_side_attenuation_db").get<double>();
    }

    check_inside_room(s.sources.at(0).position, s.room_dims, "scene.driver_m");
    check_inside_room(s.sources.at(1).position, s.room_dims, "scene.passenger_m");
    check_inside_room(s.mics.at(0).position, s.room_dims, "scene.mic_primary_m");
    check_inside_room(s.mics.at(1).position, s.room_dims, "scene.mic_secondary_m");
    // mics keep pointing at the configured speaker positions
    s.mics.at(0).orientation = (s.sources.at(0).position - s.mics.at(0).position).normalized();
    s.mics.at(1).orientation = (s.sources.at(1).position - s.mics.at(1).position).normalized();
}

void parse_mwf(const json& j, ScenarioConfig& cfg) {
    check_keys(j, "mwf", {"frame_ms", "lambda", "delta_schedule", "warmup_frames",
                          "adaptation_stop_s", "diagnostic_bins"});
    if (has(j, "frame_ms")) cfg.mwf.frame_ms = j.at("frame_ms").get<double>();
    if (has(j, "lambda")) cfg.mwf.lambda = j.at("lambda").get<double>();
    if (has(j, "warmup_frames")) cfg.mwf.warmup_frames = j.at("warmup_frames").get<std::size_t>();
    if (has(j, "adaptation_stop_s")) {
        cfg.mwf.adaptation_stop_s = j.at("adaptation_stop_s").get<double>();
    }
    if (has(j, "diagnostic_bins")) {
        cfg.mwf.diagnostic_bins = j.at("diagnostic_bins").get<std::vector<std::size_t>>();
    }
    if (has(j, "delta_schedule")) {
        cfg.mwf.delta_schedule.clear();
        for (const auto& entry : j.at("delta_schedule")) {
            check_keys(entry, "mwf.delta_schedule[]", {"max_hz", "delta"});
            DeltaScheduleEntry e;
            if (has(entry, "max_hz")) e.max_hz = entry.at("max_hz").get<double>();
            e.delta = entry.at("delta").get<double>();
            cfg.mwf.delta_schedule.push_back(e);
        }
        cfg.delta_schedule_explicit = true;
    }
}

// ---------------------------------------------------------------------------
// experiment plumbing

/// Frames whose start time falls outside [t0, t1) are relabeled Silence so
/// interval metrics only see that window.
ActivityTimeline restrict_timeline(const ActivityTimeline& tl, double t0, double t1, double fs) {
    ActivityTimeline out = tl;
    for (std::size_t m = 0; m < out.labels.size(); ++m) {
        const double t = static_cast<double>(m * out.hop) / fs;
        if (t < t0 || t >= t1) out.labels[m] = ActivityLabel::Silence;
    }
    return out;
}

MultichannelSignal add_signals(const MultichannelSignal& a, const MultichannelSignal& b) {
    MultichannelSignal out = a;
    for (std::size_t ch = 0; ch < out.num_channels(); ++ch) {
        add_into(out.channels[ch], b.channels[ch]);
    }
    return out;
}

std::vector<double> channel_sum(const MultichannelSignal& s) {
    std::vector<double> out(s.length(), 0.0);
    for (const auto& ch : s.channels) add_into(out, ch);
    return out;
}

InputDecomposition input_decomposition(const RenderedScene& rendered,
                                       const MultichannelSignal& noise) {
    return {rendered.source_components.at(0), rendered.source_components.at(1), noise};
}

OutputDecomposition micsum_decomposition(const RenderedScene& rendered,
                                         const MultichannelSignal& noise) {
    OutputDecomposition d;
    d.driver = channel_sum(rendered.source_components.at(0));
    d.passenger = channel_sum(rendered.source_components.at(1));
    d.noise = channel_sum(noise);
    return d;
}

enum class MwfPath { Mixed, DriverEstimate, PassengerEstimate };

OutputDecomposition mwf_decomposition(const MwfOutput& out, MwfPath path) {
    const auto pick = [&](const MwfOutput::ComponentOutput& c) -> const std::vector<double>& {
        switch (path) {
            case MwfPath::Mixed: return c.mixed;
            case MwfPath::DriverEstimate: return c.driver_path;
            case MwfPath::PassengerEstimate: return c.passenger_path;
        }
        return c.mixed;
    };
    return {pick(out.component("driver")), pick(out.component("passenger")),
            pick(out.component("noise"))};
}

struct GainSet {
    double snr_driver, snr_passenger, sir_driver, sir_passenger;
};

GainSet micsum_gains(const InputDecomposition& in, const OutputDecomposition& micsum,
                     const ActivityTimeline& tl) {
    return {snr_gain_db(in, micsum, tl, SourceLabel::Driver),
            snr_gain_db(in, micsum, tl, SourceLabel::Passenger),
            sir_gain_db(in, micsum, tl, SourceLabel::Driver),
            sir_gain_db(in, micsum, tl, SourceLabel::Passenger)};
}

/// SNR on the mixed outputs sum; SIR on each source's own extracted path.
GainSet mwf_gains(const InputDecomposition& in, const MwfOutput& out, const ActivityTimeline& tl) {
    const OutputDecomposition mixed = mwf_decomposition(out, MwfPath::Mixed);
    const OutputDecomposition drv = mwf_decomposition(out, MwfPath::DriverEstimate);
    const OutputDecomposition pas = mwf_decomposition(out, MwfPath::PassengerEstimate);
    return {snr_gain_db(in, mixed, tl, SourceLabel::Driver),
            snr_gain_db(in, mixed, tl, SourceLabel::Passenger),
            sir_gain_db(in, drv, tl, SourceLabel::Driver),
            sir_gain_db(in, pas, tl, SourceLabel::Passenger)};
}

std::vector<DeltaScheduleEntry> delta_schedule_for(const ScenarioConfig& cfg,
                                                   const std::string& color) {
    if (!cfg.delta_schedule_explicit && color == "hoth") return MwfConfig::hoth_delta_schedule();
    return cfg.mwf.delta_schedule;
}

double predicted_first_null_hz(const Scene& scene) {
    const double delta_d =
        std::abs(scene.source_mic_distance(0, 1) - scene.source_mic_distance(0, 0));
    return scene.speed_of_sound / (2.0 * delta_d);
}

void dump_cell_aux(const ScenarioConfig& cfg, const std::string& cell,
                   const ImpulseResponseSet& irs, const ActivityTimeline& tl,
                   const MwfOutput* out) {
    const std::string dir = cfg.out_dir + "/aux/" + cell;
    std::filesystem::create_directories(dir);
    dump_ir_set(irs, dir);
    export_timeline_csv(tl, dir + "/timeline.csv");
    if (out && !out->diagnostics.empty()) {
        export_diagnostics_csv(out->diagnostics, dir + "/mwf_diagnostics.csv");
    }
}

// ---------------------------------------------------------------------------
// experiments

void run_noise_reduction(const ScenarioConfig& cfg, RunReport& report) {
    const double fs = cfg.scene.sample_rate;
    const SpeechProgram program = build_speech_program(cfg.speech, fs);
    const PositionSchedule schedule = PositionSchedule::single(cfg.scene);
    const RenderedScene rendered =
        render_scene(program.dry, schedule, cfg.cross_side_attenuation_db);

    MwfConfig base_mwf = cfg.mwf;
    const StftConfig scfg = base_mwf.stft(fs);
    const ActivityTimeline timeline = oracle_timeline(program.dry, scfg);

    struct Cell {
        std::string color;
        double snr_db;
    };
    std::vector<Cell> cells;
    for (const auto& color : cfg.sweep_colors) cells.push_back({color, cfg.input_snr_db});
    for (double snr : cfg.sweep_input_snrs_db) {
        const bool dup = std::any_of(cells.begin(), cells.end(), [&](const Cell& c) {
            return c.color == "white" && c.snr_db == snr;
        });
        if (!dup) cells.push_back({"white", snr});
    }

    bool baseline_done = false;
    bool aux_done = false;
    for (const auto& cell : cells) {
        RunRow row;
        row.experiment = to_string(cfg.experiment);
        row.cell = cell.color + "_" + fmt(cell.snr_db, "%g") + "db";
        row.signal = "mwfsum";
        row.noise_color = cell.color;
        row.input_snr_db = cell.snr_db;
        row.frame_ms = cfg.mwf.frame_ms;
        try {
            NoiseSpec nspec{NoiseColor::from_name(cell.color), cfg.seed, 2};
            MultichannelSignal noise = generate_noise(nspec, program.dry.length(), fs);
            mix_at_snr(rendered.source_components, noise, cell.snr_db,
                       {program.driver_ranges, program.passenger_ranges});

            const InputDecomposition input = input_decomposition(rendered, noise);
            if (!baseline_done) {
                const GainSet g = micsum_gains(input, micsum_decomposition(rendered, noise),
                                               timeline);
                RunRow baseline = row;
                baseline.cell = "baseline";
                baseline.signal = "micsum";
                baseline.frame_ms.reset();
                baseline.snr_gain_driver_db = g.snr_driver;
                baseline.snr_gain_passenger_db = g.snr_passenger;
                baseline.sir_gain_driver_db = g.sir_driver;
                baseline.sir_gain_passenger_db = g.sir_passenger;
                report.rows.push_back(baseline);
                baseline_done = true;
            }

            MwfConfig mwf = base_mwf;
            mwf.delta_schedule = delta_schedule_for(cfg, cell.color);
            const MultichannelSignal mics = add_signals(rendered.mic_sum, noise);
            const MwfOutput out = process_stream(mics, timeline, mwf,
                                                 {{"driver", rendered.source_components.at(0)},
                                                  {"passenger", rendered.source_components.at(1)},
                                                  {"noise", noise}});
            const GainSet g = mwf_gains(input, out, timeline);
            row.snr_gain_driver_db = g.snr_driver;
            row.snr_gain_passenger_db = g.snr_passenger;
            row.sir_gain_driver_db = g.sir_driver;
            row.sir_gain_passenger_db = g.sir_passenger;

            if (cfg.dump_aux && !aux_done) {
                dump_cell_aux(cfg, row.cell,
                              generate_rir_set(cfg.scene, cfg.cross_side_attenuation_db), timeline,
                              &out);
                aux_done = true;
            }
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        report.rows.push_back(row);
    }
}

void run_notch(const ScenarioConfig& cfg, RunReport& report) {
    const double fs = cfg.scene.sample_rate;
    const SpeechProgram program = build_white_burst_program(cfg.speech, fs);
    const double f1 = predicted_first_null_hz(cfg.scene);

    for (double att_db : cfg.notch_cross_attenuations_db) {
        RenderedScene rendered;
        MultichannelSignal noise;
        try {
            rendered = render_scene(program.dry, PositionSchedule::single(cfg.scene), att_db);
            NoiseSpec nspec{NoiseColor::white(), cfg.seed, 2};
            noise = generate_noise(nspec, program.dry.length(), fs);
            mix_at_snr(rendered.source_components, noise, cfg.notch_source_snr_db,
                       {program.driver_ranges, program.passenger_ranges});
        } catch (const std::exception& e) {
            RunRow row;
            row.experiment = to_string(cfg.experiment);
            row.cell = "att" + fmt(att_db, "%g") + "db";
            row.error = e.what();
            report.rows.push_back(row);
            continue;
        }
        const MultichannelSignal mics = add_signals(rendered.mic_sum, noise);
        const OutputDecomposition micsum = micsum_decomposition(rendered, noise);
        std::vector<double> micsum_directional(micsum.driver.size());
        for (std::size_t i = 0; i < micsum_directional.size(); ++i) {
            micsum_directional[i] = micsum.driver[i] + micsum.passenger[i];
        }

        for (double frame_ms : cfg.notch_frame_sizes_ms) {
            const std::string cell = fmt(frame_ms, "%g") + "ms_" + fmt(att_db, "%g") + "db";
            RunRow base_row;
            base_row.experiment = to_string(cfg.experiment);
            base_row.cell = cell;
            base_row.noise_color = "white";
            base_row.input_snr_db = cfg.notch_source_snr_db;
            base_row.frame_ms = frame_ms;
            base_row.cross_attenuation_db = att_db;
            try {
                MwfConfig mwf = cfg.mwf;
                mwf.frame_ms = frame_ms;
                const StftConfig scfg = mwf.stft(fs);
                const ActivityTimeline timeline = oracle_timeline(program.dry, scfg);
                const MwfOutput out =
                    process_stream(mics, timeline, mwf,
                                   {{"driver", rendered.source_components.at(0)},
                                    {"passenger", rendered.source_components.at(1)},
                                    {"noise", noise}});
                const OutputDecomposition mixed = mwf_decomposition(out, MwfPath::Mixed);
                std::vector<double> mwf_directional(mixed.driver.size());
                for (std::size_t i = 0; i < mwf_directional.size(); ++i) {
                    mwf_directional[i] = mixed.driver[i] + mixed.passenger[i];
                }

                const Psd psd_mic = long_term_spectrum(micsum_directional, fs);
                const Psd psd_mwf = long_term_spectrum(mwf_directional, fs);
                report.psds.emplace_back(cell + "_micsum", psd_mic);
                report.psds.emplace_back(cell + "_mwfsum", psd_mwf);

                RunRow mic_row = base_row;
                mic_row.signal = "micsum";
                mic_row.max_notch_depth_db = notch_depths(psd_mic).max_depth_db();
                mic_row.first_null_hz = f1;
                mic_row.first_null_depth_db = depth_near_db(psd_mic, f1);
                report.rows.push_back(mic_row);

                RunRow mwf_row = base_row;
                mwf_row.signal = "mwfsum";
                mwf_row.max_notch_depth_db = notch_depths(psd_mwf).max_depth_db();
                mwf_row.first_null_hz = f1;
                mwf_row.first_null_depth_db = depth_near_db(psd_mwf, f1);
                report.rows.push_back(mwf_row);

                if (cfg.dump_aux) {
                    dump_cell_aux(cfg, cell, generate_rir_set(cfg.scene, att_db), timeline, &out);
                }
            } catch (const std::exception& e) {
                base_row.error = e.what();
                report.rows.push_back(base_row);
            }
        }
    }
}

void run_head_movement(const ScenarioConfig& cfg, RunReport& report) {
    const double fs = cfg.scene.sample_rate;
    const SpeechProgram program = build_speech_program(cfg.speech, fs);
    MwfConfig base_mwf = cfg.mwf;
    const StftConfig scfg = base_mwf.stft(fs);
    const ActivityTimeline timeline = oracle_timeline(program.dry, scfg);

    const double t_move = cfg.head_move_start_s;
    const double t_back = cfg.head_move_end_s;
    const double t_end = cfg.head_eval_end_s;
    const struct {
        double begin, end;
    } intervals[3] = {{0.0, t_move}, {t_move, t_back}, {t_back, t_end}};

    for (double displacement : cfg.head_displacements_m) {
        RenderedScene rendered;
        MultichannelSignal noise;
        try {
            Scene displaced = cfg.scene;
            displaced.sources.at(0).position.y -= displacement;
            displaced.validate();

            PositionSchedule schedule;
            schedule.segments = {{0.0, cfg.scene}, {t_move, displaced}, {t_back, cfg.scene}};
            rendered = render_scene(program.dry, schedule, cfg.cross_side_attenuation_db);
            NoiseSpec nspec{NoiseColor::from_name(cfg.noise_color), cfg.seed, 2};
            noise = generate_noise(nspec, program.dry.length(), fs);
            mix_at_snr(rendered.source_components, noise, cfg.input_snr_db,
                       {program.driver_ranges, program.passenger_ranges});
        } catch (const std::exception& e) {
            RunRow row;
            row.experiment = to_string(cfg.experiment);
            row.cell = "disp" + fmt(displacement, "%g");
            row.error = e.what();
            report.rows.push_back(row);
            continue;
        }
        const MultichannelSignal mics = add_signals(rendered.mic_sum, noise);
        const InputDecomposition input = input_decomposition(rendered, noise);

        for (bool frozen : {false, true}) {
            const std::string cell = "disp" + fmt(displacement, "%g") + "_" +
                                     (frozen ? "frozen" : "continuous");
            try {
                MwfConfig mwf = base_mwf;
                mwf.delta_schedule = delta_schedule_for(cfg, cfg.noise_color);
                if (frozen) {
                    mwf.adaptation_stop_s = t_move + cfg.head_readapt_window_s;
                }
                const MwfOutput out = process_stream(mics, timeline, mwf,
                                                     {{"driver", rendered.source_components.at(0)},
                                                      {"passenger", rendered.source_components.at(1)},
                                                      {"noise", noise}});
                for (const auto& iv : intervals) {
                    const ActivityTimeline tl_iv = restrict_timeline(timeline, iv.begin, iv.end, fs);
                    const GainSet g = mwf_gains(input, out, tl_iv);
                    RunRow row;
                    row.experiment = to_string(cfg.experiment);
                    row.cell = cell;
                    row.signal = "mwfsum";
                    row.noise_color = cfg.noise_color;
                    row.input_snr_db = cfg.input_snr_db;
                    row.frame_ms = cfg.mwf.frame_ms;
                    row.displacement_m = displacement;
                    row.adaptation = frozen ? "frozen" : "continuous";
                    row.interval = fmt(iv.begin, "%g") + "-" + fmt(iv.end, "%g");
                    row.snr_gain_driver_db = g.snr_driver;
                    row.snr_gain_passenger_db = g.snr_passenger;
                    row.sir_gain_driver_db = g.sir_driver;
                    row.sir_gain_passenger_db = g.sir_passenger;
                    report.rows.push_back(row);
                }
            } catch (const std::exception& e) {
                RunRow row;
                row.experiment = to_string(cfg.experiment);
                row.cell = cell;
                row.error = e.what();
                report.rows.push_back(row);
            }
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// ScenarioConfig

void ScenarioConfig::validate() const {
    scene.validate();
    if (scene.sources.size() != 2 || scene.mics.size() != 2) {
        throw std::invalid_argument("scenario: scene must have 2 sources and 2 mics");
    }
    mwf.validate();
    if (input_snr_db != input_snr_db) throw std::invalid_argument("scenario: bad input SNR");
    NoiseColor::from_name(noise_color);
    for (const auto& c : sweep_colors) NoiseColor::from_name(c);
    if (speech.total_s <= 0.0 || speech.utterance_s <= 0.0 || speech.gap_s < 0.0 ||
        speech.lead_silence_s < 0.0) {
        throw std::invalid_argument("scenario: speech schedule times must be positive");
    }
    if (experiment == ExperimentKind::HeadMovement) {
        if (!(0.0 < head_move_start_s && head_move_start_s < head_move_end_s &&
              head_move_end_s < head_eval_end_s)) {
            throw std::invalid_argument("scenario: head intervals must be ordered");
        }
        if (head_eval_end_s > speech.total_s) {
            throw std::invalid_argument("scenario: speech program shorter than the head-movement "
                                        "evaluation window");
        }
        if (head_readapt_window_s < 0.0 ||
            head_move_start_s + head_readapt_window_s >= head_move_end_s) {
            throw std::invalid_argument("scenario: readapt window must fit inside the displaced "
                                        "interval");
        }
    }
    if (experiment == ExperimentKind::Notch &&
        (notch_frame_sizes_ms.empty() || notch_cross_attenuations_db.empty())) {
        throw std::invalid_argument("scenario: notch grid must be non-empty");
    }
    if (experiment == ExperimentKind::NoiseReduction && sweep_colors.empty() &&
        sweep_input_snrs_db.empty()) {
        throw std::invalid_argument("scenario: noise sweep must be non-empty");
    }
}

std::string ScenarioConfig::resolved_json() const {
    ordered_json j;
    j["experiment"] = to_string(experiment);
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    j["dump_aux"] = dump_aux;
    ordered_json js;
    js["room_m"] = {scene.room_dims.x, scene.room_dims.y, scene.room_dims.z};
    js["rt60_s"] = scene.rt60_s;
    const auto vec = [](const Vec3& v) { return ordered_json{v.x, v.y, v.z}; };
    js["driver_m"] = vec(scene.sources.at(0).position);
    js["passenger_m"] = vec(scene.sources.at(1).position);
    js["mic_primary_m"] = vec(scene.mics.at(0).position);
    js["mic_secondary_m"] = vec(scene.mics.at(1).position);
    js["mic_pattern"] = scene.mics.at(0).pattern == MicPattern::Cardioid ? "cardioid" : "omni";
    js["speed_of_sound"] = scene.speed_of_sound;
    js["ir_length"] = scene.ir_length;
    js["sample_rate_hz"] = scene.sample_rate;
    if (cross_side_attenuation_db) {
        js["cross_side_attenuation_db"] = *cross_side_attenuation_db;
    } else {
        js["cross_side_attenuation_db"] = nullptr;
    }
    j["scene"] = js;
    ordered_json jp;
    jp["driver_wav"] = speech.driver_wav;
    jp["passenger_wav"] = speech.passenger_wav;
    jp["lead_silence_s"] = speech.lead_silence_s;
    jp["utterance_s"] = speech.utterance_s;
    jp["gap_s"] = speech.gap_s;
    jp["total_s"] = speech.total_s;
    j["speech"] = jp;
    ordered_json jn;
    jn["color"] = noise_color;
    jn["input_snr_db"] = input_snr_db;
    j["noise"] = jn;
    ordered_json jm;
    jm["frame_ms"] = mwf.frame_ms;
    jm["lambda"] = mwf.lambda;
    ordered_json sched = ordered_json::array();
    for (const auto& e : mwf.delta_schedule) {
        ordered_json entry;
        if (std::isfinite(e.max_hz)) entry["max_hz"] = e.max_hz;
        entry["delta"] = e.delta;
        sched.push_back(entry);
    }
    jm["delta_schedule"] = sched;
    jm["warmup_frames"] = mwf.warmup_frames;
    if (mwf.adaptation_stop_s) {
        jm["adaptation_stop_s"] = *mwf.adaptation_stop_s;
    } else {
        jm["adaptation_stop_s"] = nullptr;
    }
    jm["diagnostic_bins"] = mwf.diagnostic_bins;
    j["mwf"] = jm;
    ordered_json jt;
    jt["frame_sizes_ms"] = notch_frame_sizes_ms;
    jt["cross_attenuations_db"] = notch_cross_attenuations_db;
    jt["source_snr_db"] = notch_source_snr_db;
    j["notch"] = jt;
    ordered_json jw;
    jw["colors"] = sweep_colors;
    jw["input_snrs_db"] = sweep_input_snrs_db;
    j["sweep"] = jw;
    ordered_json jh;
    jh["displacements_m"] = head_displacements_m;
    jh["move_start_s"] = head_move_start_s;
    jh["move_end_s"] = head_move_end_s;
    jh["eval_end_s"] = head_eval_end_s;
    jh["readapt_window_s"] = head_readapt_window_s;
    j["head"] = jh;
    return j.dump(2);
}

std::string ScenarioConfig::config_hash() const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(resolved_json())));
    return buf;
}

ScenarioConfig parse_scenario_text(const std::string& text) {
    ScenarioConfig cfg;
    const bool blank = std::all_of(text.begin(), text.end(),
                                   [](unsigned char c) { return std::isspace(c); });
    if (!blank) {
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw std::invalid_argument(std::string("scenario config is not valid JSON: ") +
                                        e.what());
        }
        if (!j.is_object()) throw std::invalid_argument("scenario config must be a JSON object");
        check_keys(j, "", {"experiment", "seed", "out_dir", "dump_aux", "scene", "speech", "noise",
                           "mwf", "notch", "sweep", "head"});
        if (has(j, "experiment")) {
            cfg.experiment = experiment_from_name(j.at("experiment").get<std::string>());
        }
        if (has(j, "seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (has(j, "out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
        if (has(j, "dump_aux")) cfg.dump_aux = j.at("dump_aux").get<bool>();
        if (has(j, "scene")) parse_scene(j.at("scene"), cfg);
        if (has(j, "speech")) {
            const json& jp = j.at("speech");
            check_keys(jp, "speech", {"driver_wav", "passenger_wav", "lead_silence_s",
                                      "utterance_s", "gap_s", "total_s"});
            if (has(jp, "driver_wav")) cfg.speech.driver_wav = jp.at("driver_wav").get<std::string>();
            if (has(jp, "passenger_wav")) {
                cfg.speech.passenger_wav = jp.at("passenger_wav").get<std::string>();
            }
            if (has(jp, "lead_silence_s")) cfg.speech.lead_silence_s = jp.at("lead_silence_s").get<double>();
            if (has(jp, "utterance_s")) cfg.speech.utterance_s = jp.at("utterance_s").get<double>();
            if (has(jp, "gap_s")) cfg.speech.gap_s = jp.at("gap_s").get<double>();
            if (has(jp, "total_s")) cfg.speech.total_s = jp.at("total_s").get<double>();
        }
        if (has(j, "noise")) {
            const json& jn = j.at("noise");
            check_keys(jn, "noise", {"color", "input_snr_db"});
            if (has(jn, "color")) cfg.noise_color = jn.at("color").get<std::string>();
            if (has(jn, "input_snr_db")) cfg.input_snr_db = jn.at("input_snr_db").get<double>();
        }
        if (has(j, "mwf")) parse_mwf(j.at("mwf"), cfg);
        if (has(j, "notch")) {
            const json& jt = j.at("notch");
            check_keys(jt, "notch", {"frame_sizes_ms", "cross_attenuations_db", "source_snr_db"});
            if (has(jt, "frame_sizes_ms")) {
                cfg.notch_frame_sizes_ms = jt.at("frame_sizes_ms").get<std::vector<double>>();
            }
            if (has(jt, "cross_attenuations_db")) {
                cfg.notch_cross_attenuations_db =
                    jt.at("cross_attenuations_db").get<std::vector<double>>();
            }
            if (has(jt, "source_snr_db")) cfg.notch_source_snr_db = jt.at("source_snr_db").get<double>();
        }
        if (has(j, "sweep")) {
            const json& jw = j.at("sweep");
            check_keys(jw, "sweep", {"colors", "input_snrs_db"});
            if (has(jw, "colors")) cfg.sweep_colors = jw.at("colors").get<std::vector<std::string>>();
            if (has(jw, "input_snrs_db")) {
                cfg.sweep_input_snrs_db = jw.at("input_snrs_db").get<std::vector<double>>();
            }
        }
        if (has(j, "head")) {
            const json& jh = j.at("head");
            check_keys(jh, "head", {"displacements_m", "move_start_s", "move_end_s", "eval_end_s",
                                    "readapt_window_s"});
            if (has(jh, "displacements_m")) {
                cfg.head_displacements_m = jh.at("displacements_m").get<std::vector<double>>();
            }
            if (has(jh, "move_start_s")) cfg.head_move_start_s = jh.at("move_start_s").get<double>();
            if (has(jh, "move_end_s")) cfg.head_move_end_s = jh.at("move_end_s").get<double>();
            if (has(jh, "eval_end_s")) cfg.head_eval_end_s = jh.at("eval_end_s").get<double>();
            if (has(jh, "readapt_window_s")) {
                cfg.head_readapt_window_s = jh.at("readapt_window_s").get<double>();
            }
        }
    }
    cfg.validate();
    return cfg;
}

ScenarioConfig parse_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("parse_scenario: cannot open " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_scenario_text(buf.str());
}

// ---------------------------------------------------------------------------
// runner + report

bool RunReport::all_ok() const {
    return std::all_of(rows.begin(), rows.end(),
                       [](const RunRow& r) { return r.error.empty(); });
}

RunReport run_experiment(const ScenarioConfig& config) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();
    RunReport report;
    report.seed = config.seed;
    report.config_hash = config.config_hash();
    switch (config.experiment) {
        case ExperimentKind::NoiseReduction:
            run_noise_reduction(config, report);
            break;
        case ExperimentKind::Notch:
            run_notch(config, report);
            break;
        case ExperimentKind::HeadMovement:
            run_head_movement(config, report);
            break;
    }
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

void emit_report(const RunReport& report, const ScenarioConfig& config, const std::string& dir) {
    std::filesystem::create_directories(dir);

    std::ofstream csv(dir + "/metrics.csv", std::ios::trunc);
    if (!csv) throw std::runtime_error("emit_report: cannot write to " + dir);
    csv << "experiment,cell,signal,noise,input_snr_db,frame_ms,cross_attenuation_db,"
           "displacement_m,adaptation,interval_s,snr_gain_driver_db,snr_gain_passenger_db,"
           "sir_gain_driver_db,sir_gain_passenger_db,max_notch_depth_db,first_null_hz,"
           "first_null_depth_db,error\n";
    for (const RunRow& r : report.rows) {
        csv << r.experiment << ',' << r.cell << ',' << r.signal << ',' << r.noise_color << ','
            << fmt_opt(r.input_snr_db, "%g") << ',' << fmt_opt(r.frame_ms, "%g") << ','
            << fmt_opt(r.cross_attenuation_db, "%g") << ',' << fmt_opt(r.displacement_m, "%g")
            << ',' << r.adaptation << ',' << r.interval << ','
            << fmt_opt(r.snr_gain_driver_db) << ',' << fmt_opt(r.snr_gain_passenger_db) << ','
            << fmt_opt(r.sir_gain_driver_db) << ',' << fmt_opt(r.sir_gain_passenger_db) << ','
            << fmt_opt(r.max_notch_depth_db) << ',' << fmt_opt(r.first_null_hz, "%.2f") << ','
            << fmt_opt(r.first_null_depth_db) << ',' << r.error << '\n';
    }
    csv.close();

    for (const auto& [tag, psd] : report.psds) {
        std::ofstream dat(dir + "/psd_" + tag + ".dat", std::ios::trunc);
        if (!dat) throw std::runtime_error("emit_report: cannot write PSD " + tag);
        dat << "# frequency_hz level_db\n";
        for (std::size_t i = 0; i < psd.freq_hz.size(); ++i) {
            dat << fmt(psd.freq_hz[i], "%.6f") << ' ' << fmt(psd.level_db[i], "%.6f") << '\n';
        }
    }

    std::ofstream resolved(dir + "/config.resolved", std::ios::trunc);
    resolved << config.resolved_json() << '\n';
}

}  // namespace carmwf
