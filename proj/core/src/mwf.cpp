#include "carmwf/mwf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace carmwf {

namespace {

constexpr double kTraceEpsilon = 1e-12;     // absolute floor inside tr(R)/2
constexpr double kDetThreshold = 1e-15;     // fail-safe determinant scale

Complex apply_filter_bin(const Vec2c& w, const Complex& x0, const Complex& x1) {
    return std::conj(w[0]) * x0 + std::conj(w[1]) * x1;  // w^H x
}

}  // namespace

std::vector<DeltaScheduleEntry> MwfConfig::hoth_delta_schedule() {
    return {{312.5, 100.0}, {std::numeric_limits<double>::infinity(), 1.0}};
}

double MwfConfig::delta_for(double freq_hz) const {
    for (const auto& entry : delta_schedule) {
        if (freq_hz <= entry.max_hz) return entry.delta;
    }
    return delta_schedule.empty() ? 1.0 : delta_schedule.back().delta;
}

StftConfig MwfConfig::stft(double sample_rate) const {
    return StftConfig::from_frame_ms(frame_ms, sample_rate);
}

void MwfConfig::validate() const {
    if (frame_ms <= 0.0) throw std::invalid_argument("MwfConfig: frame_ms must be positive");
    if (lambda <= 0.0 || lambda >= 1.0) {
        throw std::invalid_argument("MwfConfig: lambda must lie in (0, 1)");
    }
    if (delta_schedule.empty()) throw std::invalid_argument("MwfConfig: empty delta schedule");
    for (std::size_t i = 0; i < delta_schedule.size(); ++i) {
        if (delta_schedule[i].delta < 0.0) {
            throw std::invalid_argument("MwfConfig: delta must be >= 0");
        }
        if (i > 0 && delta_schedule[i].max_hz <= delta_schedule[i - 1].max_hz) {
            throw std::invalid_argument("MwfConfig: delta schedule must be sorted by max_hz");
        }
    }
    if (adaptation_stop_s && *adaptation_stop_s < 0.0) {
        throw std::invalid_argument("MwfConfig: adaptation_stop_s must be >= 0");
    }
}

void update_statistics(CorrelationState& state, const SpectralFrame& mic_frame,
                       ActivityLabel label, double lambda) {
    if (label == ActivityLabel::Both) return;  // double talk: freeze everything
    if (mic_frame.num_channels() != 2) {
        throw std::invalid_argument("update_statistics: expected a 2-channel frame");
    }
    const auto& x0 = mic_frame.bins[0];
    const auto& x1 = mic_frame.bins[1];
    if (x0.size() != state.bins()) {
        throw std::invalid_argument("update_statistics: bin count mismatch");
    }
    std::vector<Hermitian2>* target = nullptr;
    switch (label) {
        case ActivityLabel::Silence:
            target = &state.noise;
            ++state.noise_frames;
            break;
        case ActivityLabel::DriverOnly:
            target = &state.driver;
            ++state.driver_frames;
            break;
        case ActivityLabel::PassengerOnly:
            target = &state.passenger;
            ++state.passenger_frames;
            break;
        case ActivityLabel::Both:
            return;
    }
    for (std::size_t k = 0; k < state.bins(); ++k) {
        (*target)[k].accumulate(x0[k], x1[k], lambda);
    }
}

std::pair<Mat2c, Vec2c> assemble_system(const CorrelationState& state, std::size_t bin,
                                        SourceLabel target) {
    const Hermitian2& n = state.noise.at(bin);
    const Hermitian2& a = state.driver.at(bin);
    const Hermitian2& b = state.passenger.at(bin);

    Mat2c r;
    // noise statistics are counted twice across the two single-talker classes
    r.a00 = Complex(std::max(a.d0 + b.d0 - n.d0, 0.0), 0.0);
    r.a11 = Complex(std::max(a.d1 + b.d1 - n.d1, 0.0), 0.0);
    r.a01 = a.off + b.off - n.off;
    r.a10 = std::conj(r.a01);

    Vec2c p;
    if (target == SourceLabel::Driver) {
        // column 0 of (phi_driver - phi_noise): correlation with s_1A
        p[0] = Complex(a.d0 - n.d0, 0.0);
        p[1] = std::conj(a.off) - std::conj(n.off);  // (1,0) entries
    } else {
        // column 1 of (phi_passenger - phi_noise): correlation with s_2B
        p[0] = b.off - n.off;  // (0,1) entries
        p[1] = Complex(b.d1 - n.d1, 0.0);
    }
    return {r, p};
}

Vec2c solve_filter(const Mat2c& r, const Vec2c& p, double delta) {
    if (delta < 0.0) throw std::invalid_argument("solve_filter: delta must be >= 0");
    const double mean_eig = 0.5 * r.trace().real();
    if (!std::isfinite(mean_eig) || !std::isfinite(p[0].real()) || !std::isfinite(p[1].real()) ||
        !std::isfinite(p[0].imag()) || !std::isfinite(p[1].imag())) {
        throw std::invalid_argument("solve_filter: non-finite inputs");
    }
    const Complex load(delta * mean_eig, 0.0);
    const Complex a = r.a00 + load;
    const Complex b = r.a01;
    const Complex c = r.a10;
    const Complex d = r.a11 + load;
    const Complex det = a * d - b * c;
    const double guard = mean_eig + kTraceEpsilon;
    if (std::abs(det) < kDetThreshold * guard * guard) {
        return {Complex(0.0, 0.0), Complex(0.0, 0.0)};  // fail-safe mute
    }
    return {(d * p[0] - b * p[1]) / det, (a * p[1] - c * p[0]) / det};
}

const MwfOutput::ComponentOutput& MwfOutput::component(const std::string& name) const {
    for (const auto& c : components) {
        if (c.name == name) return c;
    }
    throw std::out_of_range("MwfOutput: no component named '" + name + "'");
}

MwfOutput process_stream(const MultichannelSignal& mic_signals, const ActivityTimeline& timeline,
                         const MwfConfig& cfg, const std::vector<NamedComponent>& component_inputs) {
    cfg.validate();
    mic_signals.validate();
    if (mic_signals.num_channels() != 2) {
        throw std::invalid_argument("process_stream: expected 2 mic channels");
    }
    const double fs = mic_signals.sample_rate;
    const StftConfig scfg = cfg.stft(fs);
    const std::size_t frames = scfg.frame_count(mic_signals.length());
    if (timeline.frames() != frames || timeline.hop != scfg.hop ||
        timeline.frame_len != scfg.frame_len) {
        throw std::invalid_argument("process_stream: timeline does not match the stream framing");
    }
    for (const auto& [name, comp] : component_inputs) {
        comp.validate();
        if (comp.num_channels() != 2 || comp.length() != mic_signals.length()) {
            throw std::invalid_argument("process_stream: component '" + name +
                                        "' must match the mic signals' shape");
        }
    }

    const std::size_t bins = scfg.num_bins();
    const std::size_t nyquist = bins - 1;
    const std::size_t out_len = mic_signals.length();

    CorrelationState state(bins);
    FilterSet filters;
    filters.driver.assign(bins, Vec2c{Complex(0.0, 0.0), Complex(0.0, 0.0)});
    filters.passenger.assign(bins, Vec2c{Complex(0.0, 0.0), Complex(0.0, 0.0)});

    // per-bin regularization from the schedule, fixed over the run
    std::vector<double> delta(bins);
    for (std::size_t k = 0; k < bins; ++k) delta[k] = cfg.delta_for(scfg.bin_hz(k, fs));

    MwfOutput out;
    OverlapAdder ola_driver(out_len, scfg);
    OverlapAdder ola_passenger(out_len, scfg);
    struct ShadowAcc {
        OverlapAdder driver, passenger;
    };
    std::vector<ShadowAcc> shadow;
    shadow.reserve(component_inputs.size());
    for (std::size_t i = 0; i < component_inputs.size(); ++i) {
        shadow.push_back({OverlapAdder(out_len, scfg), OverlapAdder(out_len, scfg)});
    }

    std::vector<Complex> ya(bins), yb(bins);
    SpectralFrame mic_frame;
    for (std::size_t m = 0; m < frames; ++m) {
        mic_frame.index = m;
        mic_frame.bins = {analyze_frame(mic_signals.channels[0], m, scfg),
                          analyze_frame(mic_signals.channels[1], m, scfg)};

        const double t = static_cast<double>(m * scfg.hop) / fs;
        const bool adapting = !cfg.adaptation_stop_s || t < *cfg.adaptation_stop_s;
        if (adapting) {
            update_statistics(state, mic_frame, timeline.labels[m], cfg.lambda);
        }

        const bool driver_ready = state.driver_frames >= cfg.warmup_frames &&
                                  state.noise_frames >= cfg.warmup_frames;
        const bool passenger_ready = state.passenger_frames >= cfg.warmup_frames &&
                                     state.noise_frames >= cfg.warmup_frames;
        for (std::size_t k = 0; k < bins; ++k) {
            if (driver_ready) {
                const auto [r, p] = assemble_system(state, k, SourceLabel::Driver);
                filters.driver[k] = solve_filter(r, p, delta[k]);
            }
            if (passenger_ready) {
                const auto [r, p] = assemble_system(state, k, SourceLabel::Passenger);
                filters.passenger[k] = solve_filter(r, p, delta[k]);
            }
        }

        for (std::size_t bin : cfg.diagnostic_bins) {
            if (bin >= bins) continue;
            const auto [r, p] = assemble_system(state, bin, SourceLabel::Driver);
            out.diagnostics.push_back(
                {m, bin, std::abs(filters.driver[bin][0]) + std::abs(filters.driver[bin][1]),
                 std::abs(filters.passenger[bin][0]) + std::abs(filters.passenger[bin][1]),
                 r.trace().real()});
        }

        const auto apply_to = [&](const std::vector<Complex>& x0, const std::vector<Complex>& x1,
                                  std::vector<Complex>& da, std::vector<Complex>& db) {
            for (std::size_t k = 0; k < bins; ++k) {
                da[k] = apply_filter_bin(filters.driver[k], x0[k], x1[k]);
                db[k] = apply_filter_bin(filters.passenger[k], x0[k], x1[k]);
            }
            // real signal: DC and Nyquist must stay real
            da[0] = da[0].real();
            db[0] = db[0].real();
            da[nyquist] = da[nyquist].real();
            db[nyquist] = db[nyquist].real();
        };

        apply_to(mic_frame.bins[0], mic_frame.bins[1], ya, yb);
        ola_driver.add_frame(ya, m);
        ola_passenger.add_frame(yb, m);

        for (std::size_t i = 0; i < component_inputs.size(); ++i) {
            const auto c0 = analyze_frame(component_inputs[i].second.channels[0], m, scfg);
            const auto c1 = analyze_frame(component_inputs[i].second.channels[1], m, scfg);
            apply_to(c0, c1, ya, yb);
            shadow[i].driver.add_frame(ya, m);
            shadow[i].passenger.add_frame(yb, m);
        }
    }

    const auto to_signal = [fs](std::vector<double> samples) {
        MultichannelSignal s;
        s.sample_rate = fs;
        s.channels.push_back(std::move(samples));
        return s;
    };
    out.driver_estimate = to_signal(ola_driver.finish());
    out.passenger_estimate = to_signal(ola_passenger.finish());
    out.mixed = make_signal(1, out_len, fs);
    for (std::size_t i = 0; i < out_len; ++i) {
        out.mixed.channels[0][i] =
            out.driver_estimate.channels[0][i] + out.passenger_estimate.channels[0][i];
    }

    for (std::size_t i = 0; i < component_inputs.size(); ++i) {
        MwfOutput::ComponentOutput c;
        c.name = component_inputs[i].first;
        c.driver_path = shadow[i].driver.finish();
        c.passenger_path = shadow[i].passenger.finish();
        c.mixed.resize(out_len);
        for (std::size_t n = 0; n < out_len; ++n) {
            c.mixed[n] = c.driver_path[n] + c.passenger_path[n];
        }
        out.components.push_back(std::move(c));
    }
    out.final_filters = std::move(filters);
    return out;
}

void export_diagnostics_csv(const std::vector<MwfOutput::DiagnosticRow>& rows,
                            const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("export_diagnostics_csv: cannot open " + path);
    f << "frame,bin,abs_w_driver,abs_w_passenger,trace_r\n";
    for (const auto& row : rows) {
        f << row.frame << ',' << row.bin << ',' << row.abs_w_driver << ',' << row.abs_w_passenger
          << ',' << row.trace_r << '\n';
    }
}

}  // namespace carmwf
