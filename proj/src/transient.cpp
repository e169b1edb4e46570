#include "nvmag/transient.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "nvmag/dr_demod.hpp"
#include "nvmag/error.hpp"
#include "nvmag/stats.hpp"

namespace nvmag {

void LRCircuit::validate() const {
    if (!(inductance > 0.0 && resistance > 0.0))
        throw ValidationError("LRCircuit: inductance and resistance must be positive");
    if (field_coefficient < 0.0) throw ValidationError("LRCircuit: field_coefficient must be >= 0");
}

void PulseTrain::validate() const {
    if (!(flip_window < period)) throw ValidationError("PulseTrain: flip window must be shorter than the period");
    if (!(0.0 < t_peak && t_peak < t_trough && t_trough < flip_window))
        throw ValidationError("PulseTrain: need 0 < t_peak < t_trough < flip_window");
    if (offset < 0.0) throw ValidationError("PulseTrain: offset must be >= 0");
}

double PulseTrain::voltage(double t) const {
    const double rel = t - offset;
    if (rel < 0.0 || rel >= static_cast<double>(n_periods) * period) return 0.0;
    const double ph = rel - std::floor(rel / period) * period;
    if (ph < t_peak) return amplitude * ph / t_peak;
    if (ph < t_trough) return amplitude * (1.0 - 2.0 * (ph - t_peak) / (t_trough - t_peak));
    if (ph < flip_window) return amplitude * (-1.0 + (ph - t_trough) / (flip_window - t_trough));
    return 0.0;
}

std::vector<double> PulseTrain::vertices(double until) const {
    std::vector<double> out;
    for (std::size_t k = 0; k < n_periods; ++k) {
        const double base = offset + static_cast<double>(k) * period;
        for (double v : {0.0, t_peak, t_trough, flip_window})
            if (base + v <= until) out.push_back(base + v);
    }
    return out;
}

std::vector<double> lr_current(const LRCircuit& circuit, const Waveform& voltage, double duration,
                               double dt) {
    circuit.validate();
    if (!(dt > 0.0) || dt > circuit.tau() / 100.0 * (1.0 + 1e-12))
        throw StepSizeError(fmt::format("lr_current: dt = {} s exceeds tau/100 = {} s", dt,
                                        circuit.tau() / 100.0));
    const auto steps = static_cast<std::size_t>(std::ceil(duration / dt - 1e-9));
    const double l = circuit.inductance;
    const double r = circuit.resistance;
    auto rhs = [&](double t, double i) { return (voltage(t) - r * i) / l; };

    std::vector<double> out(steps + 1, 0.0);
    double i = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const double k1 = rhs(t, i);
        const double k2 = rhs(t + 0.5 * dt, i + 0.5 * dt * k1);
        const double k3 = rhs(t + 0.5 * dt, i + 0.5 * dt * k2);
        const double k4 = rhs(t + dt, i + dt * k3);
        i += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out[k + 1] = i;
    }
    return out;
}

namespace {

// Box average of a waveform over [t0, t1) by the midpoint rule.
double box_average(const Waveform& f, double t0, double t1, int n = 64) {
    const double h = (t1 - t0) / n;
    double acc = 0.0;
    for (int k = 0; k < n; ++k) acc += f(t0 + (k + 0.5) * h);
    return acc / n;
}

}  // namespace

TransientTrace run_transient_experiment(const TransientConfig& config, std::uint64_t seed,
                                        Execution exec) {
    config.circuit.validate();
    config.pulse.validate();
    LockInSetup setup = config.setup;
    setup.protocol.seed = seed;
    setup.validate();
    const FrameTiming timing = frame_timing(setup.protocol);
    if (timing.rate < 2.0 / config.pulse.flip_window)
        throw ValidationError(fmt::format(
            "transient: frame rate {} Hz cannot resolve a {} s polarity flip", timing.rate,
            config.pulse.flip_window));

    const double span = static_cast<double>(config.n_frames) * timing.duration;
    const Waveform voltage = [&](double t) { return config.pulse.voltage(t); };
    const std::vector<double> current = lr_current(config.circuit, voltage, span, config.solver_dt);

    double k = config.circuit.field_coefficient;
    if (config.peak_field > 0.0) {
        double peak = 0.0;
        for (double i : current) peak = std::max(peak, std::abs(i));
        if (!(peak > 0.0)) throw InputError("transient: pulse train drives no current");
        k = config.peak_field / peak;
    }

    std::vector<double> field(current.size());
    for (std::size_t i = 0; i < current.size(); ++i) field[i] = k * current[i];
    const Movie field_movie = Movie::uniform(config.solver_dt, field);
    const Movie current_movie = Movie::uniform(config.solver_dt, current);
    const Movie no_drift = Movie::constant(0.0, field_movie.duration());

    const SlopeCalibration cal = calibrate_slope(setup);
    const Plane alpha = alpha_map(setup.protocol, cal);
    const auto& p = setup.protocol;
    const std::size_t center = (p.height / 2) * p.width + p.width / 2;

    TransientTrace trace;
    trace.field_coefficient = k;
    trace.n_pixels = p.width * p.height;
    simulate_frames(
        setup, field_movie, no_drift, config.n_frames,
        [&](const LockInFrame& frame) {
            const Plane b = demodulate(frame, alpha.values, cal, exec);
            const double t0 = frame.timestamp;
            const double t1 = t0 + timing.duration;
            trace.times.push_back(0.5 * (t0 + t1));
            trace.reconstructed_field.push_back(b.values[center]);
            trace.pixel_mean_field.push_back(mean(b.values));
            trace.true_field.push_back(field_movie.average(t0, t1, 0));
            trace.current.push_back(current_movie.average(t0, t1, 0));
            trace.voltage.push_back(box_average(voltage, t0, t1));
        },
        exec);

    std::vector<double> residual(trace.times.size());
    for (std::size_t i = 0; i < residual.size(); ++i)
        residual[i] = trace.reconstructed_field[i] - trace.true_field[i];
    trace.noise_std = sample_std(residual);
    return trace;
}

double delay_estimate(const TransientTrace& trace, const Waveform& voltage, double max_lag,
                      double grid_step) {
    const std::size_t n = trace.times.size();
    if (n < 3 || trace.reconstructed_field.size() != n)
        throw InputError("delay_estimate: trace too short");
    if (!(grid_step > 0.0 && max_lag > grid_step))
        throw ContractViolation("delay_estimate: need 0 < grid_step < max_lag");
    const double window = (trace.times.back() - trace.times.front()) / static_cast<double>(n - 1);

    std::vector<double> r = trace.reconstructed_field;
    const double r_mean = mean(r);
    for (double& v : r) v -= r_mean;
    double r_norm = 0.0;
    for (double v : r) r_norm += v * v;
    if (!(r_norm > 1e-12 * std::abs(r_mean) * std::sqrt(static_cast<double>(n))))
        throw InputError("delay_estimate: flat trace, lag is undefined");
    r_norm = std::sqrt(r_norm);

    auto ncc = [&](double lag) {
        std::vector<double> v(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double t = trace.times[k] - lag;
            v[k] = box_average(voltage, t - 0.5 * window, t + 0.5 * window);
        }
        const double v_mean = mean(v);
        double dot = 0.0;
        double v_norm = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double c = v[k] - v_mean;
            dot += r[k] * c;
            v_norm += c * c;
        }
        return v_norm > 0.0 ? dot / (r_norm * std::sqrt(v_norm)) : 0.0;
    };

    const auto steps = static_cast<long>(std::floor(max_lag / grid_step));
    std::vector<double> score(2 * steps + 1);
    for (long s = -steps; s <= steps; ++s) score[s + steps] = ncc(static_cast<double>(s) * grid_step);
    const auto best = static_cast<long>(std::distance(score.begin(), std::max_element(score.begin(), score.end())));
    double lag = static_cast<double>(best - steps) * grid_step;
    if (best > 0 && best + 1 < static_cast<long>(score.size())) {
        const double a = score[best - 1];
        const double b = score[best];
        const double c = score[best + 1];
        const double denom = a - 2.0 * b + c;
        if (denom < 0.0) lag += 0.5 * (a - c) / denom * grid_step;
    }
    return lag;
}

double delay_estimate(const TransientTrace& trace, const PulseTrain& pulse, double grid_step) {
    if (trace.times.size() < 2) throw InputError("delay_estimate: trace too short");
    const double frame = trace.times[1] - trace.times[0];
    const double span = trace.times.back() - trace.times.front() + frame;
    if (span < 2.0 * pulse.period)
        throw InputError("delay_estimate: trace must span at least two pulse periods");
    return delay_estimate(trace, [&](double t) { return pulse.voltage(t); }, 0.5 * pulse.period,
                          grid_step);
}

}  // namespace nvmag
