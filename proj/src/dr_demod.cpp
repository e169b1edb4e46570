#include "nvmag/dr_demod.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>

#include <fmt/format.h>

#include "nvmag/error.hpp"
#include "nvmag/stats.hpp"

namespace nvmag {

DRSignal dr_response(double alpha, double gamma, double delta_b, double delta_d,
                     DemodMode phase_config) {
    return {alpha * (delta_d - gamma * delta_b), alpha * (delta_d + gamma * delta_b), alpha,
            phase_config};
}

double combined_output(const DRSignal& signal) {
    if (signal.alpha == 0.0) throw CalibrationError("combined_output: alpha is zero");
    return signal.phase_config == DemodMode::Field ? signal.s2 - signal.s1 : signal.s1 + signal.s2;
}

Plane alpha_map(const AcquisitionProtocol& protocol, const SlopeCalibration& cal) {
    Plane map = beam_profile(protocol);
    for (double& v : map.values) v *= cal.alpha;
    return map;
}

bool exceeds_small_signal(double delta_b, double gamma, double mod_depth) {
    return std::abs(gamma * delta_b) >= 0.25 * mod_depth;
}

namespace {

std::atomic<bool> g_small_signal_warned{false};

}  // namespace

void reset_small_signal_warning() { g_small_signal_warned.store(false); }

Plane demodulate(const LockInFrame& frame, std::span<const double> alpha,
                 const SlopeCalibration& cal, Execution exec) {
    const Plane& in = frame.i_plane;
    if (alpha.size() != in.size())
        throw InputError(fmt::format("demodulate: {} slopes for {} pixels", alpha.size(), in.size()));
    for (double a : alpha)
        if (a == 0.0 || !std::isfinite(a))
            throw CalibrationError("demodulate: slope is zero or missing; calibrate first");

    const double scale = cal.mode == DemodMode::Field ? cal.transitions * cal.gamma
                                                      : static_cast<double>(cal.transitions);
    Plane out(in.width, in.height);
    const auto n = static_cast<std::int64_t>(in.size());
    if (exec == Execution::Serial) {
        for (std::int64_t i = 0; i < n; ++i) out.values[i] = in.values[i] / (scale * alpha[i]);
    } else {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) out.values[i] = in.values[i] / (scale * alpha[i]);
    }

    if (cal.mode == DemodMode::Field && cal.mod_depth > 0.0 && !g_small_signal_warned.load()) {
        for (double b : out.values) {
            if (exceeds_small_signal(b, cal.gamma, cal.mod_depth)) {
                if (!g_small_signal_warned.exchange(true))
                    warn(fmt::format("demodulate: |gamma dB| = {:.3g} Hz exceeds mod_depth/4; "
                                     "linear demodulation loses accuracy",
                                     std::abs(cal.gamma * b)));
                break;
            }
        }
    }
    return out;
}

Plane demodulate(const LockInFrame& frame, const SlopeCalibration& cal, Execution exec) {
    const std::vector<double> alpha(frame.i_plane.size(), cal.alpha);
    return demodulate(frame, alpha, cal, exec);
}

double dr_gain_estimate(std::span<const double> sr_series, std::span<const double> dr_series) {
    if (sr_series.size() != dr_series.size())
        throw InputError(fmt::format("dr_gain_estimate: series lengths differ ({} vs {})",
                                     sr_series.size(), dr_series.size()));
    if (sr_series.size() < 100) throw InputError("dr_gain_estimate: need at least 100 frames");
    const double dr = sample_std(dr_series);
    if (!(dr > 0.0)) throw InputError("dr_gain_estimate: double-resonance series has no spread");
    return sample_std(sr_series) / dr;
}

}  // namespace nvmag
