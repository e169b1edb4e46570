#include "nvmag/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <fmt/format.h>

#include "nvmag/dr_demod.hpp"
#include "nvmag/error.hpp"
#include "nvmag/stats.hpp"

namespace nvmag {

void ShotNoiseInputs::validate() const {
    if (!(linewidth > 0.0 && contrast > 0.0 && photon_rate > 0.0 && planck_over_gmu > 0.0))
        throw ValidationError("ShotNoiseInputs: all inputs must be positive");
}

double eta_cw(const ShotNoiseInputs& in) {
    in.validate();
    return 4.0 / (3.0 * std::sqrt(3.0)) * in.planck_over_gmu * in.linewidth /
           (in.contrast * std::sqrt(in.photon_rate));
}

Plane eta_from_series(std::span<const Plane> series, double frame_duration, Execution exec) {
    if (series.size() < 2) throw InputError("eta_from_series: need at least 2 frames");
    const std::size_t w = series.front().width;
    const std::size_t h = series.front().height;
    for (const auto& p : series)
        if (p.width != w || p.height != h) throw InputError("eta_from_series: frame sizes differ");

    Plane eta(w, h);
    const double root_t = std::sqrt(frame_duration);
    const auto n = static_cast<std::int64_t>(w * h);
    auto pixel = [&](std::int64_t i) {
        std::vector<double> v(series.size());
        for (std::size_t f = 0; f < series.size(); ++f) v[f] = series[f].values[i];
        eta.values[i] = sample_std(v) * root_t;
    };
    if (exec == Execution::Serial) {
        for (std::int64_t i = 0; i < n; ++i) pixel(i);
    } else {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) pixel(i);
    }
    return eta;
}

double eta_from_series(std::span<const double> series, double frame_duration) {
    if (series.size() < 2) throw InputError("eta_from_series: need at least 2 frames");
    return sample_std(series) * std::sqrt(frame_duration);
}

RoiCircle RoiCircle::centered(std::size_t width, std::size_t height, double fraction) {
    return {0.5 * static_cast<double>(width - 1), 0.5 * static_cast<double>(height - 1),
            fraction * static_cast<double>(std::min(width, height))};
}

bool RoiCircle::contains(std::size_t x, std::size_t y) const {
    const double dx = static_cast<double>(x) - cx;
    const double dy = static_cast<double>(y) - cy;
    return dx * dx + dy * dy <= radius * radius;
}

SensitivityMap volume_normalize(const Plane& eta, double pixel_pitch, double layer_thickness,
                                const RoiCircle& roi) {
    if (!(pixel_pitch > 0.0 && layer_thickness > 0.0))
        throw ContractViolation("volume_normalize: dimensions must be positive");
    SensitivityMap map;
    map.eta = eta;
    map.roi = roi;
    map.pixel_volume = pixel_pitch * pixel_pitch * layer_thickness;
    map.eta_v = eta;
    const double root_v = std::sqrt(map.pixel_volume);
    for (double& v : map.eta_v.values) v *= root_v;
    return map;
}

double RoiStatistics::mode() const {
    if (counts.empty()) return mean;
    const auto it = std::max_element(counts.begin(), counts.end());
    const auto idx = static_cast<double>(std::distance(counts.begin(), it));
    return bin_min + (idx + 0.5) * bin_width;
}

RoiStatistics roi_statistics(const Plane& map, const RoiCircle& roi, std::size_t bins) {
    std::vector<double> inside;
    for (std::size_t y = 0; y < map.height; ++y)
        for (std::size_t x = 0; x < map.width; ++x)
            if (roi.contains(x, y)) inside.push_back(map(x, y));
    if (inside.empty()) throw InputError("roi_statistics: region of interest contains no pixels");

    RoiStatistics s;
    s.n_pixels = inside.size();
    s.mean = mean(inside);
    const auto [lo, hi] = std::minmax_element(inside.begin(), inside.end());
    s.bin_min = *lo;
    if (*hi == *lo || bins < 2) {
        s.counts = {inside.size()};
        s.bin_width = *hi - *lo;
        return s;
    }
    s.bin_width = (*hi - *lo) / static_cast<double>(bins);
    s.counts.assign(bins, 0);
    for (double v : inside) {
        auto idx = static_cast<std::size_t>((v - *lo) / s.bin_width);
        s.counts[std::min(idx, bins - 1)] += 1;
    }
    return s;
}

Plane predicted_eta_map(const LockInSetup& setup) {
    const auto& p = setup.protocol;
    const SlopeCalibration cal = calibrate_slope(setup);
    const auto schedule = window_schedule(p);
    const double span = p.frame_duration();
    const auto e = window_exposure(setup, schedule, 0, Movie::constant(0.0, span),
                                   Movie::constant(0.0, span), 0);
    const Plane beam = beam_profile(p);
    const double per_unit = cal.mode == DemodMode::Field ? cal.transitions * cal.gamma
                                                         : static_cast<double>(cal.transitions);
    Plane eta(p.width, p.height);
    for (std::size_t i = 0; i < eta.size(); ++i) {
        const double rate = p.photon_rate * beam.values[i];
        const double sigma_i = std::sqrt(rate * (e[0] + e[2]));
        const double slope = std::abs(per_unit * cal.alpha * beam.values[i]);
        eta.values[i] = sigma_i / slope * std::sqrt(span);
    }
    return eta;
}

double calibrate_photon_rate(const LockInSetup& setup, double target_eta, const RoiCircle& roi) {
    if (!(target_eta > 0.0)) throw ContractViolation("calibrate_photon_rate: target must be positive");
    const double current = roi_statistics(predicted_eta_map(setup), roi).mean;
    const double ratio = current / target_eta;
    return setup.protocol.photon_rate * ratio * ratio;
}

SensitivityRun run_sensitivity_map(const LockInSetup& setup, std::size_t n_frames,
                                   double test_field, const RoiCircle& roi, Execution exec) {
    SensitivityRun run;
    run.calibration = calibrate_slope(setup);
    const Plane alpha = alpha_map(setup.protocol, run.calibration);
    const double span = static_cast<double>(n_frames) * setup.protocol.frame_duration();
    run.field_series.reserve(n_frames);
    simulate_frames(
        setup, Movie::constant(test_field, span), Movie::constant(0.0, span), n_frames,
        [&](const LockInFrame& frame) {
            run.field_series.push_back(demodulate(frame, alpha.values, run.calibration, exec));
        },
        exec);
    const Plane eta = eta_from_series(run.field_series, setup.protocol.frame_duration(), exec);
    run.map = volume_normalize(eta, setup.protocol.pixel_pitch, setup.protocol.layer_thickness, roi);
    run.eta_stats = roi_statistics(run.map.eta, roi);
    run.eta_v_stats = roi_statistics(run.map.eta_v, roi);
    return run;
}

}  // namespace nvmag
