#include "nvmag/lockin.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "nvmag/error.hpp"
#include "nvmag/rng.hpp"

namespace nvmag {

void AcquisitionProtocol::validate() const {
    if (!(f_mod > 0.0)) throw ValidationError("protocol: f_mod must be positive");
    if (!(mod_depth > 0.0)) throw ValidationError("protocol: mod_depth must be positive");
    if (n_cyc < 1) throw ValidationError("protocol: n_cyc must be at least 1");
    if (!(photon_rate > 0.0)) throw ValidationError("protocol: photon_rate must be positive");
    if (width < 1 || height < 1 || width > 65535 || height > 65535)
        throw ValidationError("protocol: width and height must lie in [1, 65535]");
    if (!(pixel_pitch > 0.0)) throw ValidationError("protocol: pixel_pitch must be positive");
    if (!(layer_thickness > 0.0)) throw ValidationError("protocol: layer_thickness must be positive");
    if (!(dr_sharing > 0.0 && dr_sharing <= 1.0))
        throw ValidationError("protocol: dr_sharing must lie in (0, 1]");
}

FrameTiming frame_timing(const AcquisitionProtocol& protocol) {
    const double duration = static_cast<double>(protocol.n_cyc) / protocol.f_mod;
    return {duration, protocol.f_mod / static_cast<double>(protocol.n_cyc)};
}

void LockInSetup::validate() const {
    protocol.validate();
    line1.validate();
    if (protocol.drive == ResonanceDrive::Double && line2.contrast != 0.0) line2.validate();
    if (!(gamma > 0.0)) throw ValidationError("setup: gamma must be positive");
}

LockInSetup make_setup(const NVConfiguration& nv, const OdmrModel& line_shape,
                       const AcquisitionProtocol& protocol, std::size_t axis_index) {
    const ResonancePair pair = resonance_pair(nv, axis_index);
    LockInSetup setup;
    setup.protocol = protocol;
    setup.line1 = line_shape;
    setup.line1.omega0 = pair.f1;
    setup.line2 = line_shape;
    setup.line2.omega0 = pair.f2;
    setup.gamma = nv.gamma;
    setup.validate();
    return setup;
}

// --- Movie -----------------------------------------------------------------

Movie::Movie(double dt, std::size_t n_pixels, std::vector<double> samples)
    : dt_(dt), n_pixels_(n_pixels), samples_(std::move(samples)) {
    if (!(dt_ > 0.0)) throw InputError("Movie: dt must be positive");
    if (n_pixels_ == 0 || samples_.empty() || samples_.size() % n_pixels_ != 0)
        throw InputError("Movie: sample count must be a positive multiple of the pixel count");
}

Movie Movie::constant(double value, double duration) { return Movie(duration, 1, {value}); }

Movie Movie::uniform(double dt, std::vector<double> samples) { return Movie(dt, 1, std::move(samples)); }

double Movie::at(double t, std::size_t pixel) const {
    const std::size_t n = n_times();
    const double pos = std::floor(t / dt_);
    const std::size_t idx = pos <= 0.0 ? 0 : std::min(n - 1, static_cast<std::size_t>(pos));
    const std::size_t p = spatially_uniform() ? 0 : pixel;
    return samples_[idx * n_pixels_ + p];
}

double Movie::average(double t0, double t1, std::size_t pixel) const {
    if (!(t1 > t0)) return at(t0, pixel);
    const std::size_t n = n_times();
    const std::size_t p = spatially_uniform() ? 0 : pixel;
    const double pos = std::floor(t0 / dt_);
    std::size_t idx = pos <= 0.0 ? 0 : std::min(n - 1, static_cast<std::size_t>(pos));
    double acc = 0.0;
    double t = t0;
    while (t < t1) {
        const double end = idx + 1 < n ? std::min(std::max((static_cast<double>(idx) + 1.0) * dt_, t), t1) : t1;
        acc += samples_[idx * n_pixels_ + p] * (end - t);
        t = end;
        if (idx + 1 < n) ++idx;
    }
    return acc / (t1 - t0);
}

// --- modulation --------------------------------------------------------------

int modulation_state(double cycle_phase, double phi) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    return std::cos(two_pi * cycle_phase - std::numbers::pi / 4.0 - phi) >= 0.0 ? 1 : -1;
}

std::array<std::vector<WindowSegment>, 4> window_schedule(const AcquisitionProtocol& protocol) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    // Edges where cos(2 pi theta - pi/4 - phi) changes sign.
    std::vector<double> edges;
    for (double phi : {protocol.phi1, protocol.phi2}) {
        for (int m = 0; m < 2; ++m) {
            double theta = (0.75 * std::numbers::pi + phi + m * std::numbers::pi) / two_pi;
            theta -= std::floor(theta);
            edges.push_back(theta);
        }
    }
    std::array<std::vector<WindowSegment>, 4> schedule;
    for (int k = 0; k < 4; ++k) {
        const double a = 0.25 * k;
        const double b = 0.25 * (k + 1);
        std::vector<double> cuts{a, b};
        for (double e : edges)
            if (e > a && e < b) cuts.push_back(e);
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const double len = cuts[i + 1] - cuts[i];
            if (len <= 0.0) continue;
            const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
            schedule[k].push_back({len / 0.25, modulation_state(mid, protocol.phi1),
                                   modulation_state(mid, protocol.phi2)});
        }
    }
    return schedule;
}

double fluorescence_deficit(const LockInSetup& setup, int s1, int s2, double delta_b,
                            double delta_d) {
    const auto& p = setup.protocol;
    const double half_depth = 0.5 * p.mod_depth;
    const double zeeman = setup.gamma * delta_b;
    // Detunings are formed from small offsets so Hz-scale shifts keep full precision.
    const double det1 = (p.drive_detuning + s1 * half_depth) - (delta_d - zeeman);
    const double dip1 = dip_at_detuning(setup.line1, det1);
    if (p.drive == ResonanceDrive::Single) return dip1;

    const double det2 = (p.drive_detuning + s2 * half_depth) - (delta_d + zeeman);
    const double dip2 = setup.line2.contrast > 0.0 ? dip_at_detuning(setup.line2, det2) : 0.0;
    const bool both_driven = setup.line1.contrast > 0.0 && setup.line2.contrast > 0.0;
    const double sharing = both_driven ? p.dr_sharing : 1.0;
    return sharing * (dip1 + dip2);
}

double instantaneous_fluorescence(const LockInSetup& setup, int s1, int s2, double delta_b,
                                  double delta_d) {
    return 1.0 - fluorescence_deficit(setup, s1, s2, delta_b, delta_d);
}

Plane beam_profile(const AcquisitionProtocol& p) {
    Plane beam(p.width, p.height, 1.0);
    if (p.beam_fwhm <= 0.0) return beam;
    const double cx = 0.5 * static_cast<double>(p.width - 1);
    const double cy = 0.5 * static_cast<double>(p.height - 1);
    const double k = 4.0 * std::numbers::ln2 / (p.beam_fwhm * p.beam_fwhm);
    for (std::size_t y = 0; y < p.height; ++y) {
        for (std::size_t x = 0; x < p.width; ++x) {
            const double dx = (static_cast<double>(x) - cx) * p.pixel_pitch;
            const double dy = (static_cast<double>(y) - cy) * p.pixel_pitch;
            beam(x, y) = std::exp(-k * (dx * dx + dy * dy));
        }
    }
    return beam;
}

std::array<double, 4> window_deficit(const LockInSetup& setup,
                                     const std::array<std::vector<WindowSegment>, 4>& schedule,
                                     std::uint64_t frame_index, const Movie& field,
                                     const Movie& delta_d, std::size_t pixel) {
    const auto& p = setup.protocol;
    const double period = p.cycle_duration();
    const double window = 0.25 * period;
    const double t0 = static_cast<double>(frame_index) * p.frame_duration();
    std::array<long double, 4> acc{};
    for (std::uint32_t c = 0; c < p.n_cyc; ++c) {
        for (int k = 0; k < 4; ++k) {
            // Shifts are held constant across one quarter-period window.
            const double t_mid = t0 + static_cast<double>(c) * period + (k + 0.5) * window;
            const double b = field.at(t_mid, pixel);
            const double d = delta_d.at(t_mid, pixel);
            long double f = 0.0L;
            for (const auto& seg : schedule[k])
                f += seg.fraction * static_cast<long double>(fluorescence_deficit(setup, seg.s1, seg.s2, b, d));
            acc[k] += window * f;
        }
    }
    std::array<double, 4> deficit{};
    for (int k = 0; k < 4; ++k) deficit[k] = static_cast<double>(acc[k]);
    return deficit;
}

std::array<double, 4> window_exposure(const LockInSetup& setup,
                                      const std::array<std::vector<WindowSegment>, 4>& schedule,
                                      std::uint64_t frame_index, const Movie& field,
                                      const Movie& delta_d, std::size_t pixel) {
    const double base = 0.25 * setup.protocol.frame_duration();
    auto e = window_deficit(setup, schedule, frame_index, field, delta_d, pixel);
    for (double& v : e) v = base - v;
    return e;
}

namespace {

void check_movie(const Movie& movie, std::size_t n_pixels, double required, const char* name) {
    if (!movie.spatially_uniform() && movie.n_pixels() != n_pixels)
        throw InputError(fmt::format("simulate_frames: {} movie has {} pixels, expected {}", name,
                                     movie.n_pixels(), n_pixels));
    if (movie.duration() < required * (1.0 - 1e-12))
        throw InputError(fmt::format("simulate_frames: {} movie covers {} s, acquisition needs {} s",
                                     name, movie.duration(), required));
}

struct PixelCounts {
    double i = 0.0;
    double q = 0.0;
};

PixelCounts sample_pixel(const AcquisitionProtocol& p, const std::array<double, 4>& deficit,
                         double rate, std::uint64_t frame_index, std::size_t pixel) {
    if (!p.shot_noise) return {rate * (deficit[2] - deficit[0]), rate * (deficit[3] - deficit[1])};
    // A sum of independent Poisson counts over the n_cyc windows of one type
    // is itself Poisson with the summed mean.
    const double base = 0.25 * p.frame_duration();
    CounterRng rng(p.seed, frame_index, pixel);
    std::array<double, 4> counts{};
    for (int k = 0; k < 4; ++k) {
        const double mean = rate * (base - deficit[k]);
        if (mean <= 0.0) continue;
        std::poisson_distribution<std::int64_t> poisson(mean);
        counts[k] = static_cast<double>(poisson(rng));
    }
    return {counts[0] - counts[2], counts[1] - counts[3]};
}

}  // namespace

void simulate_frames(const LockInSetup& setup, const Movie& field, const Movie& delta_d,
                     std::size_t n_frames, const FrameSink& sink, Execution exec) {
    setup.validate();
    const auto& p = setup.protocol;
    const std::size_t n_pixels = p.width * p.height;
    const double required = static_cast<double>(n_frames) * p.frame_duration();
    check_movie(field, n_pixels, required, "field");
    check_movie(delta_d, n_pixels, required, "delta_d");

    const auto schedule = window_schedule(p);
    const Plane beam = beam_profile(p);
    const bool uniform = field.spatially_uniform() && delta_d.spatially_uniform();

    for (std::size_t f = 0; f < n_frames; ++f) {
        LockInFrame frame;
        frame.frame_index = f;
        frame.timestamp = static_cast<double>(f) * p.frame_duration();
        frame.i_plane = Plane(p.width, p.height);
        frame.q_plane = Plane(p.width, p.height);
        const auto n = static_cast<std::int64_t>(n_pixels);

        if (exec == Execution::Serial) {
            for (std::int64_t px = 0; px < n; ++px) {
                const auto pix = static_cast<std::size_t>(px);
                const auto exposure = window_deficit(setup, schedule, f, field, delta_d, pix);
                const auto c = sample_pixel(p, exposure, p.photon_rate * beam.values[pix], f, pix);
                frame.i_plane.values[pix] = c.i;
                frame.q_plane.values[pix] = c.q;
            }
        } else {
            std::array<double, 4> shared{};
            if (uniform) shared = window_deficit(setup, schedule, f, field, delta_d, 0);
#pragma omp parallel for schedule(static)
            for (std::int64_t px = 0; px < n; ++px) {
                const auto pix = static_cast<std::size_t>(px);
                const auto exposure =
                    uniform ? shared : window_deficit(setup, schedule, f, field, delta_d, pix);
                const auto c = sample_pixel(p, exposure, p.photon_rate * beam.values[pix], f, pix);
                frame.i_plane.values[pix] = c.i;
                frame.q_plane.values[pix] = c.q;
            }
        }
        sink(frame);
    }
}

std::vector<LockInFrame> simulate_frames(const LockInSetup& setup, const Movie& field,
                                         const Movie& delta_d, std::size_t n_frames,
                                         Execution exec) {
    std::vector<LockInFrame> frames;
    frames.reserve(n_frames);
    simulate_frames(
        setup, field, delta_d, n_frames, [&](const LockInFrame& f) { frames.push_back(f); }, exec);
    return frames;
}

double expected_in_phase(const LockInSetup& setup, double delta_b, double delta_d) {
    const auto schedule = window_schedule(setup.protocol);
    const double span = setup.protocol.frame_duration();
    const auto e = window_deficit(setup, schedule, 0, Movie::constant(delta_b, span),
                                  Movie::constant(delta_d, span), 0);
    return setup.protocol.photon_rate * (e[2] - e[0]);
}

DemodMode phase_mode(const AcquisitionProtocol& protocol) {
    if (protocol.drive == ResonanceDrive::Single) return DemodMode::Field;
    const double d = std::abs(std::remainder(protocol.phi1 - protocol.phi2, 2.0 * std::numbers::pi));
    if (d < 1e-6) return DemodMode::Temperature;
    if (std::abs(d - std::numbers::pi) < 1e-6) return DemodMode::Field;
    throw ValidationError(fmt::format(
        "protocol: phase difference {} rad is neither 0 (temperature) nor pi (field)", d));
}

SlopeCalibration calibrate_slope(const LockInSetup& setup, double step_tesla) {
    setup.validate();
    if (!(step_tesla > 0.0)) throw ContractViolation("calibrate_slope: step must be positive");
    SlopeCalibration cal;
    cal.mode = phase_mode(setup.protocol);
    cal.transitions = setup.driven_transitions();
    cal.gamma = setup.gamma;
    cal.mod_depth = setup.protocol.mod_depth;
    const int n = cal.transitions;
    if (cal.mode == DemodMode::Field) {
        const double up = expected_in_phase(setup, step_tesla, 0.0);
        const double down = expected_in_phase(setup, -step_tesla, 0.0);
        cal.alpha = (up - down) / (2.0 * step_tesla) / (n * setup.gamma);
    } else {
        const double step_hz = setup.gamma * step_tesla;
        const double up = expected_in_phase(setup, 0.0, step_hz);
        const double down = expected_in_phase(setup, 0.0, -step_hz);
        cal.alpha = (up - down) / (2.0 * step_hz) / n;
    }
    const double scale =
        setup.protocol.photon_rate * setup.protocol.frame_duration() / setup.line1.linewidth;
    if (!(std::abs(cal.alpha) > 1e-9 * scale))
        throw CalibrationError(fmt::format(
            "calibrate_slope: lock-in slope {} counts/Hz vanishes; drive is off resonance", cal.alpha));
    return cal;
}

}  // namespace nvmag
