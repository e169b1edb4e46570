#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "fixtures.hpp"
#include "nvmag/error.hpp"
#include "nvmag/lockin.hpp"
#include "oracles.hpp"

using namespace nvmag;
#include "approx.hpp"

namespace {

// Closed-form noiseless I for static shifts: the four-window schedule
// evaluated directly from the square-wave definition, with the field
// entering through line-center shifts only.
double closed_form_in_phase(const LockInSetup& s, double delta_b, double delta_d) {
    const auto& p = s.protocol;
    const int grid = 20000;
    double plus = 0, minus = 0;
    for (int j = 0; j < grid; ++j) {
        for (int window : {0, 2}) {
            const double theta = 0.25 * window + 0.25 * (j + 0.5) / grid;
            const int s1 = std::cos(2 * std::numbers::pi * theta - std::numbers::pi / 4 - p.phi1) >= 0 ? 1 : -1;
            const int s2 = std::cos(2 * std::numbers::pi * theta - std::numbers::pi / 4 - p.phi2) >= 0 ? 1 : -1;
            const double w1 = s.line1.omega0 + p.drive_detuning + s1 * p.mod_depth / 2;
            const double w2 = s.line2.omega0 + p.drive_detuning + s2 * p.mod_depth / 2;
            const double x1 = w1 - (s.line1.omega0 + delta_d - s.gamma * delta_b);
            const double x2 = w2 - (s.line2.omega0 + delta_d + s.gamma * delta_b);
            const double d = p.dr_sharing * static_cast<double>(
                oracle::triple_tone_dip(s.line1.contrast, s.line1.linewidth, s.line1.hf, x1) +
                oracle::triple_tone_dip(s.line2.contrast, s.line2.linewidth, s.line2.hf, x2));
            (window == 0 ? plus : minus) += d;
        }
    }
    const double window_time = 0.25 / p.f_mod * p.n_cyc;
    return p.photon_rate * window_time * (minus - plus) / grid;
}

}  // namespace

TEST_CASE("frame timing") {
    AcquisitionProtocol p;
    p.f_mod = 2.5e3;
    p.n_cyc = 22;
    auto t = frame_timing(p);
    CHECK(t.duration == Approx(8.8e-3).epsilon(1e-15));
    CHECK(t.rate == Approx(113.63636363636364).epsilon(1e-15));
    CHECK(std::round(t.rate) == 114);
    p.f_mod = 10e3;
    p.n_cyc = 4;
    t = frame_timing(p);
    CHECK(t.duration == Approx(0.4e-3).epsilon(1e-15));
    CHECK(t.rate == Approx(2500.0).epsilon(1e-15));
    p.f_mod = 1;
    p.n_cyc = 1;
    t = frame_timing(p);
    CHECK(t.duration == 1.0);
    CHECK(t.rate == 1.0);
}

TEST_CASE("duration times rate is one") {
    AcquisitionProtocol p;
    for (double f : {1.0, 7.3, 2.5e3, 1e4, 33333.0})
        for (std::uint32_t n : {1u, 3u, 4u, 22u, 1000u}) {
            p.f_mod = f;
            p.n_cyc = n;
            const auto t = frame_timing(p);
            CHECK(std::abs(t.duration * t.rate - 1.0) < 1e-12);
        }
}

TEST_CASE("modulation states") {
    // high half-cycle centered on the I+ window
    CHECK(modulation_state(0.125, 0.0) == 1);
    CHECK(modulation_state(0.625, 0.0) == -1);
    CHECK(modulation_state(0.125, std::numbers::pi) == -1);
    const auto sched = window_schedule(AcquisitionProtocol{});
    for (const auto& w : sched) {
        double total = 0;
        for (const auto& seg : w) total += seg.fraction;
        CHECK(total == Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("balanced modulation gives zero I and Q") {
    const auto s = fixture::setup();
    const auto frames = simulate_frames(s, fixture::constant(0, s, 3), fixture::constant(0, s, 3), 3);
    for (const auto& f : frames) {
        for (double v : f.i_plane.values) CHECK(std::abs(v) < 1e-12);
        for (double v : f.q_plane.values) CHECK(std::abs(v) < 1e-12);
    }
    CHECK(std::abs(expected_in_phase(s, 0, 0)) < 1e-12);
}

TEST_CASE("constant 4 uT gives the closed-form I on every pixel") {
    const auto s = fixture::setup();
    const double expected = closed_form_in_phase(s, 4e-6, 0.0);
    const auto frames = simulate_frames(s, fixture::constant(4e-6, s, 2), fixture::constant(0, s, 2), 2);
    for (const auto& f : frames)
        for (double v : f.i_plane.values) CHECK(v == Approx(expected).epsilon(1e-6));
    // Small-signal form 2 * alpha * gamma * dB
    const auto cal = calibrate_slope(s);
    CHECK(closed_form_in_phase(s, 40e-9, 0.0) == Approx(2 * cal.alpha * s.gamma * 40e-9).epsilon(1e-3));
    CHECK(expected < 2 * cal.alpha * s.gamma * 4e-6);
}

TEST_CASE("in-phase output matches the closed form across shifts") {
    auto s = fixture::setup();
    for (double b : {-3e-6, -1e-7, 2e-7, 5e-6})
        for (double d : {-2e4, 0.0, 3e4}) CHECK(expected_in_phase(s, b, d) == Approx(closed_form_in_phase(s, b, d)).epsilon(1e-6).scale(1.0));
}

TEST_CASE("small field gives I proportional to the field with slope alpha") {
    const auto s = fixture::setup();
    const auto cal = calibrate_slope(s);
    for (double b : {-50e-9, 10e-9, 80e-9}) CHECK(expected_in_phase(s, b, 0) == Approx(2 * cal.alpha * s.gamma * b).epsilon(1e-4));
    auto flipped = s;
    flipped.protocol.phi1 += std::numbers::pi;
    flipped.protocol.phi2 += std::numbers::pi;
    CHECK(calibrate_slope(flipped).alpha == Approx(-cal.alpha).epsilon(1e-12));
}

TEST_CASE("depth grid search peaks at the max-slope points") {
    // One isolated Lorentzian: max slope at +-linewidth/(2 sqrt 3).
    auto s = fixture::setup();
    s.protocol.drive = ResonanceDrive::Single;
    s.line1.scheme = DriveScheme::SingleTone;
    s.line1.hf = 1e9;
    double best_depth = 0, best = 0;
    for (double depth = 0.05e6; depth < 3e6; depth += 0.005e6) {
        s.protocol.mod_depth = depth;
        const double a = std::abs(calibrate_slope(s).alpha);
        if (a > best) {
            best = a;
            best_depth = depth;
        }
    }
    CHECK(best_depth == Approx(s.line1.linewidth / std::sqrt(3.0)).epsilon(0.01));
}

TEST_CASE("detuning response is odd") {
    auto s = fixture::setup();
    s.protocol.drive = ResonanceDrive::Single;
    for (double det : {1e4, 2e5, 6e5, 1.5e6}) {
        s.protocol.drive_detuning = det;
        const double up = expected_in_phase(s, 0, 0);
        s.protocol.drive_detuning = -det;
        const double down = expected_in_phase(s, 0, 0);
        CHECK(up == Approx(-down).epsilon(1e-9));
    }
}

TEST_CASE("slope calibration checks") {
    const auto s = fixture::setup();
    CHECK(calibrate_slope(s, 100e-9).alpha == Approx(calibrate_slope(s, 200e-9).alpha).epsilon(0.01));
    auto brighter = s;
    brighter.protocol.photon_rate *= 2;
    CHECK(calibrate_slope(brighter).alpha == Approx(2 * calibrate_slope(s).alpha).epsilon(1e-12));
    auto off = s;
    off.protocol.drive_detuning = 1e12;
    CHECK_THROWS_AS(calibrate_slope(off), CalibrationError);
    auto temp = s;
    temp.protocol.phi2 = 0;
    CHECK(calibrate_slope(temp).mode == DemodMode::Temperature);
    auto odd = s;
    odd.protocol.phi2 = 1.0;
    CHECK_THROWS_AS(calibrate_slope(odd), ValidationError);
}

TEST_CASE("shot noise mean is consistent with zero") {
    const auto s = fixture::setup(3, true);
    const std::size_t n = 1000;
    const auto frames = simulate_frames(s, fixture::constant(0, s, n), fixture::constant(0, s, n), n);
    const double window_counts = s.protocol.photon_rate * 0.25 * s.protocol.frame_duration();
    const double sigma = std::sqrt(2 * window_counts);
    for (std::size_t px = 0; px < 9; ++px) {
        double m = 0;
        for (const auto& f : frames) m += f.i_plane.values[px];
        m /= n;
        CHECK(std::abs(m) < 3 * sigma / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("I noise scales as the square root of the photon rate") {
    auto s = fixture::setup(4, true);
    const std::size_t n = 500;
    auto pooled_std = [&](const LockInSetup& setup) {
        const auto frames = simulate_frames(setup, fixture::constant(0, setup, n), fixture::constant(0, setup, n), n);
        std::vector<double> all;
        for (const auto& f : frames)
            for (double v : f.i_plane.values) all.push_back(v);
        return oracle::sample_std(all);
    };
    const double a = pooled_std(s);
    s.protocol.photon_rate *= 2;
    const double b = pooled_std(s);
    CHECK(b / a == Approx(std::sqrt(2.0)).epsilon(0.05));
}

TEST_CASE("same seed gives bit-identical frames, serial or parallel") {
    auto s = fixture::setup(6, true);
    s.protocol.seed = 77;
    const std::size_t n = 5;
    const auto field = fixture::constant(1e-6, s, n);
    const auto zero = fixture::constant(0, s, n);
    const auto a = simulate_frames(s, field, zero, n, Execution::Parallel);
    const auto b = simulate_frames(s, field, zero, n, Execution::Parallel);
    const auto c = simulate_frames(s, field, zero, n, Execution::Serial);
    for (std::size_t k = 0; k < n; ++k) {
        CHECK(a[k].i_plane == b[k].i_plane);
        CHECK(a[k].q_plane == b[k].q_plane);
        CHECK(a[k].i_plane == c[k].i_plane);
        CHECK(a[k].q_plane == c[k].q_plane);
    }
    s.protocol.seed = 78;
    const auto d = simulate_frames(s, field, zero, n);
    CHECK_FALSE(d[0].i_plane == a[0].i_plane);
}

TEST_CASE("non-uniform movies agree between serial and parallel") {
    auto s = fixture::setup(5, true);
    const std::size_t n = 3;
    std::vector<double> samples;
    const std::size_t steps = 40;
    for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t px = 0; px < 25; ++px) samples.push_back(1e-7 * static_cast<double>(px) * std::sin(0.3 * t));
    const Movie field(n * s.protocol.frame_duration() / steps, 25, samples);
    const auto zero = fixture::constant(0, s, n);
    const auto a = simulate_frames(s, field, zero, n, Execution::Parallel);
    const auto b = simulate_frames(s, field, zero, n, Execution::Serial);
    for (std::size_t k = 0; k < n; ++k) CHECK(a[k].i_plane == b[k].i_plane);
}

TEST_CASE("phase pair selects field or temperature sensitivity") {
    auto field_mode = fixture::setup();
    auto temp_mode = field_mode;
    temp_mode.protocol.phi2 = 0.0;
    const double b = 200e-9;
    const double d = field_mode.gamma * b;
    CHECK(std::abs(expected_in_phase(field_mode, b, 0)) > 1e3 * std::abs(expected_in_phase(field_mode, 0, d)));
    CHECK(std::abs(expected_in_phase(temp_mode, 0, d)) > 1e3 * std::abs(expected_in_phase(temp_mode, b, 0)));
}

TEST_CASE("short movies are rejected") {
    const auto s = fixture::setup();
    CHECK_THROWS_AS(simulate_frames(s, fixture::constant(0, s, 2), fixture::constant(0, s, 5), 5), InputError);
    CHECK_THROWS_AS(simulate_frames(s, fixture::constant(0, s, 5), fixture::constant(0, s, 4), 5), InputError);
    CHECK_THROWS_AS(simulate_frames(s, Movie(1.0, 7, std::vector<double>(7, 0.0)), fixture::constant(0, s, 1), 1), InputError);
}

TEST_CASE("movie sampling") {
    const Movie m(1.0, 1, {1.0, 2.0, 4.0});
    CHECK(m.at(-0.5, 0) == 1.0);
    CHECK(m.at(1.5, 0) == 2.0);
    CHECK(m.at(99.0, 0) == 4.0);
    CHECK(m.average(0.5, 2.5, 0) == Approx((0.5 * 1 + 1 * 2 + 0.5 * 4) / 2.0).epsilon(1e-15));
    CHECK_THROWS_AS(Movie(0.0, 1, {1.0}), InputError);
    CHECK_THROWS_AS(Movie(1.0, 2, {1.0, 2.0, 3.0}), InputError);
}

TEST_CASE("protocol validation") {
    AcquisitionProtocol p;
    p.n_cyc = 0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = {};
    p.mod_depth = -1;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = {};
    p.dr_sharing = 0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("beam profile") {
    AcquisitionProtocol p;
    p.width = 5;
    p.height = 5;
    p.beam_fwhm = 2 * p.pixel_pitch;
    const Plane b = beam_profile(p);
    CHECK(b(2, 2) == 1.0);
    CHECK(b(3, 2) == Approx(0.5).epsilon(1e-12));
    CHECK(b(4, 2) == Approx(1.0 / 16.0).epsilon(1e-12));
    CHECK(b(3, 3) == Approx(0.25).epsilon(1e-12));
}
