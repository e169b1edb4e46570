#pragma once

// Lock-in camera acquisition: square-wave FM of one or two MW drives, four
// quarter-period integration windows per modulation cycle (I+, Q+, I-, Q-),
// n_cyc cycles per frame, Poisson photon noise.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

#include "nvmag/nv_physics.hpp"
#include "nvmag/odmr.hpp"
#include "nvmag/plane.hpp"

namespace nvmag {

enum class ResonanceDrive {
    Single,  ///< MW1 only, on the f1 transition
    Double,  ///< MW1 on f1 and MW2 on f2
};

/// Population sharing between the two transitions when both are driven:
/// pumping both m_s=+-1 levels darkens 2/3 of the population instead of 1/2,
/// so each transition carries 2/3 of its single-resonance dip.
inline constexpr double kDoubleResonanceSharing = 2.0 / 3.0;

struct AcquisitionProtocol {
    double f_mod = 2.5e3;      ///< Hz
    double mod_depth = 3e5;    ///< peak-to-peak FM excursion, Hz
    std::uint32_t n_cyc = 22;  ///< modulation cycles per frame
    double phi1 = 0.0;         ///< MW1 modulation phase, rad
    double phi2 = std::numbers::pi;
    double photon_rate = 1e9;  ///< photons/s for a pixel at beam center
    std::size_t width = 85;
    std::size_t height = 85;
    double pixel_pitch = 0.54e-6;   ///< m
    double layer_thickness = 40e-6; ///< m
    double beam_fwhm = 40e-6;       ///< m; <= 0 means uniform illumination
    ResonanceDrive drive = ResonanceDrive::Double;
    double dr_sharing = kDoubleResonanceSharing;
    double drive_detuning = 0.0;    ///< offset of both drive centers from their lines, Hz
    bool shot_noise = true;
    std::uint64_t seed = 1;

    void validate() const;
    double cycle_duration() const { return 1.0 / f_mod; }
    double frame_duration() const { return static_cast<double>(n_cyc) / f_mod; }
};

struct FrameTiming {
    double duration = 0.0;  ///< s
    double rate = 0.0;      ///< Hz
};

FrameTiming frame_timing(const AcquisitionProtocol& protocol);

/// Everything needed to synthesize frames: protocol, the two transition line
/// models at the operating point, and gamma (Hz/T).
struct LockInSetup {
    AcquisitionProtocol protocol;
    OdmrModel line1;
    OdmrModel line2;
    double gamma = kGyromagneticRatio;

    void validate() const;
    int driven_transitions() const { return protocol.drive == ResonanceDrive::Double ? 2 : 1; }
};

/// Builds a setup whose lines sit at the resonance pair of `axis_index`.
LockInSetup make_setup(const NVConfiguration& nv, const OdmrModel& line_shape,
                       const AcquisitionProtocol& protocol, std::size_t axis_index = 0);

struct LockInFrame {
    Plane i_plane;
    Plane q_plane;
    std::uint64_t frame_index = 0;
    double timestamp = 0.0;  ///< frame start, s
};

/// Time-indexed per-pixel scalar (tesla for fields, Hz for Delta D). Sampled
/// on a uniform grid of step dt with zero-order hold. A movie with one pixel
/// is spatially uniform and broadcasts to every pixel.
class Movie {
public:
    Movie(double dt, std::size_t n_pixels, std::vector<double> samples);

    static Movie constant(double value, double duration);
    static Movie uniform(double dt, std::vector<double> samples);

    double dt() const { return dt_; }
    std::size_t n_pixels() const { return n_pixels_; }
    std::size_t n_times() const { return samples_.size() / n_pixels_; }
    double duration() const { return dt_ * static_cast<double>(n_times()); }
    bool spatially_uniform() const { return n_pixels_ == 1; }

    double at(double t, std::size_t pixel) const;
    /// Mean over [t0, t1) of the sampled (zero-order hold) waveform.
    double average(double t0, double t1, std::size_t pixel) const;

private:
    double dt_;
    std::size_t n_pixels_;
    std::vector<double> samples_;
};

/// Square-wave FM state (+1 high, -1 low) at a cycle phase in [0, 1). Phase 0
/// centers the high half on the I+ window, so in-phase detection of a
/// square wave leaves Q balanced.
int modulation_state(double cycle_phase, double phi);

struct WindowSegment {
    double fraction = 0.0;  ///< share of the quarter-period window
    int s1 = 1;             ///< MW1 FM state
    int s2 = 1;             ///< MW2 FM state
};

/// Piecewise-constant FM states inside each of the four windows.
std::array<std::vector<WindowSegment>, 4> window_schedule(const AcquisitionProtocol& protocol);

/// Normalized fluorescence (photon-rate multiplier) with MW1/MW2 in FM
/// states s1/s2, lines shifted by Delta B (projected, T) and Delta D (Hz).
double instantaneous_fluorescence(const LockInSetup& setup, int s1, int s2, double delta_b,
                                  double delta_d);

/// 1 - instantaneous_fluorescence, computed without the cancellation.
double fluorescence_deficit(const LockInSetup& setup, int s1, int s2, double delta_b,
                            double delta_d);

/// Gaussian illumination multiplier per pixel (1 at the field-of-view center).
Plane beam_profile(const AcquisitionProtocol& protocol);

/// Expected photons per unit photon rate accumulated in each window (I+, Q+,
/// I-, Q-) of one frame, for one pixel of the movies.
std::array<double, 4> window_exposure(const LockInSetup& setup,
                                      const std::array<std::vector<WindowSegment>, 4>& schedule,
                                      std::uint64_t frame_index, const Movie& field,
                                      const Movie& delta_d, std::size_t pixel);

/// Photons per unit photon rate missing from each window relative to an
/// undriven pixel: window_exposure = frame_duration/4 - window_deficit.
std::array<double, 4> window_deficit(const LockInSetup& setup,
                                     const std::array<std::vector<WindowSegment>, 4>& schedule,
                                     std::uint64_t frame_index, const Movie& field,
                                     const Movie& delta_d, std::size_t pixel);

using FrameSink = std::function<void(const LockInFrame&)>;

/// Streams n_frames frames in index order to `sink`. Deterministic per seed
/// regardless of `exec`. Throws InputError if a movie is too short.
void simulate_frames(const LockInSetup& setup, const Movie& field, const Movie& delta_d,
                     std::size_t n_frames, const FrameSink& sink,
                     Execution exec = Execution::Parallel);

std::vector<LockInFrame> simulate_frames(const LockInSetup& setup, const Movie& field,
                                         const Movie& delta_d, std::size_t n_frames,
                                         Execution exec = Execution::Parallel);

/// Noiseless I value of one frame at beam center for a static shift.
double expected_in_phase(const LockInSetup& setup, double delta_b, double delta_d);

enum class DemodMode {
    Field,        ///< |phi1 - phi2| = pi
    Temperature,  ///< phi1 = phi2
};

/// Mode implied by the protocol's phase pair. Single resonance is treated as
/// field mode. Throws ValidationError for other phase differences.
DemodMode phase_mode(const AcquisitionProtocol& protocol);

struct SlopeCalibration {
    double alpha = 0.0;  ///< counts/Hz per driven transition, at beam center
    DemodMode mode = DemodMode::Field;
    int transitions = 2;
    double gamma = kGyromagneticRatio;
    double mod_depth = 0.0;  ///< Hz, for the small-signal check

    /// counts per tesla of projected field (field mode).
    double counts_per_tesla() const { return transitions * alpha * gamma; }
};

/// Two-sided numerical slope of the noiseless I output about zero shift.
/// Field mode steps the field by +-step_tesla; temperature mode steps Delta D
/// by +-gamma*step_tesla. Throws CalibrationError for a vanishing slope.
SlopeCalibration calibrate_slope(const LockInSetup& setup, double step_tesla = 100e-9);

}  // namespace nvmag
