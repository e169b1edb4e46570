#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nvmag/lockin.hpp"
#include "nvmag/plane.hpp"

namespace nvmag {

// Interface unit conversions; everything internal is SI.
inline constexpr double kNanoTeslaPerRootHz = 1e-9;                  // T/sqrt(Hz)
inline constexpr double kVolumeUnit = 1e-9 * 1e-9;                   // nT * um^1.5 in T*m^1.5
inline double to_nt_per_rthz(double eta) { return eta / kNanoTeslaPerRootHz; }
inline double to_nt_um15_per_rthz(double eta_v) { return eta_v / kVolumeUnit; }

struct ShotNoiseInputs {
    double linewidth = 1e6;     ///< Hz
    double contrast = 0.01;
    double photon_rate = 1e12;  ///< photons/s
    double planck_over_gmu = 1.0 / kGyromagneticRatio;  ///< h/(g_e mu_B), T*s

    void validate() const;
};

/// Shot-noise-limited CW sensitivity, T/sqrt(Hz).
double eta_cw(const ShotNoiseInputs& inputs);

/// Per-pixel eta = std(series) * sqrt(frame_duration). Needs >= 2 frames.
Plane eta_from_series(std::span<const Plane> series, double frame_duration,
                      Execution exec = Execution::Parallel);

/// Scalar variant for a single time series.
double eta_from_series(std::span<const double> series, double frame_duration);

struct RoiCircle {
    double cx = 0.0;  ///< pixel-center coordinates, x index units
    double cy = 0.0;
    double radius = 1.0;

    /// Centered circle with radius 0.45 * min(width, height).
    static RoiCircle centered(std::size_t width, std::size_t height, double fraction = 0.45);
    bool contains(std::size_t x, std::size_t y) const;
};

struct SensitivityMap {
    Plane eta;    ///< T/sqrt(Hz)
    Plane eta_v;  ///< T*m^1.5/sqrt(Hz)
    RoiCircle roi;
    double pixel_volume = 0.0;  ///< m^3
};

SensitivityMap volume_normalize(const Plane& eta, double pixel_pitch, double layer_thickness,
                                const RoiCircle& roi);

struct RoiStatistics {
    double mean = 0.0;
    std::size_t n_pixels = 0;
    double bin_min = 0.0;
    double bin_width = 0.0;          ///< 0 for a single-bin (uniform) histogram
    std::vector<std::size_t> counts;

    /// Center of the most populated bin.
    double mode() const;
};

inline constexpr std::size_t kHistogramBins = 50;

/// Mean and histogram of the pixels whose centers lie inside `roi`. The
/// histogram spans [min, max] with 50 equal bins (one bin if min == max).
RoiStatistics roi_statistics(const Plane& map, const RoiCircle& roi,
                             std::size_t bins = kHistogramBins);

/// Closed-form shot-noise eta per pixel for a static operating point:
/// sqrt(<I+> + <I->) / |n alpha_px gamma| * sqrt(T_frame).
Plane predicted_eta_map(const LockInSetup& setup);

/// Photon rate (at beam center) for which the predicted ROI-mean eta equals
/// `target_eta`. Uses eta proportional to 1/sqrt(R).
double calibrate_photon_rate(const LockInSetup& setup, double target_eta, const RoiCircle& roi);

struct SensitivityRun {
    std::vector<Plane> field_series;  ///< demodulated frames, T
    SlopeCalibration calibration;
    SensitivityMap map;
    RoiStatistics eta_stats;
    RoiStatistics eta_v_stats;
};

/// Acquires n_frames under a static projected test field, demodulates with a
/// calibrated slope map and reduces to a sensitivity map.
SensitivityRun run_sensitivity_map(const LockInSetup& setup, std::size_t n_frames,
                                   double test_field, const RoiCircle& roi,
                                   Execution exec = Execution::Parallel);

}  // namespace nvmag
