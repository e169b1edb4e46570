#pragma once

#include <span>

#include "nvmag/lockin.hpp"
#include "nvmag/plane.hpp"

namespace nvmag {

/// Lock-in outputs of the two transitions: S1 = alpha (dD - gamma dB),
/// S2 = alpha (dD + gamma dB), alpha in counts/Hz.
struct DRSignal {
    double s1 = 0.0;
    double s2 = 0.0;
    double alpha = 0.0;
    DemodMode phase_config = DemodMode::Field;
};

DRSignal dr_response(double alpha, double gamma, double delta_b, double delta_d,
                     DemodMode phase_config);

/// Combined lock-in output: S2 - S1 = 2 alpha gamma dB in field mode,
/// S1 + S2 = 2 alpha dD in temperature mode.
double combined_output(const DRSignal& signal);

/// Per-pixel slope map: calibration alpha scaled by the illumination profile.
Plane alpha_map(const AcquisitionProtocol& protocol, const SlopeCalibration& cal);

/// Converts a frame's I plane to tesla (field mode, I / (n alpha gamma)) or
/// Hz of Delta D (temperature mode, I / (n alpha)). `alpha` holds one slope per
/// pixel. Throws CalibrationError if any slope is zero.
Plane demodulate(const LockInFrame& frame, std::span<const double> alpha,
                 const SlopeCalibration& cal, Execution exec = Execution::Parallel);

/// Same, with one slope for every pixel.
Plane demodulate(const LockInFrame& frame, const SlopeCalibration& cal,
                 Execution exec = Execution::Parallel);

/// True when |gamma * dB| reaches a quarter of the modulation depth.
bool exceeds_small_signal(double delta_b, double gamma, double mod_depth);

/// Re-arms the once-per-process small-signal warning from demodulate().
void reset_small_signal_warning();

/// Ratio of single- to double-resonance noise floors (std of each
/// demodulated series). Needs >= 100 samples each and equal lengths.
double dr_gain_estimate(std::span<const double> sr_series, std::span<const double> dr_series);

}  // namespace nvmag
