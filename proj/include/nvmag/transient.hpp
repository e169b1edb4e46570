#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "nvmag/lockin.hpp"

namespace nvmag {

struct LRCircuit {
    double inductance = 1.8e-3;     ///< H
    double resistance = 2.0;        ///< ohm
    double field_coefficient = 0.0; ///< T/A at the sensor, projected on the NV axes

    double tau() const { return inductance / resistance; }
    void validate() const;
};

/// Triangular bipolar pulse repeated every `period`: inside each flip window
/// the voltage ramps 0 -> +A at t_peak, down to -A at t_trough, back to 0 at
/// flip_window; zero elsewhere. Times are relative to the start of a period,
/// which begins at `offset`.
struct PulseTrain {
    double amplitude = 1.0;     ///< V
    double t_peak = 0.5e-3;     ///< s
    double t_trough = 1.5e-3;   ///< s
    double flip_window = 2e-3;  ///< s
    double period = 10e-3;      ///< s
    double offset = 2e-3;       ///< s
    std::size_t n_periods = 8;

    void validate() const;
    double voltage(double t) const;
    double duration() const { return offset + static_cast<double>(n_periods) * period; }
    /// Times where the waveform has a kink, in [0, until].
    std::vector<double> vertices(double until) const;
};

using Waveform = std::function<double(double)>;

/// Integrates L di/dt + R i = V(t) from i(0) = 0 with classical RK4. Returns
/// i at t = k*dt for k = 0..ceil(duration/dt). Throws StepSizeError if
/// dt > tau/100.
std::vector<double> lr_current(const LRCircuit& circuit, const Waveform& voltage, double duration,
                               double dt);

struct TransientTrace {
    std::vector<double> times;                ///< frame centers, s
    std::vector<double> reconstructed_field;  ///< center pixel, T
    std::vector<double> true_field;           ///< frame-averaged, T
    std::vector<double> pixel_mean_field;     ///< mean over all pixels, T
    std::vector<double> voltage;              ///< frame-averaged, V
    std::vector<double> current;              ///< frame-averaged, A
    double noise_std = 0.0;                   ///< std of reconstruction - truth, T
    double field_coefficient = 0.0;           ///< T/A used
    std::size_t n_pixels = 0;
};

struct TransientConfig {
    LRCircuit circuit;
    PulseTrain pulse;
    LockInSetup setup;          ///< 10 kHz, 4 cycles -> 2500 fps
    std::size_t n_frames = 200;
    double solver_dt = 5e-6;    ///< s
    /// If > 0, the field coefficient is chosen so that max |B| equals this.
    double peak_field = 4e-6;   ///< T
};

/// Uniform coil field movie -> lock-in frames -> per-pixel demodulation.
TransientTrace run_transient_experiment(const TransientConfig& config, std::uint64_t seed,
                                        Execution exec = Execution::Parallel);

/// Lag (s) maximizing the normalized cross-correlation between the
/// reconstructed trace and the frame-averaged voltage, scanned on a
/// `grid_step` grid over [-max_lag, max_lag] with parabolic refinement.
/// Positive lag means the field trails the voltage.
double delay_estimate(const TransientTrace& trace, const Waveform& voltage, double max_lag,
                      double grid_step = 10e-6);

/// Same, for a pulse train: max_lag is half a period and the trace must span
/// at least two periods.
double delay_estimate(const TransientTrace& trace, const PulseTrain& pulse,
                      double grid_step = 10e-6);

}  // namespace nvmag
