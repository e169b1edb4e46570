#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace nvmag {

inline constexpr double kHyperfineSplitting = 2.16e6;  // 14N, Hz

enum class DriveScheme {
    SingleTone,  ///< one MW tone swept across the hyperfine triplet
    TripleTone,  ///< three tones spaced by the hyperfine splitting
};

struct OdmrModel {
    double omega0 = 0.0;     ///< line center, Hz
    double linewidth = 1e6;  ///< Lorentzian FWHM, Hz
    double contrast = 0.01;  ///< dip multiplier per hyperfine component
    double hf = kHyperfineSplitting;
    DriveScheme scheme = DriveScheme::TripleTone;

    void validate() const;

    /// Same model with the line center moved by `delta_hz`.
    OdmrModel shifted(double delta_hz) const {
        OdmrModel m = *this;
        m.omega0 += delta_hz;
        return m;
    }
};

/// Normalized Lorentzian, 1 at zero detuning.
inline double lorentzian(double detuning, double linewidth) {
    const double r = 2.0 * detuning / linewidth;
    return 1.0 / (1.0 + r * r);
}

/// Fractional fluorescence drop, i.e. 1 - spectrum(model, omega).
double dip(const OdmrModel& model, double omega);

/// Same dip, addressed by detuning from the line center.
double dip_at_detuning(const OdmrModel& model, double detuning);

/// Normalized fluorescence of one transition driven at `omega`.
double spectrum(const OdmrModel& model, double omega);

/// Triple-tone / single-tone on-resonance dip ratio at a shared linewidth.
double contrast_enhancement(double linewidth, double hf = kHyperfineSplitting);

/// Linewidth of each tone when the power that broadens a single tone to
/// `single_tone_linewidth` is split evenly over three tones. Power broadening
/// adds in quadrature on top of the intrinsic width.
double split_tone_linewidth(double single_tone_linewidth, double intrinsic_linewidth);

/// Triple-tone / single-tone dip ratio when both schemes run at the same
/// total MW power (single tone broadened to `single_tone_linewidth`).
double power_split_enhancement(double single_tone_linewidth, double intrinsic_linewidth,
                               double hf = kHyperfineSplitting);

/// Smallest shared-linewidth enhancement and the linewidth where it occurs.
std::pair<double, double> minimum_contrast_enhancement(double hf = kHyperfineSplitting);

/// Root search for a shared linewidth with contrast_enhancement == target.
/// Empty when the target lies below the attainable minimum.
std::optional<double> linewidth_for_enhancement(double target, double hf = kHyperfineSplitting);

/// Root search on the single-tone (power-broadened) linewidth such that
/// power_split_enhancement == target, on the branch below the ratio minimum.
/// Empty when the target is out of reach.
std::optional<double> power_broadening_for_enhancement(double target, double intrinsic_linewidth,
                                                       double hf = kHyperfineSplitting);

/// True when the two line centers sit closer than one linewidth.
bool dr_lines_overlap(const OdmrModel& line1, const OdmrModel& line2);

/// Fluorescence with both transitions driven. Dips add, scaled by
/// `population_sharing` (1 = purely additive). Emits a warning when the lines
/// overlap.
double dr_spectrum(const OdmrModel& line1, const OdmrModel& line2, double omega,
                   double population_sharing = 1.0);

enum class SweepScheme { SR, SRHF, DRHF };

struct SweepPoint {
    double omega = 0.0;
    double fluorescence = 0.0;
};

/// Frequency sweep over [start, stop] (inclusive, `points` samples) around
/// line1. SR uses a single tone on line1; SRHF a triple tone on line1; DRHF
/// drives both lines with the same detuning from their centers.
std::vector<SweepPoint> sweep(SweepScheme scheme, const OdmrModel& line1, const OdmrModel& line2,
                              double start, double stop, std::size_t points,
                              double population_sharing = 1.0);

}  // namespace nvmag
