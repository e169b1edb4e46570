#pragma once

// Crystal geometry of the four NV orientations and the secular (high-field)
// resonance model: f1,2 = D -/+ gamma * |B_NV|.

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace nvmag {

using Vec3 = Eigen::Vector3d;
using AxisSet = std::array<Vec3, 4>;

inline constexpr double kZeroFieldSplitting = 2.87e9;  // Hz
inline constexpr double kGyromagneticRatio = 28e9;     // Hz/T

/// The four <111> NV symmetry axes in the crystal frame (z = [001]).
AxisSet nv_axes();

struct NVConfiguration {
    double d0 = kZeroFieldSplitting;    ///< zero-field splitting D, Hz
    double gamma = kGyromagneticRatio;  ///< gamma/2pi, Hz/T
    Vec3 bias_field = Vec3::Zero();     ///< tesla, crystal frame
    AxisSet axes = nv_axes();

    /// Throws ValidationError if the axes are not a unit tetrahedral set or
    /// d0/gamma are not positive.
    void validate() const;
};

enum class Alignment { Axis001, Axis111 };

/// Unit direction of a bias field aligned along <001> or <111>.
Vec3 alignment_direction(Alignment alignment);

/// Signed component of `field` along `axis`. The axis must be unit norm
/// (ContractViolation otherwise).
double project_field(const Vec3& field, const Vec3& axis);

struct ResonancePair {
    double f1 = 0.0;  ///< m_s=0 <-> -1, Hz
    double f2 = 0.0;  ///< m_s=0 <-> +1, Hz

    double splitting() const { return f2 - f1; }
    double midpoint() const { return 0.5 * (f1 + f2); }
};

/// Resonance pair for a projected field magnitude (tesla). Throws
/// OutOfModelError when f1 would be non-positive.
ResonancePair resonance_pair(double d0, double gamma, double projected_field);

/// Resonance pair of one NV orientation of `config`.
ResonancePair resonance_pair(const NVConfiguration& config, std::size_t axis_index);

/// Signed bias projections on all four axes.
std::array<double, 4> signed_projections(const NVConfiguration& config);

/// Resonance pairs for all four axes, in axis order.
std::vector<ResonancePair> alignment_spectrum_positions(const NVConfiguration& config);

/// Collapses degenerate pairs (|df| <= tol_hz) and returns the distinct ones,
/// sorted by splitting (descending).
std::vector<ResonancePair> distinct_pairs(const std::vector<ResonancePair>& pairs,
                                          double tol_hz = 1.0);

}  // namespace nvmag
