#include "nvmag/nv_physics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "nvmag/error.hpp"

namespace nvmag {

AxisSet nv_axes() {
    const double s = 1.0 / std::sqrt(3.0);
    return {Vec3(1, 1, 1) * s, Vec3(1, -1, -1) * s, Vec3(-1, 1, -1) * s, Vec3(-1, -1, 1) * s};
}

void NVConfiguration::validate() const {
    if (!(d0 > 0.0)) throw ValidationError("NVConfiguration: d0 must be positive");
    if (!(gamma > 0.0)) throw ValidationError("NVConfiguration: gamma must be positive");
    for (std::size_t i = 0; i < axes.size(); ++i) {
        if (std::abs(axes[i].norm() - 1.0) > 1e-12)
            throw ValidationError(fmt::format("NVConfiguration: axis {} is not unit norm", i));
        for (std::size_t j = i + 1; j < axes.size(); ++j) {
            if (std::abs(axes[i].dot(axes[j]) + 1.0 / 3.0) > 1e-12)
                throw ValidationError(
                    fmt::format("NVConfiguration: axes {} and {} are not tetrahedral", i, j));
        }
    }
}

Vec3 alignment_direction(Alignment alignment) {
    switch (alignment) {
        case Alignment::Axis001: return Vec3(0, 0, 1);
        case Alignment::Axis111: return Vec3(1, 1, 1).normalized();
    }
    return Vec3(0, 0, 1);
}

double project_field(const Vec3& field, const Vec3& axis) {
    if (std::abs(axis.norm() - 1.0) > 1e-9)
        throw ContractViolation(fmt::format("project_field: axis norm {} is not 1", axis.norm()));
    return field.dot(axis);
}

ResonancePair resonance_pair(double d0, double gamma, double projected_field) {
    const double shift = gamma * std::abs(projected_field);
    ResonancePair pair{d0 - shift, d0 + shift};
    if (!(pair.f1 > 0.0))
        throw OutOfModelError(
            fmt::format("resonance_pair: projected field {} T drives f1 to {} Hz", projected_field,
                        pair.f1));
    return pair;
}

ResonancePair resonance_pair(const NVConfiguration& config, std::size_t axis_index) {
    if (axis_index >= config.axes.size())
        throw ContractViolation(fmt::format("resonance_pair: axis index {} out of range", axis_index));
    return resonance_pair(config.d0, config.gamma,
                          project_field(config.bias_field, config.axes[axis_index]));
}

std::array<double, 4> signed_projections(const NVConfiguration& config) {
    std::array<double, 4> out{};
    for (std::size_t i = 0; i < 4; ++i) out[i] = project_field(config.bias_field, config.axes[i]);
    return out;
}

std::vector<ResonancePair> alignment_spectrum_positions(const NVConfiguration& config) {
    std::vector<ResonancePair> out;
    out.reserve(config.axes.size());
    for (std::size_t i = 0; i < config.axes.size(); ++i) out.push_back(resonance_pair(config, i));
    return out;
}

std::vector<ResonancePair> distinct_pairs(const std::vector<ResonancePair>& pairs, double tol_hz) {
    std::vector<ResonancePair> out;
    for (const auto& p : pairs) {
        const bool seen = std::any_of(out.begin(), out.end(), [&](const ResonancePair& q) {
            return std::abs(q.f1 - p.f1) <= tol_hz && std::abs(q.f2 - p.f2) <= tol_hz;
        });
        if (!seen) out.push_back(p);
    }
    std::sort(out.begin(), out.end(), [](const ResonancePair& a, const ResonancePair& b) {
        return a.splitting() > b.splitting();
    });
    return out;
}

}  // namespace nvmag
