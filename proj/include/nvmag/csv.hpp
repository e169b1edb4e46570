#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nvmag/coherence.hpp"
#include "nvmag/nv_physics.hpp"
#include "nvmag/odmr.hpp"
#include "nvmag/sensitivity.hpp"
#include "nvmag/transient.hpp"

namespace nvmag {

/// 17 significant digits, scientific notation.
std::string format_value(double v);

/// Writes `content` to a temporary sibling and renames it over `path`.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string positions_csv(const std::vector<ResonancePair>& pairs);
std::string sweep_csv(const std::vector<SweepPoint>& points);
/// x, y, value
std::string plane_csv(const Plane& plane, const std::string& value_column);
/// x, y, eta_nT_per_rtHz, etaV_nT_um15_per_rtHz
std::string sensitivity_map_csv(const SensitivityMap& map);
/// bin_low, bin_high, count (values in the map's interface units)
std::string histogram_csv(const RoiStatistics& stats, double unit);
/// t_s, voltage_V, true_current_A, true_field_T, reconstructed_field_T
std::string trace_csv(const TransientTrace& trace);

/// Reads "tau,value" rows; a non-numeric first row is treated as a header.
std::vector<CoherenceSample> read_coherence_csv(const std::filesystem::path& path);

std::string fit_report(const FitResult& result);

}  // namespace nvmag
