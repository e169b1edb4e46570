#pragma once

// Scenario files (YAML) and the experiment runner behind the CLI.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nvmag/coherence.hpp"
#include "nvmag/lockin.hpp"
#include "nvmag/nv_physics.hpp"
#include "nvmag/odmr.hpp"
#include "nvmag/sensitivity.hpp"
#include "nvmag/transient.hpp"

namespace nvmag {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kConfigDirEnv = "NVMAG_CONFIG_DIR";

enum class Experiment { OdmrSweep, SensitivityMap, Transient, CoherenceFit };

struct SweepSettings {
    SweepScheme scheme = SweepScheme::DRHF;
    double span = 10e6;  ///< Hz, centered on f1
    std::size_t points = 801;
};

struct SensitivitySettings {
    double test_field = 0.0;  ///< projected, T
    std::optional<RoiCircle> roi;  ///< default: centered, 0.45 * min(width, height)
};

struct TransientSettings {
    LRCircuit circuit;
    PulseTrain pulse;
    double solver_dt = 5e-6;
    double peak_field = 4e-6;
};

struct CoherenceSettings {
    CoherenceKind kind = CoherenceKind::Hahn;
    std::filesystem::path input;
    FitOptions options;
};

struct Scenario {
    Experiment experiment = Experiment::SensitivityMap;
    std::uint64_t seed = 1;
    NVConfiguration nv;
    std::size_t axis_index = 0;
    OdmrModel line_shape;  ///< shared by both transitions; centers come from nv
    AcquisitionProtocol protocol;
    std::size_t n_frames = 110;
    std::optional<double> target_eta;  ///< T/sqrt(Hz); recalibrates photon_rate
    bool target_center_pixel = false;  ///< calibrate on the center pixel instead of the ROI
    SweepSettings sweep;
    SensitivitySettings sensitivity;
    TransientSettings transient;
    CoherenceSettings coherence;
    std::filesystem::path output_dir = "out";
    bool write_frames = false;
    std::filesystem::path source;  ///< file the scenario came from

    /// Operating-point lines (centers at the resonance pair of axis_index).
    std::pair<OdmrModel, OdmrModel> lines() const;
    LockInSetup setup() const;
    RoiCircle roi() const;
    void validate() const;
};

/// Resolves `path` directly or, failing that, under $NVMAG_CONFIG_DIR.
std::filesystem::path resolve_config_path(const std::filesystem::path& path);

Scenario parse_scenario(const std::string& text, const std::filesystem::path& source = {});
Scenario load_scenario(const std::filesystem::path& path);

/// Applies scenario-level seed expansion and photon-rate calibration.
LockInSetup prepared_setup(const Scenario& scenario);

struct RunResult {
    std::vector<std::filesystem::path> outputs;
    std::filesystem::path manifest;
    std::string summary;  ///< human-readable key: value lines
};

struct RunOptions {
    std::optional<std::filesystem::path> output_dir = std::nullopt;
    std::optional<std::uint64_t> seed = std::nullopt;
};

RunResult run_scenario(const Scenario& scenario, const RunOptions& options = {});

/// Calibration sidecar written next to frame stacks and read by demod.
struct CalibrationFile {
    SlopeCalibration calibration;
    AcquisitionProtocol protocol;  ///< geometry and beam fields only
};

void save_calibration(const std::filesystem::path& path, const CalibrationFile& file);
CalibrationFile load_calibration(const std::filesystem::path& path);

/// Sidecar path used when no explicit calibration file is given.
std::filesystem::path calibration_sidecar(const std::filesystem::path& frames_path);

}  // namespace nvmag
