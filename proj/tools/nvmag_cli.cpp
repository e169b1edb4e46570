// nvmag command-line front end.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "nvmag/coherence.hpp"
#include "nvmag/csv.hpp"
#include "nvmag/dr_demod.hpp"
#include "nvmag/error.hpp"
#include "nvmag/frame_io.hpp"
#include "nvmag/scenario.hpp"

namespace fs = std::filesystem;
using namespace nvmag;

namespace {

void emit(const std::string& text, const std::string& out) {
    if (out.empty() || out == "-")
        std::cout << text;
    else
        atomic_write(out, text);
}

Scenario scenario_with_seed(const std::string& config, const std::optional<std::uint64_t>& seed) {
    Scenario s = config.empty() ? parse_scenario("experiment: odmr_sweep\n") : load_scenario(config);
    if (seed) s.seed = *seed;
    return s;
}

SlopeCalibration calibration_for(const FrameStack& stack, const CalibrationFile& cal) {
    if (cal.protocol.width != stack.header.width || cal.protocol.height != stack.header.height)
        throw InputError(fmt::format("calibration is for {}x{} frames, stack is {}x{}", cal.protocol.width,
                                     cal.protocol.height, stack.header.width, stack.header.height));
    return cal.calibration;
}

std::vector<Plane> demodulate_stack(const FrameStack& stack, const CalibrationFile& cal) {
    const SlopeCalibration c = calibration_for(stack, cal);
    const Plane alpha = alpha_map(cal.protocol, c);
    std::vector<Plane> out;
    out.reserve(stack.frames.size());
    for (const auto& f : stack.frames) out.push_back(demodulate(f, alpha.span(), c));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lock-in wide-field NV magnetometry simulator"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::optional<std::uint64_t> seed;
    app.add_option("--seed", seed, "override the scenario seed");

    // odmr
    auto* odmr = app.add_subcommand("odmr", "ODMR spectra");
    odmr->require_subcommand(1);
    std::string odmr_config, odmr_out, scheme_name = "dr-hf";
    auto* odmr_sweep = odmr->add_subcommand("sweep", "fluorescence sweep CSV (omega_hz, fluorescence)");
    odmr_sweep->add_option("--scheme", scheme_name)->check(CLI::IsMember({"sr", "sr-hf", "dr-hf"}));
    odmr_sweep->add_option("--config", odmr_config);
    odmr_sweep->add_option("--out", odmr_out);
    auto* odmr_positions = odmr->add_subcommand("positions", "resonance pairs of all four axes");
    odmr_positions->add_option("--config", odmr_config);
    odmr_positions->add_option("--out", odmr_out);

    // coherence
    auto* coherence = app.add_subcommand("coherence", "coherence decay fits");
    coherence->require_subcommand(1);
    auto* coherence_fit = coherence->add_subcommand("fit", "fit Ramsey or Hahn-echo data");
    std::string kind_name, coherence_in, coherence_out;
    FitOptions fit_options;
    coherence_fit->add_option("--kind", kind_name)->required()->check(CLI::IsMember({"ramsey", "hahn"}));
    coherence_fit->add_option("--in", coherence_in)->required()->check(CLI::ExistingFile);
    coherence_fit->add_option("--detuning-hz", fit_options.detuning_hz);
    coherence_fit->add_option("--hf-hz", fit_options.hf_hz);
    coherence_fit->add_option("--out", coherence_out);

    // acquire
    auto* acquire = app.add_subcommand("acquire", "lock-in frame acquisition");
    acquire->require_subcommand(1);
    auto* acquire_sim = acquire->add_subcommand("simulate", "simulate a frame stack");
    std::string acquire_config, acquire_out;
    acquire_sim->add_option("--config", acquire_config)->required();
    acquire_sim->add_option("--out", acquire_out)->required();

    // demod
    auto* demod = app.add_subcommand("demod", "demodulate a frame stack to a field map");
    std::string demod_mode = "field", demod_frames, demod_alpha, demod_out;
    demod->add_option("--mode", demod_mode)->check(CLI::IsMember({"field", "temperature"}));
    demod->add_option("--frames", demod_frames)->required()->check(CLI::ExistingFile);
    demod->add_option("--alpha", demod_alpha, "calibration file (default: <frames>.cal)");
    demod->add_option("--out", demod_out);

    // sensitivity
    auto* sensitivity = app.add_subcommand("sensitivity", "sensitivity maps");
    sensitivity->require_subcommand(1);
    auto* sens_map = sensitivity->add_subcommand("map", "per-pixel sensitivity from a frame stack");
    std::string sens_frames, sens_alpha, sens_out, sens_hist;
    sens_map->add_option("--frames", sens_frames)->required()->check(CLI::ExistingFile);
    sens_map->add_option("--alpha", sens_alpha, "calibration file (default: <frames>.cal)");
    sens_map->add_option("--out", sens_out);
    sens_map->add_option("--hist", sens_hist);

    // transient
    auto* transient = app.add_subcommand("transient", "LR-circuit transient experiment");
    transient->require_subcommand(1);
    auto* transient_run = transient->add_subcommand("run", "simulate and reconstruct a pulse train");
    std::string transient_config, transient_out;
    transient_run->add_option("--config", transient_config)->required();
    transient_run->add_option("--out", transient_out);

    // scenario
    auto* scenario = app.add_subcommand("scenario", "bundled experiment runs");
    scenario->require_subcommand(1);
    auto* scenario_run = scenario->add_subcommand("run", "run a scenario and write its artifacts");
    std::string scenario_config, scenario_outdir;
    scenario_run->add_option("--config", scenario_config)->required();
    scenario_run->add_option("--out-dir", scenario_outdir);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*odmr_sweep) {
            Scenario s = scenario_with_seed(odmr_config, seed);
            const SweepScheme scheme = scheme_name == "sr"      ? SweepScheme::SR
                                       : scheme_name == "sr-hf" ? SweepScheme::SRHF
                                                                : SweepScheme::DRHF;
            auto [l1, l2] = s.lines();
            if (scheme == SweepScheme::SR) l1.scheme = l2.scheme = DriveScheme::SingleTone;
            const double sharing =
                scheme == SweepScheme::DRHF && s.protocol.drive == ResonanceDrive::Double ? s.protocol.dr_sharing : 1.0;
            const auto points = sweep(scheme, l1, l2, l1.omega0 - 0.5 * s.sweep.span,
                                      l1.omega0 + 0.5 * s.sweep.span, s.sweep.points, sharing);
            emit(sweep_csv(points), odmr_out);
        } else if (*odmr_positions) {
            const Scenario s = scenario_with_seed(odmr_config, seed);
            emit(positions_csv(alignment_spectrum_positions(s.nv)), odmr_out);
        } else if (*coherence_fit) {
            const auto kind = kind_name == "ramsey" ? CoherenceKind::Ramsey : CoherenceKind::Hahn;
            const auto samples = read_coherence_csv(coherence_in);
            try {
                emit(fit_report(fit_coherence(samples, kind, fit_options)), coherence_out);
            } catch (const ConvergenceError& e) {
                std::cerr << "nvmag: " << e.what() << "\n";
                emit(fit_report(e.best_so_far()), coherence_out);
                return 3;
            }
        } else if (*acquire_sim) {
            const Scenario s = scenario_with_seed(acquire_config, seed);
            const LockInSetup setup = prepared_setup(s);
            const double duration = static_cast<double>(s.n_frames) * setup.protocol.frame_duration();
            NvlfWriter writer(acquire_out, make_header(setup.protocol, static_cast<std::uint32_t>(s.n_frames)));
            simulate_frames(setup, Movie::constant(s.sensitivity.test_field, duration), Movie::constant(0.0, duration),
                            s.n_frames, [&](const LockInFrame& f) { writer.write(f); });
            writer.commit();
            save_calibration(calibration_sidecar(acquire_out), {calibrate_slope(setup), setup.protocol});
        } else if (*demod) {
            const FrameStack stack = read_frames(demod_frames);
            CalibrationFile cal =
                load_calibration(demod_alpha.empty() ? calibration_sidecar(demod_frames) : fs::path(demod_alpha));
            cal.calibration.mode = demod_mode == "field" ? DemodMode::Field : DemodMode::Temperature;
            const auto maps = demodulate_stack(stack, cal);
            if (maps.empty()) throw InputError("frame stack is empty");
            Plane mean(maps.front().width, maps.front().height);
            for (std::size_t k = 0; k < mean.values.size(); ++k) {
                double acc = 0.0;
                for (const auto& m : maps) acc += m.values[k];
                mean.values[k] = acc / static_cast<double>(maps.size());
            }
            emit(plane_csv(mean, "value"), demod_out);
        } else if (*sens_map) {
            const FrameStack stack = read_frames(sens_frames);
            const CalibrationFile cal =
                load_calibration(sens_alpha.empty() ? calibration_sidecar(sens_frames) : fs::path(sens_alpha));
            const auto maps = demodulate_stack(stack, cal);
            const Plane eta = eta_from_series(maps, stack.header.frame_duration());
            const RoiCircle roi = RoiCircle::centered(eta.width, eta.height);
            const SensitivityMap map = volume_normalize(eta, cal.protocol.pixel_pitch, cal.protocol.layer_thickness, roi);
            emit(sensitivity_map_csv(map), sens_out);
            if (!sens_hist.empty()) atomic_write(sens_hist, histogram_csv(roi_statistics(map.eta_v, roi), kVolumeUnit));
            const RoiStatistics stats = roi_statistics(map.eta, roi);
            std::cerr << fmt::format("roi mean eta = {:.4g} nT/sqrt(Hz) over {} pixels\n",
                                     to_nt_per_rthz(stats.mean), stats.n_pixels);
        } else if (*transient_run) {
            Scenario s = scenario_with_seed(transient_config, seed);
            s.experiment = Experiment::Transient;
            RunOptions options;
            if (!transient_out.empty()) options.output_dir = fs::path(transient_out).parent_path().empty()
                                                                  ? fs::path(".")
                                                                  : fs::path(transient_out).parent_path();
            const RunResult result = run_scenario(s, options);
            if (!transient_out.empty()) {
                const fs::path produced = *options.output_dir / "trace.csv";
                if (fs::absolute(produced) != fs::absolute(transient_out)) fs::rename(produced, transient_out);
            }
            std::cerr << result.summary;
        } else if (*scenario_run) {
            Scenario s = scenario_with_seed(scenario_config, seed);
            RunOptions options;
            if (!scenario_outdir.empty()) options.output_dir = scenario_outdir;
            const RunResult result = run_scenario(s, options);
            std::cout << result.summary;
            std::cerr << "manifest: " << result.manifest.string() << "\n";
        }
    } catch (const ParseError& e) {
        std::cerr << "nvmag: parse error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "nvmag: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
