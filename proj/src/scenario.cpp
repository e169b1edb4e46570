#include "nvmag/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "nvmag/csv.hpp"
#include "nvmag/dr_demod.hpp"
#include "nvmag/error.hpp"
#include "nvmag/frame_io.hpp"
#include "nvmag/rng.hpp"

namespace nvmag {

namespace {

constexpr std::uint64_t kAcquisitionStream = 0xA11CE;
constexpr std::uint64_t kTransientStream = 0x7A5;

// Reads keys of one mapping and rejects the ones nobody asked for.
class Section {
public:
    Section(const YAML::Node& node, std::string name) : node_(node), name_(std::move(name)) {
        if (node_ && !node_.IsNull() && !node_.IsMap())
            throw ParseError(fmt::format("'{}' must be a mapping", name_), node_.Mark().line + 1,
                             node_.Mark().column + 1);
    }

    template <typename T>
    std::optional<T> get(const std::string& key) {
        used_.insert(key);
        if (!node_ || node_.IsNull() || !node_[key]) return std::nullopt;
        const YAML::Node v = node_[key];
        try {
            return v.as<T>();
        } catch (const YAML::BadConversion&) {
            throw ParseError(fmt::format("{}.{}: wrong type", name_, key), v.Mark().line + 1,
                             v.Mark().column + 1);
        }
    }

    template <typename T>
    void read(const std::string& key, T& target) {
        if (auto v = get<T>(key)) target = *v;
    }

    void finish() const {
        if (!node_ || node_.IsNull()) return;
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!used_.contains(key))
                throw ParseError(fmt::format("unknown key '{}' in '{}'", key, name_),
                                 kv.first.Mark().line + 1, kv.first.Mark().column + 1);
        }
    }

private:
    YAML::Node node_;
    std::string name_;
    std::set<std::string> used_;
};

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

Experiment parse_experiment(const std::string& s, const YAML::Mark& mark) {
    if (s == "odmr_sweep") return Experiment::OdmrSweep;
    if (s == "sensitivity_map") return Experiment::SensitivityMap;
    if (s == "transient") return Experiment::Transient;
    if (s == "coherence_fit") return Experiment::CoherenceFit;
    throw ParseError(fmt::format("unknown experiment '{}'", s), mark.line + 1, mark.column + 1);
}

std::string experiment_name(Experiment e) {
    switch (e) {
        case Experiment::OdmrSweep: return "odmr_sweep";
        case Experiment::SensitivityMap: return "sensitivity_map";
        case Experiment::Transient: return "transient";
        case Experiment::CoherenceFit: return "coherence_fit";
    }
    return "unknown";
}

template <typename Enum>
Enum parse_choice(const std::string& value, std::initializer_list<std::pair<const char*, Enum>> choices,
                  const std::string& what) {
    for (const auto& [name, e] : choices)
        if (value == name) return e;
    throw ValidationError(fmt::format("{}: unknown value '{}'", what, value));
}

}  // namespace

std::pair<OdmrModel, OdmrModel> Scenario::lines() const {
    const ResonancePair pair = resonance_pair(nv, axis_index);
    OdmrModel l1 = line_shape;
    OdmrModel l2 = line_shape;
    l1.omega0 = pair.f1;
    l2.omega0 = pair.f2;
    return {l1, l2};
}

LockInSetup Scenario::setup() const { return make_setup(nv, line_shape, protocol, axis_index); }

RoiCircle Scenario::roi() const {
    return sensitivity.roi.value_or(RoiCircle::centered(protocol.width, protocol.height));
}

void Scenario::validate() const {
    nv.validate();
    if (axis_index > 3) throw ValidationError("nv.axis_index must be 0..3");
    line_shape.validate();
    protocol.validate();
    if (n_frames < 1) throw ValidationError("protocol.n_frames must be at least 1");
    if (n_frames > 0xFFFFFFFFu) throw ValidationError("protocol.n_frames exceeds the NVLF limit");
    if (std::abs(protocol.drive_detuning) > 5.0 * line_shape.linewidth)
        throw ValidationError(fmt::format(
            "protocol.drive_detuning_hz = {} lies more than 5 linewidths from the resonance",
            protocol.drive_detuning));
    (void)lines();  // resonance_pair throws for out-of-model bias fields
    if (target_eta && !(*target_eta > 0.0)) throw ValidationError("protocol.target_eta_nt must be positive");
    if (experiment == Experiment::Transient) {
        transient.circuit.validate();
        transient.pulse.validate();
    }
    if (experiment == Experiment::CoherenceFit && coherence.input.empty())
        throw ValidationError("coherence.input is required for coherence_fit");
    const RoiCircle r = roi();
    if (!(r.radius > 0.0)) throw ValidationError("sensitivity.roi_radius_px must be positive");
}

std::filesystem::path resolve_config_path(const std::filesystem::path& path) {
    if (std::filesystem::exists(path)) return path;
    if (const char* dir = std::getenv(kConfigDirEnv); dir && *dir) {
        const auto candidate = std::filesystem::path(dir) / path;
        if (std::filesystem::exists(candidate)) return candidate;
    }
    throw InputError(fmt::format("config file {} not found (also searched ${})", path.string(),
                                 kConfigDirEnv));
}

Scenario parse_scenario(const std::string& text, const std::filesystem::path& source) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ParseError(e.msg, e.mark.line + 1, e.mark.column + 1);
    }
    if (!root || root.IsNull()) throw ParseError("scenario is empty", 1, 1);
    if (!root.IsMap()) throw ParseError("scenario must be a mapping", 1, 1);

    Scenario s;
    s.source = source;
    Section top(root, "scenario");
    if (auto e = top.get<std::string>("experiment"))
        s.experiment = parse_experiment(*e, root["experiment"].Mark());
    top.read("seed", s.seed);

    {
        Section nv(root["nv"], "nv");
        nv.read("d0_hz", s.nv.d0);
        nv.read("gamma_hz_per_t", s.nv.gamma);
        double magnitude = 3e-3;
        nv.read("bias_field_t", magnitude);
        Vec3 dir = alignment_direction(Alignment::Axis001);
        if (auto a = nv.get<std::string>("alignment"))
            dir = alignment_direction(parse_choice<Alignment>(
                *a, {{"001", Alignment::Axis001}, {"111", Alignment::Axis111}}, "nv.alignment"));
        if (auto d = nv.get<std::vector<double>>("bias_direction")) {
            if (d->size() != 3) throw ValidationError("nv.bias_direction needs three components");
            dir = Vec3((*d)[0], (*d)[1], (*d)[2]);
            if (!(dir.norm() > 0.0)) throw ValidationError("nv.bias_direction must be nonzero");
            dir.normalize();
        }
        s.nv.bias_field = magnitude * dir;
        nv.read("axis_index", s.axis_index);
        nv.finish();
    }
    {
        Section odmr(root["odmr"], "odmr");
        if (auto scheme = odmr.get<std::string>("scheme"))
            s.line_shape.scheme = parse_choice<DriveScheme>(
                *scheme, {{"single_tone", DriveScheme::SingleTone}, {"triple_tone", DriveScheme::TripleTone}},
                "odmr.scheme");
        odmr.read("linewidth_hz", s.line_shape.linewidth);
        odmr.read("contrast", s.line_shape.contrast);
        odmr.read("hf_hz", s.line_shape.hf);
        odmr.finish();
    }
    {
        auto& p = s.protocol;
        Section pr(root["protocol"], "protocol");
        pr.read("f_mod_hz", p.f_mod);
        pr.read("mod_depth_hz", p.mod_depth);
        pr.read("n_cyc", p.n_cyc);
        if (auto v = pr.get<double>("phi1_deg")) p.phi1 = deg_to_rad(*v);
        if (auto v = pr.get<double>("phi2_deg")) p.phi2 = deg_to_rad(*v);
        if (auto d = pr.get<std::string>("drive"))
            p.drive = parse_choice<ResonanceDrive>(
                *d, {{"single", ResonanceDrive::Single}, {"double", ResonanceDrive::Double}}, "protocol.drive");
        pr.read("dr_sharing", p.dr_sharing);
        pr.read("photon_rate", p.photon_rate);
        if (auto t = pr.get<double>("target_eta_nt")) s.target_eta = *t * 1e-9;
        if (auto r = pr.get<std::string>("target_region"))
            s.target_center_pixel = parse_choice<bool>(*r, {{"roi", false}, {"center", true}},
                                                       "protocol.target_region");
        pr.read("width", p.width);
        pr.read("height", p.height);
        pr.read("pixel_pitch_m", p.pixel_pitch);
        pr.read("layer_thickness_m", p.layer_thickness);
        pr.read("beam_fwhm_m", p.beam_fwhm);
        pr.read("drive_detuning_hz", p.drive_detuning);
        pr.read("shot_noise", p.shot_noise);
        pr.read("n_frames", s.n_frames);
        pr.finish();
    }
    {
        Section sw(root["sweep"], "sweep");
        if (auto scheme = sw.get<std::string>("scheme"))
            s.sweep.scheme = parse_choice<SweepScheme>(
                *scheme, {{"sr", SweepScheme::SR}, {"sr-hf", SweepScheme::SRHF}, {"dr-hf", SweepScheme::DRHF}},
                "sweep.scheme");
        sw.read("span_hz", s.sweep.span);
        sw.read("points", s.sweep.points);
        sw.finish();
    }
    {
        Section se(root["sensitivity"], "sensitivity");
        se.read("test_field_t", s.sensitivity.test_field);
        auto radius = se.get<double>("roi_radius_px");
        auto center = se.get<std::vector<double>>("roi_center_px");
        if (radius || center) {
            RoiCircle r = RoiCircle::centered(s.protocol.width, s.protocol.height);
            if (radius) r.radius = *radius;
            if (center) {
                if (center->size() != 2) throw ValidationError("sensitivity.roi_center_px needs two values");
                r.cx = (*center)[0];
                r.cy = (*center)[1];
            }
            s.sensitivity.roi = r;
        }
        se.finish();
    }
    {
        auto& t = s.transient;
        Section tr(root["transient"], "transient");
        tr.read("inductance_h", t.circuit.inductance);
        tr.read("resistance_ohm", t.circuit.resistance);
        tr.read("field_coefficient_t_per_a", t.circuit.field_coefficient);
        tr.read("amplitude_v", t.pulse.amplitude);
        tr.read("t_peak_s", t.pulse.t_peak);
        tr.read("t_trough_s", t.pulse.t_trough);
        tr.read("flip_window_s", t.pulse.flip_window);
        tr.read("period_s", t.pulse.period);
        tr.read("offset_s", t.pulse.offset);
        tr.read("solver_dt_s", t.solver_dt);
        tr.read("peak_field_t", t.peak_field);
        tr.finish();
    }
    {
        auto& c = s.coherence;
        Section co(root["coherence"], "coherence");
        if (auto k = co.get<std::string>("kind"))
            c.kind = parse_choice<CoherenceKind>(
                *k, {{"ramsey", CoherenceKind::Ramsey}, {"hahn", CoherenceKind::Hahn}}, "coherence.kind");
        if (auto in = co.get<std::string>("input")) {
            c.input = *in;
            if (c.input.is_relative() && !source.empty()) c.input = source.parent_path() / c.input;
        }
        co.read("detuning_hz", c.options.detuning_hz);
        co.read("hf_hz", c.options.hf_hz);
        co.finish();
    }
    {
        Section out(root["output"], "output");
        if (auto d = out.get<std::string>("dir")) s.output_dir = *d;
        out.read("frames", s.write_frames);
        out.finish();
    }
    for (const char* key : {"nv", "odmr", "protocol", "sweep", "sensitivity", "transient", "coherence", "output"})
        top.get<YAML::Node>(key);
    top.finish();

    // Pulses fill the acquisition window.
    const double span = static_cast<double>(s.n_frames) * s.protocol.frame_duration();
    auto& pulse = s.transient.pulse;
    pulse.n_periods = span > pulse.offset
                          ? static_cast<std::size_t>(std::ceil((span - pulse.offset) / pulse.period))
                          : 0;

    s.validate();
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    const auto resolved = resolve_config_path(path);
    std::ifstream in(resolved);
    if (!in) throw InputError(fmt::format("cannot read {}", resolved.string()));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str(), resolved);
}

LockInSetup prepared_setup(const Scenario& scenario) {
    LockInSetup setup = scenario.setup();
    setup.protocol.seed = derive_seed(scenario.seed, kAcquisitionStream);
    if (scenario.target_eta) {
        const RoiCircle region =
            scenario.target_center_pixel
                ? RoiCircle{0.5 * static_cast<double>(setup.protocol.width - 1),
                            0.5 * static_cast<double>(setup.protocol.height - 1), 0.5}
                : scenario.roi();
        setup.protocol.photon_rate = calibrate_photon_rate(setup, *scenario.target_eta, region);
    }
    return setup;
}

namespace {

struct Writer {
    std::filesystem::path dir;
    std::vector<std::filesystem::path> outputs;

    void put(const std::string& name, const std::string& content) {
        const auto path = dir / name;
        atomic_write(path, content);
        outputs.push_back(path);
    }
};

}  // namespace

RunResult run_scenario(const Scenario& input, const RunOptions& options) {
    const auto started = std::chrono::steady_clock::now();
    Scenario scenario = input;
    if (options.seed) scenario.seed = *options.seed;
    if (options.output_dir) scenario.output_dir = *options.output_dir;
    scenario.validate();

    Writer w{scenario.output_dir, {}};
    std::filesystem::create_directories(w.dir);
    nlohmann::ordered_json summary;

    try {
        switch (scenario.experiment) {
            case Experiment::OdmrSweep: {
                auto [l1, l2] = scenario.lines();
                const auto points =
                    sweep(scenario.sweep.scheme, l1, l2, l1.omega0 - 0.5 * scenario.sweep.span,
                          l1.omega0 + 0.5 * scenario.sweep.span, scenario.sweep.points,
                          scenario.protocol.drive == ResonanceDrive::Double ? scenario.protocol.dr_sharing : 1.0);
                w.put("sweep.csv", sweep_csv(points));
                w.put("positions.csv", positions_csv(alignment_spectrum_positions(scenario.nv)));
                double depth = 0.0;
                for (const auto& p : points) depth = std::max(depth, 1.0 - p.fluorescence);
                summary["max_dip_depth"] = depth;
                break;
            }
            case Experiment::SensitivityMap: {
                const LockInSetup setup = prepared_setup(scenario);
                const RoiCircle roi = scenario.roi();
                const SensitivityRun run = run_sensitivity_map(
                    setup, scenario.n_frames, scenario.sensitivity.test_field, roi);
                w.put("map.csv", sensitivity_map_csv(run.map));
                w.put("hist.csv", histogram_csv(run.eta_v_stats, kVolumeUnit));
                if (scenario.write_frames) {
                    const auto path = w.dir / "frames.nvlf";
                    write_frames(path, make_header(setup.protocol, static_cast<std::uint32_t>(scenario.n_frames)),
                                 simulate_frames(setup,
                                                 Movie::constant(scenario.sensitivity.test_field,
                                                                 scenario.n_frames * setup.protocol.frame_duration()),
                                                 Movie::constant(0.0, scenario.n_frames * setup.protocol.frame_duration()),
                                                 scenario.n_frames));
                    save_calibration(calibration_sidecar(path), {run.calibration, setup.protocol});
                    w.outputs.push_back(path);
                    w.outputs.push_back(calibration_sidecar(path));
                }
                summary["photon_rate"] = setup.protocol.photon_rate;
                summary["alpha_counts_per_hz"] = run.calibration.alpha;
                summary["roi_pixels"] = run.eta_stats.n_pixels;
                summary["roi_mean_eta_nT_per_rtHz"] = to_nt_per_rthz(run.eta_stats.mean);
                summary["roi_mean_etaV_nT_um15_per_rtHz"] = to_nt_um15_per_rthz(run.eta_v_stats.mean);
                summary["roi_mode_etaV_nT_um15_per_rtHz"] = to_nt_um15_per_rthz(run.eta_v_stats.mode());
                break;
            }
            case Experiment::Transient: {
                TransientConfig cfg;
                cfg.circuit = scenario.transient.circuit;
                cfg.pulse = scenario.transient.pulse;
                cfg.setup = prepared_setup(scenario);
                cfg.n_frames = scenario.n_frames;
                cfg.solver_dt = scenario.transient.solver_dt;
                cfg.peak_field = scenario.transient.peak_field;
                const TransientTrace trace =
                    run_transient_experiment(cfg, derive_seed(scenario.seed, kTransientStream));
                w.put("trace.csv", trace_csv(trace));
                summary["photon_rate"] = cfg.setup.protocol.photon_rate;
                summary["field_coefficient_t_per_a"] = trace.field_coefficient;
                summary["noise_std_t"] = trace.noise_std;
                summary["delay_s"] = delay_estimate(trace, cfg.pulse);
                break;
            }
            case Experiment::CoherenceFit: {
                const auto samples = read_coherence_csv(scenario.coherence.input);
                const FitResult fit = fit_coherence(samples, scenario.coherence.kind, scenario.coherence.options);
                w.put("fit.txt", fit_report(fit));
                for (std::size_t i = 0; i < fit.names.size(); ++i) summary[fit.names[i]] = fit.values[i];
                break;
            }
        }
    } catch (const Error& e) {
        throw Error(fmt::format("{} experiment failed: {}", experiment_name(scenario.experiment), e.what()));
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    nlohmann::ordered_json manifest;
    manifest["version"] = kVersion;
    manifest["experiment"] = experiment_name(scenario.experiment);
    manifest["seed"] = scenario.seed;
    manifest["config"] = scenario.source.string();
    manifest["wall_time_s"] = wall;
    manifest["outputs"] = nlohmann::json::array();
    for (const auto& p : w.outputs) manifest["outputs"].push_back(p.filename().string());
    manifest["summary"] = summary;

    RunResult result;
    result.outputs = w.outputs;
    result.manifest = w.dir / "manifest.json";
    atomic_write(result.manifest, manifest.dump(2) + "\n");
    for (const auto& [key, value] : summary.items()) result.summary += fmt::format("{}: {}\n", key, value.dump());
    return result;
}

void save_calibration(const std::filesystem::path& path, const CalibrationFile& file) {
    const auto& c = file.calibration;
    const auto& p = file.protocol;
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;
    out << YAML::Key << "alpha_counts_per_hz" << YAML::Value << c.alpha;
    out << YAML::Key << "mode" << YAML::Value << (c.mode == DemodMode::Field ? "field" : "temperature");
    out << YAML::Key << "transitions" << YAML::Value << c.transitions;
    out << YAML::Key << "gamma_hz_per_t" << YAML::Value << c.gamma;
    out << YAML::Key << "mod_depth_hz" << YAML::Value << c.mod_depth;
    out << YAML::Key << "width" << YAML::Value << p.width;
    out << YAML::Key << "height" << YAML::Value << p.height;
    out << YAML::Key << "pixel_pitch_m" << YAML::Value << p.pixel_pitch;
    out << YAML::Key << "layer_thickness_m" << YAML::Value << p.layer_thickness;
    out << YAML::Key << "beam_fwhm_m" << YAML::Value << p.beam_fwhm;
    out << YAML::EndMap;
    atomic_write(path, std::string(out.c_str()) + "\n");
}

CalibrationFile load_calibration(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError(fmt::format("cannot read calibration {}", path.string()));
    std::stringstream buffer;
    buffer << in.rdbuf();
    YAML::Node root;
    try {
        root = YAML::Load(buffer.str());
    } catch (const YAML::ParserException& e) {
        throw ParseError(e.msg, e.mark.line + 1, e.mark.column + 1);
    }
    if (!root || !root.IsMap()) throw ParseError("calibration file is empty", 1, 1);
    CalibrationFile f;
    Section s(root, "calibration");
    auto alpha = s.get<double>("alpha_counts_per_hz");
    if (!alpha) throw ValidationError("calibration: alpha_counts_per_hz missing");
    f.calibration.alpha = *alpha;
    if (auto m = s.get<std::string>("mode"))
        f.calibration.mode = parse_choice<DemodMode>(
            *m, {{"field", DemodMode::Field}, {"temperature", DemodMode::Temperature}}, "calibration.mode");
    s.read("transitions", f.calibration.transitions);
    s.read("gamma_hz_per_t", f.calibration.gamma);
    s.read("mod_depth_hz", f.calibration.mod_depth);
    s.read("width", f.protocol.width);
    s.read("height", f.protocol.height);
    s.read("pixel_pitch_m", f.protocol.pixel_pitch);
    s.read("layer_thickness_m", f.protocol.layer_thickness);
    s.read("beam_fwhm_m", f.protocol.beam_fwhm);
    s.finish();
    return f;
}

std::filesystem::path calibration_sidecar(const std::filesystem::path& frames_path) {
    auto p = frames_path;
    p += ".cal";
    return p;
}

}  // namespace nvmag
