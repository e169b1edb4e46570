#include "nvmag/csv.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "nvmag/error.hpp"

namespace nvmag {

std::string format_value(double v) { return fmt::format("{:.16e}", v); }

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError(fmt::format("cannot open {} for writing", tmp.string()));
        out << content;
        if (!out) throw InputError(fmt::format("write to {} failed", tmp.string()));
    }
    std::filesystem::rename(tmp, path);
}

std::string positions_csv(const std::vector<ResonancePair>& pairs) {
    std::string s = "axis_index,f1_hz,f2_hz\n";
    for (std::size_t i = 0; i < pairs.size(); ++i)
        s += fmt::format("{},{},{}\n", i, format_value(pairs[i].f1), format_value(pairs[i].f2));
    return s;
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
    std::string s = "omega_hz,fluorescence\n";
    for (const auto& p : points)
        s += fmt::format("{},{}\n", format_value(p.omega), format_value(p.fluorescence));
    return s;
}

std::string plane_csv(const Plane& plane, const std::string& value_column) {
    std::string s = fmt::format("x,y,{}\n", value_column);
    for (std::size_t y = 0; y < plane.height; ++y)
        for (std::size_t x = 0; x < plane.width; ++x)
            s += fmt::format("{},{},{}\n", x, y, format_value(plane(x, y)));
    return s;
}

std::string sensitivity_map_csv(const SensitivityMap& map) {
    std::string s = "x,y,eta_nT_per_rtHz,etaV_nT_um15_per_rtHz\n";
    for (std::size_t y = 0; y < map.eta.height; ++y)
        for (std::size_t x = 0; x < map.eta.width; ++x)
            s += fmt::format("{},{},{},{}\n", x, y, format_value(to_nt_per_rthz(map.eta(x, y))),
                             format_value(to_nt_um15_per_rthz(map.eta_v(x, y))));
    return s;
}

std::string histogram_csv(const RoiStatistics& stats, double unit) {
    std::string s = "bin_low,bin_high,count\n";
    for (std::size_t i = 0; i < stats.counts.size(); ++i) {
        const double lo = stats.bin_min + static_cast<double>(i) * stats.bin_width;
        const double hi = stats.counts.size() == 1 ? stats.bin_min + stats.bin_width : lo + stats.bin_width;
        s += fmt::format("{},{},{}\n", format_value(lo / unit), format_value(hi / unit), stats.counts[i]);
    }
    return s;
}

std::string trace_csv(const TransientTrace& t) {
    std::string s = "t_s,voltage_V,true_current_A,true_field_T,reconstructed_field_T\n";
    for (std::size_t i = 0; i < t.times.size(); ++i)
        s += fmt::format("{},{},{},{},{}\n", format_value(t.times[i]), format_value(t.voltage[i]),
                         format_value(t.current[i]), format_value(t.true_field[i]),
                         format_value(t.reconstructed_field[i]));
    return s;
}

std::vector<CoherenceSample> read_coherence_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError(fmt::format("cannot open {}", path.string()));
    std::vector<CoherenceSample> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        CoherenceSample s;
        if (!(row >> s.tau >> s.value)) {
            if (out.empty() && line_no == 1) continue;  // header
            throw ParseError("expected two numeric columns (tau, value)", line_no, 1);
        }
        out.push_back(s);
    }
    return out;
}

std::string fit_report(const FitResult& r) {
    std::string s = fmt::format("kind: {}\n", r.kind == CoherenceKind::Ramsey ? "ramsey" : "hahn");
    for (std::size_t i = 0; i < r.names.size(); ++i)
        s += fmt::format("{}: {} +/- {}\n", r.names[i], format_value(r.values[i]),
                         format_value(r.std_errors[i]));
    s += fmt::format("residual_norm: {}\niterations: {}\n", format_value(r.residual_norm), r.iterations);
    return s;
}

}  // namespace nvmag
