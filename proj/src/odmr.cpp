#include "nvmag/odmr.hpp"

#include <cmath>
#include <cstdint>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include "nvmag/error.hpp"

namespace nvmag {

void OdmrModel::validate() const {
    if (!(linewidth > 0.0)) throw ValidationError("OdmrModel: linewidth must be positive");
    if (!(contrast > 0.0 && contrast < 1.0))
        throw ValidationError("OdmrModel: contrast must lie in (0, 1)");
    if (!(hf > 0.0)) throw ValidationError("OdmrModel: hyperfine splitting must be positive");
}

double dip_at_detuning(const OdmrModel& model, double detuning) {
    // Extended precision: the lock-in differences of this sum are tiny.
    auto lorentz = [&](long double x) {
        const long double r = 2.0L * x / model.linewidth;
        return 1.0L / (1.0L + r * r);
    };
    const long double det = detuning;
    const long double hf = model.hf;
    long double sum = 0.0L;
    if (model.scheme == DriveScheme::SingleTone) {
        for (int p = -1; p <= 1; ++p) sum += lorentz(det - p * hf);
    } else {
        for (int p = -1; p <= 1; ++p)
            for (int q = -1; q <= 1; ++q) sum += lorentz(det + (q - p) * hf);
    }
    return static_cast<double>(model.contrast * sum);
}

double dip(const OdmrModel& model, double omega) { return dip_at_detuning(model, omega - model.omega0); }

double spectrum(const OdmrModel& model, double omega) { return 1.0 - dip(model, omega); }

double contrast_enhancement(double linewidth, double hf) {
    if (!(linewidth > 0.0)) throw ContractViolation("contrast_enhancement: linewidth must be positive");
    const double a = lorentzian(hf, linewidth);
    const double b = lorentzian(2.0 * hf, linewidth);
    return (3.0 + 4.0 * a + 2.0 * b) / (1.0 + 2.0 * a);
}

double split_tone_linewidth(double single_tone_linewidth, double intrinsic_linewidth) {
    if (!(intrinsic_linewidth > 0.0) || single_tone_linewidth < intrinsic_linewidth)
        throw ContractViolation("split_tone_linewidth: need single-tone width >= intrinsic width > 0");
    const double d0 = intrinsic_linewidth * intrinsic_linewidth;
    const double broadening = single_tone_linewidth * single_tone_linewidth - d0;
    return std::sqrt(d0 + broadening / 3.0);
}

double power_split_enhancement(double single_tone_linewidth, double intrinsic_linewidth, double hf) {
    const double tone = split_tone_linewidth(single_tone_linewidth, intrinsic_linewidth);
    const double triple = 3.0 + 4.0 * lorentzian(hf, tone) + 2.0 * lorentzian(2.0 * hf, tone);
    const double single = 1.0 + 2.0 * lorentzian(hf, single_tone_linewidth);
    return triple / single;
}

std::pair<double, double> minimum_contrast_enhancement(double hf) {
    // Work in log(linewidth) so the bracket spans several decades.
    auto f = [hf](double log_w) { return contrast_enhancement(std::exp(log_w), hf); };
    std::uintmax_t iters = 200;
    const auto [log_w, value] = boost::math::tools::brent_find_minima(
        f, std::log(1e-3 * hf), std::log(1e3 * hf), 52, iters);
    return {value, std::exp(log_w)};
}

namespace {

std::optional<double> bracketed_root(auto&& g, double lo, double hi) {
    if (g(lo) * g(hi) > 0.0) return std::nullopt;
    std::uintmax_t iters = 200;
    boost::math::tools::eps_tolerance<double> tol(50);
    const auto [a, b] = boost::math::tools::toms748_solve(g, lo, hi, tol, iters);
    return 0.5 * (a + b);
}

}  // namespace

std::optional<double> linewidth_for_enhancement(double target, double hf) {
    // The ratio falls from 3 towards a single minimum and then climbs back to
    // 3; take the narrow-line branch.
    const auto [min_value, min_width] = minimum_contrast_enhancement(hf);
    if (target < min_value || target >= 3.0) return std::nullopt;
    auto g = [&](double w) { return contrast_enhancement(w, hf) - target; };
    return bracketed_root(g, 1e-6 * hf, min_width);
}

std::optional<double> power_broadening_for_enhancement(double target, double intrinsic_linewidth,
                                                       double hf) {
    // Same shape as the shared-width ratio: a dip towards ~2 under heavy
    // broadening, then back up to 3. Narrow branch only.
    auto f = [&](double log_w) { return power_split_enhancement(std::exp(log_w), intrinsic_linewidth, hf); };
    std::uintmax_t iters = 200;
    const auto [log_w, min_value] = boost::math::tools::brent_find_minima(
        f, std::log(intrinsic_linewidth), std::log(1e3 * hf), 52, iters);
    if (target < min_value) return std::nullopt;
    auto g = [&](double w) { return power_split_enhancement(w, intrinsic_linewidth, hf) - target; };
    return bracketed_root(g, intrinsic_linewidth, std::exp(log_w));
}

bool dr_lines_overlap(const OdmrModel& line1, const OdmrModel& line2) {
    return std::abs(line1.omega0 - line2.omega0) < std::max(line1.linewidth, line2.linewidth);
}

double dr_spectrum(const OdmrModel& line1, const OdmrModel& line2, double omega,
                   double population_sharing) {
    if (dr_lines_overlap(line1, line2))
        warn(fmt::format("dr_spectrum: transitions at {} Hz and {} Hz overlap", line1.omega0,
                         line2.omega0));
    return 1.0 - population_sharing * (dip(line1, omega) + dip(line2, omega));
}

std::vector<SweepPoint> sweep(SweepScheme scheme, const OdmrModel& line1, const OdmrModel& line2,
                              double start, double stop, std::size_t points,
                              double population_sharing) {
    if (points < 2) throw InputError("sweep: need at least two points");
    std::vector<SweepPoint> out;
    out.reserve(points);
    OdmrModel single = line1;
    single.scheme = DriveScheme::SingleTone;
    OdmrModel triple1 = line1;
    triple1.scheme = DriveScheme::TripleTone;
    OdmrModel triple2 = line2;
    triple2.scheme = DriveScheme::TripleTone;
    const double step = (stop - start) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) {
        const double omega = start + step * static_cast<double>(i);
        double value = 0.0;
        switch (scheme) {
            case SweepScheme::SR: value = spectrum(single, omega); break;
            case SweepScheme::SRHF: value = spectrum(triple1, omega); break;
            case SweepScheme::DRHF: {
                // Second source tracks line2 at the same detuning.
                const double detuning = omega - triple1.omega0;
                value = 1.0 - population_sharing *
                                  (dip(triple1, omega) + dip(triple2, triple2.omega0 + detuning));
                break;
            }
        }
        out.push_back({omega, value});
    }
    return out;
}

}  // namespace nvmag
