#pragma once

// Reference computations that do not call into the library under test.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

/// Lorentzian sum in long double, straight from the line-shape definition.
inline long double single_tone_dip(long double c, long double width, long double hf, long double x) {
    long double s = 0;
    for (int p = -1; p <= 1; ++p) {
        const long double d = x - p * hf;
        s += 1.0L / (1.0L + 4.0L * d * d / (width * width));
    }
    return c * s;
}

inline long double triple_tone_dip(long double c, long double width, long double hf, long double x) {
    long double s = 0;
    for (int p = -1; p <= 1; ++p)
        for (int q = -1; q <= 1; ++q) {
            const long double d = (x + q * hf) - p * hf;
            s += 1.0L / (1.0L + 4.0L * d * d / (width * width));
        }
    return c * s;
}

/// Exact LR current for a voltage that is linear between consecutive
/// `knots` (t, V). Evaluated at the times in `at` (sorted).
struct Knot {
    double t;
    double v;
};

inline std::vector<double> lr_piecewise_linear(double inductance, double resistance,
                                               const std::vector<Knot>& knots,
                                               const std::vector<double>& at) {
    const long double tau = static_cast<long double>(inductance) / resistance;
    std::vector<double> out;
    out.reserve(at.size());
    long double i0 = 0;
    std::size_t seg = 0;
    long double seg_start = knots.front().t;
    auto advance_to = [&](long double t_end) {
        // current at t_end given i0 at seg_start, inside segment `seg`
        const auto& a = knots[seg];
        const auto& b = knots[seg + 1];
        const long double slope = (static_cast<long double>(b.v) - a.v) / (static_cast<long double>(b.t) - a.t);
        const long double v0 = a.v + slope * (seg_start - a.t);
        const long double dt = t_end - seg_start;
        const long double base = (v0 - slope * tau) / resistance;
        return base + slope * dt / resistance + (i0 - base) * std::exp(-dt / tau);
    };
    for (double t : at) {
        while (seg + 2 < knots.size() && t > knots[seg + 1].t) {
            i0 = advance_to(knots[seg + 1].t);
            seg_start = knots[seg + 1].t;
            ++seg;
        }
        out.push_back(static_cast<double>(advance_to(t)));
    }
    return out;
}

/// Lag (multiple of `step`) maximizing the Pearson correlation between
/// `signal` sampled at `times` and the `window`-wide box average of `ref`
/// shifted by the lag. Box averages use a 400-point midpoint rule.
inline double brute_force_lag(const std::vector<double>& times, const std::vector<double>& signal,
                              const std::function<double(double)>& ref, double window,
                              double max_lag, double step) {
    const std::size_t n = times.size();
    auto pearson = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double ma = 0, mb = 0;
        for (std::size_t k = 0; k < n; ++k) {
            ma += a[k];
            mb += b[k];
        }
        ma /= n;
        mb /= n;
        double sab = 0, saa = 0, sbb = 0;
        for (std::size_t k = 0; k < n; ++k) {
            sab += (a[k] - ma) * (b[k] - mb);
            saa += (a[k] - ma) * (a[k] - ma);
            sbb += (b[k] - mb) * (b[k] - mb);
        }
        return saa > 0 && sbb > 0 ? sab / std::sqrt(saa * sbb) : 0.0;
    };
    const int m = 400;
    double best_lag = 0, best = -2;
    const long steps = std::lround(max_lag / step);
    for (long s = -steps; s <= steps; ++s) {
        const double lag = s * step;
        std::vector<double> box(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double t0 = times[k] - lag - 0.5 * window;
            double acc = 0;
            for (int j = 0; j < m; ++j) acc += ref(t0 + (j + 0.5) * window / m);
            box[k] = acc / m;
        }
        const double c = pearson(signal, box);
        if (c > best) {
            best = c;
            best_lag = lag;
        }
    }
    return best_lag;
}

inline double sample_std(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    m /= v.size();
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / (v.size() - 1));
}

}  // namespace oracle
