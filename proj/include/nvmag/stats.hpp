#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace nvmag {

/// Pairwise (cascade) summation; the result does not depend on thread count.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 16) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline double mean(std::span<const double> v) {
    return v.empty() ? 0.0 : pairwise_sum(v) / static_cast<double>(v.size());
}

/// Sample standard deviation (N-1 normalization). Two-pass on values shifted
/// by the first sample, so a constant series gives exactly zero.
inline double sample_std(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    std::vector<double> d(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) d[i] = v[i] - v[0];
    const double m = mean(d);
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (d[i] - m) * (d[i] - m);
    return std::sqrt(pairwise_sum(sq) / static_cast<double>(v.size() - 1));
}

}  // namespace nvmag
