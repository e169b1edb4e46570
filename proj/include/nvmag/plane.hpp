#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nvmag {

/// Row-major 2-D array of doubles.
struct Plane {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> values;

    Plane() = default;
    Plane(std::size_t w, std::size_t h, double fill = 0.0) : width(w), height(h), values(w * h, fill) {}

    std::size_t size() const { return values.size(); }
    double& operator()(std::size_t x, std::size_t y) { return values[y * width + x]; }
    double operator()(std::size_t x, std::size_t y) const { return values[y * width + x]; }
    std::span<const double> span() const { return values; }

    bool operator==(const Plane&) const = default;
};

enum class Execution {
    Serial,    ///< reference implementation, single thread
    Parallel,  ///< OpenMP over pixels
};

}  // namespace nvmag
