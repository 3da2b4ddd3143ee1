// Fibonacci lattice of 2n+1 near-uniform unit directions.
//
// Axis convention (pinned and serialized with datasets): z-up, latitude
// measured from the equator, longitude from +x toward +y, so
//   d = (cos lat cos lon, cos lat sin lon, sin lat).
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "odf/math.hpp"

namespace odf {

inline Vec3 latlon_to_dir(double lat, double lon) {
    const double cl = std::cos(lat);
    return {cl * std::cos(lon), cl * std::sin(lon), std::sin(lat)};
}

struct FibonacciLattice {
    std::uint32_t n = 0;              // lattice parameter N; P = 2N+1 directions
    std::vector<double> latitudes;    // arcsin(2i / (2N+1)), i in [-N, N]
    std::vector<double> longitudes;   // 2*pi*i/phi, wrapped to [-pi, pi)
    std::vector<Vec3> directions;

    std::size_t count() const { return directions.size(); }
};

inline FibonacciLattice fibonacci_directions(std::uint32_t n) {
    static const double inv_phi = 2.0 / (1.0 + std::sqrt(5.0));
    FibonacciLattice lattice;
    lattice.n = n;
    const std::size_t p = 2 * static_cast<std::size_t>(n) + 1;
    lattice.latitudes.reserve(p);
    lattice.longitudes.reserve(p);
    lattice.directions.reserve(p);
    const double denom = static_cast<double>(p);
    for (std::int64_t i = -static_cast<std::int64_t>(n); i <= static_cast<std::int64_t>(n); ++i) {
        const double lat = std::asin(2.0 * static_cast<double>(i) / denom);
        double lon = std::remainder(2.0 * kPi * static_cast<double>(i) * inv_phi, 2.0 * kPi);
        if (lon >= kPi) lon -= 2.0 * kPi;  // remainder returns (-pi, pi]; wrap to [-pi, pi)
        lattice.latitudes.push_back(lat);
        lattice.longitudes.push_back(lon);
        lattice.directions.push_back(latlon_to_dir(lat, lon));
    }
    return lattice;
}

}  // namespace odf
