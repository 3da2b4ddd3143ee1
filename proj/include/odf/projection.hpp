// Sphere <-> UV plane mappings used by the direction feature grids.
//
// u encodes longitude identically for both projections and wraps; v encodes
// latitude and clamps. Mercator diverges at the poles, so latitude is clamped
// at +/-85.05113 degrees and v is rescaled so the clamp maps exactly to [0,1].
#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "odf/errors.hpp"
#include "odf/fibonacci.hpp"
#include "odf/math.hpp"

namespace odf {

enum class Projection : std::uint8_t { LongLat = 0, Mercator = 1 };

inline const char* to_string(Projection p) { return p == Projection::LongLat ? "long-lat" : "mercator"; }

inline Projection projection_from_string(const std::string& s) {
    if (s == "long-lat" || s == "longlat") return Projection::LongLat;
    if (s == "mercator") return Projection::Mercator;
    throw InputError("unknown projection '" + s + "'");
}

inline constexpr double kMercatorClampDeg = 85.05113;

namespace detail {

inline double mercator_limit() {
    static const double y_max = std::log(std::tan(0.25 * kPi + 0.5 * kMercatorClampDeg * kPi / 180.0));
    return y_max;
}

}  // namespace detail

struct SphericalUv {
    double u = 0.0;  // [0, 1), wrapping longitude
    double v = 0.0;  // [0, 1], clamping latitude
    Projection projection = Projection::LongLat;
};

inline SphericalUv latlon_to_uv(double lat, double lon, Projection projection) {
    SphericalUv uv;
    uv.projection = projection;
    uv.u = (lon + kPi) / (2.0 * kPi);
    if (uv.u >= 1.0) uv.u -= 1.0;
    if (uv.u < 0.0) uv.u += 1.0;
    if (projection == Projection::LongLat) {
        uv.v = (lat + 0.5 * kPi) / kPi;
    } else {
        const double limit = kMercatorClampDeg * kPi / 180.0;
        const double lat_c = std::clamp(lat, -limit, limit);
        const double y = std::log(std::tan(0.25 * kPi + 0.5 * lat_c));
        const double y_max = detail::mercator_limit();
        uv.v = std::clamp(0.5 * (y / y_max + 1.0), 0.0, 1.0);
    }
    uv.v = std::clamp(uv.v, 0.0, 1.0);
    return uv;
}

inline SphericalUv dir_to_uv(const Vec3& d, Projection projection) {
    const double n = norm(d);
    if (std::abs(n - 1.0) > kUnitDirTolerance)
        throw ContractError("dir_to_uv requires a unit direction");
    const double lat = std::asin(std::clamp(d.z, -1.0, 1.0));
    const double lon = std::atan2(d.y, d.x);
    return latlon_to_uv(lat, lon, projection);
}

inline Vec3 uv_to_dir(const SphericalUv& uv) {
    const double lon = uv.u * 2.0 * kPi - kPi;
    double lat;
    if (uv.projection == Projection::LongLat) {
        lat = uv.v * kPi - 0.5 * kPi;
    } else {
        const double y = (2.0 * uv.v - 1.0) * detail::mercator_limit();
        lat = std::atan(std::sinh(y));
    }
    return latlon_to_dir(lat, lon);
}

}  // namespace odf
