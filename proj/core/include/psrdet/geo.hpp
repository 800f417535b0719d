#pragma once

#include <Eigen/Core>

#include "psrdet/errors.hpp"

namespace psrdet {

// Earth-centered Earth-fixed position, meters.
using EcefVector = Eigen::Vector3d;

constexpr double kDefaultEarthRadiusM = 6371000.0;
constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kDegToRad = kPi / 180.0;
constexpr double kRadToDeg = 180.0 / kPi;

struct GeodeticPoint {
    double latitude_deg = 0.0;   // [-90, 90]
    double longitude_deg = 0.0;  // [-180, 180)
    double altitude_m = 0.0;     // above the reference sphere

    void validate() const;
};

// Spherical-Earth conversions. The detectors consume PSR differences, so an
// ellipsoidal model buys nothing here.
EcefVector geodetic_to_ecef(const GeodeticPoint& p, double earth_radius_m = kDefaultEarthRadiusM);
GeodeticPoint ecef_to_geodetic(const EcefVector& v, double earth_radius_m = kDefaultEarthRadiusM);

// Local vertical (unit vector) at an ECEF position on a spherical Earth.
EcefVector local_up(const EcefVector& ecef);

// Local tangent-plane unit vectors. At the poles the east axis is chosen
// along +x to keep the frame defined.
void local_east_north(const EcefVector& ecef, EcefVector& east, EcefVector& north);

// Unit horizontal direction for a compass bearing (0 = north, clockwise).
EcefVector bearing_direction(const EcefVector& ecef, double bearing_rad);

// Great-circle move: from `start`, along `bearing_rad`, a signed arc length
// of `arc_m` over a sphere of radius (earth_radius + start altitude is NOT
// kept; the result carries altitude_m = 0). Negative distances walk the
// reciprocal bearing.
GeodeticPoint great_circle_move(const GeodeticPoint& start, double bearing_rad, double arc_m,
                                double earth_radius_m = kDefaultEarthRadiusM);

// Elevation of `sat` above the local horizon at `receiver`, radians.
// Negative below the horizon.
double elevation_angle(const EcefVector& receiver, const EcefVector& sat);

}  // namespace psrdet
