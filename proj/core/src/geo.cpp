#include "psrdet/geo.hpp"

#include <Eigen/Geometry>
#include <cmath>

namespace psrdet {

void GeodeticPoint::validate() const {
    if (!(latitude_deg >= -90.0 && latitude_deg <= 90.0))
        throw UsageError("latitude out of [-90, 90]");
    if (!(longitude_deg >= -180.0 && longitude_deg < 180.0))
        throw UsageError("longitude out of [-180, 180)");
    if (!std::isfinite(altitude_m)) throw UsageError("altitude not finite");
}

EcefVector geodetic_to_ecef(const GeodeticPoint& p, double earth_radius_m) {
    const double lat = p.latitude_deg * kDegToRad;
    const double lon = p.longitude_deg * kDegToRad;
    const double r = earth_radius_m + p.altitude_m;
    return {r * std::cos(lat) * std::cos(lon), r * std::cos(lat) * std::sin(lon), r * std::sin(lat)};
}

GeodeticPoint ecef_to_geodetic(const EcefVector& v, double earth_radius_m) {
    const double r = v.norm();
    GeodeticPoint p;
    p.latitude_deg = std::asin(v.z() / r) * kRadToDeg;
    double lon = std::atan2(v.y(), v.x()) * kRadToDeg;
    if (lon >= 180.0) lon -= 360.0;
    p.longitude_deg = lon;
    p.altitude_m = r - earth_radius_m;
    return p;
}

EcefVector local_up(const EcefVector& ecef) { return ecef.normalized(); }

void local_east_north(const EcefVector& ecef, EcefVector& east, EcefVector& north) {
    const EcefVector up = local_up(ecef);
    const EcefVector e = EcefVector{0.0, 0.0, 1.0}.cross(up);
    const double n = e.norm();
    if (n < 1e-12) {
        east = {0.0, 1.0, 0.0};  // pole: pick an arbitrary horizontal axis
    } else {
        east = e / n;
    }
    north = up.cross(east);
}

EcefVector bearing_direction(const EcefVector& ecef, double bearing_rad) {
    EcefVector east, north;
    local_east_north(ecef, east, north);
    return std::sin(bearing_rad) * east + std::cos(bearing_rad) * north;
}

GeodeticPoint great_circle_move(const GeodeticPoint& start, double bearing_rad, double arc_m,
                                double earth_radius_m) {
    const double lat1 = start.latitude_deg * kDegToRad;
    const double lon1 = start.longitude_deg * kDegToRad;
    const double delta = arc_m / earth_radius_m;
    const double lat2 = std::asin(std::sin(lat1) * std::cos(delta) +
                                  std::cos(lat1) * std::sin(delta) * std::cos(bearing_rad));
    const double lon2 = lon1 + std::atan2(std::sin(bearing_rad) * std::sin(delta) * std::cos(lat1),
                                          std::cos(delta) - std::sin(lat1) * std::sin(lat2));
    GeodeticPoint out;
    out.latitude_deg = lat2 * kRadToDeg;
    double lon_deg = lon2 * kRadToDeg;
    lon_deg = std::fmod(lon_deg + 540.0, 360.0) - 180.0;
    out.longitude_deg = lon_deg;
    out.altitude_m = 0.0;
    return out;
}

double elevation_angle(const EcefVector& receiver, const EcefVector& sat) {
    const EcefVector los = (sat - receiver).normalized();
    const double s = local_up(receiver).dot(los);
    return std::asin(std::max(-1.0, std::min(1.0, s)));
}

}  // namespace psrdet
