#include "psrdet/constellation.hpp"

#include <cmath>

namespace psrdet {

void ConstellationConfig::validate(double earth_radius_m) const {
    if (satellite_count < 4) throw UsageError("satellite_count must be >= 4");
    if (plane_count < 1) throw UsageError("plane_count must be >= 1");
    if (satellite_count < plane_count) throw UsageError("fewer satellites than planes");
    if (!(orbit_radius_m > earth_radius_m)) throw UsageError("orbit_radius_m must exceed the Earth radius");
    if (!(elevation_mask_deg >= 0.0 && elevation_mask_deg < 90.0))
        throw UsageError("elevation_mask_deg must be in [0, 90)");
}

std::vector<OrbitalElements> build_constellation(const ConstellationConfig& cfg) {
    cfg.validate();
    std::vector<OrbitalElements> out;
    out.reserve(cfg.satellite_count);
    const int base = cfg.satellite_count / cfg.plane_count;
    const int extra = cfg.satellite_count % cfg.plane_count;
    const double incl = cfg.inclination_deg * kDegToRad;
    // Stagger between planes spreads arguments of latitude so that the
    // constellation never collapses onto a single great circle in phase.
    const double stagger = 2.0 * kPi / cfg.satellite_count;
    for (int p = 0; p < cfg.plane_count; ++p) {
        const int in_plane = base + (p < extra ? 1 : 0);
        const double raan = 2.0 * kPi * p / cfg.plane_count;
        for (int s = 0; s < in_plane; ++s) {
            OrbitalElements el;
            el.radius_m = cfg.orbit_radius_m;
            el.inclination_rad = incl;
            el.raan_rad = raan;
            el.phase_rad = 2.0 * kPi * s / in_plane + p * stagger;
            out.push_back(el);
        }
    }
    return out;
}

double orbital_period_s(double radius_m) {
    return 2.0 * kPi * std::sqrt(radius_m * radius_m * radius_m / kEarthGravitationalParam);
}

EcefVector satellite_position(const OrbitalElements& el, double t_s, bool earth_rotation) {
    const double n = std::sqrt(kEarthGravitationalParam / (el.radius_m * el.radius_m * el.radius_m));
    const double u = el.phase_rad + n * t_s;
    const double cu = std::cos(u), su = std::sin(u);
    const double ci = std::cos(el.inclination_rad), si = std::sin(el.inclination_rad);
    // Orbit-plane position rotated by inclination about x, then RAAN about z.
    const double x_orb = el.radius_m * cu;
    const double y_orb = el.radius_m * su;
    const double x1 = x_orb;
    const double y1 = y_orb * ci;
    const double z1 = y_orb * si;
    const double co = std::cos(el.raan_rad), so = std::sin(el.raan_rad);
    EcefVector eci{co * x1 - so * y1, so * x1 + co * y1, z1};
    if (!earth_rotation) return eci;
    const double theta = kEarthRotationRateRadS * t_s;
    const double ct = std::cos(theta), st = std::sin(theta);
    // Rotate by -theta about z: inertial to Earth-fixed.
    return {ct * eci.x() + st * eci.y(), -st * eci.x() + ct * eci.y(), eci.z()};
}

std::vector<EcefVector> satellite_positions(const std::vector<OrbitalElements>& els, double t_s,
                                            bool earth_rotation) {
    std::vector<EcefVector> out;
    out.reserve(els.size());
    for (const auto& el : els) out.push_back(satellite_position(el, t_s, earth_rotation));
    return out;
}

}  // namespace psrdet
