#pragma once

#include <vector>

#include "psrdet/geo.hpp"

namespace psrdet {

constexpr double kEarthGravitationalParam = 3.986004418e14;  // m^3/s^2
constexpr double kEarthRotationRateRadS = 7.2921150e-5;

struct ConstellationConfig {
    int satellite_count = 31;
    double orbit_radius_m = 26560000.0;
    double inclination_deg = 55.0;
    int plane_count = 6;
    double elevation_mask_deg = 5.0;

    void validate(double earth_radius_m = kDefaultEarthRadiusM) const;
};

// Circular Keplerian orbit, one entry per satellite.
struct OrbitalElements {
    double radius_m = 0.0;
    double inclination_rad = 0.0;
    double raan_rad = 0.0;   // right ascension of the ascending node
    double phase_rad = 0.0;  // argument of latitude at t = 0
};

// Distributes satellites over equally spaced planes. When the count does not
// divide evenly the leading planes carry one extra satellite; in-plane slots
// are equally spaced and staggered between planes. Deterministic in cfg.
std::vector<OrbitalElements> build_constellation(const ConstellationConfig& cfg);

double orbital_period_s(double radius_m);

// ECEF position at epoch time t. Earth rotation can be disabled to obtain
// inertial-frame positions for orbit-geometry checks.
EcefVector satellite_position(const OrbitalElements& el, double t_s, bool earth_rotation = true);
std::vector<EcefVector> satellite_positions(const std::vector<OrbitalElements>& els, double t_s,
                                            bool earth_rotation = true);

}  // namespace psrdet
