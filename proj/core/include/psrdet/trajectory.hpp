#pragma once

#include <cstdint>
#include <vector>

#include "psrdet/constellation.hpp"
#include "psrdet/geo.hpp"

namespace psrdet {

struct TrajectoryParams {
    double earth_radius_m = kDefaultEarthRadiusM;
    double ground_speed_mps = 75.0;
    double glide_slope_deg = 3.0;
    double cruise_altitude_m = 900.0;
    double flare_altitude_m = 20.0;
    double rollout_s = 60.0;

    void validate() const;
};

struct Trajectory {
    double epoch_interval_s = 1.0;
    std::vector<EcefVector> positions;  // one per epoch
    std::uint64_t scenario_seed = 0;

    int epochs() const { return static_cast<int>(positions.size()); }
    void validate() const;  // K >= 3, consecutive spacing <= 500 m
};

// Landing approach at a uniformly random location and heading: level flight,
// constant glide-slope descent, exponential flare, then rollout at constant
// ground speed. Touchdown point latitude is sin-uniform (area-uniform on the
// sphere), longitude and heading uniform. Deterministic per seed.
Trajectory sample_landing_trajectory(const TrajectoryParams& params, std::uint64_t seed,
                                     double duration_s, double epoch_interval_s);

// Altitude above the reference sphere at time-to-touchdown tau (seconds,
// positive before touchdown). Exposed for profile tests.
double landing_altitude_profile(const TrajectoryParams& params, double tau_s);

struct VisibilityRecord {
    int epoch = 0;
    int satellite = 0;
    bool visible = false;
    double elevation_rad = 0.0;  // clamped to [0, pi/2]
};

// Dense per-epoch, per-satellite geometry. `elevation_rad` holds the raw
// (possibly negative) elevation used by the noise model.
struct VisibilityTable {
    int epochs = 0;
    int satellites = 0;
    std::vector<double> elevation_rad;   // epochs x satellites, row-major
    std::vector<std::uint8_t> visible;   // epochs x satellites

    double elevation(int k, int l) const { return elevation_rad[static_cast<std::size_t>(k) * satellites + l]; }
    bool is_visible(int k, int l) const { return visible[static_cast<std::size_t>(k) * satellites + l] != 0; }
    int visible_count(int k) const;
};

VisibilityTable compute_visibility(const Trajectory& traj, const std::vector<OrbitalElements>& els,
                                   const ConstellationConfig& cfg);

// Record view of the table, one entry per (epoch, satellite).
std::vector<VisibilityRecord> visibility(const Trajectory& traj, const std::vector<OrbitalElements>& els,
                                         const ConstellationConfig& cfg);

}  // namespace psrdet
