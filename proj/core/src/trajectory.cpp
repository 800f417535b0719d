#include "psrdet/trajectory.hpp"

#include <cmath>

#include "psrdet/rng.hpp"

namespace psrdet {

void TrajectoryParams::validate() const {
    if (!(ground_speed_mps > 0.0)) throw UsageError("ground_speed_mps must be positive");
    if (!(glide_slope_deg > 0.0 && glide_slope_deg < 45.0)) throw UsageError("glide_slope_deg out of (0, 45)");
    if (!(cruise_altitude_m > flare_altitude_m)) throw UsageError("cruise altitude must exceed flare altitude");
    if (!(flare_altitude_m > 0.0)) throw UsageError("flare_altitude_m must be positive");
}

void Trajectory::validate() const {
    if (epochs() < 3) throw DataError("trajectory needs at least 3 epochs");
    for (std::size_t i = 1; i < positions.size(); ++i) {
        if ((positions[i] - positions[i - 1]).norm() > 500.0)
            throw DataError("implausible trajectory step > 500 m");
    }
}

double landing_altitude_profile(const TrajectoryParams& params, double tau_s) {
    const double sink = params.ground_speed_mps * std::tan(params.glide_slope_deg * kDegToRad);
    // Exponential flare joins the glide at flare altitude with matching sink
    // rate and reaches the ground in finite time via a 1 m offset.
    const double offset = 1.0;
    const double h_f = params.flare_altitude_m;
    const double tau_flare = (h_f + offset) / sink;               // time constant
    const double flare_duration = tau_flare * std::log((h_f + offset) / offset);
    double h;
    if (tau_s <= 0.0) {
        h = 0.0;  // on the runway
    } else if (tau_s <= flare_duration) {
        h = (h_f + offset) * std::exp((tau_s - flare_duration) / tau_flare) - offset;
    } else {
        h = h_f + sink * (tau_s - flare_duration);
    }
    return std::min(h, params.cruise_altitude_m);
}

Trajectory sample_landing_trajectory(const TrajectoryParams& params, std::uint64_t seed,
                                     double duration_s, double epoch_interval_s) {
    params.validate();
    if (!(duration_s >= 100.0)) throw UsageError("duration_s must be >= 100");
    if (!(epoch_interval_s > 0.0)) throw UsageError("epoch_interval_s must be positive");

    RngStream rng(seed, stream::kTrajectory);
    GeodeticPoint touchdown;
    touchdown.latitude_deg = std::asin(rng.uniform(-1.0, 1.0)) * kRadToDeg;
    touchdown.longitude_deg = rng.uniform(-180.0, 180.0);
    touchdown.altitude_m = 0.0;
    const double heading_rad = rng.uniform(0.0, 2.0 * kPi);

    const int epochs = static_cast<int>(std::llround(duration_s / epoch_interval_s));
    const double touchdown_time_s = duration_s - params.rollout_s;

    Trajectory traj;
    traj.epoch_interval_s = epoch_interval_s;
    traj.scenario_seed = seed;
    traj.positions.reserve(epochs);
    for (int k = 0; k < epochs; ++k) {
        const double t = k * epoch_interval_s;
        const double tau = touchdown_time_s - t;
        // Signed along-track arc: behind the touchdown point while approaching,
        // past it during rollout.
        const double arc = params.ground_speed_mps * (t - touchdown_time_s);
        GeodeticPoint ground = great_circle_move(touchdown, heading_rad, arc, params.earth_radius_m);
        ground.altitude_m = landing_altitude_profile(params, tau);
        traj.positions.push_back(geodetic_to_ecef(ground, params.earth_radius_m));
    }
    traj.validate();
    return traj;
}

int VisibilityTable::visible_count(int k) const {
    int n = 0;
    for (int l = 0; l < satellites; ++l) n += is_visible(k, l) ? 1 : 0;
    return n;
}

VisibilityTable compute_visibility(const Trajectory& traj, const std::vector<OrbitalElements>& els,
                                   const ConstellationConfig& cfg) {
    VisibilityTable table;
    table.epochs = traj.epochs();
    table.satellites = static_cast<int>(els.size());
    table.elevation_rad.resize(static_cast<std::size_t>(table.epochs) * table.satellites);
    table.visible.resize(table.elevation_rad.size());
    const double mask = cfg.elevation_mask_deg * kDegToRad;
    for (int k = 0; k < table.epochs; ++k) {
        const double t = k * traj.epoch_interval_s;
        const auto sats = satellite_positions(els, t);
        for (int l = 0; l < table.satellites; ++l) {
            const double el = elevation_angle(traj.positions[k], sats[l]);
            const std::size_t idx = static_cast<std::size_t>(k) * table.satellites + l;
            table.elevation_rad[idx] = el;
            table.visible[idx] = el >= mask ? 1 : 0;
        }
    }
    return table;
}

std::vector<VisibilityRecord> visibility(const Trajectory& traj, const std::vector<OrbitalElements>& els,
                                         const ConstellationConfig& cfg) {
    const VisibilityTable table = compute_visibility(traj, els, cfg);
    std::vector<VisibilityRecord> records;
    records.reserve(table.elevation_rad.size());
    for (int k = 0; k < table.epochs; ++k) {
        for (int l = 0; l < table.satellites; ++l) {
            VisibilityRecord r;
            r.epoch = k;
            r.satellite = l;
            r.visible = table.is_visible(k, l);
            r.elevation_rad = std::max(0.0, std::min(kPi / 2.0, table.elevation(k, l)));
            records.push_back(r);
        }
    }
    return records;
}

}  // namespace psrdet
