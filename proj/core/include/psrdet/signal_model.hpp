#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "psrdet/attack_spec.hpp"
#include "psrdet/rng.hpp"
#include "psrdet/trajectory.hpp"

namespace psrdet {

// Elevation-dependent noise magnitudes. Both the white and the
// time-correlated component scale as 1/sin(elevation), clamped at
// min_elevation_rad.
struct NoiseParams {
    double white_sigma_zenith_m = 0.5;
    double correlated_sigma_zenith_m = 1.5;
    double correlation_time_s = 120.0;
    double min_elevation_rad = 5.0 * kDegToRad;

    void validate() const;
};

struct ClockModelParams {
    double init_bias_range_m = 1.0e4;      // initial bias uniform in +-range
    double drift_noise = 0.02;             // m/s per sqrt(s) random walk on drift
};

// Signal outages beyond geometric visibility: a two-state Markov chain per
// satellite produces contiguous dropout bursts.
struct DropoutParams {
    double probability = 0.01;             // stationary fraction of dropped epochs
    double mean_burst_epochs = 5.0;

    void validate() const;
};

struct SignalModelParams {
    NoiseParams noise;
    ClockModelParams clock;
    DropoutParams dropout;
};

struct ClockState {
    double bias_m = 0.0;
    double drift_mps = 0.0;
    double drift_noise_sigma = 0.02;
};

struct CorrelatedNoiseState {
    std::vector<double> xi_m;  // one value per satellite
};

double white_sigma(double elevation_rad, const NoiseParams& p);
double correlated_sigma(double elevation_rad, const NoiseParams& p);

// First-order Gauss-Markov correlation coefficient exp(-dt/tau).
double gm_phi(double dt_s, double tau_s);

// One Gauss-Markov step for a single satellite channel: xi' = phi*xi + w with
// Var(w) = sigma_xi(el)^2 * (1 - phi^2), so the stationary variance tracks the
// elevation law.
double correlated_step_scalar(double xi, double dt_s, double elevation_rad, const NoiseParams& p,
                              RngStream& rng);
CorrelatedNoiseState correlated_step(const CorrelatedNoiseState& state, double dt_s,
                                     const std::vector<double>& elevations_rad, const NoiseParams& p,
                                     RngStream& rng);

// Two-state receiver clock: the drift random-walks, the bias integrates the
// pre-step drift.
ClockState clock_step(const ClockState& state, double dt_s, RngStream& rng);

struct PsrSequence {
    int epochs = 0;
    int satellites = 0;
    double epoch_interval_s = 1.0;
    Eigen::MatrixXd psr_m;               // epochs x satellites; 0 where absent
    std::vector<std::uint8_t> present;   // epochs x satellites, row-major
    std::vector<std::uint8_t> labels;    // per-epoch spoofed flag
    std::uint64_t seed = 0;
    std::optional<AttackSpec> attack;

    bool is_present(int k, int l) const { return present[static_cast<std::size_t>(k) * satellites + l] != 0; }
    void set_present(int k, int l, bool v) { present[static_cast<std::size_t>(k) * satellites + l] = v ? 1 : 0; }
    bool label(int k) const { return labels[k] != 0; }
};

// Everything generate_nominal computed along the way. The spoofer rebuilds
// in-window measurements from these realizations so clean/spoofed pairs share
// clock, noise, and presence exactly.
struct NominalRealization {
    PsrSequence seq;
    NoiseParams noise;                       // variance laws used to generate it
    std::vector<double> clock_bias_m;        // per epoch
    Eigen::MatrixXd xi_m;                    // epochs x satellites
    Eigen::MatrixXd white_m;                 // epochs x satellites (scaled draws)
    Eigen::MatrixXd range_m;                 // epochs x satellites
    VisibilityTable vis;
    std::vector<EcefVector> sat_positions;   // epochs x satellites, row-major
    const EcefVector& sat_position(int k, int l) const {
        return sat_positions[static_cast<std::size_t>(k) * seq.satellites + l];
    }
};

// Nominal PSR per epoch and visible satellite: geometric range + clock bias +
// correlated + white noise. Noise streams are independent across satellites
// and advance every epoch regardless of presence. Throws DegenerateScenario
// when fewer than 4 satellites are visible at any epoch.
NominalRealization generate_nominal_full(const Trajectory& traj, const std::vector<OrbitalElements>& els,
                                         const ConstellationConfig& cfg, const SignalModelParams& params,
                                         std::uint64_t seed);
PsrSequence generate_nominal(const Trajectory& traj, const std::vector<OrbitalElements>& els,
                             const ConstellationConfig& cfg, const SignalModelParams& params,
                             std::uint64_t seed);

}  // namespace psrdet
