#include "psrdet/signal_model.hpp"

#include <cmath>

namespace psrdet {

void NoiseParams::validate() const {
    if (!(white_sigma_zenith_m >= 0.0) || !(correlated_sigma_zenith_m >= 0.0))
        throw UsageError("noise sigmas must be non-negative");
    if (!(correlation_time_s > 0.0)) throw UsageError("correlation_time_s must be positive");
    if (!(min_elevation_rad > 0.0)) throw UsageError("min_elevation_rad must be positive");
}

void DropoutParams::validate() const {
    if (!(probability >= 0.0 && probability < 1.0)) throw UsageError("dropout probability out of [0, 1)");
    if (!(mean_burst_epochs >= 1.0)) throw UsageError("dropout mean burst must be >= 1 epoch");
}

namespace {
double elevation_scale(double elevation_rad, const NoiseParams& p) {
    return 1.0 / std::sin(std::max(elevation_rad, p.min_elevation_rad));
}
}  // namespace

double white_sigma(double elevation_rad, const NoiseParams& p) {
    return p.white_sigma_zenith_m * elevation_scale(elevation_rad, p);
}

double correlated_sigma(double elevation_rad, const NoiseParams& p) {
    return p.correlated_sigma_zenith_m * elevation_scale(elevation_rad, p);
}

double gm_phi(double dt_s, double tau_s) { return std::exp(-dt_s / tau_s); }

double correlated_step_scalar(double xi, double dt_s, double elevation_rad, const NoiseParams& p,
                              RngStream& rng) {
    const double phi = gm_phi(dt_s, p.correlation_time_s);
    const double sigma = correlated_sigma(elevation_rad, p);
    const double w_sigma = sigma * std::sqrt(std::max(0.0, 1.0 - phi * phi));
    return phi * xi + rng.normal(w_sigma);
}

CorrelatedNoiseState correlated_step(const CorrelatedNoiseState& state, double dt_s,
                                     const std::vector<double>& elevations_rad, const NoiseParams& p,
                                     RngStream& rng) {
    CorrelatedNoiseState out;
    out.xi_m.resize(state.xi_m.size());
    for (std::size_t l = 0; l < state.xi_m.size(); ++l)
        out.xi_m[l] = correlated_step_scalar(state.xi_m[l], dt_s, elevations_rad[l], p, rng);
    return out;
}

ClockState clock_step(const ClockState& state, double dt_s, RngStream& rng) {
    ClockState out = state;
    out.bias_m = state.bias_m + state.drift_mps * dt_s;
    out.drift_mps = state.drift_mps + rng.normal(state.drift_noise_sigma * std::sqrt(dt_s));
    return out;
}

NominalRealization generate_nominal_full(const Trajectory& traj, const std::vector<OrbitalElements>& els,
                                         const ConstellationConfig& cfg, const SignalModelParams& params,
                                         std::uint64_t seed) {
    params.noise.validate();
    params.dropout.validate();
    const int K = traj.epochs();
    const int L = static_cast<int>(els.size());
    const double dt = traj.epoch_interval_s;

    NominalRealization out;
    out.noise = params.noise;
    out.vis = compute_visibility(traj, els, cfg);
    for (int k = 0; k < K; ++k) {
        if (out.vis.visible_count(k) < 4)
            throw DegenerateScenario("fewer than 4 satellites visible at epoch " + std::to_string(k));
    }

    out.sat_positions.resize(static_cast<std::size_t>(K) * L);
    for (int k = 0; k < K; ++k) {
        const auto sats = satellite_positions(els, k * dt);
        for (int l = 0; l < L; ++l) out.sat_positions[static_cast<std::size_t>(k) * L + l] = sats[l];
    }

    // Receiver clock: common-mode bias across satellites.
    RngStream clock_rng(seed, stream::kClock);
    ClockState clock;
    clock.bias_m = clock_rng.uniform(-params.clock.init_bias_range_m, params.clock.init_bias_range_m);
    clock.drift_mps = 0.0;
    clock.drift_noise_sigma = params.clock.drift_noise;
    out.clock_bias_m.resize(K);
    for (int k = 0; k < K; ++k) {
        out.clock_bias_m[k] = clock.bias_m;
        clock = clock_step(clock, dt, clock_rng);
    }

    // Per-satellite noise streams; they advance every epoch so realizations do
    // not depend on the dropout pattern.
    out.xi_m.setZero(K, L);
    out.white_m.setZero(K, L);
    for (int l = 0; l < L; ++l) {
        RngStream rng(seed, stream::kSatNoise, static_cast<std::uint64_t>(l));
        double xi = rng.normal(correlated_sigma(out.vis.elevation(0, l), params.noise));
        for (int k = 0; k < K; ++k) {
            if (k > 0) xi = correlated_step_scalar(xi, dt, out.vis.elevation(k, l), params.noise, rng);
            out.xi_m(k, l) = xi;
            out.white_m(k, l) = rng.normal(white_sigma(out.vis.elevation(k, l), params.noise));
        }
    }

    // Dropout bursts: enter a burst with a rate that yields the requested
    // stationary dropout fraction given the mean burst length.
    const double p_exit = 1.0 / params.dropout.mean_burst_epochs;
    const double p_drop = params.dropout.probability;
    const double p_enter = p_drop > 0.0 ? p_exit * p_drop / (1.0 - p_drop) : 0.0;
    std::vector<std::uint8_t> dropped(static_cast<std::size_t>(K) * L, 0);
    for (int l = 0; l < L; ++l) {
        RngStream rng(seed, stream::kDropout, static_cast<std::uint64_t>(l));
        bool down = rng.uniform() < p_drop;  // stationary initial state
        for (int k = 0; k < K; ++k) {
            dropped[static_cast<std::size_t>(k) * L + l] = down ? 1 : 0;
            const double u = rng.uniform();
            down = down ? (u >= p_exit) : (u < p_enter);
        }
    }

    PsrSequence& seq = out.seq;
    seq.epochs = K;
    seq.satellites = L;
    seq.epoch_interval_s = dt;
    seq.seed = seed;
    seq.psr_m.setZero(K, L);
    seq.present.assign(static_cast<std::size_t>(K) * L, 0);
    seq.labels.assign(K, 0);
    out.range_m.setZero(K, L);
    for (int k = 0; k < K; ++k) {
        for (int l = 0; l < L; ++l) {
            const double range = (out.sat_position(k, l) - traj.positions[k]).norm();
            out.range_m(k, l) = range;
            const bool here = out.vis.is_visible(k, l) && !dropped[static_cast<std::size_t>(k) * L + l];
            if (!here) continue;
            seq.set_present(k, l, true);
            seq.psr_m(k, l) = range + out.clock_bias_m[k] + out.xi_m(k, l) + out.white_m(k, l);
        }
    }
    return out;
}

PsrSequence generate_nominal(const Trajectory& traj, const std::vector<OrbitalElements>& els,
                             const ConstellationConfig& cfg, const SignalModelParams& params,
                             std::uint64_t seed) {
    return generate_nominal_full(traj, els, cfg, params, seed).seq;
}

}  // namespace psrdet
