#include "psrdet/spoofer.hpp"

#include <Eigen/Geometry>
#include <cmath>

namespace psrdet {

namespace {
// Per-epoch slope bound for the targeted profile, meters. Keeps the attack
// smooth at the measurement level for every admissible (shift, duration).
constexpr double kMaxProfileSlopeM = 9.5;

int min_ramp_epochs(double shift_m) {
    return static_cast<int>(std::ceil(shift_m * kPi / (2.0 * kMaxProfileSlopeM)));
}
}  // namespace

const char* to_string(AttackKind kind) {
    return kind == AttackKind::Targeted ? "targeted" : "regional";
}

AttackKind attack_kind_from_string(const std::string& s) {
    if (s == "targeted") return AttackKind::Targeted;
    if (s == "regional") return AttackKind::Regional;
    throw UsageError("unknown attack kind: " + s);
}

void AttackRanges::validate() const {
    if (!(duration_min_s >= 100.0 && duration_min_s <= duration_max_s && duration_max_s <= 568.0))
        throw UsageError("attack duration range must lie within [100, 568] s");
    if (!(shift_min_m >= 300.0 && shift_min_m <= shift_max_m && shift_max_m <= 1000.0))
        throw UsageError("attack shift range must lie within [300, 1000] m");
    if (!(rotation_max_deg >= 0.0 && rotation_max_deg <= 20.0))
        throw UsageError("attack rotation range must lie within [0, 20] deg");
}

void EstimationErrorParams::validate() const {
    if (!(position_error_sigma_m >= 0.0 && time_error_sigma_m >= 0.0))
        throw UsageError("estimation error sigmas must be non-negative");
    if (!(noise_tracking_gain >= 0.0 && noise_tracking_gain <= 1.0))
        throw UsageError("noise_tracking_gain must be in [0, 1]");
    if (!(error_tau_s > 0.0)) throw UsageError("error_tau_s must be positive");
}

int AttackSpec::window_epochs(double epoch_interval_s) const {
    return static_cast<int>(std::llround(duration_s / epoch_interval_s));
}

void AttackSpec::validate(int epochs, double epoch_interval_s) const {
    if (!(duration_s >= 100.0 && duration_s <= 568.0))
        throw UsageError("attack duration_s out of [100, 568]");
    if (!(shift_m >= 300.0 && shift_m <= 1000.0)) throw UsageError("attack shift_m out of [300, 1000]");
    if (!(std::abs(rotation_deg) <= 20.0)) throw UsageError("attack rotation_deg out of [-20, 20]");
    if (kind == AttackKind::Targeted && rotation_deg != 0.0)
        throw UsageError("targeted attacks have zero rotation");
    const int w = window_epochs(epoch_interval_s);
    if (start_epoch < 0 || w < 3 || start_epoch + w > epochs)
        throw UsageError("attack window exceeds sequence bounds");
}

double targeted_profile(int epoch, const AttackSpec& spec, int mid_epoch, double epoch_interval_s) {
    const int start = spec.start_epoch;
    const int end = start + spec.window_epochs(epoch_interval_s) - 1;
    if (epoch <= start || epoch >= end) return 0.0;
    if (mid_epoch <= start || mid_epoch >= end)
        throw UsageError("targeted attack window must contain the trajectory midpoint");
    if (epoch <= mid_epoch) {
        const double u = static_cast<double>(epoch - start) / (mid_epoch - start);
        return spec.shift_m * 0.5 * (1.0 - std::cos(kPi * u));
    }
    const double u = static_cast<double>(epoch - mid_epoch) / (end - mid_epoch);
    return spec.shift_m * 0.5 * (1.0 + std::cos(kPi * u));
}

EcefVector targeted_offset(int epoch, const AttackSpec& spec, const Trajectory& traj) {
    const int mid = trajectory_mid_epoch(traj.epochs());
    const EcefVector dir = bearing_direction(traj.positions[mid], spec.bearing_rad);
    return targeted_profile(epoch, spec, mid, traj.epoch_interval_s) * dir;
}

std::vector<EcefVector> spoofed_positions(const Trajectory& traj, const AttackSpec& spec) {
    spec.validate(traj.epochs(), traj.epoch_interval_s);
    const int w = spec.window_epochs(traj.epoch_interval_s);
    const int mid = trajectory_mid_epoch(traj.epochs());
    std::vector<EcefVector> out;
    out.reserve(w);
    if (spec.kind == AttackKind::Targeted) {
        const EcefVector dir = bearing_direction(traj.positions[mid], spec.bearing_rad);
        for (int k = spec.start_epoch; k < spec.start_epoch + w; ++k)
            out.push_back(traj.positions[k] + targeted_profile(k, spec, mid, traj.epoch_interval_s) * dir);
        return out;
    }
    // Regional: rotate the nominal segment about the trajectory midpoint's
    // local vertical, then translate it horizontally by the shift.
    const EcefVector pivot = traj.positions[mid];
    const EcefVector axis = local_up(pivot);
    const Eigen::AngleAxisd rot(spec.rotation_deg * kDegToRad, axis);
    const EcefVector shift = spec.shift_m * bearing_direction(pivot, spec.bearing_rad);
    for (int k = spec.start_epoch; k < spec.start_epoch + w; ++k)
        out.push_back(rot * (traj.positions[k] - pivot) + pivot + shift);
    return out;
}

SpooferEstimationNoise::SpooferEstimationNoise(const EstimationErrorParams& params, double epoch_interval_s)
    : params_(params), phi_(gm_phi(epoch_interval_s, params.error_tau_s)) {
    params_.validate();
}

void SpooferEstimationNoise::init_stationary(RngStream& rng) {
    for (int a = 0; a < 3; ++a) pos_err_m_[a] = rng.normal(params_.position_error_sigma_m);
    time_err_m_ = rng.normal(params_.time_error_sigma_m);
}

void SpooferEstimationNoise::step(RngStream& rng) {
    const double q = std::sqrt(std::max(0.0, 1.0 - phi_ * phi_));
    for (int a = 0; a < 3; ++a)
        pos_err_m_[a] = phi_ * pos_err_m_[a] + rng.normal(params_.position_error_sigma_m * q);
    time_err_m_ = phi_ * time_err_m_ + rng.normal(params_.time_error_sigma_m * q);
}

double SpooferEstimationNoise::psr_perturbation(const EcefVector& los_unit, double victim_xi) const {
    return pos_err_m_.dot(los_unit) + time_err_m_ + (1.0 - params_.noise_tracking_gain) * victim_xi;
}

AttackSpec sample_attack_spec(AttackKind kind, const AttackRanges& ranges, const Trajectory& traj,
                              std::uint64_t seed) {
    ranges.validate();
    const int K = traj.epochs();
    const double dt = traj.epoch_interval_s;
    const int mid = trajectory_mid_epoch(K);
    RngStream rng(seed, stream::kAttack);

    double shift = rng.uniform(ranges.shift_min_m, ranges.shift_max_m);
    const double dur_u = rng.uniform();
    const double rotation = rng.uniform(-ranges.rotation_max_deg, ranges.rotation_max_deg);
    const double bearing = rng.uniform(0.0, 2.0 * kPi);

    const int d_hi = std::min(static_cast<int>(std::llround(ranges.duration_max_s / dt)), K);
    int d_lo = static_cast<int>(std::llround(ranges.duration_min_s / dt));
    int ramp = 0;
    if (kind == AttackKind::Targeted) {
        // Cap the shift if the sequence is too short to fit smooth ramps.
        const int ramp_cap = (d_hi - 1) / 2;
        const double shift_cap = ramp_cap * 2.0 * kMaxProfileSlopeM / kPi;
        if (shift_cap < ranges.shift_min_m)
            throw UsageError("sequence too short for a smooth targeted attack");
        shift = std::min(shift, shift_cap);
        ramp = min_ramp_epochs(shift);
        d_lo = std::max(d_lo, 2 * ramp + 1);
    }
    if (d_lo > d_hi) throw UsageError("attack duration range infeasible for this sequence length");
    const int window = d_lo + static_cast<int>(dur_u * (d_hi - d_lo + 1));
    const int w = std::min(window, d_hi);

    const int guard = kind == AttackKind::Targeted ? ramp : 1;
    const int start_lo = std::max(0, mid - w + 1 + guard);
    const int start_hi = std::min(K - w, mid - guard);
    if (start_lo > start_hi) throw UsageError("cannot place attack window around the trajectory midpoint");
    const int start = static_cast<int>(rng.uniform_int(start_lo, start_hi));

    AttackSpec spec;
    spec.kind = kind;
    spec.start_epoch = start;
    spec.duration_s = w * dt;
    spec.shift_m = shift;
    spec.rotation_deg = kind == AttackKind::Regional ? rotation : 0.0;
    spec.bearing_rad = bearing;

    const GeodeticPoint mid_ground = ecef_to_geodetic(traj.positions[mid]);
    GeodeticPoint site_ground = mid_ground;
    site_ground.altitude_m = 0.0;
    const double site_dist = rng.uniform(2000.0, 20000.0);
    const double site_bearing = rng.uniform(0.0, 2.0 * kPi);
    spec.spoofer_position = geodetic_to_ecef(great_circle_move(site_ground, site_bearing, site_dist));

    spec.validate(K, dt);
    return spec;
}

ScenarioPair apply_attack(const NominalRealization& nominal, const Trajectory& traj,
                          const AttackSpec& spec, const EstimationErrorParams& err) {
    const PsrSequence& clean = nominal.seq;
    spec.validate(clean.epochs, traj.epoch_interval_s);
    err.validate();

    ScenarioPair pair;
    pair.attack = spec;
    pair.clean = clean;
    pair.spoofed = clean;
    pair.spoofed.attack = spec;

    const int w = spec.window_epochs(traj.epoch_interval_s);
    const int start = spec.start_epoch;
    const std::vector<EcefVector> spoofed_pos = spoofed_positions(traj, spec);
    const int L = clean.satellites;

    for (int k = start; k < start + w; ++k) pair.spoofed.labels[k] = 1;

    if (spec.kind == AttackKind::Targeted) {
        SpooferEstimationNoise noise(err, traj.epoch_interval_s);
        RngStream rng(clean.seed, stream::kSpoofer);
        noise.init_stationary(rng);
        for (int k = start; k < start + w; ++k) {
            if (k > start) noise.step(rng);
            const EcefVector& p_spoof = spoofed_pos[k - start];
            for (int l = 0; l < L; ++l) {
                if (!clean.is_present(k, l)) continue;
                const EcefVector& sat = nominal.sat_position(k, l);
                const EcefVector los = (sat - traj.positions[k]).normalized();
                const double range = (sat - p_spoof).norm();
                // The victim's receiver white noise rides on whatever signal
                // the tracking loops lock to, so its realization is shared.
                pair.spoofed.psr_m(k, l) = range + nominal.clock_bias_m[k] +
                                           noise.psr_perturbation(los, nominal.xi_m(k, l)) +
                                           nominal.white_m(k, l);
            }
        }
        return pair;
    }

    // Regional: one broadcast signal set. The synthesized measurements carry
    // fresh correlated + white noise with the nominal variance laws plus the
    // spoofer's GNSS-time estimate error; none of the victim's in-window
    // noise realizations are replicated.
    const NoiseParams& noise_params = nominal.noise;
    const double dt = traj.epoch_interval_s;
    SpooferEstimationNoise time_noise(err, dt);
    RngStream time_rng(clean.seed, stream::kSpoofer);
    time_noise.init_stationary(time_rng);

    std::vector<RngStream> sat_rng;
    sat_rng.reserve(L);
    std::vector<double> xi(L);
    std::vector<double> white(L);
    for (int l = 0; l < L; ++l) {
        sat_rng.emplace_back(clean.seed, stream::kRegionalNoise, static_cast<std::uint64_t>(l));
        xi[l] = sat_rng[l].normal(correlated_sigma(nominal.vis.elevation(start, l), noise_params));
        white[l] = sat_rng[l].normal(white_sigma(nominal.vis.elevation(start, l), noise_params));
    }
    for (int k = start; k < start + w; ++k) {
        if (k > start) {
            time_noise.step(time_rng);
            for (int l = 0; l < L; ++l) {
                xi[l] = correlated_step_scalar(xi[l], dt, nominal.vis.elevation(k, l), noise_params,
                                               sat_rng[l]);
                white[l] = sat_rng[l].normal(white_sigma(nominal.vis.elevation(k, l), noise_params));
            }
        }
        const EcefVector& p_spoof = spoofed_pos[k - start];
        for (int l = 0; l < L; ++l) {
            if (!clean.is_present(k, l)) continue;
            const double range = (nominal.sat_position(k, l) - p_spoof).norm();
            pair.spoofed.psr_m(k, l) = range + nominal.clock_bias_m[k] + time_noise.time_error_m() +
                                       xi[l] + white[l];
        }
    }
    return pair;
}

ScenarioPair apply_attack(const PsrSequence& clean, const Trajectory& traj,
                          const std::vector<OrbitalElements>& els, const ConstellationConfig& cfg,
                          const SignalModelParams& params, const AttackSpec& spec,
                          const EstimationErrorParams& err) {
    NominalRealization nominal = generate_nominal_full(traj, els, cfg, params, clean.seed);
    if (nominal.seq.psr_m != clean.psr_m)
        throw DataError("clean sequence does not match its seed's nominal realization");
    return apply_attack(nominal, traj, spec, err);
}

}  // namespace psrdet
