#pragma once

#include "psrdet/signal_model.hpp"

namespace psrdet {

// Residual errors of the spoofer's victim-state estimates. These are what
// make a well-executed targeted attack statistically visible.
struct EstimationErrorParams {
    double position_error_sigma_m = 15.0;  // per-axis Gauss-Markov
    double time_error_sigma_m = 3.0;       // common-mode, clock-equivalent meters
    double noise_tracking_gain = 0.7;      // fraction of the victim's xi the spoofer replicates
    double error_tau_s = 30.0;

    void validate() const;
};

struct ScenarioPair {
    PsrSequence clean;
    PsrSequence spoofed;
    AttackSpec attack;
};

// Index of the epoch the attack profile peaks at.
inline int trajectory_mid_epoch(int epochs) { return epochs / 2; }

// Smooth raised-cosine offset magnitude: zero at the window edges, shift_m at
// the trajectory midpoint. C1 across the whole sequence.
double targeted_profile(int epoch, const AttackSpec& spec, int mid_epoch, double epoch_interval_s);

// Profile magnitude times the per-attack horizontal unit direction.
EcefVector targeted_offset(int epoch, const AttackSpec& spec, const Trajectory& traj);

// Spoofed receiver positions for the attack window (length = window epochs).
// Targeted: nominal plus the smooth offset. Regional: the nominal segment
// rotated about the trajectory midpoint's local vertical and translated,
// producing step discontinuities at the window boundaries.
std::vector<EcefVector> spoofed_positions(const Trajectory& traj, const AttackSpec& spec);

// Gauss-Markov estimation-error state for a targeted spoofer: a 3-axis
// position error, a common-mode time error, and the correlated-noise tracking
// residual (1 - gain) * xi.
class SpooferEstimationNoise {
public:
    SpooferEstimationNoise(const EstimationErrorParams& params, double epoch_interval_s);

    void init_stationary(RngStream& rng);
    void step(RngStream& rng);

    double psr_perturbation(const EcefVector& los_unit, double victim_xi) const;
    double time_error_m() const { return time_err_m_; }
    const Eigen::Vector3d& position_error_m() const { return pos_err_m_; }

private:
    EstimationErrorParams params_;
    double phi_ = 0.0;
    Eigen::Vector3d pos_err_m_ = Eigen::Vector3d::Zero();
    double time_err_m_ = 0.0;
};

// Samples an admissible attack: duration and shift uniform over the
// configured ranges, rotation uniform (regional), window placed uniformly
// with the trajectory midpoint strictly inside. For targeted attacks the
// duration floor additionally scales with the sampled shift so the raised
// cosine's per-epoch slope stays below ~9.5 m; without that, short windows
//与 large shifts would produce visible steps instead of a smooth drift.
AttackSpec sample_attack_spec(AttackKind kind, const AttackRanges& ranges, const Trajectory& traj,
                              std::uint64_t seed);

// Rewrites the attack window on top of a nominal realization. Outside the
// window the spoofed member is byte-identical to the clean one; presence
// masks are shared. Labels are set exactly on window epochs.
ScenarioPair apply_attack(const NominalRealization& nominal, const Trajectory& traj,
                          const AttackSpec& spec, const EstimationErrorParams& err);

// Convenience overload that rebuilds the realization from clean.seed.
ScenarioPair apply_attack(const PsrSequence& clean, const Trajectory& traj,
                          const std::vector<OrbitalElements>& els, const ConstellationConfig& cfg,
                          const SignalModelParams& params, const AttackSpec& spec,
                          const EstimationErrorParams& err);

}  // namespace psrdet
