#pragma once

#include <cstdint>
#include <string>

#include "psrdet/model.hpp"
#include "psrdet/spoofer.hpp"
#include "psrdet/train.hpp"

namespace psrdet {

// All tunables, parsed from a `key = value` text file with '#' comments.
// Unknown keys are hard errors. Command-line overrides win over file values.
struct SimConfig {
    // Scenario geometry
    double earth_radius_m = 6371000.0;
    int satellite_count = 31;
    double orbit_radius_m = 26560000.0;
    double inclination_deg = 55.0;
    int plane_count = 6;
    double elevation_mask_deg = 5.0;
    double epoch_interval_s = 1.0;
    double duration_s = 568.0;
    double glide_slope_deg = 3.0;
    double ground_speed_mps = 75.0;
    double cruise_altitude_m = 900.0;

    // Measurement noise and clock
    double white_sigma_zenith_m = 0.5;
    double correlated_sigma_zenith_m = 1.5;
    double correlation_time_s = 120.0;
    double min_elevation_deg = 5.0;
    double clock_bias_init_range_m = 1.0e4;
    double clock_drift_noise = 0.02;
    double dropout_prob = 0.01;
    double dropout_mean_burst_epochs = 5.0;

    // Attacks
    double attack_duration_min_s = 100.0;
    double attack_duration_max_s = 568.0;
    double attack_shift_min_m = 300.0;
    double attack_shift_max_m = 1000.0;
    double attack_rotation_max_deg = 20.0;
    double spoofer_position_error_sigma_m = 15.0;
    double spoofer_time_error_sigma_m = 3.0;
    double spoofer_noise_tracking_gain = 0.7;
    double spoofer_error_tau_s = 30.0;

    // Features
    int quantizer_levels = 64;
    std::string feature_mode = "quantized";  // quantized | raw (ablation)

    // Model
    int model_d_model = 128;
    int model_ffn_hidden = 1024;
    int model_heads = 8;
    int model_blocks = 2;
    int model_l_max = 16;
    int model_max_epochs = 600;
    std::string model_variant = "mha-early";
    std::string mask_mode = "input_indicator";  // input_indicator | attention_mask

    // Training / evaluation
    double learning_rate = 3e-4;
    int pair_batch_size = 8;
    int max_steps = 300;
    double grad_clip_norm = 1.0;
    int checkpoint_interval = 0;
    double eval_threshold = 0.5;

    static SimConfig from_file(const std::string& path);
    void apply_override(const std::string& key, const std::string& value);
    void validate() const;

    // Canonical text renderings; the generator hash covers only keys that
    // influence corpus bytes, so training-knob changes don't invalidate data.
    std::string canonical() const;
    std::uint64_t generator_hash() const;

    // Typed views
    ConstellationConfig constellation() const;
    TrajectoryParams trajectory_params() const;
    SignalModelParams signal_params() const;
    AttackRanges attack_ranges() const;
    EstimationErrorParams estimation_params() const;
    ModelConfig model_config() const;
    TrainConfig train_config(std::uint64_t seed, int threads) const;
    int feature_channels() const;
};

}  // namespace psrdet
