#include "psrdet/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "psrdet/bytes.hpp"

namespace psrdet {

namespace {

struct Field {
    const char* name;
    enum Kind { Double, Int, String } kind;
    std::function<void*(SimConfig&)> ptr;
    bool generator;  // participates in the generator hash
};

const std::vector<Field>& fields() {
    auto d = [](double SimConfig::* m) {
        return [m](SimConfig& c) -> void* { return &(c.*m); };
    };
    auto i = [](int SimConfig::* m) {
        return [m](SimConfig& c) -> void* { return &(c.*m); };
    };
    auto s = [](std::string SimConfig::* m) {
        return [m](SimConfig& c) -> void* { return &(c.*m); };
    };
    static const std::vector<Field> table = {
        {"earth_radius_m", Field::Double, d(&SimConfig::earth_radius_m), true},
        {"satellite_count", Field::Int, i(&SimConfig::satellite_count), true},
        {"orbit_radius_m", Field::Double, d(&SimConfig::orbit_radius_m), true},
        {"inclination_deg", Field::Double, d(&SimConfig::inclination_deg), true},
        {"plane_count", Field::Int, i(&SimConfig::plane_count), true},
        {"elevation_mask_deg", Field::Double, d(&SimConfig::elevation_mask_deg), true},
        {"epoch_interval_s", Field::Double, d(&SimConfig::epoch_interval_s), true},
        {"duration_s", Field::Double, d(&SimConfig::duration_s), true},
        {"glide_slope_deg", Field::Double, d(&SimConfig::glide_slope_deg), true},
        {"ground_speed_mps", Field::Double, d(&SimConfig::ground_speed_mps), true},
        {"cruise_altitude_m", Field::Double, d(&SimConfig::cruise_altitude_m), true},
        {"white_sigma_zenith_m", Field::Double, d(&SimConfig::white_sigma_zenith_m), true},
        {"correlated_sigma_zenith_m", Field::Double, d(&SimConfig::correlated_sigma_zenith_m), true},
        {"correlation_time_s", Field::Double, d(&SimConfig::correlation_time_s), true},
        {"min_elevation_deg", Field::Double, d(&SimConfig::min_elevation_deg), true},
        {"clock_bias_init_range_m", Field::Double, d(&SimConfig::clock_bias_init_range_m), true},
        {"clock_drift_noise", Field::Double, d(&SimConfig::clock_drift_noise), true},
        {"dropout_prob", Field::Double, d(&SimConfig::dropout_prob), true},
        {"dropout_mean_burst_epochs", Field::Double, d(&SimConfig::dropout_mean_burst_epochs), true},
        {"attack_duration_min_s", Field::Double, d(&SimConfig::attack_duration_min_s), true},
        {"attack_duration_max_s", Field::Double, d(&SimConfig::attack_duration_max_s), true},
        {"attack_shift_min_m", Field::Double, d(&SimConfig::attack_shift_min_m), true},
        {"attack_shift_max_m", Field::Double, d(&SimConfig::attack_shift_max_m), true},
        {"attack_rotation_max_deg", Field::Double, d(&SimConfig::attack_rotation_max_deg), true},
        {"spoofer_position_error_sigma_m", Field::Double, d(&SimConfig::spoofer_position_error_sigma_m), true},
        {"spoofer_time_error_sigma_m", Field::Double, d(&SimConfig::spoofer_time_error_sigma_m), true},
        {"spoofer_noise_tracking_gain", Field::Double, d(&SimConfig::spoofer_noise_tracking_gain), true},
        {"spoofer_error_tau_s", Field::Double, d(&SimConfig::spoofer_error_tau_s), true},
        {"quantizer_levels", Field::Int, i(&SimConfig::quantizer_levels), false},
        {"feature_mode", Field::String, s(&SimConfig::feature_mode), false},
        {"model_d_model", Field::Int, i(&SimConfig::model_d_model), false},
        {"model_ffn_hidden", Field::Int, i(&SimConfig::model_ffn_hidden), false},
        {"model_heads", Field::Int, i(&SimConfig::model_heads), false},
        {"model_blocks", Field::Int, i(&SimConfig::model_blocks), false},
        {"model_l_max", Field::Int, i(&SimConfig::model_l_max), false},
        {"model_max_epochs", Field::Int, i(&SimConfig::model_max_epochs), false},
        {"model_variant", Field::String, s(&SimConfig::model_variant), false},
        {"mask_mode", Field::String, s(&SimConfig::mask_mode), false},
        {"learning_rate", Field::Double, d(&SimConfig::learning_rate), false},
        {"pair_batch_size", Field::Int, i(&SimConfig::pair_batch_size), false},
        {"max_steps", Field::Int, i(&SimConfig::max_steps), false},
        {"grad_clip_norm", Field::Double, d(&SimConfig::grad_clip_norm), false},
        {"checkpoint_interval", Field::Int, i(&SimConfig::checkpoint_interval), false},
        {"eval_threshold", Field::Double, d(&SimConfig::eval_threshold), false},
    };
    return table;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

void SimConfig::apply_override(const std::string& key, const std::string& value) {
    for (const auto& f : fields()) {
        if (key != f.name) continue;
        void* p = f.ptr(*this);
        try {
            switch (f.kind) {
                case Field::Double:
                    *static_cast<double*>(p) = std::stod(value);
                    break;
                case Field::Int:
                    *static_cast<int*>(p) = std::stoi(value);
                    break;
                case Field::String:
                    *static_cast<std::string*>(p) = value;
                    break;
            }
        } catch (const std::exception&) {
            throw UsageError("bad value for config key '" + key + "': " + value);
        }
        return;
    }
    throw UsageError("unknown config key: " + key);
}

SimConfig SimConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("config file does not exist: " + path);
    SimConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
        cfg.apply_override(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    cfg.validate();
    return cfg;
}

void SimConfig::validate() const {
    constellation().validate(earth_radius_m);
    trajectory_params().validate();
    signal_params().noise.validate();
    signal_params().dropout.validate();
    attack_ranges().validate();
    estimation_params().validate();
    model_config().validate();
    if (feature_mode != "quantized" && feature_mode != "raw")
        throw UsageError("feature_mode must be quantized or raw");
    if (!(eval_threshold >= 0.0 && eval_threshold <= 1.0))
        throw UsageError("eval_threshold must be in [0, 1]");
    if (!(duration_s >= 100.0)) throw UsageError("duration_s must be >= 100");
    const int epochs = static_cast<int>(std::llround(duration_s / epoch_interval_s));
    if (epochs > model_max_epochs)
        throw UsageError("duration_s / epoch_interval_s exceeds model_max_epochs");
}

std::string SimConfig::canonical() const {
    std::ostringstream out;
    char buf[64];
    auto& self = const_cast<SimConfig&>(*this);
    for (const auto& f : fields()) {
        out << f.name << " = ";
        void* p = f.ptr(self);
        switch (f.kind) {
            case Field::Double:
                std::snprintf(buf, sizeof buf, "%.17g", *static_cast<double*>(p));
                out << buf;
                break;
            case Field::Int:
                out << *static_cast<int*>(p);
                break;
            case Field::String:
                out << *static_cast<std::string*>(p);
                break;
        }
        out << '\n';
    }
    return out.str();
}

std::uint64_t SimConfig::generator_hash() const {
    std::ostringstream out;
    char buf[64];
    auto& self = const_cast<SimConfig&>(*this);
    for (const auto& f : fields()) {
        if (!f.generator) continue;
        out << f.name << " = ";
        void* p = f.ptr(self);
        switch (f.kind) {
            case Field::Double:
                std::snprintf(buf, sizeof buf, "%.17g", *static_cast<double*>(p));
                out << buf;
                break;
            case Field::Int:
                out << *static_cast<int*>(p);
                break;
            case Field::String:
                out << *static_cast<std::string*>(p);
                break;
        }
        out << '\n';
    }
    const std::string text = out.str();
    return fnv1a64(text.data(), text.size());
}

ConstellationConfig SimConfig::constellation() const {
    ConstellationConfig c;
    c.satellite_count = satellite_count;
    c.orbit_radius_m = orbit_radius_m;
    c.inclination_deg = inclination_deg;
    c.plane_count = plane_count;
    c.elevation_mask_deg = elevation_mask_deg;
    return c;
}

TrajectoryParams SimConfig::trajectory_params() const {
    TrajectoryParams t;
    t.earth_radius_m = earth_radius_m;
    t.ground_speed_mps = ground_speed_mps;
    t.glide_slope_deg = glide_slope_deg;
    t.cruise_altitude_m = cruise_altitude_m;
    return t;
}

SignalModelParams SimConfig::signal_params() const {
    SignalModelParams p;
    p.noise.white_sigma_zenith_m = white_sigma_zenith_m;
    p.noise.correlated_sigma_zenith_m = correlated_sigma_zenith_m;
    p.noise.correlation_time_s = correlation_time_s;
    p.noise.min_elevation_rad = min_elevation_deg * kDegToRad;
    p.clock.init_bias_range_m = clock_bias_init_range_m;
    p.clock.drift_noise = clock_drift_noise;
    p.dropout.probability = dropout_prob;
    p.dropout.mean_burst_epochs = dropout_mean_burst_epochs;
    return p;
}

AttackRanges SimConfig::attack_ranges() const {
    AttackRanges r;
    r.duration_min_s = attack_duration_min_s;
    r.duration_max_s = attack_duration_max_s;
    r.shift_min_m = attack_shift_min_m;
    r.shift_max_m = attack_shift_max_m;
    r.rotation_max_deg = attack_rotation_max_deg;
    return r;
}

EstimationErrorParams SimConfig::estimation_params() const {
    EstimationErrorParams e;
    e.position_error_sigma_m = spoofer_position_error_sigma_m;
    e.time_error_sigma_m = spoofer_time_error_sigma_m;
    e.noise_tracking_gain = spoofer_noise_tracking_gain;
    e.error_tau_s = spoofer_error_tau_s;
    return e;
}

int SimConfig::feature_channels() const {
    return feature_mode == "raw" ? 2 : quantizer_levels + 1;
}

ModelConfig SimConfig::model_config() const {
    ModelConfig m;
    m.d_model = model_d_model;
    m.ffn_hidden = model_ffn_hidden;
    m.heads = model_heads;
    m.blocks = model_blocks;
    m.l_max = model_l_max;
    m.max_epochs = model_max_epochs;
    m.feature_channels = feature_channels();
    apply_variant(m, model_variant);
    if (mask_mode == "input_indicator")
        m.mask_mode = nn::AttentionMaskMode::InputIndicator;
    else if (mask_mode == "attention_mask")
        m.mask_mode = nn::AttentionMaskMode::AttentionMask;
    else
        throw UsageError("mask_mode must be input_indicator or attention_mask");
    return m;
}

TrainConfig SimConfig::train_config(std::uint64_t seed, int threads) const {
    TrainConfig t;
    t.pair_batch_size = pair_batch_size;
    t.learning_rate = learning_rate;
    t.max_steps = max_steps;
    t.seed = seed;
    t.grad_clip_norm = grad_clip_norm;
    t.checkpoint_interval = checkpoint_interval;
    t.threads = threads;
    return t;
}

}  // namespace psrdet
