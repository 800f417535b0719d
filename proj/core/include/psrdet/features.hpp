#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "psrdet/signal_model.hpp"

namespace psrdet {

// Learnable quantization of compressed second differences: probabilities over
// N levels q_i with per-level sharpness lambda_i (negative values concentrate
// mass on the nearest level).
struct QuantizerParams {
    std::vector<double> levels;     // q_i
    std::vector<double> sharpness;  // lambda_i

    int n() const { return static_cast<int>(levels.size()); }
    void validate() const;
};

// Linear decode from the probability vector back to the compressed value.
struct ReconstructionHead {
    std::vector<double> weights;
    double bias = 0.0;
};

struct PretrainedQuantizer {
    QuantizerParams params;
    ReconstructionHead head;
    double train_rmse = 0.0;
    std::uint64_t config_hash = 0;

    double reconstruct(double y) const;
};

// d2[k] = x[k] - 2 x[k-1] + x[k-2], defined only where all three samples are
// present. Gaps never bridge: after a dropout two fresh present epochs must
// accumulate before the difference is defined again.
struct SecondDifference {
    std::vector<double> value;
    std::vector<std::uint8_t> defined;
};
SecondDifference second_difference(std::span<const double> series, std::span<const std::uint8_t> present);

// Signed logarithmic range compression: sign(x) * ln(1 + |x|).
double compress(double x);

// Probability vector softmax([lambda_i * |y - q_i|]); entries positive, sum 1.
void quantize(double y, const QuantizerParams& p, std::span<double> out);
std::vector<double> quantize(double y, const QuantizerParams& p);

struct QuantizerTrainOptions {
    int steps = 4000;
    int batch_size = 256;
    double learning_rate = 0.01;
    double init_sharpness = -4.0;
};

// Jointly fits levels, sharpness and the linear reconstruction head by
// minimizing mean squared reconstruction error with Adam. Deterministic per
// seed. Requires at least 10^4 samples.
PretrainedQuantizer pretrain_quantizer(std::span<const double> samples, int levels, std::uint64_t seed,
                                       const QuantizerTrainOptions& opts = {});

// Per-epoch, per-channel model inputs: a probability block of n() entries
// followed by a presence indicator (1 exactly where the second difference is
// defined). Satellites are assigned to the fixed-width channel slots in order
// of first presence in the sequence.
struct FeatureTensor {
    int epochs = 0;
    int slots = 0;             // fixed satellite channel count (L_max)
    int channels = 0;          // per-slot channels = quantizer N + 1
    std::vector<double> data;  // epochs x slots x channels
    std::vector<int> slot_to_satellite;  // -1 for unassigned slots
    std::vector<int> valid_from;         // first defined epoch per slot, -1 if none

    double* block(int k, int s) {
        return data.data() + (static_cast<std::size_t>(k) * slots + s) * channels;
    }
    const double* block(int k, int s) const {
        return data.data() + (static_cast<std::size_t>(k) * slots + s) * channels;
    }
    bool present(int k, int s) const { return block(k, s)[channels - 1] != 0.0; }
    int present_count(int k) const;
};

FeatureTensor build_features(const PsrSequence& seq, const QuantizerParams& p, int max_slots = 16);

// Ablation path: a single raw compressed-value channel instead of the
// quantized probability block.
FeatureTensor build_features_raw(const PsrSequence& seq, int max_slots = 16);

// Versioned little-endian quantizer file: magic "QNTZ", u32 version, u32 N,
// q[N], lambda[N], then the reconstruction head (w[N], bias) and the config
// hash of the generator that produced the training corpus.
void save_quantizer(const PretrainedQuantizer& q, const std::string& path);
PretrainedQuantizer load_quantizer(const std::string& path);

}  // namespace psrdet
