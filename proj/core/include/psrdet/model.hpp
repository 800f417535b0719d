#pragma once

#include <string>

#include "psrdet/features.hpp"
#include "psrdet/nn.hpp"

namespace psrdet {

enum class FusionKind { Early, Late };

const char* to_string(nn::EncoderKind k);
const char* to_string(FusionKind k);

struct ModelConfig {
    int d_model = 128;
    int ffn_hidden = 1024;
    int heads = 8;
    int blocks = 2;  // encoder module count N, 1..8
    nn::EncoderKind encoder = nn::EncoderKind::Mha;
    FusionKind fusion = FusionKind::Early;
    nn::AttentionMaskMode mask_mode = nn::AttentionMaskMode::InputIndicator;
    int l_max = 16;
    int max_epochs = 600;
    int feature_channels = 65;  // per-satellite block width: quantizer N + presence

    void validate() const;
    int embed_input_dim() const;
    // "lstm-early", "mha-early", "lstm-late", "mha-late"
    std::string variant_name() const;
};

void apply_variant(ModelConfig& cfg, const std::string& variant);

struct DetectionOutput {
    std::vector<double> scores;               // first softmax component per epoch
    std::vector<std::uint8_t> informative;    // 0 where no satellite contributed
};

// A detector: embedding projection, dual positional tables, N encoder blocks,
// and the output head (two logits per epoch; late fusion aggregates
// per-satellite logit pairs with learned weights first).
class DetectorModel {
public:
    ModelConfig config;
    nn::ParamStore params;
    std::uint64_t config_hash = 0;  // generator hash carried into checkpoints

    static DetectorModel create(const ModelConfig& cfg, std::uint64_t seed);

    struct Cache {
        int epochs = 0;
        int sats_used = 0;  // tokens per epoch (1 for early fusion)
        bool degenerate = false;
        nn::Mat x_in;
        nn::Mat embedded;
        std::vector<nn::EncoderBlock::Cache> blocks;
        nn::Mat final_x;
        std::vector<std::uint8_t> token_present;  // late fusion, epochs x sats_used
        nn::Mat y_tokens;  // late: per-token logit pairs
        nn::Mat w_tokens;  // late: per-token aggregation weights
        nn::Mat v;         // late: epochs x sats_used softmax weights (0 where absent)
    };

    struct ForwardResult {
        nn::Mat logits;  // epochs x 2
        std::vector<std::uint8_t> informative;
    };

    // Token embeddings after projection and positional tables; rows are
    // epochs (early) or epoch-major (epoch, satellite) tokens (late).
    nn::Mat embed_sequence(const FeatureTensor& f) const;

    ForwardResult forward_train(const FeatureTensor& f, Cache& cache) const;
    void backward(const Cache& cache, const nn::Mat& d_logits, nn::GradBuffer& g) const;
    DetectionOutput forward(const FeatureTensor& f) const;

    // Versioned little-endian checkpoint: magic "PSRD", config block, then
    // named parameter arrays (name, rows, cols, float64 column-major data).
    void save(const std::string& path) const;
    static DetectorModel load(const std::string& path);

private:
    nn::LinearLayer embed_;
    int pe_time_ = -1, pe_sat_ = -1;
    std::vector<nn::EncoderBlock> blocks_;
    nn::LinearLayer head_;    // early
    nn::LinearLayer head_y_;  // late
    nn::LinearLayer head_w_;  // late

    void register_layers();
    void build_input(const FeatureTensor& f, Cache& cache) const;
    int count_used_slots(const FeatureTensor& f) const;
};

inline double score_from_logits(double l0, double l1) { return 1.0 / (1.0 + std::exp(l1 - l0)); }

}  // namespace psrdet
