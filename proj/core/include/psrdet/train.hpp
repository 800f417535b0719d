#pragma once

#include <optional>
#include <span>

#include "psrdet/model.hpp"
#include "psrdet/spoofer.hpp"

namespace psrdet {

struct TrainConfig {
    int pair_batch_size = 8;
    double learning_rate = 3e-4;
    int max_steps = 300;
    std::uint64_t seed = 1;
    double grad_clip_norm = 1.0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int checkpoint_interval = 0;  // 0: no intermediate checkpoints
    int threads = 0;

    void validate() const;
};

// Each pair contributes both members to a batch: the spoofed member carries
// its window labels, the clean member is all-negative. Both share the same
// noise realization, which is the point of the paired scheme.
std::vector<const PsrSequence*> make_batch(std::span<const ScenarioPair> pairs);

// Mean two-class cross-entropy over epochs flagged informative.
double cross_entropy(const nn::Mat& logits, std::span<const std::uint8_t> labels,
                     std::span<const std::uint8_t> informative);

// Feature building that honors the model's input mode (quantized probability
// blocks, or the single raw compressed channel when feature_channels == 2).
FeatureTensor build_features_for_model(const PsrSequence& seq, const ModelConfig& cfg,
                                       const QuantizerParams* quantizer);

// Loss (mean CE over this sequence's informative epochs) and, when `grads` is
// non-null, the gradients of that loss. Used directly by the
// finite-difference suites.
double sequence_loss(const DetectorModel& model, const FeatureTensor& features,
                     std::span<const std::uint8_t> labels, nn::GradBuffer* grads);

struct TrainResult {
    std::vector<std::pair<int, double>> loss_curve;  // (step, batch loss)
};

// Adam with global gradient-norm clipping over paired batches. Deterministic
// for a fixed (config, seed) and any thread count: per-sequence gradients are
// reduced in sequence order. Aborts with NumericError on a non-finite loss.
TrainResult train(DetectorModel& model, std::span<const ScenarioPair> pairs,
                  const QuantizerParams* quantizer, const TrainConfig& cfg,
                  const std::string& checkpoint_dir = "");

struct SubsetCounts {
    long long tp = 0, fp = 0, tn = 0, fn = 0;

    long long positives() const { return tp + fn; }
    long long negatives() const { return tn + fp; }
    long long total() const { return tp + fp + tn + fn; }
    double err() const { return total() == 0 ? 0.0 : static_cast<double>(fp + fn) / total(); }
    double fa() const { return negatives() == 0 ? 0.0 : static_cast<double>(fp) / negatives(); }
    double md() const { return positives() == 0 ? 0.0 : static_cast<double>(fn) / positives(); }
    SubsetCounts& operator+=(const SubsetCounts& o);
};

// err/fa/md per attack subset. Sequences without an attack only contribute to
// the total; a subset with no sequences is reported absent.
struct MetricsReport {
    std::optional<SubsetCounts> targeted;
    std::optional<SubsetCounts> regional;
    SubsetCounts total;
    double threshold = 0.5;
};

using TestSet = std::vector<PsrSequence>;

MetricsReport evaluate(const DetectorModel& model, const TestSet& test, const QuantizerParams* quantizer,
                       double threshold = 0.5, int threads = 0);

// Counts from a single score vector; exposed for metric unit tests.
SubsetCounts count_errors(std::span<const double> scores, std::span<const std::uint8_t> labels,
                          double threshold);

struct SweepCell {
    std::string variant;
    int layers = 0;
    MetricsReport metrics;
};

// Trains and evaluates every (variant, N) combination with identical data and
// seeds; rows come out in the given order.
std::vector<SweepCell> layer_sweep(std::span<const ScenarioPair> train_pairs, const TestSet& test,
                                   const QuantizerParams* quantizer, const ModelConfig& base,
                                   const TrainConfig& tcfg, const std::vector<std::string>& variants,
                                   const std::vector<int>& layer_counts);

}  // namespace psrdet
