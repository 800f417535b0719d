#include <benchmark/benchmark.h>

#include "psrdet/train.hpp"

using namespace psrdet;

namespace {

// Deck-scale shapes: 568 epochs, 16 satellite slots, 65 feature channels.
FeatureTensor synthetic_features(int epochs, int sats, int levels, std::uint64_t seed) {
    RngStream rng(seed);
    FeatureTensor f;
    f.epochs = epochs;
    f.slots = sats;
    f.channels = levels + 1;
    f.data.assign(static_cast<std::size_t>(epochs) * sats * f.channels, 0.0);
    f.slot_to_satellite.assign(sats, 0);
    for (int s = 0; s < sats; ++s) f.slot_to_satellite[s] = s;
    f.valid_from.assign(sats, 0);
    for (int k = 0; k < epochs; ++k)
        for (int s = 0; s < sats; ++s) {
            double* block = f.block(k, s);
            double sum = 0.0;
            for (int c = 0; c < levels; ++c) {
                block[c] = rng.uniform(0.0, 1.0);
                sum += block[c];
            }
            for (int c = 0; c < levels; ++c) block[c] /= sum;
            block[levels] = 1.0;
        }
    return f;
}

ModelConfig desk_config(const std::string& variant, int blocks) {
    ModelConfig cfg;
    cfg.blocks = blocks;
    apply_variant(cfg, variant);
    return cfg;
}

void ForwardPass(benchmark::State& state, const std::string& variant) {
    const ModelConfig cfg = desk_config(variant, 2);
    const DetectorModel model = DetectorModel::create(cfg, 1);
    const FeatureTensor f = synthetic_features(568, 16, 64, 2);
    for (auto _ : state) {
        const DetectionOutput out = model.forward(f);
        benchmark::DoNotOptimize(out.scores[0]);
    }
}
BENCHMARK_CAPTURE(ForwardPass, mha_early, "mha-early")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(ForwardPass, lstm_early, "lstm-early")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(ForwardPass, lstm_late, "lstm-late")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(ForwardPass, mha_late, "mha-late")->Unit(benchmark::kMillisecond);

void TrainStep(benchmark::State& state, const std::string& variant) {
    const ModelConfig cfg = desk_config(variant, 2);
    DetectorModel model = DetectorModel::create(cfg, 1);
    const FeatureTensor f = synthetic_features(568, 16, 64, 2);
    std::vector<std::uint8_t> labels(568, 0);
    for (int k = 200; k < 400; ++k) labels[k] = 1;
    nn::GradBuffer g;
    g.init_like(model.params);
    for (auto _ : state) {
        g.zero();
        benchmark::DoNotOptimize(sequence_loss(model, f, labels, &g));
    }
}
BENCHMARK_CAPTURE(TrainStep, mha_early, "mha-early")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(TrainStep, lstm_late, "lstm-late")->Unit(benchmark::kMillisecond);

}  // namespace
