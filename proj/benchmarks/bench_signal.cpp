#include <benchmark/benchmark.h>

#include "psrdet/config.hpp"
#include "psrdet/dataset.hpp"

using namespace psrdet;

namespace {

const SimConfig& cfg() {
    static SimConfig c;
    return c;
}

void NominalSequence(benchmark::State& state) {
    const auto elements = build_constellation(cfg().constellation());
    std::uint64_t seed = 1;
    for (auto _ : state) {
        const Trajectory traj = sample_landing_trajectory(cfg().trajectory_params(), seed,
                                                          cfg().duration_s, cfg().epoch_interval_s);
        const PsrSequence seq =
            generate_nominal(traj, elements, cfg().constellation(), cfg().signal_params(), seed);
        benchmark::DoNotOptimize(seq.psr_m.sum());
        ++seed;
    }
}
BENCHMARK(NominalSequence)->Unit(benchmark::kMillisecond);

void ScenarioPairGeneration(benchmark::State& state) {
    std::uint64_t seed = 1;
    for (auto _ : state) {
        const ScenarioPair pair = generate_scenario_pair(
            cfg(), seed % 2 == 0 ? AttackKind::Targeted : AttackKind::Regional, seed);
        benchmark::DoNotOptimize(pair.spoofed.psr_m.sum());
        ++seed;
    }
}
BENCHMARK(ScenarioPairGeneration)->Unit(benchmark::kMillisecond);

void QuantizeValue(benchmark::State& state) {
    QuantizerParams p;
    for (int i = 0; i < 64; ++i) {
        p.levels.push_back(-5.0 + 10.0 * i / 63.0);
        p.sharpness.push_back(-4.0);
    }
    std::vector<double> out(64);
    double y = -4.9;
    for (auto _ : state) {
        quantize(y, p, out);
        benchmark::DoNotOptimize(out[0]);
        y += 0.001;
        if (y > 4.9) y = -4.9;
    }
}
BENCHMARK(QuantizeValue);

void FeatureBuild(benchmark::State& state) {
    const auto elements = build_constellation(cfg().constellation());
    const Trajectory traj = sample_landing_trajectory(cfg().trajectory_params(), 3,
                                                      cfg().duration_s, cfg().epoch_interval_s);
    const PsrSequence seq =
        generate_nominal(traj, elements, cfg().constellation(), cfg().signal_params(), 3);
    QuantizerParams p;
    for (int i = 0; i < 64; ++i) {
        p.levels.push_back(-5.0 + 10.0 * i / 63.0);
        p.sharpness.push_back(-4.0);
    }
    for (auto _ : state) {
        const FeatureTensor f = build_features(seq, p, 16);
        benchmark::DoNotOptimize(f.data[0]);
    }
}
BENCHMARK(FeatureBuild)->Unit(benchmark::kMillisecond);

}  // namespace
