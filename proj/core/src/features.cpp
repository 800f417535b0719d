#include "psrdet/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "psrdet/bytes.hpp"

namespace psrdet {

void QuantizerParams::validate() const {
    if (levels.size() != sharpness.size()) throw DataError("quantizer levels/sharpness size mismatch");
    if (levels.empty()) throw DataError("quantizer has no levels");
    for (double v : levels)
        if (!std::isfinite(v)) throw DataError("non-finite quantizer level");
    for (double v : sharpness)
        if (!std::isfinite(v)) throw DataError("non-finite quantizer sharpness");
}

SecondDifference second_difference(std::span<const double> series, std::span<const std::uint8_t> present) {
    if (series.size() != present.size()) throw DataError("second_difference size mismatch");
    if (series.size() < 3) throw DataError("second_difference needs at least 3 samples");
    SecondDifference out;
    out.value.assign(series.size(), 0.0);
    out.defined.assign(series.size(), 0);
    for (std::size_t k = 2; k < series.size(); ++k) {
        if (present[k] && present[k - 1] && present[k - 2]) {
            out.value[k] = series[k] - 2.0 * series[k - 1] + series[k - 2];
            out.defined[k] = 1;
        }
    }
    return out;
}

double compress(double x) {
    return x >= 0.0 ? std::log1p(x) : -std::log1p(-x);
}

void quantize(double y, const QuantizerParams& p, std::span<double> out) {
    const int n = p.n();
    double max_s = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        out[i] = p.sharpness[i] * std::abs(y - p.levels[i]);
        max_s = std::max(max_s, out[i]);
    }
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        out[i] = std::exp(out[i] - max_s);
        sum += out[i];
    }
    for (int i = 0; i < n; ++i) out[i] /= sum;
}

std::vector<double> quantize(double y, const QuantizerParams& p) {
    std::vector<double> out(p.n());
    quantize(y, p, out);
    return out;
}

double PretrainedQuantizer::reconstruct(double y) const {
    const std::vector<double> probs = quantize(y, params);
    double acc = head.bias;
    for (int i = 0; i < params.n(); ++i) acc += head.weights[i] * probs[i];
    return acc;
}

namespace {

struct AdamScalarSet {
    std::vector<double> m, v;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    int t = 0;

    explicit AdamScalarSet(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
    void step(std::vector<double*> params, const std::vector<double>& grads, double lr) {
        ++t;
        const double c1 = 1.0 - std::pow(beta1, t);
        const double c2 = 1.0 - std::pow(beta2, t);
        for (std::size_t i = 0; i < grads.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
            *params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
        }
    }
};

}  // namespace

PretrainedQuantizer pretrain_quantizer(std::span<const double> samples, int levels, std::uint64_t seed,
                                       const QuantizerTrainOptions& opts) {
    if (samples.size() < 10000) throw DataError("quantizer pretraining needs at least 10^4 samples");
    if (levels < 2) throw UsageError("quantizer needs at least 2 levels");

    const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
    const double lo = *lo_it, hi = *hi_it;

    PretrainedQuantizer q;
    q.params.levels.resize(levels);
    q.params.sharpness.assign(levels, opts.init_sharpness);
    q.head.weights.resize(levels);
    q.head.bias = 0.0;
    for (int i = 0; i < levels; ++i) {
        const double u = levels == 1 ? 0.5 : static_cast<double>(i) / (levels - 1);
        q.params.levels[i] = lo + (hi - lo) * u;
        q.head.weights[i] = q.params.levels[i];  // identity-like decode at init
    }

    const int n = levels;
    const std::size_t param_count = static_cast<std::size_t>(3 * n + 1);
    AdamScalarSet adam(param_count);
    std::vector<double*> param_ptrs;
    for (int i = 0; i < n; ++i) param_ptrs.push_back(&q.params.levels[i]);
    for (int i = 0; i < n; ++i) param_ptrs.push_back(&q.params.sharpness[i]);
    for (int i = 0; i < n; ++i) param_ptrs.push_back(&q.head.weights[i]);
    param_ptrs.push_back(&q.head.bias);

    RngStream rng(seed, stream::kQuantizer);
    std::vector<double> probs(n);
    std::vector<double> grads(param_count);
    for (int step = 0; step < opts.steps; ++step) {
        std::fill(grads.begin(), grads.end(), 0.0);
        double loss = 0.0;
        for (int b = 0; b < opts.batch_size; ++b) {
            const double y = samples[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(samples.size()) - 1))];
            quantize(y, q.params, probs);
            double recon = q.head.bias;
            for (int i = 0; i < n; ++i) recon += q.head.weights[i] * probs[i];
            const double e = recon - y;
            loss += e * e;
            const double de = 2.0 * e / opts.batch_size;
            // d recon / d probs = w; softmax backward over s_i = lambda_i |y - q_i|.
            double dot = 0.0;
            for (int i = 0; i < n; ++i) dot += probs[i] * q.head.weights[i];
            for (int i = 0; i < n; ++i) {
                const double ds = de * probs[i] * (q.head.weights[i] - dot);
                const double diff = y - q.params.levels[i];
                const double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
                grads[static_cast<std::size_t>(i)] += ds * q.params.sharpness[i] * (-sgn);  // d/d q_i
                grads[static_cast<std::size_t>(n + i)] += ds * std::abs(diff);              // d/d lambda_i
                grads[static_cast<std::size_t>(2 * n + i)] += de * probs[i];                // d/d w_i
            }
            grads[param_count - 1] += de;  // d/d bias
        }
        if (!std::isfinite(loss)) throw NumericError("quantizer pretraining diverged at step " + std::to_string(step));
        adam.step(param_ptrs, grads, opts.learning_rate);
    }

    // Report RMSE over (a subsample of) the corpus.
    const std::size_t stride = std::max<std::size_t>(1, samples.size() / 200000);
    double se = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < samples.size(); i += stride) {
        const double e = q.reconstruct(samples[i]) - samples[i];
        se += e * e;
        ++count;
    }
    q.train_rmse = std::sqrt(se / count);
    return q;
}

int FeatureTensor::present_count(int k) const {
    int c = 0;
    for (int s = 0; s < slots; ++s) c += present(k, s) ? 1 : 0;
    return c;
}

namespace {

// Satellites mapped to channel slots in order of first presence; ties break
// by satellite index.
std::vector<int> assign_slots(const PsrSequence& seq, int max_slots) {
    const int K = seq.epochs, L = seq.satellites;
    std::vector<int> first_seen(L, -1);
    for (int l = 0; l < L; ++l) {
        for (int k = 0; k < K; ++k) {
            if (seq.is_present(k, l)) {
                first_seen[l] = k;
                break;
            }
        }
    }
    std::vector<int> order;
    for (int l = 0; l < L; ++l)
        if (first_seen[l] >= 0) order.push_back(l);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return first_seen[a] < first_seen[b]; });
    if (static_cast<int>(order.size()) > max_slots) order.resize(max_slots);
    return order;
}

FeatureTensor build_features_impl(const PsrSequence& seq, const QuantizerParams* p, int max_slots) {
    const int K = seq.epochs;
    const int value_channels = p ? p->n() : 1;
    FeatureTensor f;
    f.epochs = K;
    f.slots = max_slots;
    f.channels = value_channels + 1;
    f.data.assign(static_cast<std::size_t>(K) * max_slots * f.channels, 0.0);
    f.slot_to_satellite.assign(max_slots, -1);
    f.valid_from.assign(max_slots, -1);

    const std::vector<int> order = assign_slots(seq, max_slots);
    std::vector<double> series(K);
    std::vector<std::uint8_t> present(K);
    for (std::size_t s = 0; s < order.size(); ++s) {
        const int l = order[s];
        f.slot_to_satellite[s] = l;
        for (int k = 0; k < K; ++k) {
            series[k] = seq.psr_m(k, l);
            present[k] = seq.is_present(k, l) ? 1 : 0;
        }
        const SecondDifference d2 = second_difference(series, present);
        for (int k = 0; k < K; ++k) {
            if (!d2.defined[k]) continue;
            if (f.valid_from[s] < 0) f.valid_from[s] = k;
            double* block = f.block(k, static_cast<int>(s));
            const double y = compress(d2.value[k]);
            if (p) {
                quantize(y, *p, std::span<double>(block, value_channels));
            } else {
                block[0] = y;
            }
            block[value_channels] = 1.0;
        }
    }
    return f;
}

}  // namespace

FeatureTensor build_features(const PsrSequence& seq, const QuantizerParams& p, int max_slots) {
    p.validate();
    return build_features_impl(seq, &p, max_slots);
}

FeatureTensor build_features_raw(const PsrSequence& seq, int max_slots) {
    return build_features_impl(seq, nullptr, max_slots);
}

namespace {
constexpr char kQuantizerMagic[4] = {'Q', 'N', 'T', 'Z'};
constexpr std::uint32_t kQuantizerVersion = 1;
}  // namespace

void save_quantizer(const PretrainedQuantizer& q, const std::string& path) {
    q.params.validate();
    ByteWriter w(path);
    w.magic(kQuantizerMagic);
    w.u32(kQuantizerVersion);
    w.u32(static_cast<std::uint32_t>(q.params.n()));
    w.f64_array(q.params.levels.data(), q.params.levels.size());
    w.f64_array(q.params.sharpness.data(), q.params.sharpness.size());
    w.f64_array(q.head.weights.data(), q.head.weights.size());
    w.f64(q.head.bias);
    w.f64(q.train_rmse);
    w.u64(q.config_hash);
    w.close();
}

PretrainedQuantizer load_quantizer(const std::string& path) {
    ByteReader r(path);
    r.expect_magic(kQuantizerMagic);
    const std::uint32_t version = r.u32();
    if (version != kQuantizerVersion)
        throw DataError("unsupported quantizer version in " + path);
    const std::uint32_t n = r.u32();
    if (n == 0 || n > (1u << 20)) throw DataError("implausible quantizer size in " + path);
    PretrainedQuantizer q;
    q.params.levels.resize(n);
    q.params.sharpness.resize(n);
    q.head.weights.resize(n);
    r.f64_array(q.params.levels.data(), n);
    r.f64_array(q.params.sharpness.data(), n);
    r.f64_array(q.head.weights.data(), n);
    q.head.bias = r.f64();
    q.train_rmse = r.f64();
    q.config_hash = r.u64();
    q.params.validate();
    return q;
}

}  // namespace psrdet
