#include "psrdet/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "psrdet/parallel.hpp"

namespace psrdet {

using nn::GradBuffer;
using nn::Mat;

void TrainConfig::validate() const {
    if (pair_batch_size < 1) throw UsageError("pair_batch_size must be >= 1");
    if (!(learning_rate >= 0.0)) throw UsageError("learning_rate must be >= 0");
    if (max_steps < 0) throw UsageError("max_steps must be >= 0");
    if (!(grad_clip_norm > 0.0)) throw UsageError("grad_clip_norm must be positive");
}

std::vector<const PsrSequence*> make_batch(std::span<const ScenarioPair> pairs) {
    std::vector<const PsrSequence*> batch;
    batch.reserve(pairs.size() * 2);
    for (const auto& p : pairs) {
        batch.push_back(&p.clean);
        batch.push_back(&p.spoofed);
    }
    return batch;
}

double cross_entropy(const Mat& logits, std::span<const std::uint8_t> labels,
                     std::span<const std::uint8_t> informative) {
    double sum = 0.0;
    long long n = 0;
    for (Eigen::Index k = 0; k < logits.rows(); ++k) {
        if (!informative[k]) continue;
        const double l0 = logits(k, 0), l1 = logits(k, 1);
        const double m = std::max(l0, l1);
        const double lse = m + std::log(std::exp(l0 - m) + std::exp(l1 - m));
        sum += lse - (labels[k] ? l0 : l1);  // first logit is the spoofed class
        ++n;
    }
    return n == 0 ? 0.0 : sum / n;
}

FeatureTensor build_features_for_model(const PsrSequence& seq, const ModelConfig& cfg,
                                       const QuantizerParams* quantizer) {
    if (cfg.feature_channels == 2) return build_features_raw(seq, cfg.l_max);
    if (quantizer == nullptr) throw UsageError("model expects quantized features but no quantizer given");
    if (quantizer->n() + 1 != cfg.feature_channels)
        throw UsageError("quantizer level count does not match the model's feature channels");
    return build_features(seq, *quantizer, cfg.l_max);
}

namespace {

// d(mean CE)/d logits = (softmax - onehot) / n_valid on informative epochs.
Mat ce_logit_gradient(const Mat& logits, std::span<const std::uint8_t> labels,
                      std::span<const std::uint8_t> informative, double inv_count) {
    Mat d = Mat::Zero(logits.rows(), 2);
    for (Eigen::Index k = 0; k < logits.rows(); ++k) {
        if (!informative[k]) continue;
        const double p0 = score_from_logits(logits(k, 0), logits(k, 1));
        d(k, 0) = (p0 - (labels[k] ? 1.0 : 0.0)) * inv_count;
        d(k, 1) = ((1.0 - p0) - (labels[k] ? 0.0 : 1.0)) * inv_count;
    }
    return d;
}

long long informative_count(std::span<const std::uint8_t> informative) {
    long long n = 0;
    for (const auto v : informative) n += v ? 1 : 0;
    return n;
}

struct Adam {
    std::vector<Mat> m, v;
    int t = 0;

    void init_like(const nn::ParamStore& params) {
        m.resize(params.count());
        v.resize(params.count());
        for (int i = 0; i < params.count(); ++i) {
            m[i] = Mat::Zero(params.value(i).rows(), params.value(i).cols());
            v[i] = Mat::Zero(params.value(i).rows(), params.value(i).cols());
        }
    }

    void step(nn::ParamStore& params, const GradBuffer& g, const TrainConfig& cfg) {
        ++t;
        const double c1 = 1.0 - std::pow(cfg.adam_beta1, t);
        const double c2 = 1.0 - std::pow(cfg.adam_beta2, t);
        for (std::size_t i = 0; i < m.size(); ++i) {
            m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g.grads[i];
            v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g.grads[i].cwiseProduct(g.grads[i]);
            params.value(static_cast<int>(i)) -=
                (cfg.learning_rate * (m[i] / c1).array() / ((v[i] / c2).array().sqrt() + cfg.adam_eps))
                    .matrix();
        }
    }
};

}  // namespace

double sequence_loss(const DetectorModel& model, const FeatureTensor& features,
                     std::span<const std::uint8_t> labels, GradBuffer* grads) {
    DetectorModel::Cache cache;
    const auto fwd = model.forward_train(features, cache);
    const double loss = cross_entropy(fwd.logits, labels, fwd.informative);
    if (grads != nullptr) {
        const long long n = informative_count(fwd.informative);
        if (n > 0) {
            const Mat d = ce_logit_gradient(fwd.logits, labels, fwd.informative, 1.0 / n);
            model.backward(cache, d, *grads);
        }
    }
    return loss;
}

TrainResult train(DetectorModel& model, std::span<const ScenarioPair> pairs,
                  const QuantizerParams* quantizer, const TrainConfig& cfg,
                  const std::string& checkpoint_dir) {
    cfg.validate();
    if (pairs.empty()) throw DataError("training requires at least one scenario pair");
    TrainResult result;
    Adam adam;
    adam.init_like(model.params);

    RngStream order_rng(cfg.seed, stream::kBatchOrder);
    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::size_t cursor = order.size();  // trigger shuffle on first use

    const int batch_pairs = std::min<int>(cfg.pair_batch_size, static_cast<int>(pairs.size()));
    const int batch_seqs = 2 * batch_pairs;

    std::vector<const PsrSequence*> batch(batch_seqs);
    std::vector<FeatureTensor> features(batch_seqs);
    std::vector<double> ce_sums(batch_seqs);
    std::vector<long long> valid_counts(batch_seqs);
    std::vector<GradBuffer> seq_grads(batch_seqs);
    for (auto& g : seq_grads) g.init_like(model.params);
    GradBuffer total;
    total.init_like(model.params);

    for (int step = 0; step < cfg.max_steps; ++step) {
        for (int b = 0; b < batch_pairs; ++b) {
            if (cursor >= order.size()) {
                for (std::size_t i = order.size(); i > 1; --i)
                    std::swap(order[i - 1],
                              order[static_cast<std::size_t>(order_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
                cursor = 0;
            }
            const ScenarioPair& p = pairs[order[cursor++]];
            batch[2 * b] = &p.clean;
            batch[2 * b + 1] = &p.spoofed;
        }

        parallel_for(
            static_cast<std::size_t>(batch_seqs),
            [&](std::size_t i) {
                features[i] = build_features_for_model(*batch[i], model.config, quantizer);
                valid_counts[i] = 0;
                for (int k = 0; k < features[i].epochs; ++k)
                    valid_counts[i] += features[i].present_count(k) > 0 ? 1 : 0;
            },
            cfg.threads);
        long long n_total = 0;
        for (int i = 0; i < batch_seqs; ++i) n_total += valid_counts[i];
        if (n_total == 0) throw DataError("batch contains no informative epochs");
        const double inv_count = 1.0 / static_cast<double>(n_total);

        parallel_for(
            static_cast<std::size_t>(batch_seqs),
            [&](std::size_t i) {
                seq_grads[i].zero();
                DetectorModel::Cache cache;
                const auto fwd = model.forward_train(features[i], cache);
                double sum = 0.0;
                const auto& labels = batch[i]->labels;
                for (int k = 0; k < features[i].epochs; ++k) {
                    if (!fwd.informative[k]) continue;
                    const double l0 = fwd.logits(k, 0), l1 = fwd.logits(k, 1);
                    const double m = std::max(l0, l1);
                    sum += m + std::log(std::exp(l0 - m) + std::exp(l1 - m)) - (labels[k] ? l0 : l1);
                }
                ce_sums[i] = sum;
                const Mat d = ce_logit_gradient(fwd.logits, labels, fwd.informative, inv_count);
                model.backward(cache, d, seq_grads[i]);
            },
            cfg.threads);

        total.zero();
        double loss = 0.0;
        for (int i = 0; i < batch_seqs; ++i) {
            total.accumulate(seq_grads[i]);
            loss += ce_sums[i];
        }
        loss *= inv_count;
        if (!std::isfinite(loss)) {
            double pnorm = 0.0;
            for (int i = 0; i < model.params.count(); ++i) pnorm += model.params.value(i).squaredNorm();
            throw NumericError("non-finite loss at step " + std::to_string(step) +
                               " (parameter norm " + std::to_string(std::sqrt(pnorm)) + ")");
        }
        result.loss_curve.emplace_back(step, loss);

        const double gnorm = std::sqrt(total.squared_norm());
        if (gnorm > cfg.grad_clip_norm && gnorm > 0.0) total.scale(cfg.grad_clip_norm / gnorm);
        adam.step(model.params, total, cfg);

        if (cfg.checkpoint_interval > 0 && !checkpoint_dir.empty() &&
            (step + 1) % cfg.checkpoint_interval == 0) {
            char name[32];
            std::snprintf(name, sizeof name, "step_%06d.psrd", step + 1);
            model.save((std::filesystem::path(checkpoint_dir) / name).string());
        }
    }
    return result;
}

SubsetCounts& SubsetCounts::operator+=(const SubsetCounts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
}

SubsetCounts count_errors(std::span<const double> scores, std::span<const std::uint8_t> labels,
                          double threshold) {
    SubsetCounts c;
    for (std::size_t k = 0; k < scores.size(); ++k) {
        const bool pred = scores[k] > threshold;
        const bool truth = labels[k] != 0;
        if (truth)
            pred ? ++c.tp : ++c.fn;
        else
            pred ? ++c.fp : ++c.tn;
    }
    return c;
}

MetricsReport evaluate(const DetectorModel& model, const TestSet& test, const QuantizerParams* quantizer,
                       double threshold, int threads) {
    MetricsReport report;
    report.threshold = threshold;
    std::vector<SubsetCounts> counts(test.size());
    parallel_for(
        test.size(),
        [&](std::size_t i) {
            const FeatureTensor f = build_features_for_model(test[i], model.config, quantizer);
            const DetectionOutput out = model.forward(f);
            counts[i] = count_errors(out.scores, test[i].labels, threshold);
        },
        threads);
    for (std::size_t i = 0; i < test.size(); ++i) {
        report.total += counts[i];
        if (!test[i].attack.has_value()) continue;
        auto& subset =
            test[i].attack->kind == AttackKind::Targeted ? report.targeted : report.regional;
        if (!subset.has_value()) subset = SubsetCounts{};
        *subset += counts[i];
    }
    return report;
}

std::vector<SweepCell> layer_sweep(std::span<const ScenarioPair> train_pairs, const TestSet& test,
                                   const QuantizerParams* quantizer, const ModelConfig& base,
                                   const TrainConfig& tcfg, const std::vector<std::string>& variants,
                                   const std::vector<int>& layer_counts) {
    std::vector<SweepCell> cells;
    for (const auto& variant : variants) {
        for (const int layers : layer_counts) {
            ModelConfig cfg = base;
            apply_variant(cfg, variant);
            cfg.blocks = layers;
            DetectorModel model = DetectorModel::create(cfg, tcfg.seed);
            train(model, train_pairs, quantizer, tcfg);
            SweepCell cell;
            cell.variant = variant;
            cell.layers = layers;
            cell.metrics = evaluate(model, test, quantizer, 0.5, tcfg.threads);
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

}  // namespace psrdet
