#include "psrdet/model.hpp"

#include <cmath>

#include "psrdet/bytes.hpp"

namespace psrdet {

using nn::Mat;

const char* to_string(nn::EncoderKind k) { return k == nn::EncoderKind::Lstm ? "lstm" : "mha"; }
const char* to_string(FusionKind k) { return k == FusionKind::Early ? "early" : "late"; }

void ModelConfig::validate() const {
    if (d_model <= 0 || d_model % heads != 0) throw UsageError("d_model must be divisible by heads");
    if (blocks < 1 || blocks > 8) throw UsageError("block count must be in [1, 8]");
    if (l_max < 1) throw UsageError("l_max must be >= 1");
    if (max_epochs < 3) throw UsageError("max_epochs must be >= 3");
    if (feature_channels < 2) throw UsageError("feature_channels must be >= 2");
    if (ffn_hidden < 1) throw UsageError("ffn_hidden must be >= 1");
}

int ModelConfig::embed_input_dim() const {
    if (fusion == FusionKind::Early) return l_max * feature_channels;
    // Attention masking replaces the explicit presence channel in the input.
    return mask_mode == nn::AttentionMaskMode::AttentionMask && encoder == nn::EncoderKind::Mha
               ? feature_channels - 1
               : feature_channels;
}

std::string ModelConfig::variant_name() const {
    return std::string(to_string(encoder)) + "-" + to_string(fusion);
}

void apply_variant(ModelConfig& cfg, const std::string& variant) {
    if (variant == "lstm-early") {
        cfg.encoder = nn::EncoderKind::Lstm;
        cfg.fusion = FusionKind::Early;
    } else if (variant == "mha-early") {
        cfg.encoder = nn::EncoderKind::Mha;
        cfg.fusion = FusionKind::Early;
    } else if (variant == "lstm-late") {
        cfg.encoder = nn::EncoderKind::Lstm;
        cfg.fusion = FusionKind::Late;
    } else if (variant == "mha-late") {
        cfg.encoder = nn::EncoderKind::Mha;
        cfg.fusion = FusionKind::Late;
    } else {
        throw UsageError("unknown model variant: " + variant +
                         " (expected lstm-early|mha-early|lstm-late|mha-late)");
    }
}

void DetectorModel::register_layers() {
    config.validate();
    embed_.init(params, "embed", config.embed_input_dim(), config.d_model);
    pe_time_ = params.add("pe_time", config.max_epochs, config.d_model);
    if (config.fusion == FusionKind::Late) pe_sat_ = params.add("pe_sat", config.l_max, config.d_model);
    blocks_.resize(config.blocks);
    for (int i = 0; i < config.blocks; ++i)
        blocks_[i].init(params, "block" + std::to_string(i), config.encoder, config.d_model,
                        config.ffn_hidden, config.heads);
    if (config.fusion == FusionKind::Early) {
        head_.init(params, "head", config.d_model, 2);
    } else {
        head_y_.init(params, "head_y", config.d_model, 2);
        head_w_.init(params, "head_w", config.d_model, 1);
    }
}

DetectorModel DetectorModel::create(const ModelConfig& cfg, std::uint64_t seed) {
    DetectorModel model;
    model.config = cfg;
    model.register_layers();
    nn::init_parameters(model.params, seed);
    return model;
}

int DetectorModel::count_used_slots(const FeatureTensor& f) const {
    int n = 0;
    for (int s = 0; s < f.slots; ++s)
        if (f.slot_to_satellite[s] >= 0) ++n;
    return n;
}

void DetectorModel::build_input(const FeatureTensor& f, Cache& cache) const {
    if (f.slots > config.l_max) throw UsageError("feature tensor has more satellite slots than l_max");
    if (f.channels != config.feature_channels)
        throw UsageError("feature channel width does not match the model config");
    if (f.epochs > config.max_epochs) throw UsageError("sequence longer than the model's max_epochs");

    const int K = f.epochs;
    const int C = f.channels;
    cache.epochs = K;
    if (config.fusion == FusionKind::Early) {
        cache.sats_used = 1;
        cache.x_in.setZero(K, config.embed_input_dim());
        for (int k = 0; k < K; ++k)
            for (int s = 0; s < f.slots; ++s)
                for (int c = 0; c < C; ++c) cache.x_in(k, s * C + c) = f.block(k, s)[c];
        return;
    }
    const int n = count_used_slots(f);
    cache.sats_used = n;
    if (n == 0) {
        cache.degenerate = true;
        return;
    }
    const int in_dim = config.embed_input_dim();
    cache.x_in.setZero(static_cast<Eigen::Index>(K) * n, in_dim);
    cache.token_present.assign(static_cast<std::size_t>(K) * n, 0);
    for (int k = 0; k < K; ++k) {
        for (int s = 0; s < n; ++s) {
            const double* block = f.block(k, s);
            for (int c = 0; c < in_dim; ++c)
                cache.x_in(static_cast<Eigen::Index>(k) * n + s, c) = block[c];
            cache.token_present[static_cast<std::size_t>(k) * n + s] = f.present(k, s) ? 1 : 0;
        }
    }
}

Mat DetectorModel::embed_sequence(const FeatureTensor& f) const {
    Cache cache;
    build_input(f, cache);
    if (cache.degenerate) return Mat();
    Mat x = embed_.forward(params, cache.x_in);
    const Mat& pt = params.value(pe_time_);
    if (config.fusion == FusionKind::Early) {
        for (int k = 0; k < cache.epochs; ++k) x.row(k) += pt.row(k);
        return x;
    }
    const Mat& ps = params.value(pe_sat_);
    const int n = cache.sats_used;
    for (int k = 0; k < cache.epochs; ++k)
        for (int s = 0; s < n; ++s)
            x.row(static_cast<Eigen::Index>(k) * n + s) += pt.row(k) + ps.row(s);
    return x;
}

DetectorModel::ForwardResult DetectorModel::forward_train(const FeatureTensor& f, Cache& cache) const {
    build_input(f, cache);
    const int K = f.epochs;
    ForwardResult out;
    out.logits = Mat::Zero(K, 2);
    out.informative.assign(K, 0);
    if (cache.degenerate) return out;

    const int n = cache.sats_used;
    Mat x = embed_.forward(params, cache.x_in);
    const Mat& pt = params.value(pe_time_);
    if (config.fusion == FusionKind::Early) {
        for (int k = 0; k < K; ++k) x.row(k) += pt.row(k);
    } else {
        const Mat& ps = params.value(pe_sat_);
        for (int k = 0; k < K; ++k)
            for (int s = 0; s < n; ++s)
                x.row(static_cast<Eigen::Index>(k) * n + s) += pt.row(k) + ps.row(s);
    }
    cache.embedded = x;

    cache.blocks.resize(config.blocks);
    const std::vector<std::uint8_t>* present =
        config.fusion == FusionKind::Late ? &cache.token_present : nullptr;
    for (int i = 0; i < config.blocks; ++i)
        x = blocks_[i].forward(params, x, K, n, present, config.mask_mode, cache.blocks[i]);
    cache.final_x = x;

    if (config.fusion == FusionKind::Early) {
        out.logits = head_.forward(params, x);
        for (int k = 0; k < K; ++k) out.informative[k] = f.present_count(k) > 0 ? 1 : 0;
        return out;
    }

    cache.y_tokens = head_y_.forward(params, x);
    cache.w_tokens = head_w_.forward(params, x);
    cache.v.setZero(K, n);
    for (int k = 0; k < K; ++k) {
        double wmax = -std::numeric_limits<double>::infinity();
        for (int s = 0; s < n; ++s)
            if (cache.token_present[static_cast<std::size_t>(k) * n + s])
                wmax = std::max(wmax, cache.w_tokens(static_cast<Eigen::Index>(k) * n + s, 0));
        if (!std::isfinite(wmax)) continue;  // no present satellite this epoch
        double z = 0.0;
        for (int s = 0; s < n; ++s) {
            if (!cache.token_present[static_cast<std::size_t>(k) * n + s]) continue;
            const double e = std::exp(cache.w_tokens(static_cast<Eigen::Index>(k) * n + s, 0) - wmax);
            cache.v(k, s) = e;
            z += e;
        }
        Eigen::RowVector2d combined = Eigen::RowVector2d::Zero();
        for (int s = 0; s < n; ++s) {
            if (cache.v(k, s) == 0.0) continue;
            cache.v(k, s) /= z;
            combined += cache.v(k, s) * cache.y_tokens.row(static_cast<Eigen::Index>(k) * n + s);
        }
        out.logits.row(k) = combined;
        out.informative[k] = 1;
    }
    return out;
}

void DetectorModel::backward(const Cache& cache, const Mat& d_logits, nn::GradBuffer& g) const {
    if (cache.degenerate) return;
    const int K = cache.epochs;
    const int n = cache.sats_used;
    const std::vector<std::uint8_t>* present =
        config.fusion == FusionKind::Late ? &cache.token_present : nullptr;

    Mat dx;
    if (config.fusion == FusionKind::Early) {
        dx = head_.backward(params, cache.final_x, d_logits, g);
    } else {
        // Aggregation backward: combined(k) = sum_s v(k,s) * y(k,s),
        // v = softmax over present satellites' w.
        Mat dy = Mat::Zero(static_cast<Eigen::Index>(K) * n, 2);
        Mat dw = Mat::Zero(static_cast<Eigen::Index>(K) * n, 1);
        for (int k = 0; k < K; ++k) {
            double dot = 0.0;
            for (int s = 0; s < n; ++s) {
                const double v = cache.v(k, s);
                if (v == 0.0) continue;
                const double dv = cache.y_tokens.row(static_cast<Eigen::Index>(k) * n + s)
                                      .dot(d_logits.row(k));
                dot += v * dv;
            }
            for (int s = 0; s < n; ++s) {
                const double v = cache.v(k, s);
                if (v == 0.0) continue;
                dy.row(static_cast<Eigen::Index>(k) * n + s) = v * d_logits.row(k);
                const double dv = cache.y_tokens.row(static_cast<Eigen::Index>(k) * n + s)
                                      .dot(d_logits.row(k));
                dw(static_cast<Eigen::Index>(k) * n + s, 0) = v * (dv - dot);
            }
        }
        dx = head_y_.backward(params, cache.final_x, dy, g);
        dx.noalias() += head_w_.backward(params, cache.final_x, dw, g);
    }

    for (int i = config.blocks - 1; i >= 0; --i)
        dx = blocks_[i].backward(params, cache.blocks[i], dx, present, config.mask_mode, g);

    // Positional tables.
    if (config.fusion == FusionKind::Early) {
        for (int k = 0; k < K; ++k) g.grads[pe_time_].row(k) += dx.row(k);
    } else {
        for (int k = 0; k < K; ++k)
            for (int s = 0; s < n; ++s) {
                g.grads[pe_time_].row(k) += dx.row(static_cast<Eigen::Index>(k) * n + s);
                g.grads[pe_sat_].row(s) += dx.row(static_cast<Eigen::Index>(k) * n + s);
            }
    }
    embed_.backward(params, cache.x_in, dx, g);
}

DetectionOutput DetectorModel::forward(const FeatureTensor& f) const {
    Cache cache;
    const ForwardResult r = forward_train(f, cache);
    DetectionOutput out;
    out.scores.resize(f.epochs);
    out.informative = r.informative;
    for (int k = 0; k < f.epochs; ++k)
        out.scores[k] = r.informative[k] ? score_from_logits(r.logits(k, 0), r.logits(k, 1)) : 0.5;
    return out;
}

namespace {
constexpr char kCheckpointMagic[4] = {'P', 'S', 'R', 'D'};
constexpr std::uint32_t kCheckpointVersion = 1;
}  // namespace

void DetectorModel::save(const std::string& path) const {
    ByteWriter w(path);
    w.magic(kCheckpointMagic);
    w.u32(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(config.d_model));
    w.u32(static_cast<std::uint32_t>(config.ffn_hidden));
    w.u32(static_cast<std::uint32_t>(config.heads));
    w.u32(static_cast<std::uint32_t>(config.blocks));
    w.u8(config.encoder == nn::EncoderKind::Lstm ? 0 : 1);
    w.u8(config.fusion == FusionKind::Early ? 0 : 1);
    w.u8(config.mask_mode == nn::AttentionMaskMode::InputIndicator ? 0 : 1);
    w.u32(static_cast<std::uint32_t>(config.l_max));
    w.u32(static_cast<std::uint32_t>(config.max_epochs));
    w.u32(static_cast<std::uint32_t>(config.feature_channels));
    w.u64(config_hash);
    w.u32(static_cast<std::uint32_t>(params.count()));
    for (int i = 0; i < params.count(); ++i) {
        const Mat& m = params.value(i);
        w.str(params.name(i));
        w.u32(static_cast<std::uint32_t>(m.rows()));
        w.u32(static_cast<std::uint32_t>(m.cols()));
        w.f64_array(m.data(), static_cast<std::size_t>(m.size()));
    }
    w.close();
}

DetectorModel DetectorModel::load(const std::string& path) {
    ByteReader r(path);
    r.expect_magic(kCheckpointMagic);
    if (r.u32() != kCheckpointVersion) throw DataError("unsupported checkpoint version in " + path);
    ModelConfig cfg;
    cfg.d_model = static_cast<int>(r.u32());
    cfg.ffn_hidden = static_cast<int>(r.u32());
    cfg.heads = static_cast<int>(r.u32());
    cfg.blocks = static_cast<int>(r.u32());
    cfg.encoder = r.u8() == 0 ? nn::EncoderKind::Lstm : nn::EncoderKind::Mha;
    cfg.fusion = r.u8() == 0 ? FusionKind::Early : FusionKind::Late;
    cfg.mask_mode = r.u8() == 0 ? nn::AttentionMaskMode::InputIndicator
                                 : nn::AttentionMaskMode::AttentionMask;
    cfg.l_max = static_cast<int>(r.u32());
    cfg.max_epochs = static_cast<int>(r.u32());
    cfg.feature_channels = static_cast<int>(r.u32());

    DetectorModel model;
    model.config = cfg;
    model.register_layers();
    model.config_hash = r.u64();
    const std::uint32_t count = r.u32();
    if (static_cast<int>(count) != model.params.count())
        throw DataError("checkpoint parameter count mismatch in " + path);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string name = r.str();
        const int rows = static_cast<int>(r.u32());
        const int cols = static_cast<int>(r.u32());
        const int id = model.params.find(name);
        if (id < 0) throw DataError("unknown parameter '" + name + "' in " + path);
        Mat& m = model.params.value(id);
        if (m.rows() != rows || m.cols() != cols)
            throw DataError("shape mismatch for parameter '" + name + "' in " + path);
        r.f64_array(m.data(), static_cast<std::size_t>(m.size()));
    }
    return model;
}

}  // namespace psrdet
