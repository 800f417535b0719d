#include "psrdet/nn.hpp"

#include <cmath>
#include <limits>

namespace psrdet::nn {

int ParamStore::add(const std::string& name, int rows, int cols) {
    Entry e;
    e.name = name;
    e.value = Mat::Zero(rows, cols);
    entries_.push_back(std::move(e));
    return static_cast<int>(entries_.size()) - 1;
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += static_cast<std::size_t>(e.value.size());
    return n;
}

int ParamStore::find(const std::string& name) const {
    for (int i = 0; i < count(); ++i)
        if (entries_[i].name == name) return i;
    return -1;
}

void GradBuffer::init_like(const ParamStore& params) {
    grads.resize(params.count());
    for (int i = 0; i < params.count(); ++i)
        grads[i] = Mat::Zero(params.value(i).rows(), params.value(i).cols());
}

void GradBuffer::zero() {
    for (auto& g : grads) g.setZero();
}

void GradBuffer::accumulate(const GradBuffer& other) {
    for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += other.grads[i];
}

double GradBuffer::squared_norm() const {
    double n = 0.0;
    for (const auto& g : grads) n += g.squaredNorm();
    return n;
}

void GradBuffer::scale(double s) {
    for (auto& g : grads) g *= s;
}

double silu(double x) { return x / (1.0 + std::exp(-x)); }

double silu_derivative(double x) {
    const double s = 1.0 / (1.0 + std::exp(-x));
    return s * (1.0 + x * (1.0 - s));
}

// ---------------------------------------------------------------------------
// Linear

void LinearLayer::init(ParamStore& params, const std::string& prefix, int in_dim, int out_dim) {
    in = in_dim;
    out = out_dim;
    W = params.add(prefix + ".W", in_dim, out_dim);
    b = params.add(prefix + ".b", 1, out_dim);
}

Mat LinearLayer::forward(const ParamStore& params, const Mat& X) const {
    Mat Y = X * params.value(W);
    Y.rowwise() += params.value(b).row(0);
    return Y;
}

Mat LinearLayer::backward(const ParamStore& params, const Mat& X, const Mat& dY, GradBuffer& g) const {
    g.grads[W].noalias() += X.transpose() * dY;
    g.grads[b].row(0) += dY.colwise().sum();
    return dY * params.value(W).transpose();
}

// ---------------------------------------------------------------------------
// LayerNorm

void LayerNormLayer::init(ParamStore& params, const std::string& prefix, int d) {
    dim = d;
    gamma = params.add(prefix + ".gamma", 1, d);
    beta = params.add(prefix + ".beta", 1, d);
}

Mat LayerNormLayer::forward(const ParamStore& params, const Mat& X, Cache& cache) const {
    const int T = static_cast<int>(X.rows());
    cache.xhat.resize(T, dim);
    cache.inv_std.resize(T);
    Mat Y(T, dim);
    const auto& gam = params.value(gamma).row(0);
    const auto& bet = params.value(beta).row(0);
    for (int t = 0; t < T; ++t) {
        const double mean = X.row(t).mean();
        const double var = (X.row(t).array() - mean).square().mean();
        const double inv = 1.0 / std::sqrt(var + eps);
        cache.inv_std(t) = inv;
        cache.xhat.row(t) = (X.row(t).array() - mean) * inv;
        Y.row(t) = cache.xhat.row(t).cwiseProduct(gam) + bet;
    }
    return Y;
}

Mat LayerNormLayer::backward(const ParamStore& params, const Cache& cache, const Mat& dY,
                             GradBuffer& g) const {
    const int T = static_cast<int>(dY.rows());
    const auto& gam = params.value(gamma).row(0);
    Mat dX(T, dim);
    Eigen::RowVectorXd dgamma = Eigen::RowVectorXd::Zero(dim);
    Eigen::RowVectorXd dbeta = Eigen::RowVectorXd::Zero(dim);
    for (int t = 0; t < T; ++t) {
        const auto xhat = cache.xhat.row(t);
        dgamma += dY.row(t).cwiseProduct(xhat);
        dbeta += dY.row(t);
        const Eigen::RowVectorXd dxhat = dY.row(t).cwiseProduct(gam);
        const double mean_dxhat = dxhat.mean();
        const double mean_dxhat_xhat = dxhat.cwiseProduct(xhat).mean();
        dX.row(t) = cache.inv_std(t) *
                    (dxhat.array() - mean_dxhat - xhat.array() * mean_dxhat_xhat).matrix();
    }
    g.grads[gamma].row(0) += dgamma;
    g.grads[beta].row(0) += dbeta;
    return dX;
}

// ---------------------------------------------------------------------------
// LSTM

void LstmLayer::init(ParamStore& params, const std::string& prefix, int in_dim, int hidden_dim) {
    in = in_dim;
    hidden = hidden_dim;
    Wx = params.add(prefix + ".lstm.Wx", in_dim, 4 * hidden_dim);
    Wh = params.add(prefix + ".lstm.Wh", hidden_dim, 4 * hidden_dim);
    b = params.add(prefix + ".lstm.b", 1, 4 * hidden_dim);
}

Mat LstmLayer::forward(const ParamStore& params, const Mat& X, int steps, int batch,
                       Cache& cache) const {
    const int h = hidden;
    cache.steps = steps;
    cache.batch = batch;
    cache.gates.assign(steps, Mat());
    cache.cell.assign(steps, Mat());
    cache.tanh_c.assign(steps, Mat());
    cache.h_all.setZero(static_cast<Eigen::Index>(steps) * batch, h);

    // Pre-activations for every step in one GEMM; the recurrent term is added
    // stepwise.
    Mat pre_x = X * params.value(Wx);
    pre_x.rowwise() += params.value(b).row(0);

    Mat h_prev = Mat::Zero(batch, h);
    Mat c_prev = Mat::Zero(batch, h);
    for (int k = 0; k < steps; ++k) {
        Mat G = pre_x.middleRows(static_cast<Eigen::Index>(k) * batch, batch);
        G.noalias() += h_prev * params.value(Wh);
        // Gate order [i f g o], activated in place.
        G.middleCols(0, 2 * h) = (1.0 / (1.0 + (-G.middleCols(0, 2 * h).array()).exp())).matrix();
        G.middleCols(2 * h, h) = G.middleCols(2 * h, h).array().tanh().matrix();
        G.middleCols(3 * h, h) = (1.0 / (1.0 + (-G.middleCols(3 * h, h).array()).exp())).matrix();
        const auto i_g = G.middleCols(0, h).array();
        const auto f_g = G.middleCols(h, h).array();
        const auto g_g = G.middleCols(2 * h, h).array();
        const auto o_g = G.middleCols(3 * h, h).array();
        const Mat c = (f_g * c_prev.array() + i_g * g_g).matrix();
        const Mat tc = c.array().tanh().matrix();
        const Mat h_new = (o_g * tc.array()).matrix();
        cache.gates[k] = std::move(G);
        cache.cell[k] = c;
        cache.tanh_c[k] = tc;
        cache.h_all.middleRows(static_cast<Eigen::Index>(k) * batch, batch) = h_new;
        h_prev = h_new;
        c_prev = c;
    }
    return cache.h_all;
}

Mat LstmLayer::backward(const ParamStore& params, const Mat& X, const Cache& cache, const Mat& dY,
                        GradBuffer& g) const {
    const int steps = cache.steps, batch = cache.batch, h = hidden;
    Mat dG_all(static_cast<Eigen::Index>(steps) * batch, 4 * h);
    Mat dh_rec = Mat::Zero(batch, h);
    Mat dc_rec = Mat::Zero(batch, h);
    const Mat Wh_t = params.value(Wh).transpose();
    const Mat zero_state = Mat::Zero(batch, h);

    for (int k = steps - 1; k >= 0; --k) {
        const Mat& G = cache.gates[k];
        const auto i_g = G.middleCols(0, h).array();
        const auto f_g = G.middleCols(h, h).array();
        const auto g_g = G.middleCols(2 * h, h).array();
        const auto o_g = G.middleCols(3 * h, h).array();
        const auto tc = cache.tanh_c[k].array();
        const Mat& c_prev = k > 0 ? cache.cell[k - 1] : zero_state;

        const Mat dh = dY.middleRows(static_cast<Eigen::Index>(k) * batch, batch) + dh_rec;
        const Mat dc = (dc_rec.array() + dh.array() * o_g * (1.0 - tc.square())).matrix();
        auto dG = dG_all.middleRows(static_cast<Eigen::Index>(k) * batch, batch);
        dG.middleCols(0, h) = (dc.array() * g_g * i_g * (1.0 - i_g)).matrix();
        dG.middleCols(h, h) = (dc.array() * c_prev.array() * f_g * (1.0 - f_g)).matrix();
        dG.middleCols(2 * h, h) = (dc.array() * i_g * (1.0 - g_g.square())).matrix();
        dG.middleCols(3 * h, h) = (dh.array() * tc * o_g * (1.0 - o_g)).matrix();
        dc_rec = (dc.array() * f_g).matrix();
        dh_rec.noalias() = dG * Wh_t;
    }

    // Stacked previous hidden states: step k rows hold h_{k-1}.
    Mat h_prev_all = Mat::Zero(static_cast<Eigen::Index>(steps) * batch, h);
    if (steps > 1)
        h_prev_all.bottomRows(static_cast<Eigen::Index>(steps - 1) * batch) =
            cache.h_all.topRows(static_cast<Eigen::Index>(steps - 1) * batch);

    g.grads[Wx].noalias() += X.transpose() * dG_all;
    g.grads[Wh].noalias() += h_prev_all.transpose() * dG_all;
    g.grads[b].row(0) += dG_all.colwise().sum();
    return dG_all * params.value(Wx).transpose();
}

// ---------------------------------------------------------------------------
// Multi-head attention

void MhaLayer::init(ParamStore& params, const std::string& prefix, int d, int n_heads) {
    dim = d;
    heads = n_heads;
    if (d % n_heads != 0) throw UsageError("d_model must be divisible by heads");
    Wq = params.add(prefix + ".attn.Wq", d, d);
    Wk = params.add(prefix + ".attn.Wk", d, d);
    Wv = params.add(prefix + ".attn.Wv", d, d);
    Wo = params.add(prefix + ".attn.Wo", d, d);
    bq = params.add(prefix + ".attn.bq", 1, d);
    bk = params.add(prefix + ".attn.bk", 1, d);
    bv = params.add(prefix + ".attn.bv", 1, d);
    bo = params.add(prefix + ".attn.bo", 1, d);
}

namespace {

inline bool admissible(const std::vector<std::uint8_t>* present, AttentionMaskMode mode, int k, int s,
                       int sats) {
    if (mode != AttentionMaskMode::AttentionMask || present == nullptr) return true;
    return (*present)[static_cast<std::size_t>(k) * sats + s] != 0;
}

Mat gather_sat_rows(const Mat& M, int epochs, int sats, int s, int col0, int cols) {
    Mat out(epochs, cols);
    for (int k = 0; k < epochs; ++k)
        out.row(k) = M.block(static_cast<Eigen::Index>(k) * sats + s, col0, 1, cols);
    return out;
}

void scatter_add_sat_rows(Mat& M, const Mat& rows, int epochs, int sats, int s, int col0, int cols) {
    for (int k = 0; k < epochs; ++k)
        M.block(static_cast<Eigen::Index>(k) * sats + s, col0, 1, cols) += rows.row(k);
}

// Joint causal + same-epoch attention probabilities for one (head, satellite).
// St is overwritten with the normalized time-part weights; cross weights for
// queries of this satellite are written into Across rows (k*sats + s).
void normalize_joint(Mat& St, std::vector<Mat>& Across, const Mat* Scross_all, int epochs, int sats,
                     int s, const std::vector<std::uint8_t>* present, AttentionMaskMode mode) {
    for (int k = 0; k < epochs; ++k) {
        double m = -std::numeric_limits<double>::infinity();
        for (int kp = 0; kp <= k; ++kp)
            if (admissible(present, mode, kp, s, sats)) m = std::max(m, St(k, kp));
        if (sats > 1) {
            const Mat& Sc = Scross_all[k];
            for (int sp = 0; sp < sats; ++sp)
                if (sp != s && admissible(present, mode, k, sp, sats)) m = std::max(m, Sc(s, sp));
        }
        if (!std::isfinite(m)) {  // every admissible key masked out
            St.row(k).setZero();
            if (sats > 1) Across[k].row(s).setZero();
            continue;
        }
        double z = 0.0;
        for (int kp = 0; kp <= k; ++kp) {
            if (admissible(present, mode, kp, s, sats)) {
                St(k, kp) = std::exp(St(k, kp) - m);
                z += St(k, kp);
            } else {
                St(k, kp) = 0.0;
            }
        }
        for (int kp = k + 1; kp < epochs; ++kp) St(k, kp) = 0.0;
        if (sats > 1) {
            auto row = Across[k].row(s);
            const Mat& Sc = Scross_all[k];
            for (int sp = 0; sp < sats; ++sp) {
                if (sp != s && admissible(present, mode, k, sp, sats)) {
                    row(sp) = std::exp(Sc(s, sp) - m);
                    z += row(sp);
                } else {
                    row(sp) = 0.0;
                }
            }
            Across[k].row(s) = row / z;
        }
        St.row(k) /= z;
    }
}

}  // namespace

Mat MhaLayer::forward(const ParamStore& params, const Mat& X, int epochs, int sats,
                      const std::vector<std::uint8_t>* present, AttentionMaskMode mode,
                      Cache& cache) const {
    const int dh = dim / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    cache.epochs = epochs;
    cache.sats = sats;
    cache.Q = X * params.value(Wq);
    cache.Q.rowwise() += params.value(bq).row(0);
    cache.K = X * params.value(Wk);
    cache.K.rowwise() += params.value(bk).row(0);
    cache.V = X * params.value(Wv);
    cache.V.rowwise() += params.value(bv).row(0);
    cache.ctx = Mat::Zero(X.rows(), dim);

    std::vector<Mat> Scross;
    std::vector<Mat> Across;
    for (int h = 0; h < heads; ++h) {
        const int c0 = h * dh;
        if (sats > 1) {
            Scross.assign(epochs, Mat());
            Across.assign(epochs, Mat::Zero(sats, sats));
            for (int k = 0; k < epochs; ++k) {
                const auto Qk = cache.Q.block(static_cast<Eigen::Index>(k) * sats, c0, sats, dh);
                const auto Kk = cache.K.block(static_cast<Eigen::Index>(k) * sats, c0, sats, dh);
                Scross[k].noalias() = Qk * Kk.transpose() * scale;
            }
        }
        for (int s = 0; s < sats; ++s) {
            const Mat Qs = gather_sat_rows(cache.Q, epochs, sats, s, c0, dh);
            const Mat Ks = gather_sat_rows(cache.K, epochs, sats, s, c0, dh);
            const Mat Vs = gather_sat_rows(cache.V, epochs, sats, s, c0, dh);
            Mat St = Qs * Ks.transpose() * scale;
            normalize_joint(St, Across, Scross.data(), epochs, sats, s, present, mode);
            const Mat ctx_s = St * Vs;
            scatter_add_sat_rows(cache.ctx, ctx_s, epochs, sats, s, c0, dh);
        }
        if (sats > 1) {
            for (int k = 0; k < epochs; ++k) {
                const auto Vk = cache.V.block(static_cast<Eigen::Index>(k) * sats, c0, sats, dh);
                cache.ctx.block(static_cast<Eigen::Index>(k) * sats, c0, sats, dh).noalias() +=
                    Across[k] * Vk;
            }
        }
    }
    Mat out = cache.ctx * params.value(Wo);
    out.rowwise() += params.value(bo).row(0);
    return out;
}

Mat MhaLayer::backward(const ParamStore& params, const Mat& X, const Cache& cache, const Mat& dY,
                       const std::vector<std::uint8_t>* present, AttentionMaskMode mode,
                       GradBuffer& g) const {
    const int epochs = cache.epochs, sats = cache.sats;
    const int dh = dim / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    g.grads[Wo].noalias() += cache.ctx.transpose() * dY;
    g.grads[bo].row(0) += dY.colwise().sum();
    const Mat dCtx = dY * params.value(Wo).transpose();

    Mat dQ = Mat::Zero(cache.Q.rows(), dim);
    Mat dK = Mat::Zero(cache.K.rows(), dim);
    Mat dV = Mat::Zero(cache.V.rows(), dim);

    std::vector<Mat> Scross, Across, dAcross;
    Mat r_all(epochs, sats);  // per-query softmax backward dot products
    for (int h = 0; h < heads; ++h) {
        const int c0 = h * dh;
        // Recompute the attention probabilities exactly as in forward.
        std::vector<Mat> At(sats);
        if (sats > 1) {
            Scross.assign(epochs, Mat());
            Across.assign(epochs, Mat::Zero(sats, sats));
            for (int k = 0; k < epochs; ++k) {
                const auto Qk = cache.Q.block(static_cast<Eigen::Index>(k) * sats, c0, sats, dh);
                const auto Kk = cache.K.block(static_cast<Eigen::Index>(k) * sats, c0, sats, dh);
                Scross[k].noalias() = Qk * Kk.transpose() * scale;
            }
        }
        for (int s = 0; s < sats; ++s) {
            const Mat Qs = gather_sat_rows(cache.Q, epochs, sats, s, c0, dh);
            const Mat Ks = gather_sat_rows(cache.K, epochs, sats, s, c0, dh);
            At[s] = Qs * Ks.transpose() * scale;
            normalize_joint(At[s], Across, Scross.data(), epochs, sats, s, present, mode);
        }

        // Cross part: dA, dV and the cross share of the softmax dot product.
        r_all.setZero();
        if (sats > 1) {
            dAcross.assign(epochs, Mat());
            for (int k = 0; k < epochs; ++k) {
                const auto dCtx_k = dCtx.block(static_cast<Eigen::Index>(k) * sats, c0, sats, dh);
                const auto Vk = cache.V.block(static_cast<Eigen::Index>(k) * sats, c0, sats, dh);
                dAcross[k].noalias() = dCtx_k * Vk.transpose();
                dV.block(static_cast<Eigen::Index>(k) * sats, c0, sats, dh).noalias() +=
                    Across[k].transpose() * dCtx_k;
                for (int s = 0; s < sats; ++s)
                    r_all(k, s) = Across[k].row(s).dot(dAcross[k].row(s));
            }
        }

        // Time part per satellite; completes r and back-propagates through the
        // joint softmax.
        for (int s = 0; s < sats; ++s) {
            const Mat dCtx_s = gather_sat_rows(dCtx, epochs, sats, s, c0, dh);
            const Mat Vs = gather_sat_rows(cache.V, epochs, sats, s, c0, dh);
            Mat dAt = dCtx_s * Vs.transpose();
            Mat dVs = At[s].transpose() * dCtx_s;
            scatter_add_sat_rows(dV, dVs, epochs, sats, s, c0, dh);
            for (int k = 0; k < epochs; ++k) r_all(k, s) += At[s].row(k).dot(dAt.row(k));
            // dS = A o (dA - r)
            for (int k = 0; k < epochs; ++k)
                dAt.row(k) = (At[s].row(k).array() * (dAt.row(k).array() - r_all(k, s))).matrix();
            const Mat Qs = gather_sat_rows(cache.Q, epochs, sats, s, c0, dh);
            const Mat Ks = gather_sat_rows(cache.K, epochs, sats, s, c0, dh);
            Mat dQs = dAt * Ks * scale;
            Mat dKs = dAt.transpose() * Qs * scale;
            scatter_add_sat_rows(dQ, dQs, epochs, sats, s, c0, dh);
            scatter_add_sat_rows(dK, dKs, epochs, sats, s, c0, dh);
        }

        if (sats > 1) {
            for (int k = 0; k < epochs; ++k) {
                Mat dSc(sats, sats);
                for (int s = 0; s < sats; ++s)
                    dSc.row(s) =
                        (Across[k].row(s).array() * (dAcross[k].row(s).array() - r_all(k, s))).matrix();
                const auto Qk = cache.Q.block(static_cast<Eigen::Index>(k) * sats, c0, sats, dh);
                const auto Kk = cache.K.block(static_cast<Eigen::Index>(k) * sats, c0, sats, dh);
                dQ.block(static_cast<Eigen::Index>(k) * sats, c0, sats, dh).noalias() +=
                    dSc * Kk * scale;
                dK.block(static_cast<Eigen::Index>(k) * sats, c0, sats, dh).noalias() +=
                    dSc.transpose() * Qk * scale;
            }
        }
    }

    g.grads[Wq].noalias() += X.transpose() * dQ;
    g.grads[Wk].noalias() += X.transpose() * dK;
    g.grads[Wv].noalias() += X.transpose() * dV;
    g.grads[bq].row(0) += dQ.colwise().sum();
    g.grads[bk].row(0) += dK.colwise().sum();
    g.grads[bv].row(0) += dV.colwise().sum();
    Mat dX = dQ * params.value(Wq).transpose();
    dX.noalias() += dK * params.value(Wk).transpose();
    dX.noalias() += dV * params.value(Wv).transpose();
    return dX;
}

// ---------------------------------------------------------------------------
// FFN

void FfnLayer::init(ParamStore& params, const std::string& prefix, int d, int hidden) {
    lin1.init(params, prefix + ".ffn.lin1", d, hidden);
    lin2.init(params, prefix + ".ffn.lin2", hidden, d);
}

Mat FfnLayer::forward(const ParamStore& params, const Mat& X) const {
    Mat H = lin1.forward(params, X);
    H = (H.array() / (1.0 + (-H.array()).exp())).matrix();
    return lin2.forward(params, H);
}

Mat FfnLayer::backward(const ParamStore& params, const Mat& X, const Mat& dY, GradBuffer& g) const {
    const Mat Z = lin1.forward(params, X);  // recompute pre-activation
    const auto sig = (1.0 / (1.0 + (-Z.array()).exp())).eval();
    const Mat H = (Z.array() * sig).matrix();
    const Mat dH = lin2.backward(params, H, dY, g);
    const Mat dZ = (dH.array() * (sig * (1.0 + Z.array() * (1.0 - sig)))).matrix();
    return lin1.backward(params, X, dZ, g);
}

// ---------------------------------------------------------------------------
// Encoder block

void EncoderBlock::init(ParamStore& params, const std::string& prefix, EncoderKind k, int d,
                        int ffn_hidden, int heads) {
    kind = k;
    if (kind == EncoderKind::Lstm)
        lstm.init(params, prefix, d, d);
    else
        mha.init(params, prefix, d, heads);
    ln1.init(params, prefix + ".ln1", d);
    ln2.init(params, prefix + ".ln2", d);
    ffn.init(params, prefix, d, ffn_hidden);
}

Mat EncoderBlock::forward(const ParamStore& params, const Mat& X, int epochs, int sats,
                          const std::vector<std::uint8_t>* present, AttentionMaskMode mode,
                          Cache& cache) const {
    cache.input = X;
    Mat sub = kind == EncoderKind::Lstm
                  ? lstm.forward(params, X, epochs, sats, cache.lstm)
                  : mha.forward(params, X, epochs, sats, present, mode, cache.mha);
    sub += X;  // residual
    cache.after_ln1 = ln1.forward(params, sub, cache.ln1);
    Mat out = ffn.forward(params, cache.after_ln1);
    out += cache.after_ln1;  // residual
    return ln2.forward(params, out, cache.ln2);
}

Mat EncoderBlock::backward(const ParamStore& params, const Cache& cache, const Mat& dY,
                           const std::vector<std::uint8_t>* present, AttentionMaskMode mode,
                           GradBuffer& g) const {
    const Mat dSum2 = ln2.backward(params, cache.ln2, dY, g);
    Mat dAfterLn1 = ffn.backward(params, cache.after_ln1, dSum2, g);
    dAfterLn1 += dSum2;  // residual
    const Mat dSum1 = ln1.backward(params, cache.ln1, dAfterLn1, g);
    Mat dX = kind == EncoderKind::Lstm
                 ? lstm.backward(params, cache.input, cache.lstm, dSum1, g)
                 : mha.backward(params, cache.input, cache.mha, dSum1, present, mode, g);
    dX += dSum1;  // residual
    return dX;
}

// ---------------------------------------------------------------------------
// Initialization

void init_parameters(ParamStore& params, std::uint64_t seed) {
    RngStream rng(seed, stream::kModelInit);
    for (int i = 0; i < params.count(); ++i) {
        Mat& m = params.value(i);
        const std::string& name = params.name(i);
        const auto ends_with = [&](const char* suffix) {
            const std::size_t n = std::string(suffix).size();
            return name.size() >= n && name.compare(name.size() - n, n, suffix) == 0;
        };
        if (name.find(".gamma") != std::string::npos) {
            m.setOnes();
        } else if (name.find(".beta") != std::string::npos) {
            m.setZero();
        } else if (name.find("pe_") == 0) {
            for (Eigen::Index j = 0; j < m.size(); ++j) m.data()[j] = rng.uniform(-0.05, 0.05);
        } else if (ends_with(".b")) {
            m.setZero();
            if (name.find(".lstm.") != std::string::npos) {
                const int h = static_cast<int>(m.cols()) / 4;
                m.block(0, h, 1, h).setOnes();  // forget-gate bias
            }
        } else {
            const double bound = std::sqrt(6.0 / (m.rows() + m.cols()));
            for (Eigen::Index j = 0; j < m.size(); ++j) m.data()[j] = rng.uniform(-bound, bound);
        }
    }
}

}  // namespace psrdet::nn
