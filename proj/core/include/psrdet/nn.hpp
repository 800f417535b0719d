#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "psrdet/errors.hpp"
#include "psrdet/rng.hpp"

namespace psrdet::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Named parameter tensors. Registration order is frozen per model config;
// checkpoints and the optimizer iterate entries in that order.
class ParamStore {
public:
    struct Entry {
        std::string name;
        Mat value;
    };

    int add(const std::string& name, int rows, int cols);
    Mat& value(int id) { return entries_[id].value; }
    const Mat& value(int id) const { return entries_[id].value; }
    const std::string& name(int id) const { return entries_[id].name; }
    int count() const { return static_cast<int>(entries_.size()); }
    std::size_t scalar_count() const;
    int find(const std::string& name) const;  // -1 if absent

private:
    std::vector<Entry> entries_;
};

// Per-worker gradient accumulator, index-parallel to a ParamStore.
struct GradBuffer {
    std::vector<Mat> grads;

    void init_like(const ParamStore& params);
    void zero();
    void accumulate(const GradBuffer& other);
    double squared_norm() const;
    void scale(double s);
};

// y = x * sigmoid(x); the smooth ReLU-family activation used project-wide.
double silu(double x);
double silu_derivative(double x);

struct LinearLayer {
    int W = -1, b = -1;
    int in = 0, out = 0;

    void init(ParamStore& params, const std::string& prefix, int in_dim, int out_dim);
    Mat forward(const ParamStore& params, const Mat& X) const;
    // Returns dX; accumulates dW, db.
    Mat backward(const ParamStore& params, const Mat& X, const Mat& dY, GradBuffer& g) const;
};

struct LayerNormLayer {
    int gamma = -1, beta = -1;
    int dim = 0;
    double eps = 1e-6;

    struct Cache {
        Mat xhat;
        Vec inv_std;
    };

    void init(ParamStore& params, const std::string& prefix, int d);
    Mat forward(const ParamStore& params, const Mat& X, Cache& cache) const;
    Mat backward(const ParamStore& params, const Cache& cache, const Mat& dY, GradBuffer& g) const;
};

// LSTM over a sequence laid out as (steps * batch) x in, rows grouped per
// step. Gate order [input, forget, cell, output]; state starts at zero.
struct LstmLayer {
    int Wx = -1, Wh = -1, b = -1;
    int in = 0, hidden = 0;

    struct Cache {
        int steps = 0, batch = 0;
        std::vector<Mat> gates;   // per step, batch x 4h post-activation
        std::vector<Mat> cell;    // per step, batch x h
        std::vector<Mat> tanh_c;  // per step, batch x h
        Mat h_all;                // (steps*batch) x h outputs
    };

    void init(ParamStore& params, const std::string& prefix, int in_dim, int hidden_dim);
    Mat forward(const ParamStore& params, const Mat& X, int steps, int batch, Cache& cache) const;
    Mat backward(const ParamStore& params, const Mat& X, const Cache& cache, const Mat& dY,
                 GradBuffer& g) const;
};

enum class AttentionMaskMode { InputIndicator, AttentionMask };

// Multi-head self-attention over tokens laid out time-major as
// (epochs * sats) x d with token (k, s) at row k*sats + s. A query at (k, s)
// attends to its own satellite's history (k' <= k) and, when sats > 1, to the
// other satellites at the same epoch. With sats == 1 this is plain causal
// self-attention. In AttentionMask mode keys at absent (epoch, satellite)
// slots are removed from the admissible set; queries with no admissible keys
// output zero. Attention probabilities are recomputed during backward.
struct MhaLayer {
    int Wq = -1, Wk = -1, Wv = -1, Wo = -1;
    int bq = -1, bk = -1, bv = -1, bo = -1;
    int dim = 0, heads = 0;

    struct Cache {
        int epochs = 0, sats = 0;
        Mat Q, K, V;  // (epochs*sats) x d
        Mat ctx;      // (epochs*sats) x d pre-output-projection
    };

    void init(ParamStore& params, const std::string& prefix, int d, int n_heads);
    Mat forward(const ParamStore& params, const Mat& X, int epochs, int sats,
                const std::vector<std::uint8_t>* present, AttentionMaskMode mode, Cache& cache) const;
    Mat backward(const ParamStore& params, const Mat& X, const Cache& cache, const Mat& dY,
                 const std::vector<std::uint8_t>* present, AttentionMaskMode mode, GradBuffer& g) const;
};

struct FfnLayer {
    LinearLayer lin1, lin2;

    void init(ParamStore& params, const std::string& prefix, int d, int hidden);
    // The hidden activation is recomputed in backward; only X is cached.
    Mat forward(const ParamStore& params, const Mat& X) const;
    Mat backward(const ParamStore& params, const Mat& X, const Mat& dY, GradBuffer& g) const;
};

enum class EncoderKind { Lstm, Mha };

// One encoder module: y = LN(x + Sub(x)); out = LN(y + FFN(y)).
struct EncoderBlock {
    EncoderKind kind = EncoderKind::Mha;
    LstmLayer lstm;
    MhaLayer mha;
    LayerNormLayer ln1, ln2;
    FfnLayer ffn;

    struct Cache {
        Mat input;
        LstmLayer::Cache lstm;
        MhaLayer::Cache mha;
        LayerNormLayer::Cache ln1, ln2;
        Mat after_ln1;  // FFN input
    };

    void init(ParamStore& params, const std::string& prefix, EncoderKind k, int d, int ffn_hidden,
              int heads);
    Mat forward(const ParamStore& params, const Mat& X, int epochs, int sats,
                const std::vector<std::uint8_t>* present, AttentionMaskMode mode, Cache& cache) const;
    Mat backward(const ParamStore& params, const Cache& cache, const Mat& dY,
                 const std::vector<std::uint8_t>* present, AttentionMaskMode mode, GradBuffer& g) const;
};

// Seeded initialization: Xavier-uniform weights, zero biases, unit layer-norm
// gains, LSTM forget-gate bias +1, small uniform positional tables. Draws
// follow registration order so a (config, seed) pair pins every parameter.
void init_parameters(ParamStore& params, std::uint64_t seed);

}  // namespace psrdet::nn
