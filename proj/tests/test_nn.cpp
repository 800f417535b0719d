#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "psrdet/nn.hpp"

using namespace psrdet;
using nn::Mat;

namespace {

Mat random_mat(int rows, int cols, RngStream& rng, double scale = 1.0) {
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
    return m;
}

// Central finite differences over every parameter scalar against an
// analytically accumulated GradBuffer.
void check_param_gradients(nn::ParamStore& params, const std::function<double()>& loss_fn,
                           const nn::GradBuffer& analytic, double h = 1e-4) {
    for (int p = 0; p < params.count(); ++p) {
        Mat& m = params.value(p);
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            const double saved = m.data()[i];
            m.data()[i] = saved + h;
            const double up = loss_fn();
            m.data()[i] = saved - h;
            const double down = loss_fn();
            m.data()[i] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double an = analytic.grads[p].data()[i];
            const double err = std::abs(fd - an);
            const bool ok = err <= 1e-4 * std::max(std::abs(fd), std::abs(an)) || err <= 1e-7;
            if (!ok) {
                CAPTURE(params.name(p));
                CAPTURE(i);
                CAPTURE(fd);
                CAPTURE(an);
            }
            CHECK(ok);
        }
    }
}

// Same recipe for the input gradient returned by backward().
void check_input_gradient(Mat& X, const std::function<double()>& loss_fn, const Mat& dX,
                          double h = 1e-4) {
    for (Eigen::Index i = 0; i < X.size(); ++i) {
        const double saved = X.data()[i];
        X.data()[i] = saved + h;
        const double up = loss_fn();
        X.data()[i] = saved - h;
        const double down = loss_fn();
        X.data()[i] = saved;
        const double fd = (up - down) / (2.0 * h);
        const double an = dX.data()[i];
        const double err = std::abs(fd - an);
        CHECK((err <= 1e-4 * std::max(std::abs(fd), std::abs(an)) || err <= 1e-7));
    }
}

}  // namespace

TEST_CASE("linear layer gradients") {
    RngStream rng(1);
    nn::ParamStore params;
    nn::LinearLayer lin;
    lin.init(params, "lin", 4, 3);
    nn::init_parameters(params, 7);
    Mat X = random_mat(5, 4, rng);
    const Mat R = random_mat(5, 3, rng);

    const auto loss = [&] { return (lin.forward(params, X).array() * R.array()).sum(); };
    nn::GradBuffer g;
    g.init_like(params);
    const Mat dX = lin.backward(params, X, R, g);
    check_param_gradients(params, loss, g);
    check_input_gradient(X, loss, dX);
}

TEST_CASE("layer norm output is standardized before affine") {
    nn::ParamStore params;
    nn::LayerNormLayer ln;
    ln.init(params, "ln", 16);
    nn::init_parameters(params, 3);  // gamma = 1, beta = 0
    RngStream rng(2);
    Mat X = random_mat(6, 16, rng, 3.0);
    nn::LayerNormLayer::Cache cache;
    const Mat Y = ln.forward(params, X, cache);
    for (int t = 0; t < 6; ++t) {
        const double mean = Y.row(t).mean();
        const double var = (Y.row(t).array() - mean).square().mean();
        CHECK(std::abs(mean) <= 1e-5);
        CHECK(std::abs(var - 1.0) <= 1e-5);
    }
}

TEST_CASE("layer norm gradients") {
    RngStream rng(3);
    nn::ParamStore params;
    nn::LayerNormLayer ln;
    ln.init(params, "ln", 5);
    nn::init_parameters(params, 5);
    // Non-trivial affine parameters.
    params.value(ln.gamma) = random_mat(1, 5, rng).array() + 1.5;
    params.value(ln.beta) = random_mat(1, 5, rng);
    Mat X = random_mat(4, 5, rng, 2.0);
    const Mat R = random_mat(4, 5, rng);

    const auto loss = [&] {
        nn::LayerNormLayer::Cache cache;
        return (ln.forward(params, X, cache).array() * R.array()).sum();
    };
    nn::GradBuffer g;
    g.init_like(params);
    nn::LayerNormLayer::Cache cache;
    ln.forward(params, X, cache);
    const Mat dX = ln.backward(params, cache, R, g);
    check_param_gradients(params, loss, g);
    check_input_gradient(X, loss, dX);
}

TEST_CASE("lstm with zero weights emits zero hidden states") {
    nn::ParamStore params;
    nn::LstmLayer lstm;
    lstm.init(params, "z", 3, 4);
    // Leave everything zero-initialized.
    RngStream rng(4);
    const Mat X = random_mat(12, 3, rng);
    nn::LstmLayer::Cache cache;
    const Mat Y = lstm.forward(params, X, 4, 3, cache);
    CHECK(Y.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lstm causality is bit-exact") {
    nn::ParamStore params;
    nn::LstmLayer lstm;
    lstm.init(params, "c", 4, 4);
    nn::init_parameters(params, 9);
    RngStream rng(5);
    Mat X = random_mat(8, 4, rng);
    nn::LstmLayer::Cache cache;
    const Mat Y = lstm.forward(params, X, 8, 1, cache);
    Mat X2 = X;
    X2(5, 2) += 0.37;
    nn::LstmLayer::Cache cache2;
    const Mat Y2 = lstm.forward(params, X2, 8, 1, cache2);
    for (int k = 0; k < 5; ++k)
        for (int c = 0; c < 4; ++c) CHECK(Y(k, c) == Y2(k, c));
    CHECK(Y.row(5) != Y2.row(5));
}

TEST_CASE("lstm gradients (multi-step, multi-lane)") {
    RngStream rng(6);
    nn::ParamStore params;
    nn::LstmLayer lstm;
    lstm.init(params, "g", 3, 5);
    nn::init_parameters(params, 11);
    const int steps = 5, batch = 2;
    Mat X = random_mat(steps * batch, 3, rng);
    const Mat R = random_mat(steps * batch, 5, rng);

    const auto loss = [&] {
        nn::LstmLayer::Cache cache;
        return (lstm.forward(params, X, steps, batch, cache).array() * R.array()).sum();
    };
    nn::GradBuffer g;
    g.init_like(params);
    nn::LstmLayer::Cache cache;
    lstm.forward(params, X, steps, batch, cache);
    const Mat dX = lstm.backward(params, X, cache, R, g);
    check_param_gradients(params, loss, g);
    check_input_gradient(X, loss, dX);
}

TEST_CASE("single-token attention is the value path") {
    nn::ParamStore params;
    nn::MhaLayer mha;
    mha.init(params, "m", 6, 2);
    nn::init_parameters(params, 13);
    RngStream rng(7);
    const Mat X = random_mat(1, 6, rng);
    nn::MhaLayer::Cache cache;
    const Mat Y = mha.forward(params, X, 1, 1, nullptr, nn::AttentionMaskMode::InputIndicator, cache);
    Mat V = X * params.value(mha.Wv);
    V.rowwise() += params.value(mha.bv).row(0);
    Mat want = V * params.value(mha.Wo);
    want.rowwise() += params.value(mha.bo).row(0);
    CHECK((Y - want).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("causal masking: earlier outputs are bit-identical under later perturbations") {
    nn::ParamStore params;
    nn::MhaLayer mha;
    mha.init(params, "m", 8, 2);
    nn::init_parameters(params, 17);
    RngStream rng(8);
    Mat X = random_mat(7, 8, rng);
    nn::MhaLayer::Cache c1, c2;
    const Mat Y = mha.forward(params, X, 7, 1, nullptr, nn::AttentionMaskMode::InputIndicator, c1);
    Mat X2 = X;
    X2.row(4) += Mat::Constant(1, 8, 0.21);
    const Mat Y2 = mha.forward(params, X2, 7, 1, nullptr, nn::AttentionMaskMode::InputIndicator, c2);
    for (int k = 0; k < 4; ++k)
        for (int c = 0; c < 8; ++c) CHECK(Y(k, c) == Y2(k, c));
    CHECK(Y.row(4) != Y2.row(4));
}

TEST_CASE("late-fusion attention weights sum to one over the admissible set") {
    // Wv = 0 and bv = 1 make every value vector all-ones, so each output
    // coordinate equals the sum of attention weights; Wo = I reads it out.
    const int d = 4, epochs = 4, sats = 3;
    nn::ParamStore params;
    nn::MhaLayer mha;
    mha.init(params, "m", d, 2);
    nn::init_parameters(params, 19);
    params.value(mha.Wv).setZero();
    params.value(mha.bv).setOnes();
    params.value(mha.Wo) = Mat::Identity(d, d);
    params.value(mha.bo).setZero();
    RngStream rng(9);
    const Mat X = random_mat(epochs * sats, d, rng);

    SUBCASE("all present") {
        std::vector<std::uint8_t> present(epochs * sats, 1);
        nn::MhaLayer::Cache cache;
        const Mat Y =
            mha.forward(params, X, epochs, sats, &present, nn::AttentionMaskMode::AttentionMask, cache);
        for (Eigen::Index i = 0; i < Y.rows(); ++i)
            for (int c = 0; c < d; ++c) CHECK(Y(i, c) == doctest::Approx(1.0).epsilon(1e-9));
    }

    SUBCASE("masked keys leave the simplex intact; fully masked queries emit zero") {
        std::vector<std::uint8_t> present(epochs * sats, 0);
        // Satellite 1 present everywhere; satellite 0 only at epoch 2;
        // satellite 2 absent throughout.
        for (int k = 0; k < epochs; ++k) present[k * sats + 1] = 1;
        present[2 * sats + 0] = 1;
        nn::MhaLayer::Cache cache;
        const Mat Y =
            mha.forward(params, X, epochs, sats, &present, nn::AttentionMaskMode::AttentionMask, cache);
        // Query (0, satellite 0): no admissible key (own history absent until
        // epoch 2, no cross keys at epoch 0 besides satellite 1... which is
        // present, so the cross set is {sat 1}).
        for (int k = 0; k < epochs; ++k) {
            for (int s = 0; s < sats; ++s) {
                bool any = false;
                for (int kp = 0; kp <= k; ++kp) any |= present[kp * sats + s] != 0;
                for (int sp = 0; sp < sats; ++sp)
                    if (sp != s) any |= present[k * sats + sp] != 0;
                const double got = Y(k * sats + s, 0);
                if (any)
                    CHECK(got == doctest::Approx(1.0).epsilon(1e-9));
                else
                    CHECK(got == 0.0);
            }
        }
    }
}

TEST_CASE("mha gradients: early fusion") {
    RngStream rng(10);
    nn::ParamStore params;
    nn::MhaLayer mha;
    mha.init(params, "m", 6, 2);
    nn::init_parameters(params, 23);
    Mat X = random_mat(5, 6, rng);
    const Mat R = random_mat(5, 6, rng);
    const auto loss = [&] {
        nn::MhaLayer::Cache cache;
        return (mha.forward(params, X, 5, 1, nullptr, nn::AttentionMaskMode::InputIndicator, cache)
                    .array() *
                R.array())
            .sum();
    };
    nn::GradBuffer g;
    g.init_like(params);
    nn::MhaLayer::Cache cache;
    mha.forward(params, X, 5, 1, nullptr, nn::AttentionMaskMode::InputIndicator, cache);
    const Mat dX = mha.backward(params, X, cache, R, nullptr,
                                nn::AttentionMaskMode::InputIndicator, g);
    check_param_gradients(params, loss, g);
    check_input_gradient(X, loss, dX);
}

TEST_CASE("mha gradients: late fusion with presence masking") {
    RngStream rng(11);
    const int epochs = 4, sats = 3, d = 6;
    std::vector<std::uint8_t> present(epochs * sats, 1);
    present[1 * sats + 0] = 0;
    present[2 * sats + 2] = 0;
    present[3 * sats + 1] = 0;
    for (const auto mode :
         {nn::AttentionMaskMode::InputIndicator, nn::AttentionMaskMode::AttentionMask}) {
        nn::ParamStore params;
        nn::MhaLayer mha;
        mha.init(params, "m", d, 2);
        nn::init_parameters(params, 29);
        Mat X = random_mat(epochs * sats, d, rng);
        const Mat R = random_mat(epochs * sats, d, rng);
        const auto loss = [&] {
            nn::MhaLayer::Cache cache;
            return (mha.forward(params, X, epochs, sats, &present, mode, cache).array() * R.array())
                .sum();
        };
        nn::GradBuffer g;
        g.init_like(params);
        nn::MhaLayer::Cache cache;
        mha.forward(params, X, epochs, sats, &present, mode, cache);
        const Mat dX = mha.backward(params, X, cache, R, &present, mode, g);
        check_param_gradients(params, loss, g);
        check_input_gradient(X, loss, dX);
    }
}

TEST_CASE("ffn gradients") {
    RngStream rng(12);
    nn::ParamStore params;
    nn::FfnLayer ffn;
    ffn.init(params, "f", 4, 7);
    nn::init_parameters(params, 31);
    Mat X = random_mat(5, 4, rng);
    const Mat R = random_mat(5, 4, rng);
    const auto loss = [&] { return (ffn.forward(params, X).array() * R.array()).sum(); };
    nn::GradBuffer g;
    g.init_like(params);
    const Mat dX = ffn.backward(params, X, R, g);
    check_param_gradients(params, loss, g);
    check_input_gradient(X, loss, dX);
}

TEST_CASE("encoder block with zero sublayer and ffn weights is a double layer norm") {
    for (const auto kind : {nn::EncoderKind::Lstm, nn::EncoderKind::Mha}) {
        nn::ParamStore params;
        nn::EncoderBlock block;
        block.init(params, "b", kind, 6, 8, 2);
        // Zero everything, then restore the layer-norm gains.
        for (int i = 0; i < params.count(); ++i) params.value(i).setZero();
        params.value(block.ln1.gamma).setOnes();
        params.value(block.ln2.gamma).setOnes();

        RngStream rng(13);
        const Mat X = random_mat(4, 6, rng, 2.0);
        nn::EncoderBlock::Cache cache;
        const Mat Y = block.forward(params, X, 4, 1, nullptr,
                                    nn::AttentionMaskMode::InputIndicator, cache);

        nn::LayerNormLayer ln_ref;
        nn::ParamStore ref_params;
        ln_ref.init(ref_params, "r", 6);
        nn::init_parameters(ref_params, 1);
        nn::LayerNormLayer::Cache c1, c2;
        const Mat want = ln_ref.forward(ref_params, ln_ref.forward(ref_params, X, c1), c2);
        CHECK((Y - want).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("encoder block gradients, both kinds, late-fusion shape") {
    RngStream rng(14);
    const int epochs = 4, sats = 2, d = 6;
    std::vector<std::uint8_t> present(epochs * sats, 1);
    present[2 * sats + 1] = 0;
    for (const auto kind : {nn::EncoderKind::Lstm, nn::EncoderKind::Mha}) {
        nn::ParamStore params;
        nn::EncoderBlock block;
        block.init(params, "b", kind, d, 9, 2);
        nn::init_parameters(params, 37);
        Mat X = random_mat(epochs * sats, d, rng);
        const Mat R = random_mat(epochs * sats, d, rng);
        const auto mode = nn::AttentionMaskMode::AttentionMask;
        const auto loss = [&] {
            nn::EncoderBlock::Cache cache;
            return (block.forward(params, X, epochs, sats, &present, mode, cache).array() *
                    R.array())
                .sum();
        };
        nn::GradBuffer g;
        g.init_like(params);
        nn::EncoderBlock::Cache cache;
        block.forward(params, X, epochs, sats, &present, mode, cache);
        const Mat dX = block.backward(params, cache, R, &present, mode, g);
        check_param_gradients(params, loss, g);
        check_input_gradient(X, loss, dX);
    }
}

TEST_CASE("initialization is deterministic per seed and covers every tensor") {
    nn::ParamStore a, b;
    nn::EncoderBlock ba, bb;
    ba.init(a, "x", nn::EncoderKind::Mha, 8, 16, 2);
    bb.init(b, "x", nn::EncoderKind::Mha, 8, 16, 2);
    nn::init_parameters(a, 123);
    nn::init_parameters(b, 123);
    for (int i = 0; i < a.count(); ++i) CHECK(a.value(i) == b.value(i));
    nn::init_parameters(b, 124);
    bool any_diff = false;
    for (int i = 0; i < a.count(); ++i) any_diff |= a.value(i) != b.value(i);
    CHECK(any_diff);
}
