#include <doctest.h>

#include <cmath>
#include <vector>

#include "dualarm/vae.hpp"
#include "test_helpers.hpp"

using namespace dualarm;

namespace {

VaeModel tiny_model(std::uint64_t seed, int input_dim = 5) {
    return make_vae(input_dim, {3, 2}, seed, 1e-3);
}

void zero_weights(VaeModel& m, bool zero_biases = true) {
    const auto wipe = [&](DenseLayer& l) {
        l.w.setZero();
        if (zero_biases) l.b.setZero();
    };
    for (auto& l : m.encoder) wipe(l);
    wipe(m.mu_head);
    wipe(m.logvar_head);
    for (auto& l : m.decoder) wipe(l);
}

Eigen::VectorXd random_input(Rng& rng, int dim) {
    Eigen::VectorXd x(dim);
    for (int i = 0; i < dim; ++i) x[i] = rng.uniform(-1, 1);
    return x;
}

/// Hand-rolled forward pass with plain loops; mirrors nothing of the
/// library's Eigen expressions.
std::vector<double> manual_affine_tanh(const DenseLayer& l, const std::vector<double>& in,
                                       bool apply_tanh) {
    std::vector<double> out(static_cast<std::size_t>(l.w.rows()));
    for (Eigen::Index r = 0; r < l.w.rows(); ++r) {
        double s = l.b[r];
        for (Eigen::Index c = 0; c < l.w.cols(); ++c)
            s += l.w(r, c) * in[static_cast<std::size_t>(c)];
        out[static_cast<std::size_t>(r)] = apply_tanh ? std::tanh(s) : s;
    }
    return out;
}

/// All parameter blocks of a model, paired with the matching gradient block.
std::vector<std::pair<DenseLayer*, DenseLayer*>> parameter_blocks(VaeModel& m,
                                                                  VaeGradients& g) {
    std::vector<std::pair<DenseLayer*, DenseLayer*>> blocks;
    for (std::size_t i = 0; i < m.encoder.size(); ++i)
        blocks.push_back({&m.encoder[i], &g.encoder[i]});
    blocks.push_back({&m.mu_head, &g.mu_head});
    blocks.push_back({&m.logvar_head, &g.logvar_head});
    for (std::size_t i = 0; i < m.decoder.size(); ++i)
        blocks.push_back({&m.decoder[i], &g.decoder[i]});
    return blocks;
}

}  // namespace

TEST_SUITE("vae") {
    TEST_CASE("zero-weight model: mu is the mu-head bias for any input") {
        VaeModel m = tiny_model(1);
        zero_weights(m);
        m.mu_head.b << 0.7, -0.3;
        m.logvar_head.b << 0.1, 0.2;
        Rng rng(2);
        for (int i = 0; i < 10; ++i) {
            const EncodeResult e = encode(m, random_input(rng, 5));
            CHECK(e.mu[0] == 0.7);
            CHECK(e.mu[1] == -0.3);
            CHECK(e.logvar[0] == doctest::Approx(0.1));
            CHECK(e.logvar[1] == doctest::Approx(0.2));
        }
    }

    TEST_CASE("zero-weight model: decode returns the output bias") {
        VaeModel m = tiny_model(3);
        zero_weights(m);
        m.decoder.back().b << 1, 2, 3, 4, 5;
        const Eigen::VectorXd y = decode(m, {0.4, -0.9});
        for (int i = 0; i < 5; ++i) CHECK(y[i] == doctest::Approx(i + 1));
    }

    TEST_CASE("encode is deterministic") {
        const VaeModel m = tiny_model(4);
        Rng rng(5);
        const Eigen::VectorXd x = random_input(rng, 5);
        const EncodeResult a = encode(m, x);
        const EncodeResult b = encode(m, x);
        CHECK(a.mu == b.mu);
        CHECK(a.logvar == b.logvar);
    }

    TEST_CASE("tiny model forward passes match the manual oracle to 1e-12") {
        const VaeModel m = tiny_model(7);
        Rng rng(8);
        for (int trial = 0; trial < 20; ++trial) {
            const Eigen::VectorXd x = random_input(rng, 5);
            std::vector<double> h(x.data(), x.data() + x.size());
            for (const DenseLayer& l : m.encoder) h = manual_affine_tanh(l, h, true);
            const auto mu = manual_affine_tanh(m.mu_head, h, false);
            const auto lv = manual_affine_tanh(m.logvar_head, h, false);
            const EncodeResult e = encode(m, x);
            for (int i = 0; i < 2; ++i) {
                CHECK(std::abs(e.mu[i] - mu[static_cast<std::size_t>(i)]) < 1e-12);
                CHECK(std::abs(e.logvar[i] - lv[static_cast<std::size_t>(i)]) < 1e-12);
            }

            const Eigen::Vector2d z{rng.uniform(-2, 2), rng.uniform(-2, 2)};
            std::vector<double> g{z[0], z[1]};
            for (std::size_t li = 0; li + 1 < m.decoder.size(); ++li)
                g = manual_affine_tanh(m.decoder[li], g, true);
            g = manual_affine_tanh(m.decoder.back(), g, false);
            const Eigen::VectorXd y = decode(m, z);
            for (int i = 0; i < 5; ++i)
                CHECK(std::abs(y[i] - g[static_cast<std::size_t>(i)]) < 1e-12);
        }
    }

    TEST_CASE("elbo: standard-normal posterior has zero KL") {
        VaeModel m = tiny_model(9);
        zero_weights(m);  // mu = 0, logvar = 0 for every input
        Rng rng(10);
        const ElboTerms t = elbo_loss(m, random_input(rng, 5), rng);
        CHECK(t.kl == 0.0);
        CHECK(t.loss == doctest::Approx(t.recon));
    }

    TEST_CASE("elbo: mu=(1,0), logvar=0 contributes exactly beta/2") {
        VaeModel m = tiny_model(11);
        zero_weights(m);
        m.mu_head.b << 1.0, 0.0;
        Rng rng(12);
        const Eigen::VectorXd x = random_input(rng, 5);
        const ElboTerms t = elbo_loss_with_eps(m, x, Eigen::Vector2d::Zero());
        CHECK(t.kl == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(t.loss - t.recon == doctest::Approx(m.beta * 0.5).epsilon(1e-12));
    }

    TEST_CASE("elbo matches a scalar-by-scalar recomputation to 1e-10") {
        const VaeModel m = tiny_model(13);
        Rng rng(14);
        for (int trial = 0; trial < 20; ++trial) {
            const Eigen::VectorXd x = random_input(rng, 5);
            const Eigen::Vector2d eps{rng.normal(), rng.normal()};
            const ElboTerms t = elbo_loss_with_eps(m, x, eps);

            std::vector<double> h(x.data(), x.data() + x.size());
            for (const DenseLayer& l : m.encoder) h = manual_affine_tanh(l, h, true);
            const auto mu = manual_affine_tanh(m.mu_head, h, false);
            const auto lv = manual_affine_tanh(m.logvar_head, h, false);
            std::vector<double> z(2);
            double kl = 0;
            for (int i = 0; i < 2; ++i) {
                const double sigma = std::exp(0.5 * lv[static_cast<std::size_t>(i)]);
                z[static_cast<std::size_t>(i)] =
                    mu[static_cast<std::size_t>(i)] + sigma * eps[i];
                kl += 0.5 * (mu[static_cast<std::size_t>(i)] * mu[static_cast<std::size_t>(i)] +
                             sigma * sigma - 1.0 - lv[static_cast<std::size_t>(i)]);
            }
            std::vector<double> g = z;
            for (std::size_t li = 0; li + 1 < m.decoder.size(); ++li)
                g = manual_affine_tanh(m.decoder[li], g, true);
            g = manual_affine_tanh(m.decoder.back(), g, false);
            double recon = 0;
            for (int i = 0; i < 5; ++i) {
                const double d = x[i] - g[static_cast<std::size_t>(i)];
                recon += d * d;
            }
            CHECK(std::abs(t.recon - recon) < 1e-10);
            CHECK(std::abs(t.kl - kl) < 1e-10);
            CHECK(std::abs(t.loss - (recon + m.beta * kl)) < 1e-10);
        }
    }

    TEST_CASE("KL is non-negative for random models and inputs") {
        Rng rng(15);
        for (int trial = 0; trial < 50; ++trial) {
            const VaeModel m = tiny_model(100 + static_cast<std::uint64_t>(trial));
            const ElboTerms t =
                elbo_loss_with_eps(m, random_input(rng, 5), {rng.normal(), rng.normal()});
            CHECK(t.kl >= 0.0);
        }
    }

    TEST_CASE("analytic gradients match central finite differences (h=1e-5)") {
        VaeModel m = tiny_model(16, 7);
        Rng rng(17);
        Eigen::MatrixXd X(7, 3);
        for (int c = 0; c < 3; ++c) X.col(c) = random_input(rng, 7);
        Eigen::MatrixXd Eps(2, 3);
        for (int c = 0; c < 3; ++c)
            for (int r = 0; r < 2; ++r) Eps(r, c) = rng.normal();

        VaeGradients grads = vae_gradients(m, X, Eps);
        const double h = 1e-5;
        double max_rel = 0;
        for (auto [param, grad] : parameter_blocks(m, grads)) {
            for (Eigen::Index r = 0; r < param->w.rows(); ++r) {
                for (Eigen::Index c = 0; c < param->w.cols() + 1; ++c) {
                    double* slot = c < param->w.cols() ? &param->w(r, c) : &param->b(r);
                    const double analytic =
                        c < param->w.cols() ? grad->w(r, c) : grad->b(r);
                    const double saved = *slot;
                    *slot = saved + h;
                    const double lp = elbo_batch(m, X, Eps).loss;
                    *slot = saved - h;
                    const double lm = elbo_batch(m, X, Eps).loss;
                    *slot = saved;
                    const double numeric = (lp - lm) / (2 * h);
                    const double rel = std::abs(analytic - numeric) /
                                       std::max({1e-6, std::abs(analytic), std::abs(numeric)});
                    max_rel = std::max(max_rel, rel);
                }
            }
        }
        MESSAGE("max relative gradient error: ", max_rel);
        CHECK(max_rel < 1e-4);
    }

    TEST_CASE("training memorizes a single repeated sample") {
        VaeModel m = make_vae(13, {32, 16}, 21, 1e-3);
        Rng rng(22);
        Eigen::MatrixXd X(13, 1);
        X.col(0) = random_input(rng, 13);
        TrainConfig cfg;
        cfg.batch_size = 1;
        cfg.epochs = 2000;  // one step per epoch on a single sample
        train(m, X, cfg, 23);
        const Eigen::Vector2d mu = encode(m, X.col(0)).mu;
        const double recon = (X.col(0) - decode(m, mu)).squaredNorm();
        MESSAGE("memorization recon: ", recon);
        CHECK(recon < 1e-3);
    }

    TEST_CASE("training is bitwise deterministic for a fixed seed") {
        const auto run = [](std::uint64_t seed) {
            VaeModel m = make_vae(13, {16, 8}, 31, 1e-3);
            Rng rng(32);
            Eigen::MatrixXd X(13, 40);
            for (int c = 0; c < 40; ++c) X.col(c) = random_input(rng, 13);
            TrainConfig cfg;
            cfg.epochs = 30;
            cfg.batch_size = 8;
            train(m, X, cfg, seed);
            return m;
        };
        const VaeModel a = run(7), b = run(7), c = run(8);
        for (std::size_t i = 0; i < a.encoder.size(); ++i)
            CHECK(a.encoder[i].w == b.encoder[i].w);
        CHECK(a.mu_head.w == b.mu_head.w);
        CHECK(a.logvar_head.w == b.logvar_head.w);
        for (std::size_t i = 0; i < a.decoder.size(); ++i)
            CHECK(a.decoder[i].w == b.decoder[i].w);
        CHECK(a.mu_head.w != c.mu_head.w);
    }

    TEST_CASE("overfit on a 50-point corpus: mu-reconstruction stays near training loss") {
        VaeModel m = make_vae(13, {32, 16}, 41, 1e-3);
        Rng rng(42);
        Eigen::MatrixXd X(13, 50);
        for (int c = 0; c < 50; ++c) X.col(c) = random_input(rng, 13);
        TrainConfig cfg;
        cfg.epochs = 600;
        cfg.batch_size = 50;
        const std::vector<double> history = train(m, X, cfg, 43);
        double mse = 0;
        for (int c = 0; c < 50; ++c)
            mse += (X.col(c) - decode(m, encode(m, X.col(c)).mu)).squaredNorm();
        mse /= 50;
        MESSAGE("overfit mse=", mse, " converged loss=", history.back());
        CHECK(mse < 10 * history.back());
    }

    TEST_CASE("per-epoch loss decreases through a 10-epoch smoothing window") {
        VaeModel m = make_vae(13, {32, 16}, 51, 1e-3);
        Rng rng(52);
        Eigen::MatrixXd X(13, 400);
        for (int c = 0; c < 400; ++c) X.col(c) = random_input(rng, 13);
        TrainConfig cfg;
        cfg.epochs = 60;
        const std::vector<double> history = train(m, X, cfg, 53);
        std::vector<double> smoothed;
        for (std::size_t i = 0; i + 10 <= history.size(); ++i) {
            double s = 0;
            for (std::size_t j = i; j < i + 10; ++j) s += history[j];
            smoothed.push_back(s / 10);
        }
        for (std::size_t i = 0; i + 1 < smoothed.size(); ++i)
            CHECK(smoothed[i + 1] <= smoothed[i] * 1.01 + 1e-9);
    }

    TEST_CASE("divergent training aborts with a diagnostic") {
        VaeModel m = make_vae(13, {16, 8}, 61, 1e-3);
        Rng rng(62);
        Eigen::MatrixXd X(13, 20);
        for (int c = 0; c < 20; ++c) X.col(c) = random_input(rng, 13);
        TrainConfig cfg;
        cfg.learning_rate = 1e5;
        cfg.epochs = 50;
        CHECK_THROWS_AS(train(m, X, cfg, 63), std::runtime_error);
    }

    TEST_CASE("shape and finiteness violations are rejected") {
        const VaeModel m = tiny_model(71);
        CHECK_THROWS_AS(encode(m, Eigen::VectorXd::Zero(4)), std::invalid_argument);
        CHECK_THROWS_AS(encode(m, Eigen::VectorXd::Zero(6)), std::invalid_argument);
        Eigen::VectorXd bad = Eigen::VectorXd::Zero(5);
        bad[2] = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(encode(m, bad), std::invalid_argument);
        CHECK_THROWS_AS(
            decode(m, Eigen::Vector2d(std::numeric_limits<double>::infinity(), 0)),
            std::invalid_argument);
        VaeModel broken = m;
        broken.decoder.pop_back();
        CHECK_THROWS_AS(decode(broken, Eigen::Vector2d::Zero()), std::invalid_argument);
    }

    TEST_CASE("classify_latent thresholds the reconstructed flag at 0.5") {
        VaeModel m = make_vae(13, {4, 3}, 81, 1e-3);
        zero_weights(m);
        m.decoder.back().b[12] = 0.5 + 1e-9;
        CHECK(classify_latent(m, {0, 0}) == SafetyLabel::Safe);
        m.decoder.back().b[12] = 0.5 - 1e-9;
        CHECK(classify_latent(m, {0, 0}) == SafetyLabel::Colliding);
        m.decoder.back().b[12] = 0.5;
        CHECK(classify_latent(m, {0, 0}) == SafetyLabel::Safe);
    }

    TEST_CASE("pose vectors normalize angles by pi and append the flag") {
        Sample s;
        for (int i = 0; i < 6; ++i) {
            s.theta_a[i] = kPi / (i + 1);
            s.theta_b[i] = -kPi / (i + 2);
        }
        s.flag = 0;
        s.collisions.push_back({3, Eigen::Vector3d::Zero()});
        const Eigen::VectorXd x = pose_vector(s);
        REQUIRE(x.size() == 13);
        for (int i = 0; i < 6; ++i) {
            CHECK(x[i] == doctest::Approx(1.0 / (i + 1)));
            CHECK(x[6 + i] == doctest::Approx(-1.0 / (i + 2)));
        }
        CHECK(x[12] == 0.0);
        CHECK(x.head<12>().cwiseAbs().maxCoeff() <= 1.0);
    }

    TEST_CASE("decoded_theta_b denormalizes and clamps the arm_2 block") {
        const VaeModel m = make_vae(13, {4, 3}, 91, 1e-3);
        Eigen::VectorXd y = Eigen::VectorXd::Zero(13);
        y[6] = 0.5;    // -> pi/2
        y[7] = 1.4;    // -> clamped to pi
        y[8] = -2.0;   // -> clamped to -pi
        const JointConfig q = decoded_theta_b(m, y);
        CHECK(q[0] == doctest::Approx(kPi / 2));
        CHECK(q[1] == doctest::Approx(kPi));
        CHECK(q[2] == doctest::Approx(-kPi));
        CHECK(q[3] == 0.0);
    }

    TEST_CASE("model.json round trip preserves weights exactly") {
        testutil::ScratchDir scratch("vae_json");
        VaeModel m = make_vae(13, {8, 4}, 95, 2e-3);
        m.train_seed = 12345;
        const std::string path = scratch.file("model.json");
        save_model(m, path);
        const VaeModel back = load_model(path);
        CHECK(back.input_dim == m.input_dim);
        CHECK(back.hidden == m.hidden);
        CHECK(back.beta == m.beta);
        CHECK(back.train_seed == m.train_seed);
        CHECK(back.norm_scale == m.norm_scale);
        for (std::size_t i = 0; i < m.encoder.size(); ++i) {
            CHECK(back.encoder[i].w == m.encoder[i].w);
            CHECK(back.encoder[i].b == m.encoder[i].b);
        }
        CHECK(back.mu_head.w == m.mu_head.w);
        CHECK(back.logvar_head.w == m.logvar_head.w);
        for (std::size_t i = 0; i < m.decoder.size(); ++i)
            CHECK(back.decoder[i].w == m.decoder[i].w);

        Rng rng(96);
        const Eigen::VectorXd x = random_input(rng, 13);
        CHECK(encode(back, x).mu == encode(m, x).mu);
    }
}
