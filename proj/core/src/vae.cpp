#include "dualarm/vae.hpp"

#include <cmath>
#include <stdexcept>

#include "json_util.hpp"

namespace dualarm {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

DenseLayer xavier_layer(int out, int in, Rng& rng) {
    DenseLayer layer;
    layer.w.resize(out, in);
    const double limit = std::sqrt(6.0 / (in + out));
    for (int r = 0; r < out; ++r)
        for (int c = 0; c < in; ++c) layer.w(r, c) = rng.uniform(-limit, limit);
    layer.b = VectorXd::Zero(out);
    return layer;
}

MatrixXd affine(const DenseLayer& l, const MatrixXd& h) {
    return (l.w * h).colwise() + l.b;
}

void check_input(const VaeModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.input_dim)
        throw std::invalid_argument("vae: input has wrong dimension");
    if (!x.allFinite()) throw std::invalid_argument("vae: non-finite input");
}

// Cached activations of one batched forward pass.
struct ForwardPass {
    std::vector<MatrixXd> enc_h;  // tanh outputs, one per encoder layer
    MatrixXd mu, logvar, sigma, zlat;
    std::vector<MatrixXd> dec_h;  // tanh outputs, one per hidden decoder layer
    MatrixXd xhat;
};

ForwardPass run_forward(const VaeModel& model, const MatrixXd& X, const MatrixXd& Eps) {
    ForwardPass f;
    const MatrixXd* h = &X;
    f.enc_h.reserve(model.encoder.size());
    for (const DenseLayer& l : model.encoder) {
        f.enc_h.push_back(affine(l, *h).array().tanh().matrix());
        h = &f.enc_h.back();
    }
    f.mu = affine(model.mu_head, *h);
    f.logvar = affine(model.logvar_head, *h);
    f.sigma = (0.5 * f.logvar).array().exp().matrix();
    f.zlat = f.mu + f.sigma.cwiseProduct(Eps);

    const MatrixXd* g = &f.zlat;
    f.dec_h.reserve(model.decoder.size() - 1);
    for (std::size_t i = 0; i + 1 < model.decoder.size(); ++i) {
        f.dec_h.push_back(affine(model.decoder[i], *g).array().tanh().matrix());
        g = &f.dec_h.back();
    }
    f.xhat = affine(model.decoder.back(), *g);
    return f;
}

ElboTerms terms_from_forward(const ForwardPass& f, const MatrixXd& X, double beta) {
    ElboTerms t;
    t.recon = (X - f.xhat).squaredNorm();
    t.kl = 0.5 * (f.mu.array().square() + f.sigma.array().square() - 1.0 -
                  f.logvar.array())
                     .sum();
    t.loss = t.recon + beta * t.kl;
    return t;
}

VaeGradients zero_like(const VaeModel& model) {
    VaeGradients g;
    const auto zero = [](const DenseLayer& l) {
        return DenseLayer{MatrixXd::Zero(l.w.rows(), l.w.cols()), VectorXd::Zero(l.b.size())};
    };
    for (const DenseLayer& l : model.encoder) g.encoder.push_back(zero(l));
    g.mu_head = zero(model.mu_head);
    g.logvar_head = zero(model.logvar_head);
    for (const DenseLayer& l : model.decoder) g.decoder.push_back(zero(l));
    return g;
}

void check_model_shapes(const VaeModel& model) {
    if (model.encoder.size() != model.hidden.size() ||
        model.decoder.size() != model.hidden.size() + 1)
        throw std::invalid_argument("vae: layer count does not match hidden widths");
}

}  // namespace

VaeModel make_vae(int input_dim, std::vector<int> hidden, std::uint64_t init_seed, double beta) {
    if (input_dim < 1 || hidden.empty())
        throw std::invalid_argument("make_vae: need input_dim >= 1 and at least one hidden layer");
    VaeModel model;
    model.input_dim = input_dim;
    model.hidden = std::move(hidden);
    model.beta = beta;
    Rng rng(init_seed);

    int in = input_dim;
    for (int width : model.hidden) {
        model.encoder.push_back(xavier_layer(width, in, rng));
        in = width;
    }
    model.mu_head = xavier_layer(model.latent_dim, in, rng);
    model.logvar_head = xavier_layer(model.latent_dim, in, rng);

    in = model.latent_dim;
    for (auto it = model.hidden.rbegin(); it != model.hidden.rend(); ++it) {
        model.decoder.push_back(xavier_layer(*it, in, rng));
        in = *it;
    }
    model.decoder.push_back(xavier_layer(input_dim, in, rng));

    model.norm_scale = VectorXd::Ones(input_dim);
    if (input_dim == 13) model.norm_scale.head<12>().setConstant(kPi);
    return model;
}

Eigen::VectorXd pose_vector(const Sample& s) {
    VectorXd x(13);
    for (int i = 0; i < kNumLinks; ++i) {
        x[i] = s.theta_a[i] / kPi;
        x[kNumLinks + i] = s.theta_b[i] / kPi;
    }
    x[12] = static_cast<double>(s.flag);
    return x;
}

Eigen::MatrixXd pose_matrix(const Dataset& ds) {
    MatrixXd X(13, static_cast<Eigen::Index>(ds.samples.size()));
    for (Eigen::Index c = 0; c < X.cols(); ++c)
        X.col(c) = pose_vector(ds.samples[static_cast<std::size_t>(c)]);
    return X;
}

JointConfig decoded_theta_b(const VaeModel& model, const Eigen::VectorXd& reconstruction) {
    if (reconstruction.size() != model.input_dim || model.input_dim != 13)
        throw std::invalid_argument("decoded_theta_b: expected a 13-d reconstruction");
    JointConfig q;
    for (int i = 0; i < kNumLinks; ++i) {
        const double scaled = reconstruction[kNumLinks + i] * model.norm_scale[kNumLinks + i];
        q[i] = std::min(std::max(scaled, -kPi), kPi);
    }
    return q;
}

EncodeResult encode(const VaeModel& model, const Eigen::VectorXd& x) {
    check_model_shapes(model);
    check_input(model, x);
    VectorXd h = x;
    for (const DenseLayer& l : model.encoder) h = (l.w * h + l.b).array().tanh().matrix();
    EncodeResult out;
    out.mu = model.mu_head.w * h + model.mu_head.b;
    out.logvar = model.logvar_head.w * h + model.logvar_head.b;
    return out;
}

Eigen::VectorXd decode(const VaeModel& model, const Eigen::Vector2d& z) {
    check_model_shapes(model);
    if (!z.allFinite()) throw std::invalid_argument("vae: non-finite latent point");
    VectorXd g = z;
    for (std::size_t i = 0; i + 1 < model.decoder.size(); ++i)
        g = (model.decoder[i].w * g + model.decoder[i].b).array().tanh().matrix();
    return model.decoder.back().w * g + model.decoder.back().b;
}

ElboTerms elbo_loss(const VaeModel& model, const Eigen::VectorXd& x, Rng& rng) {
    Eigen::Vector2d eps;
    for (int i = 0; i < 2; ++i) eps[i] = rng.normal();
    return elbo_loss_with_eps(model, x, eps);
}

ElboTerms elbo_loss_with_eps(const VaeModel& model, const Eigen::VectorXd& x,
                             const Eigen::Vector2d& eps) {
    check_input(model, x);
    return elbo_batch(model, x, eps);
}

ElboTerms elbo_batch(const VaeModel& model, const Eigen::MatrixXd& X,
                     const Eigen::MatrixXd& Eps) {
    check_model_shapes(model);
    if (X.rows() != model.input_dim || Eps.rows() != model.latent_dim ||
        Eps.cols() != X.cols())
        throw std::invalid_argument("elbo_batch: shape mismatch");
    return terms_from_forward(run_forward(model, X, Eps), X, model.beta);
}

VaeGradients vae_gradients(const VaeModel& model, const Eigen::MatrixXd& X,
                           const Eigen::MatrixXd& Eps) {
    check_model_shapes(model);
    const ForwardPass f = run_forward(model, X, Eps);
    VaeGradients g = zero_like(model);

    // Decoder, from the linear output layer backwards.
    MatrixXd delta = 2.0 * (f.xhat - X);  // dL/dxhat
    for (std::size_t li = model.decoder.size(); li-- > 0;) {
        const MatrixXd& input = li == 0 ? f.zlat : f.dec_h[li - 1];
        g.decoder[li].w.noalias() = delta * input.transpose();
        g.decoder[li].b = delta.rowwise().sum();
        MatrixXd dinput = model.decoder[li].w.transpose() * delta;
        if (li > 0) dinput.array() *= 1.0 - f.dec_h[li - 1].array().square();
        delta = std::move(dinput);
    }

    // Through the reparameterization into the two heads.
    const MatrixXd& dz = delta;
    const MatrixXd dmu = dz + model.beta * f.mu;
    const MatrixXd dlogvar =
        0.5 * dz.cwiseProduct(Eps).cwiseProduct(f.sigma) +
        (0.5 * model.beta) * (f.sigma.array().square() - 1.0).matrix();

    const MatrixXd& enc_top = f.enc_h.back();
    g.mu_head.w.noalias() = dmu * enc_top.transpose();
    g.mu_head.b = dmu.rowwise().sum();
    g.logvar_head.w.noalias() = dlogvar * enc_top.transpose();
    g.logvar_head.b = dlogvar.rowwise().sum();

    MatrixXd dh = model.mu_head.w.transpose() * dmu +
                  model.logvar_head.w.transpose() * dlogvar;
    for (std::size_t li = model.encoder.size(); li-- > 0;) {
        const MatrixXd dzl = dh.cwiseProduct((1.0 - f.enc_h[li].array().square()).matrix());
        const MatrixXd& input = li == 0 ? X : f.enc_h[li - 1];
        g.encoder[li].w.noalias() = dzl * input.transpose();
        g.encoder[li].b = dzl.rowwise().sum();
        if (li > 0) dh = model.encoder[li].w.transpose() * dzl;
    }
    return g;
}

namespace {

struct AdamState {
    VaeGradients m;
    VaeGradients v;
    int t = 0;
};

void adam_update_layer(DenseLayer& p, const DenseLayer& grad, DenseLayer& m, DenseLayer& v,
                       double lr_t, double inv_batch) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const auto gw = grad.w.array() * inv_batch;
    m.w.array() = b1 * m.w.array() + (1 - b1) * gw;
    v.w.array() = b2 * v.w.array() + (1 - b2) * gw.square();
    p.w.array() -= lr_t * m.w.array() / (v.w.array().sqrt() + eps);

    const auto gb = grad.b.array() * inv_batch;
    m.b.array() = b1 * m.b.array() + (1 - b1) * gb;
    v.b.array() = b2 * v.b.array() + (1 - b2) * gb.square();
    p.b.array() -= lr_t * m.b.array() / (v.b.array().sqrt() + eps);
}

}  // namespace

std::vector<double> train(VaeModel& model, const Eigen::MatrixXd& data,
                          const TrainConfig& config, std::uint64_t seed) {
    check_model_shapes(model);
    if (data.cols() < 1) throw std::invalid_argument("train: dataset is empty");
    if (data.rows() != model.input_dim)
        throw std::invalid_argument("train: data dimension does not match model input");
    if (config.batch_size < 1 || config.epochs < 1)
        throw std::invalid_argument("train: batch_size and epochs must be >= 1");

    model.train_seed = seed;
    Rng rng(seed);
    AdamState adam{zero_like(model), zero_like(model), 0};
    const Eigen::Index n = data.cols();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

    constexpr double b1 = 0.9, b2 = 0.999;
    std::vector<double> history;
    history.reserve(static_cast<std::size_t>(config.epochs));

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (Eigen::Index i = n - 1; i > 0; --i) {
            const auto j = static_cast<Eigen::Index>(
                rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }

        double epoch_loss = 0.0;
        for (Eigen::Index start = 0; start < n; start += config.batch_size) {
            const Eigen::Index b = std::min<Eigen::Index>(config.batch_size, n - start);
            MatrixXd X(model.input_dim, b);
            for (Eigen::Index c = 0; c < b; ++c)
                X.col(c) = data.col(order[static_cast<std::size_t>(start + c)]);
            MatrixXd Eps(model.latent_dim, b);
            for (Eigen::Index c = 0; c < b; ++c)
                for (int r = 0; r < model.latent_dim; ++r) Eps(r, c) = rng.normal();

            const ElboTerms terms = elbo_batch(model, X, Eps);
            if (!std::isfinite(terms.loss))
                throw std::runtime_error("vae training diverged (non-finite loss) at epoch " +
                                         std::to_string(epoch));
            epoch_loss += terms.loss;

            const VaeGradients grads = vae_gradients(model, X, Eps);
            ++adam.t;
            const double lr_t = config.learning_rate *
                                std::sqrt(1.0 - std::pow(b2, adam.t)) /
                                (1.0 - std::pow(b1, adam.t));
            const double inv_b = 1.0 / static_cast<double>(b);
            for (std::size_t li = 0; li < model.encoder.size(); ++li)
                adam_update_layer(model.encoder[li], grads.encoder[li], adam.m.encoder[li],
                                  adam.v.encoder[li], lr_t, inv_b);
            adam_update_layer(model.mu_head, grads.mu_head, adam.m.mu_head, adam.v.mu_head,
                              lr_t, inv_b);
            adam_update_layer(model.logvar_head, grads.logvar_head, adam.m.logvar_head,
                              adam.v.logvar_head, lr_t, inv_b);
            for (std::size_t li = 0; li < model.decoder.size(); ++li)
                adam_update_layer(model.decoder[li], grads.decoder[li], adam.m.decoder[li],
                                  adam.v.decoder[li], lr_t, inv_b);
        }
        history.push_back(epoch_loss / static_cast<double>(n));
    }
    return history;
}

SafetyLabel classify_latent(const VaeModel& model, const Eigen::Vector2d& z) {
    const VectorXd y = decode(model, z);
    return y[model.input_dim - 1] >= 0.5 ? SafetyLabel::Safe : SafetyLabel::Colliding;
}

namespace {

json layer_to_json(const DenseLayer& l) {
    json w = json::array();
    for (Eigen::Index r = 0; r < l.w.rows(); ++r)
        for (Eigen::Index c = 0; c < l.w.cols(); ++c) w.push_back(l.w(r, c));
    json b = json::array();
    for (Eigen::Index i = 0; i < l.b.size(); ++i) b.push_back(l.b(i));
    return json{{"rows", l.w.rows()}, {"cols", l.w.cols()}, {"w", w}, {"b", b}};
}

DenseLayer layer_from_json(const json& j) {
    DenseLayer l;
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const json& w = j.at("w");
    const json& b = j.at("b");
    if (static_cast<Eigen::Index>(w.size()) != rows * cols ||
        static_cast<Eigen::Index>(b.size()) != rows)
        throw std::runtime_error("model.json: layer size mismatch");
    l.w.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            l.w(r, c) = w[static_cast<std::size_t>(r * cols + c)].get<double>();
    l.b.resize(rows);
    for (Eigen::Index i = 0; i < rows; ++i) l.b(i) = b[static_cast<std::size_t>(i)].get<double>();
    return l;
}

}  // namespace

void save_model(const VaeModel& model, const std::string& path) {
    json enc = json::array(), dec = json::array(), scale = json::array();
    for (const DenseLayer& l : model.encoder) enc.push_back(layer_to_json(l));
    for (const DenseLayer& l : model.decoder) dec.push_back(layer_to_json(l));
    for (Eigen::Index i = 0; i < model.norm_scale.size(); ++i)
        scale.push_back(model.norm_scale(i));
    const json doc{{"input_dim", model.input_dim},
                   {"hidden", model.hidden},
                   {"latent_dim", model.latent_dim},
                   {"beta", model.beta},
                   {"norm_scale", scale},
                   {"train_seed", model.train_seed},
                   {"encoder", enc},
                   {"mu_head", layer_to_json(model.mu_head)},
                   {"logvar_head", layer_to_json(model.logvar_head)},
                   {"decoder", dec}};
    write_file_atomic(path, doc.dump() + "\n");
}

VaeModel load_model(const std::string& path) {
    const json doc = json::parse(read_file(path));
    VaeModel model;
    model.input_dim = doc.at("input_dim").get<int>();
    model.hidden = doc.at("hidden").get<std::vector<int>>();
    model.latent_dim = doc.at("latent_dim").get<int>();
    model.beta = doc.at("beta").get<double>();
    model.train_seed = doc.at("train_seed").get<std::uint64_t>();
    const json& scale = doc.at("norm_scale");
    model.norm_scale.resize(static_cast<Eigen::Index>(scale.size()));
    for (Eigen::Index i = 0; i < model.norm_scale.size(); ++i)
        model.norm_scale(i) = scale[static_cast<std::size_t>(i)].get<double>();
    for (const json& j : doc.at("encoder")) model.encoder.push_back(layer_from_json(j));
    model.mu_head = layer_from_json(doc.at("mu_head"));
    model.logvar_head = layer_from_json(doc.at("logvar_head"));
    for (const json& j : doc.at("decoder")) model.decoder.push_back(layer_from_json(j));
    check_model_shapes(model);
    return model;
}

}  // namespace dualarm
