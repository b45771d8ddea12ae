#ifndef DUALARM_VAE_HPP
#define DUALARM_VAE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "dualarm/dataset.hpp"
#include "dualarm/rng.hpp"

namespace dualarm {

enum class SafetyLabel { Safe, Colliding };

struct DenseLayer {
    Eigen::MatrixXd w;  // out x in
    Eigen::VectorXd b;  // out
};

/**
 * Variational autoencoder over normalized pose-pair vectors.
 *
 * Input layout: 12 joint angles scaled by 1/pi (arm_1 then arm_2) followed
 * by the collision flag in {0,1}. Encoder runs tanh hidden layers of the
 * listed widths into 2-D mu / logvar heads; the decoder mirrors the widths
 * back to the input with a linear output layer. Gradients are computed by
 * handwritten backpropagation; Eigen supplies only the matrix arithmetic.
 */
struct VaeModel {
    int input_dim = 13;
    std::vector<int> hidden = {450, 250, 100};
    int latent_dim = 2;
    std::vector<DenseLayer> encoder;  // tanh layers, hidden.size() of them
    DenseLayer mu_head;               // linear
    DenseLayer logvar_head;           // linear
    std::vector<DenseLayer> decoder;  // tanh layers then a linear output layer
    Eigen::VectorXd norm_scale;       // per-component input scale (pi for angles, 1 for flag)
    double beta = 1e-3;               // KL weight
    std::uint64_t train_seed = 0;
};

/// Freshly initialized model (Xavier-uniform weights, zero biases).
VaeModel make_vae(int input_dim, std::vector<int> hidden, std::uint64_t init_seed,
                  double beta = 1e-3);

/// Normalized 13-vector for one sample: angles/pi, then the flag.
Eigen::VectorXd pose_vector(const Sample& s);

/// All samples as columns of an input_dim x N matrix.
Eigen::MatrixXd pose_matrix(const Dataset& ds);

/// Denormalize the arm_2 block (components 6..11) of a reconstruction,
/// clamped to [-pi, pi].
JointConfig decoded_theta_b(const VaeModel& model, const Eigen::VectorXd& reconstruction);

struct EncodeResult {
    Eigen::Vector2d mu;
    Eigen::Vector2d logvar;
};

/// Deterministic encoder pass; mu is the point embedding used at inference.
EncodeResult encode(const VaeModel& model, const Eigen::VectorXd& x);

/// Deterministic decoder pass (unclamped reconstruction).
Eigen::VectorXd decode(const VaeModel& model, const Eigen::Vector2d& z);

struct ElboTerms {
    double loss = 0;   // recon + beta * kl
    double recon = 0;  // ||x - x'||^2
    double kl = 0;     // 0.5 * sum(mu^2 + sigma^2 - 1 - logvar)
};

/// Single-sample ELBO with reparameterized z = mu + sigma .* eps, eps ~ N(0, I)
/// drawn from rng.
ElboTerms elbo_loss(const VaeModel& model, const Eigen::VectorXd& x, Rng& rng);

/// Same with caller-supplied noise; the deterministic core used by training
/// and by finite-difference gradient checks.
ElboTerms elbo_loss_with_eps(const VaeModel& model, const Eigen::VectorXd& x,
                             const Eigen::Vector2d& eps);

/// Batched ELBO, summed over the columns of X (noise column-matched in Eps).
ElboTerms elbo_batch(const VaeModel& model, const Eigen::MatrixXd& X,
                     const Eigen::MatrixXd& Eps);

/// Gradients of elbo_batch(...).loss with respect to every parameter.
struct VaeGradients {
    std::vector<DenseLayer> encoder;
    DenseLayer mu_head;
    DenseLayer logvar_head;
    std::vector<DenseLayer> decoder;
};
VaeGradients vae_gradients(const VaeModel& model, const Eigen::MatrixXd& X,
                           const Eigen::MatrixXd& Eps);

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 128;
    int epochs = 200;
};

/**
 * Minibatch Adam on the mean ELBO. Deterministic given (model init, data,
 * config, seed): shuffles, noise draws, and updates all come from the seed.
 * Returns per-epoch mean loss; throws std::runtime_error if the loss goes
 * non-finite.
 */
std::vector<double> train(VaeModel& model, const Eigen::MatrixXd& data,
                          const TrainConfig& config, std::uint64_t seed);

/// Decoder-based label for an arbitrary latent point: safe iff the
/// reconstructed flag component is >= 0.5.
SafetyLabel classify_latent(const VaeModel& model, const Eigen::Vector2d& z);

/// model.json round trip (layer dims, row-major weights, beta, norm scale, seed).
void save_model(const VaeModel& model, const std::string& path);
VaeModel load_model(const std::string& path);

}  // namespace dualarm

#endif  // DUALARM_VAE_HPP
