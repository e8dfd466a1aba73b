#pragma once

#include "wipe/data/dataset.hpp"
#include "wipe/data/norm.hpp"
#include "wipe/nn/adam.hpp"
#include "wipe/nn/dense.hpp"
#include "wipe/nn/tcn.hpp"

#include <json.hpp>

#include <filesystem>
#include <vector>

namespace wipe {

struct TrainReport {
    std::vector<double> losses; // one per epoch
    std::vector<double> recon;  // VAE only: reconstruction MSE per epoch
    std::vector<double> kl;     // VAE only: mean KL per epoch
    double final_loss = 0.0;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
    nlohmann::json hyperparameters = nlohmann::json::object();

    std::string to_csv() const;
};

struct TrainingAborted : std::runtime_error {
    TrainingAborted(const std::string& what, TrainReport r)
        : std::runtime_error(what)
        , report(std::move(r))
    {
    }
    TrainReport report;
};

// Stats used by the learned components. ft_exp normalizes exploratory
// trajectories; ft_demo, xy and dh normalize demonstration data.
struct ModelStats {
    NormStats ft_exp;
    NormStats ft_demo;
    NormStats xy;
    NormStats dh;
};

nlohmann::json to_json(const ModelStats& s);
ModelStats model_stats_from_json(const nlohmann::json& j);

// Fits ft_demo on all demo rows, xy on all path points and dh on dh[1..].
void fit_demo_stats(ModelStats& s, const std::vector<Demonstration>& demos);

// ------------------------------------------------------------------ VAE

struct SpongeVAE {
    DenseLayer<double> enc_step;   // 6 -> 5, applied to every time step
    DenseLayer<double> enc_head;   // 2000 -> 10 (mu || logvar)
    DenseLayer<double> dec_expand; // 5 -> 2000, relu, dropout
    DenseLayer<double> dec_step;   // 5 -> 6, applied to every time step
    int steps = 400;
    int latent_dim = 5;
    double beta = 0.06;
    double dropout = 0.1;

    std::vector<VectorMap<double>> parameters();
};

SpongeVAE make_vae(Rng& rng, int steps = 400, int latent_dim = 5);

struct VaeGrad {
    DenseGrad<double> enc_step, enc_head, dec_expand, dec_step;
    explicit VaeGrad(const SpongeVAE& v);
    std::vector<VectorMap<double>> parameters();
};

struct VaeLoss {
    double total = 0.0;
    double recon = 0.0; // mse(reconstruction, input)
    double kl = 0.0;    // KL summed over latent dims, averaged over the batch
};

// x: B x (steps * 6) normalized trajectories, one per row.
void vae_encode(const SpongeVAE& vae, const MatrixXd& x, MatrixXd& mu, MatrixXd& logvar);

// z = mu + exp(logvar / 2) * eps.
MatrixXd reparameterize(const MatrixXd& mu, const MatrixXd& logvar, const MatrixXd& eps);

MatrixXd vae_decode(const SpongeVAE& vae, const MatrixXd& z);

// L_ssl = mse + beta * KL on a batch; accumulates gradients when grad is set.
VaeLoss vae_loss(const SpongeVAE& vae, const MatrixXd& x, bool training, Rng& rng, VaeGrad* grad = nullptr);

struct VaeTrainConfig {
    int epochs = 200;
    double lr = 1e-4;
    double beta = 0.06;
    int batch_size = 32;
};

// Trajectories must already be normalized (rows of x).
TrainReport pretrain_vae(SpongeVAE& vae, const MatrixXd& x, const VaeTrainConfig& cfg, Rng& rng);

// Stack of normalized trajectories, one per row.
MatrixXd flatten_trajectories(const std::vector<FTTrajectory>& t, const NormStats& stats);

// Posterior mean for one filtered (unnormalized) exploratory trajectory.
VectorXd encode_sponge(const SpongeVAE& vae, const MatrixXd& tau_exp, const NormStats& stats);

// ------------------------------------------------------- trajectory decoder

struct TrajDecoder {
    DenseLayer<double> layer; // 5 -> 2 * steps
    int steps = 25;
    double dropout = 0.1; // applied to the Z input during training

    std::vector<VectorMap<double>> parameters();
};

TrajDecoder make_traj_decoder(Rng& rng, int latent_dim = 5, int steps = 25);

// Normalized xy, steps x 2.
MatrixXd decode_traj(const TrajDecoder& dec, const VectorXd& z);

struct TrajTrainConfig {
    int epochs = 10000;
    double lr = 1e-3;
};

// z: one Z_sponge row per demo; targets are the demos' xy normalized with stats.xy.
TrainReport train_traj_decoder(TrajDecoder& dec, const MatrixXd& z, const std::vector<Demonstration>& demos,
                               const NormStats& xy_stats, const TrajTrainConfig& cfg, Rng& rng);

// ------------------------------------------------------------ FT feedback

struct FTFeedback {
    std::vector<TcnLayer<double>> tcn; // 6 -> 25 -> ... -> 25
    DenseLayer<double> ft_head;        // 25 -> 6 (Z_ft)
    DenseLayer<double> hidden;         // 11 -> 128, relu, dropout
    DenseLayer<double> out;            // 128 -> 1
    int window = 5;
    double dropout = 0.1;

    std::vector<VectorMap<double>> parameters();
};

struct FeedbackArch {
    int layers = 2;
    int channels = 25;
    int kernel_len = 3;
    int window = 5;
    int hidden = 128;
    double dropout = 0.1;
};

FTFeedback make_ft_feedback(Rng& rng, const FeedbackArch& arch = {}, int latent_dim = 5);

struct FeedbackGrad {
    std::vector<TcnGrad<double>> tcn;
    DenseGrad<double> ft_head, hidden, out;
    explicit FeedbackGrad(const FTFeedback& f);
    std::vector<VectorMap<double>> parameters();
};

// windows: (B * window) x 6 normalized, z: B x 5. Returns B x 1 normalized dh.
MatrixXd feedback_forward(const FTFeedback& fb, const MatrixXd& windows, const MatrixXd& z, bool training, Rng& rng);

// Mean squared error against targets (B x 1), with gradients when grad is set.
double feedback_loss(const FTFeedback& fb, const MatrixXd& windows, const MatrixXd& z, const MatrixXd& targets,
                     bool training, Rng& rng, FeedbackGrad* grad = nullptr);

struct FeedbackTrainConfig {
    int epochs = 2000;
    double lr = 1e-3;
};

struct FeedbackSet {
    MatrixXd windows; // (B * window) x 6 normalized
    MatrixXd z;       // B x 5
    MatrixXd targets; // B x 1 normalized dh
};

// Pairs from build_demo_windows over every demo; z_per_demo holds one row per demo.
FeedbackSet make_feedback_set(const std::vector<Demonstration>& demos, const MatrixXd& z_per_demo, int window,
                              const ModelStats& stats);

TrainReport train_ft_feedback(FTFeedback& fb, const FeedbackSet& data, const FeedbackTrainConfig& cfg, Rng& rng);

// Deterministic prediction in meters. window_normalized: window x 6.
double predict_dh(const FTFeedback& fb, const VectorXd& z_sponge, const MatrixXd& window_normalized,
                  const NormStats& dh_stats);

// ------------------------------------------------------------ checkpoints

nlohmann::json to_checkpoint(const SpongeVAE& v);
nlohmann::json to_checkpoint(const TrajDecoder& d);
nlohmann::json to_checkpoint(const FTFeedback& f);
SpongeVAE vae_from_checkpoint(const nlohmann::json& j);
TrajDecoder traj_decoder_from_checkpoint(const nlohmann::json& j);
FTFeedback ft_feedback_from_checkpoint(const nlohmann::json& j);

} // namespace wipe
