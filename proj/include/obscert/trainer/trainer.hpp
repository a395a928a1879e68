#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "obscert/certify/checks.hpp"
#include "obscert/trainer/mlp.hpp"

namespace obscert::trainer {

struct TrainConfig {
    // network
    std::vector<int> hidden{64, 64, 32};
    double slope = 0.01;
    bool successor_q = true;  // one-hot of δ(q, L(x1, x2)) rather than q
    // loss
    double lambda_term = 1.5;
    double lambda_rec = 1.0;
    double lambda_beta = 2.5;
    int adversary_samples = 30;  // N
    int inner_samples = 16;      // M
    // data and optimization
    int epochs = 2000;
    int dataset_size = 100000;   // trajectory pairs
    double trajectory_fraction = 0.7;
    int batch_size = 256;
    double lr = 1e-3;
    double lr_min = 1e-5;
    double momentum = 0.9;
    double beta_init = 0.0;
    std::uint64_t seed = 0;
    // warm start: regression onto a DP table shifted by (T - t) beta_init + prefit_shift
    bool warm_start = true;
    int dp_resolution = 101;
    int prefit_steps = 20000;
    int prefit_batch = 512;
    double prefit_lr = 1e-3;
    double prefit_shift = 0.0;
    double overshoot_weight = 20.0;  // penalty on terminal overshoot during the pre-fit
    double prefit_uniform_fraction = 0.5;  // pre-fit points drawn uniformly on the domain, rest from the dataset
    // certification
    double target_p = 0.9;
    certify::CheckSettings validation;
    int calibration_per_dim = 99;
    certify::BoundSettings bound;
    int check_every = 0;  // epochs between early-stop checks, 0 = only at the end
    int threads = 0;

    void validate() const;
};

/// Point v at time k (k < T); the recursion links k and k + 1.
struct Sample {
    State x1, x2;
    int q = 0;
    int k = 0;
};

struct LossParts {
    double total = 0.0;
    double term = 0.0;
    double rec = 0.0;
    double beta = 0.0;
};

/// Disturbance draws shared by every sample of a batch.
struct Draws {
    std::vector<State> w2;  // N adversary draws from the truncated disturbance
    std::vector<State> w1;  // M inner draws
};

Draws draw_batch(const product::VerificationStructure& vs, const TrainConfig& cfg, Rng& rng);

/// Gradients of the raw components.
struct LossGrad {
    ParamVector term, rec;  // d L_term / d params, d L_rec / d params
    double rec_beta = 0.0;          // d L_rec / d beta (sink values move with beta)
    double beta_beta = 0.0;         // d L_beta / d beta
};

/// Raw L_term, L_rec, L_beta over the batch and the dynamically normalized
/// total, whose denominators are the current |L_k| held constant.
LossParts loss(const Mlp& net, double beta, const std::vector<Sample>& batch, const Draws& draws,
               const product::VerificationStructure& vs, const TrainConfig& cfg, LossGrad* grad = nullptr,
               double alpha = 1.0);

/// sum_k lambda_k L_k / max(|D_k|, 1e-8).
double normalized_total(const LossParts& parts, const LossParts& denominators, const TrainConfig& cfg);

/// Gradient of normalized_total(., at) at `at`.
void combine(const LossParts& at, const LossGrad& g, const TrainConfig& cfg, ParamVector& grad,
             double& dbeta);

/// Sink certificate value and its derivative in beta.
std::pair<double, double> sink_value_dbeta(double terminal, double alpha, double beta, int horizon, int t);

struct GradProbe {
    std::string component;  // term, rec, beta or total
    long index = -1;        // parameter index, -1 for beta
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;  // |a - n| / max(|a|, |n|, 1e-6)
};

/// Central differences with step h against the reverse-mode gradients at
/// `probes` random parameters plus beta, draws held fixed.
std::vector<GradProbe> gradient_check(const Mlp& net, double beta, const std::vector<Sample>& batch, const Draws& draws,
                                      const product::VerificationStructure& vs, const TrainConfig& cfg, int probes,
                                      std::uint64_t seed, double h = 1e-5);

/// Points along rolled-out trajectory pairs (x0, x0' uniform on X0, both
/// disturbances from the model) mixed with uniform domain samples.
std::vector<Sample> make_dataset(const product::VerificationStructure& vs, int trajectories, double trajectory_fraction,
                                 std::uint64_t seed);

struct LogRow {
    int epoch = 0;
    LossParts loss;
    double beta = 0.0;
    double bound_estimate = 0.0;
};

struct TrainResult {
    certify::Certificate cert;
    std::vector<LogRow> log;
    certify::CheckReport report;
    certify::BoundReport bound;
    bool certified = false;  // validation passed and bound >= target_p
    double prefit_rmse = 0.0;
    int epochs_run = 0;
    std::string status() const { return certified ? "CERTIFIED" : "UNCERTIFIED"; }
};

/// Shifts the offset to clear terminal violations and lowers beta by the
/// worst recursion residual on the given grid; repeats until clean.
void calibrate(certify::Certificate& cert, const product::VerificationStructure& vs,
               const certify::CheckSettings& settings, int rounds = 4);

TrainResult train(const product::VerificationStructure& vs, const TrainConfig& cfg, std::ostream* progress = nullptr);

void write_log_csv(std::ostream& os, const std::vector<LogRow>& log);

}  // namespace obscert::trainer
