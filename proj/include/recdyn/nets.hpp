#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "recdyn/embedding.hpp"
#include "recdyn/rng.hpp"

namespace recdyn {

enum class Arch { FNN, RNN };

const char* arch_name(Arch arch);
Arch arch_from_name(std::string_view name);

enum class GInitPolicy { RandomNormal, Zero, Trainable };

/// One parameter set covering both architectures.
///
/// FNN:  x̂ = W_x · tanh(W_f · v + b_f) + b_x          with v the d·n delay vector
/// RNN:  g_k = tanh(W_g · (x_{k-1} ⊕ g_{k-1}) + b_g)  iterated oldest-to-newest
///       x̂  = W_x · tanh(W_f · (x_{t-1} ⊕ g_{t-1}) + b_f) + b_x
///
/// The FNN leaves W_g/b_g/g_init empty. g_init is the fixed start state
/// g_{t-d}; it only becomes a trainable parameter under GInitPolicy::Trainable.
struct NetParams {
    Arch arch = Arch::FNN;
    int n = 1; // observed dimension
    int d = 1; // delay count
    int h = 1; // hidden width (shared by f and g)

    Mat W_g; // h x (n+h)
    Vec b_g; // h
    Mat W_f; // h x (d*n) for FNN, h x (n+h) for RNN
    Vec b_f; // h
    Mat W_x; // n x h
    Vec b_x; // n
    Vec g_init; // h (RNN only)

    /// Trainable weight/bias count: FNN h·d·n + h + n·h + n, RNN
    /// h(n+h) + h + h(n+h) + h + n·h + n. Note the RNN count does not
    /// depend on d; g_init is excluded (it is only trained under Trainable).
    long parameter_count() const;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    double rms_decay = 0.9;
    double rms_epsilon = 1e-8;
    long max_epochs = 20000;
    long patience = 200;
    std::uint64_t seed = 0;
    GInitPolicy g_init_policy = GInitPolicy::RandomNormal;

    void validate() const;
};

struct TrainHistory {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    long best_epoch = 0; // 1-based epoch index with minimal validation loss
};

/// Fresh parameters: weights ~ N(0, 1/sqrt(fan_in)), biases zero, g_init per
/// policy (RandomNormal draws std 0.1, once per call). Deterministic in
/// config.seed.
NetParams init_params(Arch arch, int n, int d, int h, const TrainConfig& config);

/// Single-sample forward passes matching the definitions above. The RNN
/// variant takes the lags oldest first (x_{t-d}, ..., x_{t-1}) and returns
/// the prediction plus the hidden states g_{t-d+1}..g_{t-1} it visited.
Vec fnn_forward(const NetParams& params, const Vec& delay_vector);
std::pair<Vec, std::vector<Vec>> rnn_forward(const NetParams& params,
                                             const std::vector<Vec>& lags_oldest_first,
                                             const Vec& g_init);

/// Batched forward pass on delay-dataset inputs (rows are most-recent-first
/// delay vectors). Returns S x n predictions.
Mat batch_forward(const NetParams& params, const Mat& inputs);

/// Sum of squared errors over all samples and components (not averaged).
double loss(const Mat& predictions, const Mat& targets);

/// Exact reverse-mode gradient of `loss` over the batch, backpropagated
/// through all recursion steps for the RNN (shared W_g/b_g). The result has
/// the same shapes as `params`; g_init's gradient is filled only under
/// GInitPolicy::Trainable.
NetParams gradients(const NetParams& params, const Mat& inputs, const Mat& targets,
                    GInitPolicy policy = GInitPolicy::RandomNormal);

/// RMSprop: s <- rho*s + (1-rho)*g^2; theta <- theta - lr*g/(sqrt(s)+eps).
void rmsprop_step(NetParams& params, const NetParams& grads, NetParams& state,
                  const TrainConfig& config);

/// Full-batch training with early stopping on validation loss (restore-best
/// semantics). With an empty validation set the stopping rule runs on the
/// training loss instead. Losses are recorded per epoch after the update.
std::pair<NetParams, TrainHistory> train(Arch arch, int h, const DelayDataset& train_set,
                                         const DelayDataset& val_set, const TrainConfig& config);

/// Iterated multi-step forecast: each prediction is fed back as the newest
/// lag. `windows` holds one most-recent-first delay vector per row; the
/// result has one S x n matrix per horizon 1..k. The RNN re-runs its d-step
/// recursion from g_init on every slid window.
std::vector<Mat> iterated_forecast(const NetParams& params, const Mat& windows, int k);

} // namespace recdyn
