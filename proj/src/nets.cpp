#include "recdyn/nets.hpp"

#include <cmath>
#include <limits>

namespace recdyn {

const char* arch_name(Arch arch) { return arch == Arch::FNN ? "fnn" : "rnn"; }

Arch arch_from_name(std::string_view name) {
    if (name == "fnn") return Arch::FNN;
    if (name == "rnn") return Arch::RNN;
    throw ConfigError("unknown architecture: " + std::string(name));
}

long NetParams::parameter_count() const {
    const long wx = static_cast<long>(n) * h + n;
    if (arch == Arch::FNN) return static_cast<long>(h) * d * n + h + wx;
    return 2 * (static_cast<long>(h) * (n + h) + h) + wx;
}

void TrainConfig::validate() const {
    if (!(rms_decay > 0.0 && rms_decay < 1.0)) throw ConfigError("rms_decay must lie in (0,1)");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(rms_epsilon > 0.0)) throw ConfigError("rms_epsilon must be positive");
}

namespace {

Mat random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
    return m;
}

NetParams zeros_like(const NetParams& p) {
    NetParams z = p;
    z.W_g.setZero();
    z.b_g.setZero();
    z.W_f.setZero();
    z.b_f.setZero();
    z.W_x.setZero();
    z.b_x.setZero();
    z.g_init.setZero();
    return z;
}

/// Reusable forward/backward workspace so the training loop allocates once.
struct BatchWork {
    Mat pred;            // S x n
    Mat err;             // S x n, 2*(pred - target)
    Mat f_act;           // S x h, tanh layer feeding W_x
    Mat d_f;             // S x h
    std::vector<Mat> g;  // RNN hidden states g_{t-d}..g_{t-1}, each S x h
    Mat d_g;             // S x h
    Mat d_z;             // S x h

    void forward(const NetParams& p, const Mat& inputs) {
        const Eigen::Index s_count = inputs.rows();
        const int n = p.n;
        const int h = p.h;
        if (p.arch == Arch::FNN) {
            f_act.noalias() = inputs * p.W_f.transpose();
            f_act.rowwise() += p.b_f.transpose();
            f_act = f_act.array().tanh();
        } else {
            g.resize(static_cast<std::size_t>(p.d));
            g[0] = p.g_init.transpose().replicate(s_count, 1);
            const auto w_gx = p.W_g.leftCols(n);
            const auto w_gg = p.W_g.rightCols(h);
            for (int j = 1; j < p.d; ++j) {
                // g_{t-d+j} from lag x_{t-d+j-1}, stored in input block d-j+1
                const auto lag = inputs.middleCols(static_cast<Eigen::Index>(p.d - j) * n, n);
                g[static_cast<std::size_t>(j)].noalias() = lag * w_gx.transpose();
                g[static_cast<std::size_t>(j)].noalias() +=
                    g[static_cast<std::size_t>(j - 1)] * w_gg.transpose();
                g[static_cast<std::size_t>(j)].rowwise() += p.b_g.transpose();
                g[static_cast<std::size_t>(j)] = g[static_cast<std::size_t>(j)].array().tanh();
            }
            f_act.noalias() = inputs.leftCols(n) * p.W_f.leftCols(n).transpose();
            f_act.noalias() += g[static_cast<std::size_t>(p.d - 1)] * p.W_f.rightCols(h).transpose();
            f_act.rowwise() += p.b_f.transpose();
            f_act = f_act.array().tanh();
        }
        pred.noalias() = f_act * p.W_x.transpose();
        pred.rowwise() += p.b_x.transpose();
    }

    // Backward pass for d(loss)/d(params); forward() must have run on the
    // same (params, inputs).
    void backward(const NetParams& p, const Mat& inputs, const Mat& targets,
                  GInitPolicy policy, NetParams& grads) {
        const int n = p.n;
        const int h = p.h;
        err = 2.0 * (pred - targets);
        grads.W_x.noalias() = err.transpose() * f_act;
        grads.b_x = err.colwise().sum();
        d_f.noalias() = err * p.W_x;
        d_f.array() *= 1.0 - f_act.array().square();
        grads.b_f = d_f.colwise().sum();
        if (p.arch == Arch::FNN) {
            grads.W_f.noalias() = d_f.transpose() * inputs;
            return;
        }
        grads.W_f.leftCols(n).noalias() = d_f.transpose() * inputs.leftCols(n);
        grads.W_f.rightCols(h).noalias() =
            d_f.transpose() * g[static_cast<std::size_t>(p.d - 1)];
        grads.W_g.setZero();
        grads.b_g.setZero();
        d_g.noalias() = d_f * p.W_f.rightCols(h);
        const auto w_gg = p.W_g.rightCols(h);
        for (int j = p.d - 1; j >= 1; --j) {
            d_z = d_g;
            d_z.array() *= 1.0 - g[static_cast<std::size_t>(j)].array().square();
            const auto lag = inputs.middleCols(static_cast<Eigen::Index>(p.d - j) * n, n);
            grads.W_g.leftCols(n).noalias() += d_z.transpose() * lag;
            grads.W_g.rightCols(h).noalias() +=
                d_z.transpose() * g[static_cast<std::size_t>(j - 1)];
            grads.b_g += d_z.colwise().sum().transpose();
            d_g.noalias() = d_z * w_gg;
        }
        if (policy == GInitPolicy::Trainable) grads.g_init = d_g.colwise().sum();
    }
};

void check_input_shape(const NetParams& p, const Mat& inputs) {
    if (inputs.cols() != static_cast<Eigen::Index>(p.d) * p.n)
        throw ShapeMismatchError("input width " + std::to_string(inputs.cols()) +
                                 " does not match d*n = " + std::to_string(p.d * p.n));
}

} // namespace

NetParams init_params(Arch arch, int n, int d, int h, const TrainConfig& config) {
    if (n < 1 || d < 1 || h < 1) throw ConfigError("n, d, h must all be >= 1");
    Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(arch == Arch::RNN ? 2 : 1)));
    NetParams p;
    p.arch = arch;
    p.n = n;
    p.d = d;
    p.h = h;
    if (arch == Arch::RNN) {
        p.W_g = random_matrix(h, n + h, rng);
        p.b_g = Vec::Zero(h);
        p.W_f = random_matrix(h, n + h, rng);
    } else {
        p.W_g.resize(0, 0);
        p.b_g.resize(0);
        p.W_f = random_matrix(h, static_cast<Eigen::Index>(d) * n, rng);
    }
    p.b_f = Vec::Zero(h);
    p.W_x = random_matrix(n, h, rng);
    p.b_x = Vec::Zero(n);
    if (arch == Arch::RNN && config.g_init_policy != GInitPolicy::Zero) {
        p.g_init = 0.1 * rng.normal_vector(h);
    } else if (arch == Arch::RNN) {
        p.g_init = Vec::Zero(h);
    } else {
        p.g_init.resize(0);
    }
    return p;
}

Vec fnn_forward(const NetParams& params, const Vec& delay_vector) {
    if (params.arch != Arch::FNN) throw ConfigError("fnn_forward called on RNN parameters");
    if (!delay_vector.allFinite()) throw ShapeMismatchError("non-finite delay vector");
    check_input_shape(params, delay_vector.transpose());
    return params.W_x * (params.W_f * delay_vector + params.b_f).array().tanh().matrix() +
           params.b_x;
}

std::pair<Vec, std::vector<Vec>> rnn_forward(const NetParams& params,
                                             const std::vector<Vec>& lags_oldest_first,
                                             const Vec& g_init) {
    if (params.arch != Arch::RNN) throw ConfigError("rnn_forward called on FNN parameters");
    if (static_cast<int>(lags_oldest_first.size()) != params.d)
        throw SequenceLengthError("expected " + std::to_string(params.d) + " lags, got " +
                                  std::to_string(lags_oldest_first.size()));
    const int n = params.n;
    const int h = params.h;
    Vec g = g_init;
    std::vector<Vec> hidden;
    for (int j = 1; j < params.d; ++j) {
        Vec xg(n + h);
        xg << lags_oldest_first[static_cast<std::size_t>(j - 1)], g;
        g = (params.W_g * xg + params.b_g).array().tanh();
        hidden.push_back(g);
    }
    Vec xg(n + h);
    xg << lags_oldest_first.back(), g;
    const Vec f = (params.W_f * xg + params.b_f).array().tanh();
    return {params.W_x * f + params.b_x, std::move(hidden)};
}

Mat batch_forward(const NetParams& params, const Mat& inputs) {
    check_input_shape(params, inputs);
    BatchWork work;
    work.forward(params, inputs);
    return work.pred;
}

double loss(const Mat& predictions, const Mat& targets) {
    if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols())
        throw ShapeMismatchError("loss: predictions and targets differ in shape");
    return (predictions - targets).squaredNorm();
}

NetParams gradients(const NetParams& params, const Mat& inputs, const Mat& targets,
                    GInitPolicy policy) {
    check_input_shape(params, inputs);
    if (inputs.rows() < 1) throw ShapeMismatchError("gradients need a non-empty batch");
    NetParams grads = zeros_like(params);
    BatchWork work;
    work.forward(params, inputs);
    work.backward(params, inputs, targets, policy, grads);
    return grads;
}

namespace {

void rmsprop_update(Mat& theta, const Mat& grad, Mat& s, const TrainConfig& c) {
    if (theta.size() == 0) return;
    s = c.rms_decay * s.array() + (1.0 - c.rms_decay) * grad.array().square();
    theta.array() -= c.learning_rate * grad.array() / (s.array().sqrt() + c.rms_epsilon);
}

void rmsprop_update(Vec& theta, const Vec& grad, Vec& s, const TrainConfig& c) {
    if (theta.size() == 0) return;
    s = c.rms_decay * s.array() + (1.0 - c.rms_decay) * grad.array().square();
    theta.array() -= c.learning_rate * grad.array() / (s.array().sqrt() + c.rms_epsilon);
}

} // namespace

void rmsprop_step(NetParams& params, const NetParams& grads, NetParams& state,
                  const TrainConfig& config) {
    rmsprop_update(params.W_g, grads.W_g, state.W_g, config);
    rmsprop_update(params.b_g, grads.b_g, state.b_g, config);
    rmsprop_update(params.W_f, grads.W_f, state.W_f, config);
    rmsprop_update(params.b_f, grads.b_f, state.b_f, config);
    rmsprop_update(params.W_x, grads.W_x, state.W_x, config);
    rmsprop_update(params.b_x, grads.b_x, state.b_x, config);
    if (config.g_init_policy == GInitPolicy::Trainable)
        rmsprop_update(params.g_init, grads.g_init, state.g_init, config);
}

std::pair<NetParams, TrainHistory> train(Arch arch, int h, const DelayDataset& train_set,
                                         const DelayDataset& val_set,
                                         const TrainConfig& config) {
    config.validate();
    if (train_set.size() < 1) throw TooShortError("training set is empty");
    const bool has_val = val_set.size() > 0;

    NetParams params = init_params(arch, train_set.n, train_set.d, h, config);
    NetParams grads = zeros_like(params);
    NetParams state = zeros_like(params);
    BatchWork work;

    TrainHistory history;
    history.train_loss.reserve(256);
    history.val_loss.reserve(256);
    NetParams best = params;
    double best_val = std::numeric_limits<double>::infinity();
    long best_epoch = 0;

    for (long epoch = 1; epoch <= config.max_epochs; ++epoch) {
        work.forward(params, train_set.inputs);
        work.backward(params, train_set.inputs, train_set.targets, config.g_init_policy, grads);
        rmsprop_step(params, grads, state, config);

        work.forward(params, train_set.inputs);
        const double train_loss = loss(work.pred, train_set.targets);
        double val_loss = train_loss;
        if (has_val) {
            work.forward(params, val_set.inputs);
            val_loss = loss(work.pred, val_set.targets);
        }
        history.train_loss.push_back(train_loss);
        if (has_val) history.val_loss.push_back(val_loss);
        if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
            throw DivergedTrainingError("loss became non-finite at epoch " +
                                        std::to_string(epoch));
        if (val_loss < best_val) {
            best_val = val_loss;
            best_epoch = epoch;
            best = params;
        }
        if (epoch - best_epoch >= config.patience) break;
    }
    history.best_epoch = best_epoch;
    return {std::move(best), std::move(history)};
}

std::vector<Mat> iterated_forecast(const NetParams& params, const Mat& windows, int k) {
    if (k < 1) throw ConfigError("forecast horizon must be >= 1");
    check_input_shape(params, windows);
    const int n = params.n;
    Mat current = windows;
    std::vector<Mat> predictions;
    predictions.reserve(static_cast<std::size_t>(k));
    BatchWork work;
    for (int step = 0; step < k; ++step) {
        work.forward(params, current);
        predictions.push_back(work.pred);
        if (step + 1 == k) break;
        const Mat shifted = current.leftCols(current.cols() - n);
        current.rightCols(current.cols() - n) = shifted;
        current.leftCols(n) = work.pred;
    }
    return predictions;
}

} // namespace recdyn
