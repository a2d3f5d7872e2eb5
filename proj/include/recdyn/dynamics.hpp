#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "recdyn/errors.hpp"
#include "recdyn/rng.hpp"

namespace recdyn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class SystemKind { DiscreteLV, Lorenz63, Duffing4D, Lorenz96 };

/// Parameterized description of one benchmark system plus its sampling grid.
///
/// params layout by kind:
///   DiscreteLV: {r_x, r_y, A_xy, A_yx}
///   Lorenz63:   {sigma, rho, beta}
///   Duffing4D:  {alpha, beta, delta, gamma, omega}
///   Lorenz96:   {N, F}
struct SystemSpec {
    SystemKind kind = SystemKind::Lorenz63;
    std::vector<double> params;
    double sample_dt = 0.1;
    int substeps = 100;
    std::vector<int> observed_indices{0};

    int state_dim() const;
    int observed_dim() const { return static_cast<int>(observed_indices.size()); }
    int unobserved_dim() const { return state_dim() - observed_dim(); }
    std::string kind_name() const;

    /// Throws ConfigError if fields violate the documented invariants.
    void validate() const;

    /// Named presets "lv", "lorenz63", "duffing", "lorenz96" with the
    /// benchmark parameter values and sampling rates.
    static SystemSpec preset(std::string_view name);
};

struct LvParams {
    double r_x, r_y, a_xy, a_yx;
};
LvParams lv_params(const SystemSpec& spec);

/// One application of the discrete Lotka-Volterra map.
Vec lv_step(const Vec& state, const SystemSpec& spec);
Mat lv_step_jacobian(const Vec& state, const SystemSpec& spec);

/// Time derivative of the continuous systems (Lorenz63, Duffing4D, Lorenz96).
Vec vector_field(const Vec& state, const SystemSpec& spec);
Mat vector_field_jacobian(const Vec& state, const SystemSpec& spec);

/// Advance one sample interval: the map itself for DiscreteLV, otherwise
/// `substeps` classical RK4 steps of size sample_dt/substeps.
/// Throws DivergedError when any intermediate state goes non-finite.
Vec flow_map(const Vec& state, const SystemSpec& spec);

/// Jacobian of flow_map at `state`. Continuous systems propagate the
/// variational equation dJ/dt = A(z(t)) J on the same RK4 grid, which makes
/// the result the exact derivative of the discretized flow.
Mat flow_jacobian(const Vec& state, const SystemSpec& spec);

/// Advances `state` one sample interval and returns the step Jacobian
/// alongside; cheaper than separate flow_map/flow_jacobian calls.
void flow_with_jacobian(Vec& state, Mat& jac, const SystemSpec& spec);

/// Time-indexed matrix of full state vectors with sampling metadata.
struct Trajectory {
    Mat states; // T x M, one row per sample
    double sample_dt = 1.0;
    SystemSpec system;
    std::uint64_t seed = 0;

    Eigen::Index length() const { return states.rows(); }
    /// Columns of the observed block, in observed_indices order (T x n).
    Mat observed() const;
    /// Columns of the unobserved block, ascending index order (T x (M-n)).
    Mat unobserved() const;
};

/// Random initial condition near each system's attractor basin.
Vec initial_condition(const SystemSpec& spec, Rng& rng);

/// Simulates n_transient + n_keep samples from a seeded initial condition and
/// returns the last n_keep. Pure in (spec, seed): same seed, same trajectory.
Trajectory simulate(const SystemSpec& spec, std::uint64_t seed, long n_keep,
                    long n_transient);

struct DiagnosticsReport {
    double lyapunov;         // largest exponent, per unit time
    double autocorr_dt;      // lag-1 (one sample) autocorrelation of observed coord
    double prev_value_nrmse; // normalized RMSE of the previous-value predictor
};

/// Lag-1 autocorrelation; throws DegenerateSeriesError on constant input.
double lag1_autocorr(const Vec& series);

/// RMSE of predicting x_t by x_{t-1}, normalized by the series std so the
/// mean predictor scores exactly 1.
double prev_value_nrmse(const Vec& series);

/// Largest Lyapunov exponent by Benettin renormalization of a tangent vector
/// propagated with flow_jacobian, after a transient and tangent warm-up.
double largest_lyapunov(const SystemSpec& spec, std::uint64_t seed,
                        long n_samples = 20000, long n_warmup = 1000);

DiagnosticsReport diagnostics(const SystemSpec& spec, std::uint64_t seed);

} // namespace recdyn
