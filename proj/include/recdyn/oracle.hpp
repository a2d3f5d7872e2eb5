#pragma once

#include <string>

#include "recdyn/dynamics.hpp"
#include "recdyn/embedding.hpp"

namespace recdyn {

enum class RegressionTarget { YMean, YCovariance };

/// Neighborhood estimator used for the conditional expectations.
/// KnnInvDist: inverse-distance-weighted average of the k nearest rows.
/// LocalLinear: weighted least-squares plane through the k nearest rows,
/// evaluated at the query (removes the leading smoothing bias, which the
/// exact-closure benchmarks need).
enum class EstimatorKind { KnnInvDist, LocalLinear };

/// Nonparametric conditional regressor on k nearest neighbors, distances
/// measured in standardized delay coordinates. Default k: ceil(sqrt(R)) for
/// KnnInvDist, max(p+2, ceil(R^(1/3))) for LocalLinear (p = window length;
/// small neighborhoods keep the local plane's bias low). Ties break on
/// (distance, row index) so queries are deterministic; an exact match
/// returns the matching rows' mean response (nearest-neighbor identity).
class ConditionalRegressor {
  public:
    ConditionalRegressor(Mat reference_windows, Mat responses,
                         EstimatorKind kind = EstimatorKind::LocalLinear, int k = 0);

    Vec query(const Vec& window) const;
    /// Same query, optionally skipping one reference row (leave-one-out).
    Vec query_excluding(const Vec& window, Eigen::Index excluded) const;
    Mat query_batch(const Mat& windows, bool parallel) const;

    Eigen::Index reference_count() const { return inputs_.rows(); }
    int neighbor_count() const { return k_; }
    Eigen::Index response_dim() const { return responses_.cols(); }
    EstimatorKind kind() const { return kind_; }
    std::string estimator_name() const;

  private:
    Mat inputs_; // R x (d*n), standardized
    Mat responses_; // R x m
    Vec mean_; // d*n standardization of raw windows
    Vec std_;
    int k_ = 1;
    EstimatorKind kind_ = EstimatorKind::LocalLinear;
};

/// Fits E[y_{t-d} | x_{t-1},...,x_{t-d}] (YMean) or the conditional residual
/// covariance (YCovariance, responses are flattened m x m outer products of
/// leave-one-out residuals) from a post-transient trajectory segment.
ConditionalRegressor fit_conditional(const Trajectory& traj, int d, RegressionTarget target,
                                     bool parallel = true,
                                     EstimatorKind kind = EstimatorKind::LocalLinear);

struct RecursionErrorReport {
    int d = 0;
    double eps_rms = 0.0; // RMS of eps_t, normalized by the observed std
    double sigma_trace_mean = 0.0; // mean trace(Sigma_t)/(n*var), 0 if not computed
    long n_eval = 0;
    std::string estimator;
};

struct RecursionErrorOptions {
    bool parallel = true;
    const ConditionalRegressor* cov = nullptr; // enables the Sigma_t column
    long max_eval = 0; // 0 = use every admissible point
};

/// Large-data recursion error: for each evaluation time t, plug the
/// regressed y-hat into the state at t-d, roll the true dynamics forward d
/// steps overwriting the observed block with recorded data at every
/// intermediate step, and compare the final observed block against x_t.
RecursionErrorReport recursion_error(const SystemSpec& spec, const Trajectory& eval_traj,
                                     const ConditionalRegressor& reg, int d,
                                     const RecursionErrorOptions& options = {});

/// Control variant with the true (simulated) y_{t-d} substituted for the
/// regression: the reported error isolates integration/bookkeeping error and
/// must sit at numerical zero.
RecursionErrorReport recursion_error_exact_y(const SystemSpec& spec, const Trajectory& eval_traj,
                                             int d);

/// First-order covariance of the recursion error at one window
/// (x_{t-1},...,x_{t-d}, most recent first):
///   Sigma_t = P_{t-1} Q_{t-2} ... Q_{t-d} C_{t-d} Q_{t-d}^T ... P_{t-1}^T
/// with P the observed-rows/unobserved-columns block and Q the
/// unobserved/unobserved block of the flow Jacobian, both evaluated along
/// the same plug-in rollout recursion_error uses; C is the regressed
/// conditional covariance at the window.
Mat first_order_sigma(const SystemSpec& spec, const Vec& window, const ConditionalRegressor& reg_mean,
                      const ConditionalRegressor& reg_cov);

/// Closed-form two-lag delay map of the discrete LV system, obtained by
/// eliminating y between the two update equations.
double lv_exact_delay_map(double x_prev, double x_prev2, const SystemSpec& spec);

/// The benchmark protocol: simulate 30000 samples, discard the first 10000,
/// fit the regressors on the next 10000, evaluate on the final 10000.
struct OracleRun {
    Trajectory fit_segment;
    Trajectory eval_segment;
};
OracleRun oracle_segments(const SystemSpec& spec, std::uint64_t seed);
RecursionErrorReport oracle_report(const SystemSpec& spec, std::uint64_t seed, int d,
                                   bool with_sigma = false, bool parallel = true,
                                   EstimatorKind kind = EstimatorKind::LocalLinear);

} // namespace recdyn
