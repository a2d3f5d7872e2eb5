#include "recdyn/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "recdyn/parallel.hpp"

namespace recdyn {

namespace {

constexpr double kExactMatchSq = 1e-24; // squared distance treated as an exact hit

std::vector<int> observed_list(const SystemSpec& spec) { return spec.observed_indices; }

std::vector<int> unobserved_list(const SystemSpec& spec) {
    std::vector<int> out;
    for (int j = 0; j < spec.state_dim(); ++j)
        if (std::find(spec.observed_indices.begin(), spec.observed_indices.end(), j) ==
            spec.observed_indices.end())
            out.push_back(j);
    return out;
}

} // namespace

ConditionalRegressor::ConditionalRegressor(Mat reference_windows, Mat responses,
                                           EstimatorKind kind, int k)
    : inputs_(std::move(reference_windows)), responses_(std::move(responses)), kind_(kind) {
    if (inputs_.rows() != responses_.rows())
        throw ShapeMismatchError("regressor windows/responses row mismatch");
    if (inputs_.rows() < 1) throw InsufficientDataError("regressor needs reference data");
    mean_ = inputs_.colwise().mean();
    std_ = ((inputs_.rowwise() - mean_.transpose()).array().square().colwise().mean())
               .sqrt()
               .matrix();
    for (Eigen::Index j = 0; j < std_.size(); ++j)
        if (!(std_[j] > 0.0)) std_[j] = 1.0; // constant column: distance contribution 0
    inputs_ = (inputs_.rowwise() - mean_.transpose()).array().rowwise() /
              std_.transpose().array();
    if (k > 0) {
        k_ = k;
    } else if (kind_ == EstimatorKind::LocalLinear) {
        // Smaller neighborhoods than the sqrt rule: the plane fit already
        // removes first-order bias, and the remaining curvature bias shrinks
        // with the bandwidth. Floor at p+2 so the normal equations are
        // well-posed.
        k_ = std::max(static_cast<int>(inputs_.cols()) + 2,
                      static_cast<int>(std::ceil(std::cbrt(static_cast<double>(inputs_.rows())))));
    } else {
        k_ = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(inputs_.rows()))));
    }
    k_ = static_cast<int>(std::min<Eigen::Index>(k_, inputs_.rows()));
}

std::string ConditionalRegressor::estimator_name() const {
    return kind_ == EstimatorKind::LocalLinear ? "local-linear-knn" : "knn-invdist";
}

namespace {

Vec knn_query(const Mat& inputs, const Mat& responses, int k, EstimatorKind kind, const Vec& q,
              Eigen::Index excluded) {
    const Eigen::Index r_count = inputs.rows();
    std::vector<std::pair<double, Eigen::Index>> dist;
    dist.reserve(static_cast<std::size_t>(r_count));
    for (Eigen::Index i = 0; i < r_count; ++i) {
        if (i == excluded) continue;
        dist.emplace_back((inputs.row(i).transpose() - q).squaredNorm(), i);
    }
    const auto kk = std::min<std::size_t>(static_cast<std::size_t>(k), dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());

    if (dist.front().first < kExactMatchSq) {
        Vec out = Vec::Zero(responses.cols());
        long hits = 0;
        for (const auto& [d2, idx] : dist) {
            if (d2 >= kExactMatchSq) break;
            out += responses.row(idx);
            ++hits;
        }
        return out / static_cast<double>(hits);
    }

    if (kind == EstimatorKind::KnnInvDist) {
        Vec out = Vec::Zero(responses.cols());
        double weight_sum = 0.0;
        for (std::size_t i = 0; i < kk; ++i) {
            const double w = 1.0 / std::sqrt(dist[i].first);
            out += w * responses.row(dist[i].second);
            weight_sum += w;
        }
        return out / weight_sum;
    }

    // Local linear: weighted least squares of the responses on
    // [1, x - q] over the neighborhood; the intercept row is the estimate
    // at the query point. A tiny ridge keeps degenerate neighborhoods
    // (collinear points) solvable.
    const Eigen::Index p = inputs.cols();
    Mat design(kk, p + 1);
    Mat rhs(kk, responses.cols());
    for (std::size_t i = 0; i < kk; ++i) {
        const double w = std::sqrt(1.0 / std::sqrt(dist[i].first)); // sqrt of the kNN weight
        design(static_cast<Eigen::Index>(i), 0) = w;
        design.row(static_cast<Eigen::Index>(i)).tail(p) =
            w * (inputs.row(dist[i].second) - q.transpose());
        rhs.row(static_cast<Eigen::Index>(i)) = w * responses.row(dist[i].second);
    }
    Mat normal = design.transpose() * design;
    normal.diagonal().array() += 1e-10;
    const Mat beta = normal.ldlt().solve(design.transpose() * rhs);
    return beta.row(0).transpose();
}

} // namespace

Vec ConditionalRegressor::query(const Vec& window) const { return query_excluding(window, -1); }

Vec ConditionalRegressor::query_excluding(const Vec& window, Eigen::Index excluded) const {
    if (window.size() != inputs_.cols())
        throw ShapeMismatchError("query window width does not match reference windows");
    const Vec q = (window - mean_).array() / std_.array();
    return knn_query(inputs_, responses_, k_, kind_, q, excluded);
}

Mat ConditionalRegressor::query_batch(const Mat& windows, bool parallel) const {
    Mat out(windows.rows(), responses_.cols());
    parallel_for(windows.rows(), parallel, [&](std::int64_t i) {
        out.row(i) = query(windows.row(i).transpose()).transpose();
    });
    return out;
}

namespace {

Mat build_windows(const Mat& x, int d) {
    const Eigen::Index t_len = x.rows();
    const int n = static_cast<int>(x.cols());
    const Eigen::Index r_count = t_len - d + 1;
    Mat windows(r_count, static_cast<Eigen::Index>(d) * n);
    for (Eigen::Index tau = 0; tau < r_count; ++tau)
        for (int k = 0; k < d; ++k)
            windows.block(tau, static_cast<Eigen::Index>(k) * n, 1, n) = x.row(tau + d - 1 - k);
    return windows;
}

} // namespace

ConditionalRegressor fit_conditional(const Trajectory& traj, int d, RegressionTarget target,
                                     bool parallel, EstimatorKind kind) {
    if (d < 1) throw ConfigError("delay count must be >= 1");
    const Eigen::Index t_len = traj.length();
    if (t_len < 10 * d)
        throw InsufficientDataError("need at least 10*d samples to fit the regressor");
    if (traj.system.unobserved_dim() < 1)
        throw ConfigError("fully observed system: nothing to regress");

    const Mat x = traj.observed();
    const Mat y = traj.unobserved();
    const Eigen::Index r_count = t_len - d + 1;
    const Mat windows = build_windows(x, d);
    if (target == RegressionTarget::YMean)
        return ConditionalRegressor(windows, y.topRows(r_count), kind);

    // Covariance target: regress outer products of leave-one-out residuals.
    ConditionalRegressor mean_reg(windows, y.topRows(r_count), kind);
    const auto m = y.cols();
    Mat outer(r_count, m * m);
    parallel_for(r_count, parallel, [&](std::int64_t tau) {
        const Vec resid = y.row(tau).transpose() -
                          mean_reg.query_excluding(windows.row(tau).transpose(), tau);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < m; ++j) outer(tau, i * m + j) = resid[i] * resid[j];
    });
    return ConditionalRegressor(windows, std::move(outer), kind);
}

namespace {

struct RolloutScratch {
    Vec z;
    Mat jac;
    Mat chain; // accumulated P * Q ... product
    Mat step_jac;
};

/// Advances the plug-in reconstruction d steps. x_data rows 0..d hold the
/// recorded x at times t-d..t; y_hat seeds the unobserved block at t-d.
/// Returns eps_t; if chain_out is non-null it receives
/// P_{t-1} Q_{t-2} ... Q_{t-d} for the Sigma congruence.
Vec plug_in_rollout(const SystemSpec& spec, const Mat& x_data, const Vec& y_hat,
                    const std::vector<int>& obs, const std::vector<int>& unobs,
                    Mat* chain_out) {
    const int d = static_cast<int>(x_data.rows()) - 1;
    const int n = static_cast<int>(obs.size());
    const int m = static_cast<int>(unobs.size());
    Vec z(spec.state_dim());
    for (int i = 0; i < n; ++i) z[obs[static_cast<std::size_t>(i)]] = x_data(0, i);
    for (int i = 0; i < m; ++i) z[unobs[static_cast<std::size_t>(i)]] = y_hat[i];

    std::vector<Mat> jacobians;
    Mat jac;
    for (int step = 1; step <= d; ++step) {
        if (chain_out != nullptr) {
            flow_with_jacobian(z, jac, spec);
            jacobians.push_back(jac);
        } else {
            z = flow_map(z, spec);
        }
        if (step < d)
            for (int i = 0; i < n; ++i) z[obs[static_cast<std::size_t>(i)]] = x_data(step, i);
    }
    if (chain_out != nullptr) {
        // P from the final step (linearized at time t-1), then Q factors
        // backwards through times t-2 .. t-d.
        Mat chain(n, m);
        const Mat& last = jacobians.back();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j)
                chain(i, j) = last(obs[static_cast<std::size_t>(i)],
                                   unobs[static_cast<std::size_t>(j)]);
        Mat q(m, m);
        for (int step = d - 1; step >= 1; --step) {
            const Mat& js = jacobians[static_cast<std::size_t>(step - 1)];
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    q(i, j) = js(unobs[static_cast<std::size_t>(i)],
                                 unobs[static_cast<std::size_t>(j)]);
            chain = chain * q;
        }
        *chain_out = std::move(chain);
    }
    Vec eps(n);
    for (int i = 0; i < n; ++i) eps[i] = x_data(d, i) - z[obs[static_cast<std::size_t>(i)]];
    return eps;
}

RecursionErrorReport run_recursion_error(const SystemSpec& spec, const Trajectory& eval_traj,
                                         const ConditionalRegressor* reg, int d,
                                         const RecursionErrorOptions& options) {
    spec.validate();
    if (d < 1) throw ConfigError("delay count must be >= 1");
    const Mat x = eval_traj.observed();
    const Mat y_true = reg == nullptr ? eval_traj.unobserved() : Mat();
    const Eigen::Index t_len = x.rows();
    if (t_len < d + 1) throw TooShortError("evaluation segment shorter than d+1");
    Eigen::Index n_eval = t_len - d;
    if (options.max_eval > 0) n_eval = std::min<Eigen::Index>(n_eval, options.max_eval);

    const int n = spec.observed_dim();
    const std::vector<int> obs = observed_list(spec);
    const std::vector<int> unobs = unobserved_list(spec);
    const Vec sigma_obs =
        ((x.rowwise() - x.colwise().mean()).array().square().colwise().mean()).sqrt().matrix();

    Vec eps_sq(n_eval);
    Vec sigma_tr = options.cov != nullptr ? Vec(n_eval) : Vec();
    parallel_for(n_eval, options.parallel, [&](std::int64_t row) {
        const Eigen::Index t = d + row; // target time index within the segment
        Mat x_data(d + 1, n);
        for (int i = 0; i <= d; ++i) x_data.row(i) = x.row(t - d + i);
        Vec window(static_cast<Eigen::Index>(d) * n);
        for (int k = 0; k < d; ++k)
            window.segment(static_cast<Eigen::Index>(k) * n, n) = x.row(t - 1 - k);

        const Vec y_hat = reg != nullptr ? reg->query(window) : Vec(y_true.row(t - d));
        Mat chain;
        const Vec eps = plug_in_rollout(spec, x_data, y_hat, obs, unobs,
                                        options.cov != nullptr ? &chain : nullptr);
        eps_sq[row] = (eps.array() / sigma_obs.array()).square().mean();
        if (options.cov != nullptr) {
            const auto m = static_cast<Eigen::Index>(unobs.size());
            Mat c(m, m);
            const Vec c_flat = options.cov->query(window);
            for (Eigen::Index i = 0; i < m; ++i)
                for (Eigen::Index j = 0; j < m; ++j) c(i, j) = c_flat[i * m + j];
            c = 0.5 * (c + c.transpose());
            const Mat sig = chain * c * chain.transpose();
            sigma_tr[row] = (sig.diagonal().array() / sigma_obs.array().square()).mean();
        }
    });

    RecursionErrorReport report;
    report.d = d;
    report.n_eval = n_eval;
    report.eps_rms = std::sqrt(eps_sq.mean());
    report.sigma_trace_mean = options.cov != nullptr ? sigma_tr.mean() : 0.0;
    report.estimator = reg != nullptr ? reg->estimator_name() : "exact-y";
    return report;
}

} // namespace

RecursionErrorReport recursion_error(const SystemSpec& spec, const Trajectory& eval_traj,
                                     const ConditionalRegressor& reg, int d,
                                     const RecursionErrorOptions& options) {
    return run_recursion_error(spec, eval_traj, &reg, d, options);
}

RecursionErrorReport recursion_error_exact_y(const SystemSpec& spec, const Trajectory& eval_traj,
                                             int d) {
    RecursionErrorOptions options;
    options.parallel = false;
    return run_recursion_error(spec, eval_traj, nullptr, d, options);
}

Mat first_order_sigma(const SystemSpec& spec, const Vec& window,
                      const ConditionalRegressor& reg_mean, const ConditionalRegressor& reg_cov) {
    spec.validate();
    const int n = spec.observed_dim();
    if (window.size() % n != 0) throw ShapeMismatchError("window width not a multiple of n");
    const int d = static_cast<int>(window.size()) / n;
    const std::vector<int> obs = observed_list(spec);
    const std::vector<int> unobs = unobserved_list(spec);
    const auto m = static_cast<Eigen::Index>(unobs.size());

    // The rollout only needs the recorded x at times t-d..t-1; the final row
    // (x_t) is unused for the Jacobian chain, so pad with zeros.
    Mat x_data = Mat::Zero(d + 1, n);
    for (int k = 0; k < d; ++k)
        x_data.row(d - 1 - k) = window.segment(static_cast<Eigen::Index>(k) * n, n).transpose();

    const Vec y_hat = reg_mean.query(window);
    Mat chain;
    plug_in_rollout(spec, x_data, y_hat, obs, unobs, &chain);

    const Vec c_flat = reg_cov.query(window);
    if (c_flat.size() != m * m) throw ShapeMismatchError("covariance regressor has wrong width");
    Mat c(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) c(i, j) = c_flat[i * m + j];
    c = 0.5 * (c + c.transpose());
    return chain * c * chain.transpose();
}

double lv_exact_delay_map(double x_prev, double x_prev2, const SystemSpec& spec) {
    if (spec.kind != SystemKind::DiscreteLV)
        throw ConfigError("exact delay map only exists for the discrete LV system");
    const auto [r_x, r_y, a_xy, a_yx] = lv_params(spec);
    if (x_prev2 == 0.0 || a_xy * x_prev2 == 0.0)
        throw SingularDelayMapError("delay map singular at x_{t-2} = 0");
    // Eliminate y: recover y_{t-2} from the x-update, advance it one step,
    // substitute into the next x-update.
    const double y2 = (x_prev - r_x * x_prev2 * (1.0 - x_prev2)) / (a_xy * x_prev2);
    const double y1 = r_y * y2 * (1.0 - y2) + a_yx * x_prev2 * y2;
    return r_x * x_prev * (1.0 - x_prev) + a_xy * x_prev * y1;
}

OracleRun oracle_segments(const SystemSpec& spec, std::uint64_t seed) {
    const Trajectory full = simulate(spec, seed, 20000, 10000);
    OracleRun run;
    run.fit_segment.system = spec;
    run.fit_segment.sample_dt = spec.sample_dt;
    run.fit_segment.seed = seed;
    run.fit_segment.states = full.states.topRows(10000);
    run.eval_segment = run.fit_segment;
    run.eval_segment.states = full.states.bottomRows(10000);
    return run;
}

RecursionErrorReport oracle_report(const SystemSpec& spec, std::uint64_t seed, int d,
                                   bool with_sigma, bool parallel, EstimatorKind kind) {
    const OracleRun run = oracle_segments(spec, seed);
    const ConditionalRegressor reg_mean =
        fit_conditional(run.fit_segment, d, RegressionTarget::YMean, parallel, kind);
    RecursionErrorOptions options;
    options.parallel = parallel;
    std::optional<ConditionalRegressor> reg_cov;
    if (with_sigma) {
        reg_cov.emplace(
            fit_conditional(run.fit_segment, d, RegressionTarget::YCovariance, parallel, kind));
        options.cov = &*reg_cov;
    }
    return recursion_error(spec, run.eval_segment, reg_mean, d, options);
}

} // namespace recdyn
