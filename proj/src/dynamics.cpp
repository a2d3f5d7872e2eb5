#include "recdyn/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace recdyn {

namespace {

// Sub-stream tags so the initial condition and the tangent direction come
// from independent deterministic streams of the same user-facing seed.
constexpr std::uint64_t kIcStream = 1;
constexpr std::uint64_t kTangentStream = 2;

void check_finite(const Vec& v) {
    if (!v.allFinite()) throw DivergedError("state left the attractor basin (non-finite value)");
}

} // namespace

int SystemSpec::state_dim() const {
    switch (kind) {
        case SystemKind::DiscreteLV: return 2;
        case SystemKind::Lorenz63: return 3;
        case SystemKind::Duffing4D: return 4;
        case SystemKind::Lorenz96: return static_cast<int>(params.at(0));
    }
    return 0;
}

std::string SystemSpec::kind_name() const {
    switch (kind) {
        case SystemKind::DiscreteLV: return "lv";
        case SystemKind::Lorenz63: return "lorenz63";
        case SystemKind::Duffing4D: return "duffing";
        case SystemKind::Lorenz96: return "lorenz96";
    }
    return "?";
}

void SystemSpec::validate() const {
    const std::size_t expected = kind == SystemKind::DiscreteLV  ? 4
                                 : kind == SystemKind::Lorenz63  ? 3
                                 : kind == SystemKind::Duffing4D ? 5
                                                                 : 2;
    if (params.size() != expected)
        throw ConfigError(kind_name() + ": expected " + std::to_string(expected) +
                          " parameters, got " + std::to_string(params.size()));
    if (sample_dt <= 0.0) throw ConfigError("sample_dt must be positive");
    if (substeps < 1) throw ConfigError("substeps must be >= 1");
    const int m = state_dim();
    if (kind == SystemKind::Lorenz96 && m < 4)
        throw ConfigError("lorenz96 needs N >= 4 distinct cyclic neighbors");
    if (observed_indices.empty()) throw ConfigError("observed_indices must be non-empty");
    for (int idx : observed_indices)
        if (idx < 0 || idx >= m) throw ConfigError("observed index out of range");
}

SystemSpec SystemSpec::preset(std::string_view name) {
    SystemSpec spec;
    if (name == "lv") {
        spec.kind = SystemKind::DiscreteLV;
        spec.params = {0.933, 1.293, 0.758, 1.420};
        spec.sample_dt = 1.0;
        spec.substeps = 1;
    } else if (name == "lorenz63") {
        spec.kind = SystemKind::Lorenz63;
        spec.params = {10.0, 28.0, 8.0 / 3.0};
        spec.sample_dt = 0.1;
        spec.substeps = 100;
    } else if (name == "duffing") {
        spec.kind = SystemKind::Duffing4D;
        spec.params = {1.0, -1.0, 0.3, 0.5, 1.2};
        spec.sample_dt = 1.0;
        spec.substeps = 100;
    } else if (name == "lorenz96") {
        spec.kind = SystemKind::Lorenz96;
        spec.params = {5.0, 8.0};
        spec.sample_dt = 0.1;
        spec.substeps = 100;
    } else {
        throw ConfigError("unknown system preset: " + std::string(name));
    }
    spec.observed_indices = {0};
    return spec;
}

LvParams lv_params(const SystemSpec& spec) {
    return {spec.params.at(0), spec.params.at(1), spec.params.at(2), spec.params.at(3)};
}

Vec lv_step(const Vec& state, const SystemSpec& spec) {
    const auto [r_x, r_y, a_xy, a_yx] = lv_params(spec);
    const double x = state[0];
    const double y = state[1];
    Vec next(2);
    next[0] = r_x * x * (1.0 - x) + a_xy * x * y;
    next[1] = r_y * y * (1.0 - y) + a_yx * x * y;
    check_finite(next);
    return next;
}

Mat lv_step_jacobian(const Vec& state, const SystemSpec& spec) {
    const auto [r_x, r_y, a_xy, a_yx] = lv_params(spec);
    const double x = state[0];
    const double y = state[1];
    Mat jac(2, 2);
    jac(0, 0) = r_x * (1.0 - 2.0 * x) + a_xy * y;
    jac(0, 1) = a_xy * x;
    jac(1, 0) = a_yx * y;
    jac(1, 1) = r_y * (1.0 - 2.0 * y) + a_yx * x;
    return jac;
}

Vec vector_field(const Vec& state, const SystemSpec& spec) {
    switch (spec.kind) {
        case SystemKind::Lorenz63: {
            const double sigma = spec.params[0], rho = spec.params[1], beta = spec.params[2];
            const double x = state[0], y = state[1], z = state[2];
            Vec dz(3);
            dz[0] = sigma * (y - x);
            dz[1] = x * (rho - z) - y;
            dz[2] = x * y - beta * z;
            return dz;
        }
        case SystemKind::Duffing4D: {
            const double alpha = spec.params[0], beta = spec.params[1], delta = spec.params[2];
            const double gamma = spec.params[3], omega = spec.params[4];
            const double x = state[0], y = state[1], v = state[2], z = state[3];
            Vec dz(4);
            dz[0] = y;
            dz[1] = gamma * v - delta * y - beta * x - alpha * x * x * x;
            dz[2] = -omega * z;
            dz[3] = omega * v;
            return dz;
        }
        case SystemKind::Lorenz96: {
            const int n = spec.state_dim();
            const double forcing = spec.params[1];
            Vec dz(n);
            for (int i = 0; i < n; ++i) {
                const int ip1 = (i + 1) % n;
                const int im1 = (i - 1 + n) % n;
                const int im2 = (i - 2 + n) % n;
                dz[i] = (state[ip1] - state[im2]) * state[im1] - state[i] + forcing;
            }
            return dz;
        }
        case SystemKind::DiscreteLV: break;
    }
    throw ConfigError("vector_field is undefined for discrete maps");
}

Mat vector_field_jacobian(const Vec& state, const SystemSpec& spec) {
    switch (spec.kind) {
        case SystemKind::Lorenz63: {
            const double sigma = spec.params[0], rho = spec.params[1], beta = spec.params[2];
            const double x = state[0], y = state[1], z = state[2];
            Mat jac(3, 3);
            jac << -sigma, sigma, 0.0,
                   rho - z, -1.0, -x,
                   y, x, -beta;
            return jac;
        }
        case SystemKind::Duffing4D: {
            const double alpha = spec.params[0], beta = spec.params[1], delta = spec.params[2];
            const double gamma = spec.params[3], omega = spec.params[4];
            const double x = state[0];
            Mat jac = Mat::Zero(4, 4);
            jac(0, 1) = 1.0;
            jac(1, 0) = -beta - 3.0 * alpha * x * x;
            jac(1, 1) = -delta;
            jac(1, 2) = gamma;
            jac(2, 3) = -omega;
            jac(3, 2) = omega;
            return jac;
        }
        case SystemKind::Lorenz96: {
            const int n = spec.state_dim();
            Mat jac = Mat::Zero(n, n);
            for (int i = 0; i < n; ++i) {
                const int ip1 = (i + 1) % n;
                const int im1 = (i - 1 + n) % n;
                const int im2 = (i - 2 + n) % n;
                jac(i, ip1) += state[im1];
                jac(i, im2) -= state[im1];
                jac(i, im1) += state[ip1] - state[im2];
                jac(i, i) -= 1.0;
            }
            return jac;
        }
        case SystemKind::DiscreteLV: break;
    }
    throw ConfigError("vector_field_jacobian is undefined for discrete maps");
}

namespace {

// One classical RK4 step of size h, state only.
void rk4_step(Vec& z, double h, const SystemSpec& spec) {
    const Vec k1 = vector_field(z, spec);
    const Vec k2 = vector_field(z + 0.5 * h * k1, spec);
    const Vec k3 = vector_field(z + 0.5 * h * k2, spec);
    const Vec k4 = vector_field(z + h * k3, spec);
    z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// RK4 step of the augmented (state, variational) system. The matrix stages
// reuse the state stages, so jac becomes the exact derivative of the
// discrete step z -> z'.
void rk4_step_variational(Vec& z, Mat& jac, double h, const SystemSpec& spec) {
    const Vec k1 = vector_field(z, spec);
    const Vec z2 = z + 0.5 * h * k1;
    const Vec k2 = vector_field(z2, spec);
    const Vec z3 = z + 0.5 * h * k2;
    const Vec k3 = vector_field(z3, spec);
    const Vec z4 = z + h * k3;
    const Vec k4 = vector_field(z4, spec);

    const Mat m1 = vector_field_jacobian(z, spec) * jac;
    const Mat m2 = vector_field_jacobian(z2, spec) * (jac + 0.5 * h * m1);
    const Mat m3 = vector_field_jacobian(z3, spec) * (jac + 0.5 * h * m2);
    const Mat m4 = vector_field_jacobian(z4, spec) * (jac + h * m3);

    z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    jac += (h / 6.0) * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
}

} // namespace

Vec flow_map(const Vec& state, const SystemSpec& spec) {
    if (spec.kind == SystemKind::DiscreteLV) return lv_step(state, spec);
    Vec z = state;
    const double h = spec.sample_dt / spec.substeps;
    for (int i = 0; i < spec.substeps; ++i) {
        rk4_step(z, h, spec);
        check_finite(z);
    }
    return z;
}

Mat flow_jacobian(const Vec& state, const SystemSpec& spec) {
    Vec z = state;
    Mat jac;
    flow_with_jacobian(z, jac, spec);
    return jac;
}

void flow_with_jacobian(Vec& state, Mat& jac, const SystemSpec& spec) {
    if (spec.kind == SystemKind::DiscreteLV) {
        jac = lv_step_jacobian(state, spec);
        state = lv_step(state, spec);
        return;
    }
    const int m = spec.state_dim();
    jac = Mat::Identity(m, m);
    const double h = spec.sample_dt / spec.substeps;
    for (int i = 0; i < spec.substeps; ++i) {
        rk4_step_variational(state, jac, h, spec);
        check_finite(state);
    }
}

Mat Trajectory::observed() const {
    Mat out(states.rows(), system.observed_dim());
    for (int j = 0; j < system.observed_dim(); ++j)
        out.col(j) = states.col(system.observed_indices[static_cast<std::size_t>(j)]);
    return out;
}

Mat Trajectory::unobserved() const {
    const int m = system.state_dim();
    Mat out(states.rows(), system.unobserved_dim());
    int col = 0;
    for (int j = 0; j < m; ++j) {
        const auto& obs = system.observed_indices;
        if (std::find(obs.begin(), obs.end(), j) == obs.end()) out.col(col++) = states.col(j);
    }
    return out;
}

Vec initial_condition(const SystemSpec& spec, Rng& rng) {
    switch (spec.kind) {
        case SystemKind::DiscreteLV: {
            Vec z(2);
            z[0] = rng.uniform(0.1, 0.9);
            z[1] = rng.uniform(0.1, 0.9);
            return z;
        }
        case SystemKind::Lorenz63: {
            Vec z(3);
            z << 1.0, 1.0, 1.0;
            return z + rng.normal_vector(3);
        }
        case SystemKind::Duffing4D: {
            Vec z(4);
            z[0] = 0.5 * rng.normal();
            z[1] = 0.5 * rng.normal();
            z[2] = 1.0; // (v, z) start on the unit circle at phase 0
            z[3] = 0.0;
            return z;
        }
        case SystemKind::Lorenz96: {
            const int n = spec.state_dim();
            const double forcing = spec.params[1];
            return Vec::Constant(n, forcing) + 0.1 * rng.normal_vector(n);
        }
    }
    throw ConfigError("unknown system kind");
}

Trajectory simulate(const SystemSpec& spec, std::uint64_t seed, long n_keep, long n_transient) {
    spec.validate();
    if (n_keep < 1) throw ConfigError("n_keep must be >= 1");
    Rng rng(mix_seed(seed, kIcStream));
    Vec z = initial_condition(spec, rng);

    Trajectory traj;
    traj.sample_dt = spec.sample_dt;
    traj.system = spec;
    traj.seed = seed;
    traj.states.resize(n_keep, spec.state_dim());

    for (long i = 0; i < n_transient; ++i) z = flow_map(z, spec);
    traj.states.row(0) = z.transpose();
    for (long i = 1; i < n_keep; ++i) {
        z = flow_map(z, spec);
        traj.states.row(i) = z.transpose();
    }
    return traj;
}

double lag1_autocorr(const Vec& series) {
    const Eigen::Index n = series.size();
    if (n < 2) throw DegenerateSeriesError("autocorrelation needs at least 2 samples");
    const double mean = series.mean();
    const Vec centered = series.array() - mean;
    const double denom = centered.squaredNorm();
    if (denom <= 0.0 || !(std::isfinite(denom)))
        throw DegenerateSeriesError("autocorrelation undefined for constant series");
    return centered.head(n - 1).dot(centered.tail(n - 1)) / denom;
}

double prev_value_nrmse(const Vec& series) {
    const Eigen::Index n = series.size();
    if (n < 2) throw DegenerateSeriesError("previous-value predictor needs at least 2 samples");
    const double mean = series.mean();
    const double var = (series.array() - mean).square().mean();
    if (var <= 0.0) throw DegenerateSeriesError("previous-value nrmse undefined for constant series");
    const double mse = (series.tail(n - 1) - series.head(n - 1)).squaredNorm() / static_cast<double>(n - 1);
    return std::sqrt(mse / var);
}

double largest_lyapunov(const SystemSpec& spec, std::uint64_t seed, long n_samples, long n_warmup) {
    spec.validate();
    Rng rng(mix_seed(seed, kIcStream));
    Vec z = initial_condition(spec, rng);
    for (long i = 0; i < 1000; ++i) z = flow_map(z, spec); // attractor transient

    Rng tangent_rng(mix_seed(seed, kTangentStream));
    Vec v = tangent_rng.normal_vector(spec.state_dim()).normalized();

    Mat jac;
    for (long i = 0; i < n_warmup; ++i) {
        flow_with_jacobian(z, jac, spec);
        v = (jac * v).normalized();
    }
    double log_sum = 0.0;
    for (long i = 0; i < n_samples; ++i) {
        flow_with_jacobian(z, jac, spec);
        v = jac * v;
        const double norm = v.norm();
        if (!(norm > 0.0) || !std::isfinite(norm))
            throw DivergedError("tangent vector collapsed or diverged");
        log_sum += std::log(norm);
        v /= norm;
    }
    return log_sum / (static_cast<double>(n_samples) * spec.sample_dt);
}

DiagnosticsReport diagnostics(const SystemSpec& spec, std::uint64_t seed) {
    // Sample counts sized so estimator noise sits inside the tolerance bands
    // of the reference table; the weakly chaotic systems average tiny
    // per-step expansions and need far longer runs than Lorenz63.
    long le_samples = 20000;
    switch (spec.kind) {
        case SystemKind::DiscreteLV: le_samples = 200000; break;
        case SystemKind::Lorenz63: le_samples = 50000; break;
        case SystemKind::Duffing4D: le_samples = 100000; break;
        case SystemKind::Lorenz96: le_samples = 400000; break;
    }
    DiagnosticsReport report{};
    report.lyapunov = largest_lyapunov(spec, seed, le_samples);
    const Trajectory traj = simulate(spec, seed, 20000, 1000);
    const Vec series = traj.observed().col(0);
    report.autocorr_dt = lag1_autocorr(series);
    report.prev_value_nrmse = prev_value_nrmse(series);
    return report;
}

} // namespace recdyn
