#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "recdyn/dynamics.hpp"

using namespace recdyn;

namespace {

Vec state2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

Mat fd_jacobian(const Vec& state, const SystemSpec& spec, double eps = 1e-6) {
    const int m = static_cast<int>(state.size());
    Mat jac(m, m);
    for (int j = 0; j < m; ++j) {
        Vec plus = state, minus = state;
        plus(j) += eps;
        minus(j) -= eps;
        jac.col(j) = (flow_map(plus, spec) - flow_map(minus, spec)) / (2.0 * eps);
    }
    return jac;
}

} // namespace

TEST_CASE("lv_step reproduces hand-computed values") {
    const SystemSpec spec = SystemSpec::preset("lv");

    SUBCASE("origin is a fixed point") {
        const Vec out = lv_step(state2(0.0, 0.0), spec);
        CHECK(out(0) == 0.0);
        CHECK(out(1) == 0.0);
    }
    SUBCASE("interior point") {
        const Vec out = lv_step(state2(0.5, 0.5), spec);
        CHECK(out(0) == doctest::Approx(0.42275).epsilon(1e-12));
        CHECK(out(1) == doctest::Approx(0.67825).epsilon(1e-12));
    }
    SUBCASE("y = 0 stays on the invariant axis") {
        const Vec out = lv_step(state2(0.6, 0.0), spec);
        CHECK(out(0) == doctest::Approx(0.22392).epsilon(1e-12));
        CHECK(out(1) == 0.0);
    }
    SUBCASE("jacobian at the origin is diag(r_x, r_y)") {
        const Mat jac = lv_step_jacobian(state2(0.0, 0.0), spec);
        const LvParams p = lv_params(spec);
        CHECK(jac(0, 0) == doctest::Approx(p.r_x));
        CHECK(jac(1, 1) == doctest::Approx(p.r_y));
        CHECK(jac(0, 1) == 0.0);
        CHECK(jac(1, 0) == 0.0);
    }
}

TEST_CASE("vector fields match hand substitution") {
    SUBCASE("lorenz63 at (1,1,1)") {
        const SystemSpec spec = SystemSpec::preset("lorenz63");
        Vec state(3);
        state << 1, 1, 1;
        const Vec f = vector_field(state, spec);
        CHECK(f(0) == doctest::Approx(0.0));
        CHECK(f(1) == doctest::Approx(26.0));
        CHECK(f(2) == doctest::Approx(-5.0 / 3.0));
    }
    SUBCASE("lorenz96 forcing only at the origin") {
        const SystemSpec spec = SystemSpec::preset("lorenz96");
        const Vec f = vector_field(Vec::Zero(5), spec);
        for (int i = 0; i < 5; ++i) CHECK(f(i) == doctest::Approx(8.0));
    }
    SUBCASE("duffing at (0,0,1,0)") {
        const SystemSpec spec = SystemSpec::preset("duffing");
        Vec state(4);
        state << 0, 0, 1, 0;
        const Vec f = vector_field(state, spec);
        CHECK(f(0) == doctest::Approx(0.0));
        CHECK(f(1) == doctest::Approx(0.5));
        CHECK(f(2) == doctest::Approx(0.0));
        CHECK(f(3) == doctest::Approx(1.2));
    }
}

TEST_CASE("flow_map accuracy and invariants") {
    SUBCASE("step halving shows fourth-order convergence on lorenz63") {
        SystemSpec spec = SystemSpec::preset("lorenz63");
        Vec state(3);
        state << 1, 1, 1;
        spec.substeps = 1000;
        const Vec reference = flow_map(state, spec);
        spec.substeps = 10;
        const double err10 = (flow_map(state, spec) - reference).cwiseAbs().maxCoeff();
        spec.substeps = 20;
        const double err20 = (flow_map(state, spec) - reference).cwiseAbs().maxCoeff();
        CHECK(err10 < 1e-4);
        // RK4: halving the step cuts the error by ~2^4
        CHECK(err10 / err20 > 10.0);
        CHECK(err10 / err20 < 24.0);
    }
    SUBCASE("duffing conserves v^2 + z^2 along an orbit") {
        const SystemSpec spec = SystemSpec::preset("duffing");
        Vec state(4);
        state << 0.3, -0.2, 1.0, 0.0;
        for (int i = 0; i < 50; ++i) {
            const double before = state(2) * state(2) + state(3) * state(3);
            state = flow_map(state, spec);
            const double after = state(2) * state(2) + state(3) * state(3);
            CHECK(std::abs(after - before) < 1e-8);
        }
    }
    SUBCASE("lorenz96 equivariance under cyclic rotation") {
        const SystemSpec spec = SystemSpec::preset("lorenz96");
        Vec state(5);
        state << 1.3, -0.4, 2.2, 0.9, -1.7;
        auto rotate = [](const Vec& v) {
            Vec out(v.size());
            for (Eigen::Index i = 0; i < v.size(); ++i) out((i + 1) % v.size()) = v(i);
            return out;
        };
        const Vec a = flow_map(rotate(state), spec);
        const Vec b = rotate(flow_map(state, spec));
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("non-finite state raises DivergedError") {
        const SystemSpec spec = SystemSpec::preset("lv");
        CHECK_THROWS_AS(flow_map(state2(1e200, 1e200), spec), DivergedError);
    }
}

TEST_CASE("flow_jacobian is the derivative of flow_map") {
    for (const char* name : {"lv", "lorenz63", "duffing", "lorenz96"}) {
        CAPTURE(name);
        const SystemSpec spec = SystemSpec::preset(name);
        const Trajectory traj = simulate(spec, 5, 3, 200);
        const Vec state = traj.states.row(1).transpose();
        const Mat analytic = flow_jacobian(state, spec);
        const Mat numeric = fd_jacobian(state, spec);
        const double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
        CHECK((analytic - numeric).cwiseAbs().maxCoeff() / scale < 1e-5);
    }
}

TEST_CASE("jacobian chain rule over composed steps") {
    const SystemSpec spec = SystemSpec::preset("lorenz63");
    const Trajectory traj = simulate(spec, 11, 1, 300);
    Vec state = traj.states.row(0).transpose();
    const Vec start = state;

    Mat chain = Mat::Identity(3, 3);
    for (int k = 0; k < 5; ++k) {
        chain = flow_jacobian(state, spec) * chain;
        state = flow_map(state, spec);
    }
    // Finite differences of the 5-fold composition.
    Mat numeric(3, 3);
    const double eps = 1e-6;
    for (int j = 0; j < 3; ++j) {
        Vec plus = start, minus = start;
        plus(j) += eps;
        minus(j) -= eps;
        for (int k = 0; k < 5; ++k) {
            plus = flow_map(plus, spec);
            minus = flow_map(minus, spec);
        }
        numeric.col(j) = (plus - minus) / (2.0 * eps);
    }
    CHECK((chain - numeric).cwiseAbs().maxCoeff() / chain.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("flow_jacobian small-dt expansion approaches I + A dt") {
    SystemSpec spec = SystemSpec::preset("lorenz63");
    spec.sample_dt = 1e-4;
    spec.substeps = 1;
    Vec state(3);
    state << 2.0, -1.0, 20.0;
    const Mat jac = flow_jacobian(state, spec);
    const Mat expected =
        Mat::Identity(3, 3) + spec.sample_dt * vector_field_jacobian(state, spec);
    CHECK((jac - expected).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("simulate behavior") {
    const SystemSpec spec = SystemSpec::preset("lorenz63");

    SUBCASE("n_keep=1, n_transient=0 returns exactly the initial condition") {
        const Trajectory traj = simulate(spec, 9, 1, 0);
        Rng rng(mix_seed(9, 1));
        const Vec ic = initial_condition(spec, rng);
        CHECK(traj.length() == 1);
        CHECK((traj.states.row(0).transpose() - ic).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("same seed gives bit-identical trajectories") {
        const Trajectory a = simulate(spec, 33, 50, 100);
        const Trajectory b = simulate(spec, 33, 50, 100);
        CHECK((a.states - b.states).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("different seeds differ") {
        const Trajectory a = simulate(spec, 1, 10, 100);
        const Trajectory b = simulate(spec, 2, 10, 100);
        CHECK((a.states - b.states).cwiseAbs().maxCoeff() > 0.0);
    }
    SUBCASE("observed block is the first coordinate") {
        const Trajectory traj = simulate(spec, 4, 10, 10);
        const Mat obs = traj.observed();
        CHECK(obs.cols() == 1);
        CHECK(obs(3, 0) == traj.states(3, 0));
        const Mat unobs = traj.unobserved();
        CHECK(unobs.cols() == 2);
        CHECK(unobs(3, 1) == traj.states(3, 2));
    }
    SUBCASE("sample variance is self-consistent against a longer run") {
        const Trajectory short_run = simulate(spec, 21, 20000, 1000);
        const Trajectory long_run = simulate(spec, 22, 200000, 1000);
        for (int j = 0; j < 3; ++j) {
            const auto col_s = short_run.states.col(j);
            const auto col_l = long_run.states.col(j);
            const double var_s = (col_s.array() - col_s.mean()).square().mean();
            const double var_l = (col_l.array() - col_l.mean()).square().mean();
            CHECK(std::abs(var_s - var_l) / var_l < 0.10);
        }
    }
}

TEST_CASE("diagnostics helpers") {
    SUBCASE("lag1_autocorr of an alternating series is -(T-1)/T") {
        Vec series(6);
        series << 1, -1, 1, -1, 1, -1;
        CHECK(lag1_autocorr(series) == doctest::Approx(-5.0 / 6.0).epsilon(1e-12));
        Vec long_series(1000);
        for (int i = 0; i < 1000; ++i) long_series(i) = i % 2 == 0 ? 1.0 : -1.0;
        CHECK(lag1_autocorr(long_series) == doctest::Approx(-0.999).epsilon(1e-12));
    }
    SUBCASE("constant series raises DegenerateSeriesError") {
        CHECK_THROWS_AS(lag1_autocorr(Vec::Ones(10)), DegenerateSeriesError);
        CHECK_THROWS_AS(prev_value_nrmse(Vec::Ones(10)), DegenerateSeriesError);
    }
    SUBCASE("prev_value_nrmse of slowly varying series is small") {
        Vec series(1000);
        for (int i = 0; i < 1000; ++i) series(i) = std::sin(0.01 * i);
        CHECK(prev_value_nrmse(series) < 0.05);
    }
}

TEST_CASE("lyapunov estimates are deterministic and positive on chaotic presets") {
    const SystemSpec spec = SystemSpec::preset("lorenz63");
    const double a = largest_lyapunov(spec, 3, 2000, 200);
    const double b = largest_lyapunov(spec, 3, 2000, 200);
    CHECK(a == b);
    CHECK(a > 0.5); // short run, loose band around the known 0.91
    CHECK(a < 1.3);
}
