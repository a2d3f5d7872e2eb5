#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "recdyn/oracle.hpp"

using namespace recdyn;

namespace {

Trajectory take_rows(const Trajectory& traj, Eigen::Index start, Eigen::Index count) {
    Trajectory out = traj;
    out.states = traj.states.middleRows(start, count);
    return out;
}

} // namespace

TEST_CASE("conditional regressor construction") {
    Mat windows(4, 2);
    windows << 0, 0, 1, 0, 0, 1, 1, 1;
    Mat responses(4, 1);
    responses << 1, 2, 3, 4;

    SUBCASE("row mismatch throws") {
        CHECK_THROWS_AS(ConditionalRegressor(windows, responses.topRows(3)), ShapeMismatchError);
    }
    SUBCASE("empty reference throws") {
        CHECK_THROWS_AS(ConditionalRegressor(Mat(0, 2), Mat(0, 1)), InsufficientDataError);
    }
    SUBCASE("default k follows the estimator rule, capped by R") {
        Mat w = Mat::Random(100, 2);
        Mat r = Mat::Random(100, 1);
        CHECK(ConditionalRegressor(w, r, EstimatorKind::KnnInvDist).neighbor_count() == 10);
        // ceil(100^(1/3)) = 5 < p+2 = 4? no: max(4, 5) = 5
        CHECK(ConditionalRegressor(w, r, EstimatorKind::LocalLinear).neighbor_count() == 5);
        Mat w8 = Mat::Random(8, 6);
        Mat r8 = Mat::Random(8, 1);
        CHECK(ConditionalRegressor(w8, r8, EstimatorKind::LocalLinear).neighbor_count() == 8);
        CHECK(ConditionalRegressor(windows, responses, EstimatorKind::KnnInvDist, 3)
                  .neighbor_count() == 3);
    }
    SUBCASE("estimator names") {
        CHECK(ConditionalRegressor(windows, responses, EstimatorKind::KnnInvDist)
                  .estimator_name() == "knn-invdist");
        CHECK(ConditionalRegressor(windows, responses, EstimatorKind::LocalLinear)
                  .estimator_name() == "local-linear-knn");
    }
}

TEST_CASE("exact-match queries return the matching responses") {
    Mat windows(5, 2);
    windows << 0, 0, 1, 0, 0, 1, 1, 1, 2, 2;
    Mat responses(5, 1);
    responses << 10, 20, 30, 40, 50;

    for (const auto kind : {EstimatorKind::KnnInvDist, EstimatorKind::LocalLinear}) {
        const ConditionalRegressor reg(windows, responses, kind);
        for (int i = 0; i < 5; ++i)
            CHECK(reg.query(windows.row(i).transpose())(0) ==
                  doctest::Approx(responses(i, 0)).epsilon(1e-12));
    }

    SUBCASE("duplicate matches average") {
        Mat w(3, 1), r(3, 1);
        w << 0.5, 0.5, 2.0;
        r << 1.0, 3.0, 9.0;
        const ConditionalRegressor reg(w, r, EstimatorKind::KnnInvDist, 3);
        Vec q(1);
        q << 0.5;
        CHECK(reg.query(q)(0) == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("leave-one-out excludes the held-out row") {
        Mat w(3, 1), r(3, 1);
        w << 0.0, 1.0, 2.0;
        r << 5.0, 7.0, 9.0;
        const ConditionalRegressor reg(w, r, EstimatorKind::KnnInvDist, 1);
        // excluding row 1 itself, its nearest neighbor is row 0 or 2 (tie
        // broken by index -> row 0)
        CHECK(reg.query_excluding(w.row(1).transpose(), 1)(0) ==
              doctest::Approx(5.0).epsilon(1e-12));
        CHECK(reg.query_excluding(w.row(1).transpose(), -1)(0) ==
              doctest::Approx(7.0).epsilon(1e-12));
    }
}

TEST_CASE("inverse-distance weights match a hand computation") {
    Mat w(2, 1), r(2, 1);
    w << 0.0, 1.0;
    r << 0.0, 10.0;
    const ConditionalRegressor reg(w, r, EstimatorKind::KnnInvDist, 2);
    Vec q(1);
    q << 0.25;
    // weights 1/0.25 : 1/0.75 = 3 : 1 (standardization rescales both
    // distances equally, so the ratio survives)
    CHECK(reg.query(q)(0) == doctest::Approx(2.5).epsilon(1e-9));
}

TEST_CASE("local-linear estimator reproduces a linear response exactly") {
    Rng rng(42);
    Mat windows(30, 2), responses(30, 1);
    for (int i = 0; i < 30; ++i) {
        windows(i, 0) = rng.uniform(-1.0, 1.0);
        windows(i, 1) = rng.uniform(-1.0, 1.0);
        responses(i, 0) = 2.0 * windows(i, 0) - 3.0 * windows(i, 1) + 0.5;
    }
    const ConditionalRegressor reg(windows, responses, EstimatorKind::LocalLinear, 10);
    for (int trial = 0; trial < 10; ++trial) {
        Vec q(2);
        q << rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8);
        const double expect = 2.0 * q(0) - 3.0 * q(1) + 0.5;
        CHECK(reg.query(q)(0) == doctest::Approx(expect).epsilon(1e-6));
    }
}

TEST_CASE("query_batch agrees with query on both execution paths") {
    Rng rng(7);
    Mat windows(40, 3), responses(40, 2);
    for (Eigen::Index i = 0; i < windows.size(); ++i) *(windows.data() + i) = rng.normal();
    for (Eigen::Index i = 0; i < responses.size(); ++i) *(responses.data() + i) = rng.normal();
    const ConditionalRegressor reg(windows, responses, EstimatorKind::LocalLinear);

    Mat queries = windows.topRows(8);
    queries.array() += 0.05;
    const Mat serial = reg.query_batch(queries, false);
    const Mat parallel = reg.query_batch(queries, true);
    CHECK((serial - parallel).cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < 8; ++i)
        CHECK((serial.row(i).transpose() - reg.query(queries.row(i).transpose()))
                  .cwiseAbs()
                  .maxCoeff() < 1e-14);
}

TEST_CASE("fit_conditional input validation") {
    const SystemSpec spec = SystemSpec::preset("lv");
    const Trajectory traj = simulate(spec, 11, 400, 500);

    CHECK_THROWS_AS(fit_conditional(traj, 0, RegressionTarget::YMean), ConfigError);
    CHECK_THROWS_AS(fit_conditional(take_rows(traj, 0, 15), 2, RegressionTarget::YMean),
                    InsufficientDataError);

    SystemSpec all_observed = spec;
    all_observed.observed_indices = {0, 1};
    Trajectory full = traj;
    full.system = all_observed;
    CHECK_THROWS_AS(fit_conditional(full, 2, RegressionTarget::YMean), ConfigError);

    SUBCASE("covariance regressor carries m*m columns") {
        const ConditionalRegressor cov = fit_conditional(traj, 2, RegressionTarget::YCovariance,
                                                         false);
        CHECK(cov.response_dim() == 1);
        CHECK(cov.reference_count() == traj.length() - 1);
    }
}

TEST_CASE("exact-y recursion error sits at numerical zero") {
    for (const char* name : {"lv", "lorenz63", "duffing", "lorenz96"}) {
        CAPTURE(name);
        const SystemSpec spec = SystemSpec::preset(name);
        const Trajectory traj = simulate(spec, 3, 80, 1000);
        const auto report = recursion_error_exact_y(spec, traj, 3);
        CHECK(report.eps_rms < 1e-9);
        CHECK(report.n_eval == 77);
        CHECK(report.estimator == "exact-y");
    }
}

TEST_CASE("closed-form LV delay map") {
    const SystemSpec spec = SystemSpec::preset("lv");

    SUBCASE("matches the simulated orbit") {
        const Trajectory traj = simulate(spec, 21, 1000, 1000);
        const Mat x = traj.observed();
        double worst = 0.0;
        for (Eigen::Index t = 2; t < x.rows(); ++t)
            worst = std::max(worst,
                             std::abs(lv_exact_delay_map(x(t - 1, 0), x(t - 2, 0), spec) - x(t, 0)));
        CHECK(worst < 1e-10);
    }
    SUBCASE("singular when the older lag vanishes") {
        CHECK_THROWS_AS(lv_exact_delay_map(0.5, 0.0, spec), SingularDelayMapError);
    }
    SUBCASE("only defined for the LV system") {
        CHECK_THROWS_AS(lv_exact_delay_map(0.5, 0.4, SystemSpec::preset("lorenz63")), ConfigError);
    }
}

TEST_CASE("recursion error decreases with window length on lorenz63") {
    const SystemSpec spec = SystemSpec::preset("lorenz63");
    const Trajectory full = simulate(spec, 5, 4000, 1000);
    const Trajectory fit = take_rows(full, 0, 3000);
    const Trajectory eval = take_rows(full, 3000, 1000);

    RecursionErrorOptions options;
    options.parallel = false;
    options.max_eval = 400;

    double prev = std::numeric_limits<double>::infinity();
    for (int d = 1; d <= 3; ++d) {
        const ConditionalRegressor reg = fit_conditional(fit, d, RegressionTarget::YMean, false);
        const auto report = recursion_error(spec, eval, reg, d, options);
        CAPTURE(d);
        CHECK(report.eps_rms < prev);
        CHECK(report.n_eval == 400);
        prev = report.eps_rms;
    }
    CHECK(prev < 0.05); // d=3 closes the recursion to a few percent
}

TEST_CASE("LV two-lag window closes the recursion") {
    const SystemSpec spec = SystemSpec::preset("lv");
    const Trajectory full = simulate(spec, 6, 4000, 1000);
    const ConditionalRegressor reg =
        fit_conditional(take_rows(full, 0, 3000), 2, RegressionTarget::YMean, false);
    RecursionErrorOptions options;
    options.parallel = false;
    options.max_eval = 500;
    const auto report = recursion_error(spec, take_rows(full, 3000, 1000), reg, 2, options);
    CHECK(report.eps_rms < 5e-3);
}

TEST_CASE("first-order sigma") {
    const SystemSpec spec = SystemSpec::preset("lorenz63");
    const Trajectory full = simulate(spec, 9, 3000, 1000);
    const Trajectory fit = take_rows(full, 0, 2500);
    const int d = 3;
    const ConditionalRegressor reg_mean = fit_conditional(fit, d, RegressionTarget::YMean, false);
    const ConditionalRegressor reg_cov =
        fit_conditional(fit, d, RegressionTarget::YCovariance, false);

    const Mat x = take_rows(full, 2500, 500).observed();
    const int n = spec.observed_dim();

    SUBCASE("symmetric and positive semidefinite along the orbit") {
        for (Eigen::Index t = d; t < d + 20; ++t) {
            Vec window(d * n);
            for (int k = 0; k < d; ++k) window.segment(k * n, n) = x.row(t - 1 - k);
            const Mat sigma = first_order_sigma(spec, window, reg_mean, reg_cov);
            REQUIRE(sigma.rows() == n);
            CHECK((sigma - sigma.transpose()).cwiseAbs().maxCoeff() < 1e-12);
            Eigen::SelfAdjointEigenSolver<Mat> eig(sigma);
            CHECK(eig.eigenvalues().minCoeff() > -1e-12);
        }
    }
    SUBCASE("zero conditional covariance gives zero sigma") {
        const Eigen::Index r_count = fit.length() - d + 1;
        Mat windows(r_count, d * n);
        const Mat xf = fit.observed();
        for (Eigen::Index tau = 0; tau < r_count; ++tau)
            for (int k = 0; k < d; ++k)
                windows.block(tau, k * n, 1, n) = xf.row(tau + d - 1 - k);
        const int m = spec.unobserved_dim();
        const ConditionalRegressor zero_cov(windows, Mat::Zero(r_count, m * m),
                                            EstimatorKind::KnnInvDist);
        Vec window(d * n);
        for (int k = 0; k < d; ++k) window.segment(k * n, n) = x.row(d + 4 - 1 - k);
        const Mat sigma = first_order_sigma(spec, window, reg_mean, zero_cov);
        CHECK(sigma.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("window width must be a multiple of n") {
        CHECK_THROWS_AS(first_order_sigma(spec, Vec::Zero(5), reg_mean, reg_cov),
                        ShapeMismatchError);
    }
}

TEST_CASE("sigma column reports a scale consistent with eps") {
    // With the covariance regressor enabled the report's mean trace must be
    // positive and within a couple orders of magnitude of eps_rms^2: both
    // measure the same residual propagated through the same Jacobians.
    const SystemSpec spec = SystemSpec::preset("lorenz63");
    const Trajectory full = simulate(spec, 13, 3000, 1000);
    const Trajectory fit = take_rows(full, 0, 2000);
    const Trajectory eval = take_rows(full, 2000, 1000);
    const int d = 2;
    const ConditionalRegressor reg_mean = fit_conditional(fit, d, RegressionTarget::YMean, false);
    const ConditionalRegressor reg_cov =
        fit_conditional(fit, d, RegressionTarget::YCovariance, false);
    RecursionErrorOptions options;
    options.parallel = false;
    options.max_eval = 300;
    options.cov = &reg_cov;
    const auto report = recursion_error(spec, eval, reg_mean, d, options);
    CHECK(report.sigma_trace_mean > 0.0);
    const double ratio = report.sigma_trace_mean / (report.eps_rms * report.eps_rms);
    CHECK(ratio > 1e-2);
    CHECK(ratio < 1e2);
}
