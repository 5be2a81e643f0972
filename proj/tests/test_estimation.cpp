#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "ramp/estimation.hpp"
#include "test_util.hpp"

using namespace ramp;
using testutil::rows;
using testutil::vec;

namespace {

// x+ = theta x + u + d, |d| <= 0.1, theta in [0, 2]
UncertainModel scalar_model() { return UncertainModel({rows({{0.0}}), rows({{1.0}})}, {rows({{1.0}}), rows({{0.0}})}); }
DisturbanceSet scalar_D() { return {HPolytope::box(vec({-0.1}), vec({0.1}))}; }

}  // namespace

TEST(NonFalsified, ScalarInterval) {
    // x = 1, u = 0, x+ = 1.05  ->  theta in [0.95, 1.15]
    const auto nf = nonfalsified(scalar_model(), vec({1.0}), vec({0.0}), vec({1.05}), scalar_D());
    const auto box = bounding_box(nf.poly);
    EXPECT_NEAR(box.lower(0), 0.95, 1e-12);
    EXPECT_NEAR(box.upper(0), 1.15, 1e-12);
    EXPECT_FALSE(nf.always_violated);
    EXPECT_TRUE(consistent(scalar_model(), vec({1.0}), vec({0.0}), vec({1.05}), scalar_D(), vec({1.0})));
    EXPECT_FALSE(consistent(scalar_model(), vec({1.0}), vec({0.0}), vec({1.05}), scalar_D(), vec({1.2})));
}

TEST(NonFalsified, ZeroRegressorKeepsEverything) {
    const auto nf = nonfalsified(scalar_model(), vec({0.0}), vec({0.0}), vec({0.05}), scalar_D());
    EXPECT_EQ(nf.poly.rows(), 0);
    EXPECT_FALSE(nf.always_violated);
}

TEST(NonFalsified, ImpossibleTransitionMarked) {
    // regressor zero yet the residual exceeds the disturbance bound
    const auto nf = nonfalsified(scalar_model(), vec({0.0}), vec({0.0}), vec({0.5}), scalar_D());
    EXPECT_TRUE(nf.always_violated);
    EXPECT_TRUE(is_empty(nf.poly));
}

TEST(Hypercube, InconsistentDataRaises) {
    auto est = make_estimator({vec({1.0}), 2.0}, vec({1.0}), 0.1, 10);
    const auto nf = nonfalsified(scalar_model(), vec({0.0}), vec({0.0}), vec({0.5}), scalar_D());
    EXPECT_THROW(hypercube_update(est, nf), EstimationError);
}

TEST(Hypercube, ShrinksAroundTruth) {
    const auto model = scalar_model();
    auto est = make_estimator({vec({1.0}), 2.0}, vec({1.0}), 0.1, 10);
    const double theta = 1.3;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-0.1, 0.1), X(-1.0, 1.0);
    double eta_prev = est.theta_set.eta;
    for (int t = 0; t < 200; ++t) {
        const Vec x = vec({X(rng)}), u = vec({0.0});
        const Vec xn = vec({theta * x(0) + U(rng)});
        const ParamHypercube before = est.theta_set;
        hypercube_update(est, nonfalsified(model, x, u, xn, scalar_D()));
        ASSERT_TRUE(est.theta_set.contains(vec({theta}), 1e-9));
        ASSERT_TRUE(est.theta_set.subset_of(before, 1e-9));
        ASSERT_LE(est.theta_set.eta, eta_prev + 1e-15);
        eta_prev = est.theta_set.eta;
    }
    EXPECT_LT(est.theta_set.eta, 0.1);
    EXPECT_LE(est.window.size(), est.M + 2);
}

TEST(Hypercube, StudyRunKeepsTruthAndNests) {
    const MassSpringDamper msd;
    const auto model = msd.model();
    const auto D = msd.disturbance();
    const Vec th = MassSpringDamper::theta_true();
    const auto dyn = eval_dynamics(model, th);
    auto est = make_estimator(MassSpringDamper::prior(), Vec::Zero(2), 0.9 / oracle::mu_bound, 10);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Vec x = Vec::Zero(2);
    for (int t = 0; t < 400; ++t) {
        const Vec u = vec({U(rng)});
        const Vec d = vec({0.0, 0.02 * (U(rng) > 0 ? 1.0 : -1.0)});
        const Vec xn = dyn.A * x + dyn.B * u + d;
        const ParamHypercube before = est.theta_set;
        hypercube_update(est, nonfalsified(model, x, u, xn, D));
        lms_update(est, model, x, u, xn);
        ASSERT_TRUE(est.theta_set.contains(th, 1e-7)) << "t = " << t;
        ASSERT_TRUE(est.theta_set.subset_of(before, 1e-7)) << "t = " << t;
        ASSERT_TRUE(est.theta_set.contains(est.theta_hat, 1e-12));
        x = xn;
    }
    EXPECT_LT(est.theta_set.eta, MassSpringDamper::prior().eta);
}

TEST(Lms, GradientStepAndProjection) {
    const auto model = scalar_model();
    auto est = make_estimator({vec({1.0}), 2.0}, vec({0.0}), 0.5, 10);
    // error x+ - theta_hat x = 1, regressor 1 -> theta_hat = 0.5
    lms_update(est, model, vec({1.0}), vec({0.0}), vec({1.0}));
    EXPECT_NEAR(est.theta_hat(0), 0.5, 1e-15);
    // large step is clamped to the set
    est.mu = 100.0;
    lms_update(est, model, vec({1.0}), vec({0.0}), vec({10.0}));
    EXPECT_NEAR(est.theta_hat(0), 2.0, 1e-15);
    est.mu = 0.0;
    EXPECT_THROW(lms_update(est, model, vec({1.0}), vec({0.0}), vec({1.0})), std::invalid_argument);
}

TEST(Lms, PredictionErrorBoundWithoutDisturbance) {
    // sum ||x - x_hat||^2 <= ||theta_hat_0 - theta*||^2 / mu holds for mu ||D||^2 <= 1
    const auto model = scalar_model();
    auto est = make_estimator({vec({1.0}), 2.0}, vec({0.0}), 0.9, 10);
    const double theta = 1.7;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> X(-1.0, 1.0);
    double sum = 0.0;
    for (int t = 0; t < 300; ++t) {
        const Vec x = vec({X(rng)});
        const Vec xn = vec({theta * x(0)});
        const double e = xn(0) - est.theta_hat(0) * x(0);
        sum += e * e;
        lms_update(est, model, x, vec({0.0}), xn);
        ASSERT_LE(sum, theta * theta / 0.9 + 1e-12);
    }
    EXPECT_NEAR(est.theta_hat(0), theta, 1e-6);
}

TEST(MuBound, StudyValue) {
    EXPECT_NEAR(mu_bound(MassSpringDamper{}.model(), MassSpringDamper::constraints()), oracle::mu_bound, 1e-12);
}

TEST(MuBound, BoxScalar) {
    // Z = {|x| <= 2, |u| <= 1}, D(x,u) = x  ->  4
    const ConstraintSet Z{rows({{0.5}, {-0.5}, {0.0}, {0.0}}), rows({{0.0}, {0.0}, {1.0}, {-1.0}})};
    EXPECT_NEAR(mu_bound(scalar_model(), Z), 4.0, 1e-12);
}
