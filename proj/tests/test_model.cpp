#include <gtest/gtest.h>

#include "ramp/model.hpp"
#include "test_util.hpp"

using namespace ramp;
using testutil::rows;
using testutil::vec;

TEST(Model, StudyMatrices) {
    const auto model = MassSpringDamper{}.model();
    ASSERT_EQ(model.n(), 2);
    ASSERT_EQ(model.m(), 1);
    ASSERT_EQ(model.p(), 2);
    EXPECT_TRUE(model.A[0].isApprox(rows({{1.0, 0.1}, {-0.1, 0.98}})));
    EXPECT_TRUE(model.A[1].isApprox(rows({{0.0, 0.0}, {0.0, -0.01}})));
    EXPECT_TRUE(model.A[2].isApprox(rows({{0.0, 0.0}, {-0.05, 0.0}})));
    EXPECT_TRUE(model.B[0].isApprox(rows({{0.0}, {0.1}})));
    EXPECT_EQ(model.p_B(), 0);
}

TEST(Model, TrueParametersGiveHalfStiffness) {
    // k = 1 + 0.5 theta_2 = 0.5, c = 0.2 + 0.1 theta_1 = 0.3
    const auto d = eval_dynamics(MassSpringDamper{}.model(), MassSpringDamper::theta_true());
    EXPECT_NEAR(d.A(1, 0), -0.05, 1e-15);
    EXPECT_NEAR(d.A(1, 1), 1.0 - 0.03, 1e-15);
    EXPECT_TRUE(MassSpringDamper::prior().contains(MassSpringDamper::theta_true()));
}

TEST(Model, RegressorColumns) {
    const auto model = MassSpringDamper{}.model();
    const Mat D = regressor(model, vec({2.0, 3.0}), vec({7.0}));
    EXPECT_TRUE(D.isApprox(rows({{0.0, 0.0}, {-0.03, -0.1}})));
    EXPECT_THROW(regressor(model, vec({1.0}), vec({0.0})), std::invalid_argument);
}

TEST(Model, AffineInTheta) {
    const auto model = MassSpringDamper{}.model();
    const Vec x = vec({0.3, -1.2}), u = vec({0.7});
    const Vec th = vec({0.4, -0.9});
    const auto d = eval_dynamics(model, th);
    const Vec lhs = d.A * x + d.B * u;
    const Vec rhs = model.A[0] * x + model.B[0] * u + regressor(model, x, u) * th;
    EXPECT_LT((lhs - rhs).norm(), 1e-15);
}

TEST(Model, ValidationRejectsMismatch) {
    EXPECT_THROW(UncertainModel({Mat::Identity(2, 2)}, {}), std::invalid_argument);
    EXPECT_THROW(UncertainModel({Mat::Identity(2, 2), Mat::Identity(3, 3)}, {Mat::Zero(2, 1), Mat::Zero(2, 1)}), std::invalid_argument);
}

TEST(Model, InputParametersCounted) {
    const UncertainModel m({Mat::Identity(1, 1), Mat::Zero(1, 1), Mat::Identity(1, 1)}, {Mat::Ones(1, 1), Mat::Ones(1, 1), Mat::Zero(1, 1)});
    EXPECT_EQ(m.p_B(), 1);
}

TEST(Hypercube, VerticesAndBounds) {
    const ParamHypercube H{vec({1.0, -1.0}), 0.5};
    const auto V = H.vertices();
    ASSERT_EQ(V.size(), 4u);
    for (const auto& v : V) EXPECT_NEAR((v - H.center).lpNorm<Eigen::Infinity>(), 0.25, 1e-15);
    EXPECT_NEAR(H.lower()(0), 0.75, 1e-15);
    EXPECT_NEAR(H.upper()(1), -0.75, 1e-15);
    EXPECT_TRUE(H.polytope().contains(vec({1.2, -0.8})));
}

TEST(Hypercube, ProjectionClamps) {
    const ParamHypercube H{Vec::Zero(2), 2.0};
    const Vec p = H.project(vec({3.0, -0.2}));
    EXPECT_DOUBLE_EQ(p(0), 1.0);
    EXPECT_DOUBLE_EQ(p(1), -0.2);
}

TEST(Hypercube, Nesting) {
    const ParamHypercube big{Vec::Zero(2), 2.0}, small{vec({0.5, 0.5}), 1.0}, off{vec({0.6, 0.0}), 1.0};
    EXPECT_TRUE(small.subset_of(big));
    EXPECT_FALSE(off.subset_of(big));
    EXPECT_FALSE(big.subset_of(small));
}

TEST(Constraints, StudySet) {
    const auto Z = MassSpringDamper::constraints();
    EXPECT_EQ(Z.q(), 6);
    EXPECT_LE(Z.max_violation(vec({1.1, 5.0}), vec({5.0})), 1e-12);
    EXPECT_GT(Z.max_violation(vec({-0.11, 0.0}), vec({0.0})), 0.0);
    EXPECT_NO_THROW(Z.check_compact());
    const ConstraintSet open{rows({{1.0, 0.0}}), rows({{0.0}})};
    EXPECT_THROW(open.check_compact(), GeometryError);
}

TEST(Disturbance, StudySetIsVelocityInterval) {
    const auto D = MassSpringDamper{}.disturbance();
    EXPECT_TRUE(D.contains_origin());
    EXPECT_TRUE(D.poly.contains(vec({0.0, 0.02})));
    EXPECT_FALSE(D.poly.contains(vec({0.001, 0.0})));
    EXPECT_FALSE(D.poly.contains(vec({0.0, 0.021})));
}
