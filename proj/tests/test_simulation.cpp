#include <gtest/gtest.h>

#include "msd_fixture.hpp"
#include "ramp/simulation.hpp"
#include "test_util.hpp"

using namespace ramp;
using testutil::rows;
using testutil::vec;

namespace {

Scenario short_run(std::uint64_t seed, int T, DisturbanceMode mode = DisturbanceMode::uniform) {
    const auto& m = fixture::msd();
    Scenario sc = make_run_scenario(m.file, m.artifact, seed);
    sc.T = T;
    sc.setpoints = alternating_setpoints(vec({1.0, 0.0}), vec({0.0, 0.0}), 25, T);
    sc.disturbance_mode = mode;
    return sc;
}

}  // namespace

TEST(Rng, DeterministicAndInRange) {
    Rng a(7), b(7), c(8);
    bool differs = false;
    for (int i = 0; i < 1000; ++i) {
        const double x = a.uniform();
        EXPECT_EQ(x, b.uniform());
        differs = differs || x != c.uniform();
        ASSERT_GE(x, 0.0);
        ASSERT_LT(x, 1.0);
        ASSERT_LT(a.index(3), 3u);
        b.index(3);
        c.index(3);
    }
    EXPECT_TRUE(differs);
}

TEST(Disturbance, StudyVerticesDeduplicated) {
    const auto V = disturbance_vertices(MassSpringDamper{}.disturbance());
    ASSERT_EQ(V.size(), 2u);
    EXPECT_NEAR(std::abs(V[0](1)), 0.02, 1e-15);
    EXPECT_NEAR(V[0](1) + V[1](1), 0.0, 1e-15);
}

TEST(Disturbance, SamplesStayInSet) {
    const DisturbanceSet box = MassSpringDamper{}.disturbance();
    const DisturbanceSet tri{HPolytope(rows({{-1.0, 0.0}, {0.0, -1.0}, {1.0, 1.0}}), vec({0.0, 0.0, 0.1}))};
    Rng rng(3);
    for (const auto* D : {&box, &tri})
        for (auto mode : {DisturbanceMode::uniform, DisturbanceMode::vertex_adversarial, DisturbanceMode::seeded_sequence})
            for (int i = 0; i < 300; ++i) ASSERT_TRUE(D->poly.contains(sample_disturbance(*D, mode, rng), 1e-12)) << to_string(mode);
    EXPECT_EQ(sample_disturbance(box, DisturbanceMode::zero, rng).norm(), 0.0);
    const auto V = disturbance_vertices(tri);
    EXPECT_EQ(V.size(), 3u);
}

TEST(Disturbance, ModeNames) {
    for (auto m : {DisturbanceMode::zero, DisturbanceMode::uniform, DisturbanceMode::vertex_adversarial, DisturbanceMode::seeded_sequence})
        EXPECT_EQ(disturbance_mode_from_string(to_string(m)), m);
    EXPECT_THROW(disturbance_mode_from_string("gaussian"), std::invalid_argument);
}

TEST(Setpoints, Alternation) {
    const auto sp = alternating_setpoints(vec({1.0}), vec({0.0}), 25, 100);
    ASSERT_EQ(sp.size(), 4u);
    EXPECT_EQ(sp[1].start, 25);
    EXPECT_EQ(sp[2].x_s(0), 1.0);
    EXPECT_EQ(sp[3].x_s(0), 0.0);
}

TEST(ClosedLoop, AdaptiveRunSatisfiesInvariants) {
    const auto& m = fixture::msd();
    int streamed = 0;
    RunOptions opt;
    opt.on_step = [&](const StepRecord&) { ++streamed; };
    const auto tr = run(short_run(1, 120), m.config, true, opt);
    const auto& S = tr.summary;
    ASSERT_FALSE(S.aborted) << S.abort_reason;
    EXPECT_EQ(tr.steps.size(), 120u);
    EXPECT_EQ(streamed, 120);
    EXPECT_EQ(S.constraint_violations, 0);
    EXPECT_EQ(S.infeasible_steps, 0);
    EXPECT_EQ(S.lemma1_failures, 0);
    EXPECT_EQ(S.lemma2_failures, 0);
    EXPECT_EQ(S.nest_failures, 0);
    EXPECT_LE(S.max_candidate_nest, 1e-7);
    EXPECT_LE(S.max_candidate_error, 1e-7);
    EXPECT_LT(S.eta_final, 2.0);
    for (std::size_t t = 1; t < tr.steps.size(); ++t) EXPECT_LE(tr.steps[t].eta, tr.steps[t - 1].eta + 1e-12);
    // tracks the first setpoint before the switch
    EXPECT_NEAR(tr.steps[24].x(0), 1.0, 0.15);
    EXPECT_NEAR(tr.steps[49].x(0), 0.0, 0.15);
}

TEST(ClosedLoop, SameSeedIsReproducible) {
    const auto& m = fixture::msd();
    const auto a = run(short_run(4, 40), m.config, true);
    const auto b = run(short_run(4, 40), m.config, true);
    const auto c = run(short_run(5, 40), m.config, true);
    ASSERT_EQ(a.steps.size(), b.steps.size());
    bool differs = false;
    for (std::size_t t = 0; t < a.steps.size(); ++t) {
        EXPECT_EQ(a.steps[t].x, b.steps[t].x);
        EXPECT_EQ(a.steps[t].u, b.steps[t].u);
        differs = differs || a.steps[t].d != c.steps[t].d;
    }
    EXPECT_TRUE(differs);
}

TEST(ClosedLoop, RobustRunKeepsPrior) {
    const auto& m = fixture::msd();
    const auto tr = run(short_run(2, 60), m.config, false, {false, 1e-7, {}});
    EXPECT_EQ(tr.summary.eta_final, 2.0);
    EXPECT_EQ(tr.summary.constraint_violations, 0);
    EXPECT_EQ(tr.steps.back().theta_hat, m.file.scenario.theta_hat0);
}

TEST(ClosedLoop, VertexDisturbancesIdentifyParameters) {
    const auto& m = fixture::msd();
    const auto tr = run(short_run(3, 80, DisturbanceMode::vertex_adversarial), m.config, true);
    EXPECT_EQ(tr.summary.lemma1_failures, 0);
    EXPECT_EQ(tr.summary.constraint_violations, 0);
    EXPECT_LT(tr.summary.eta_final, 0.05);
}

TEST(ClosedLoop, ReplayedSequenceIsUsed) {
    const auto& m = fixture::msd();
    Scenario sc = short_run(0, 10, DisturbanceMode::seeded_sequence);
    sc.disturbance_sequence = {vec({0.0, 0.01}), vec({0.0, -0.02})};
    const auto tr = run(sc, m.config, true);
    for (std::size_t t = 0; t < tr.steps.size(); ++t) EXPECT_EQ(tr.steps[t].d, sc.disturbance_sequence[t % 2]);
}

TEST(ClosedLoop, RejectsInvalidScenario) {
    const auto& m = fixture::msd();
    Scenario sc = short_run(0, 10);
    sc.theta_true = vec({5.0, 0.0});
    EXPECT_THROW(run(sc, m.config, true), std::invalid_argument);
    sc = short_run(0, 10);
    sc.setpoints.front().start = 3;
    EXPECT_THROW(run(sc, m.config, true), std::invalid_argument);
}

TEST(L2Gain, RegulationRatioBounded) {
    const auto& m = fixture::msd();
    Scenario sc = short_run(6, 100);
    sc.x0 = vec({1.0, 0.0});
    sc.setpoints = {{0, vec({0.0, 0.0})}};
    const auto tr = run(sc, m.config, true);
    const auto rep = l2_gain_report(tr);
    ASSERT_EQ(rep.ratio.size(), 100u);
    EXPECT_TRUE(std::isfinite(rep.max_ratio));
    EXPECT_GT(rep.max_ratio, 0.0);
    EXPECT_TRUE(rep.max_in_first_half);
    EXPECT_FALSE(rep.late_growth);
}

TEST(L2Gain, EmptyTrace) {
    EXPECT_TRUE(l2_gain_report(RunTrace{}).ratio.empty());
}
