#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "msd_fixture.hpp"
#include "ramp/scenario.hpp"
#include "test_util.hpp"

using namespace ramp;
using testutil::vec;

namespace {

json study_json() { return read_json_file(std::string(RAMP_SOURCE_DIR) + "/scenarios/msd.json"); }

std::string temp_file(const std::string& name, const std::string& content) {
    const std::string path = testing::TempDir() + name;
    std::ofstream(path) << content;
    return path;
}

}  // namespace

TEST(ScenarioFile, StudyParsed) {
    const auto& f = fixture::msd().file;
    const auto& sc = f.scenario;
    EXPECT_EQ(f.N, 14);
    EXPECT_EQ(f.formulation, Formulation::w2);
    EXPECT_EQ(sc.T, 500);
    EXPECT_EQ(sc.setpoints.size(), 20u);
    EXPECT_EQ(sc.M, 10u);
    EXPECT_EQ(f.seeds.size(), 3u);
    EXPECT_TRUE(sc.model.A[0].isApprox(MassSpringDamper{}.model().A[0]));
    EXPECT_TRUE(sc.D.poly.contains(vec({0.0, 0.02})));
    EXPECT_NEAR(f.mu_scale, 0.9, 0.0);
}

TEST(ScenarioFile, ExplicitMatricesEquivalentToTemplate) {
    json j = study_json();
    const auto model = MassSpringDamper{}.model();
    json A = json::array(), B = json::array();
    for (std::size_t i = 0; i < model.A.size(); ++i) A.push_back(to_json(model.A[i])), B.push_back(to_json(model.B[i]));
    j["model"] = {{"A", A}, {"B", B}};
    const auto f = scenario_from_json(j);
    for (std::size_t i = 0; i < model.A.size(); ++i) EXPECT_EQ(f.scenario.model.A[i], model.A[i]);
}

TEST(ScenarioFile, SchemaErrors) {
    auto expect_error = [](const std::function<void(json&)>& edit) {
        json j = study_json();
        edit(j);
        EXPECT_THROW(scenario_from_json(j), ScenarioError) << j.dump();
    };
    expect_error([](json& j) { j.erase("model"); });
    expect_error([](json& j) { j["model"]["template"] = "pendulum"; });
    expect_error([](json& j) { j["prior"]["center"] = {0.0}; });
    expect_error([](json& j) { j["prior"]["eta"] = -1.0; });
    expect_error([](json& j) { j["theta_true"] = {1.0, 2.0, 3.0}; });
    expect_error([](json& j) { j["mpc"]["formulation"] = "w9"; });
    expect_error([](json& j) { j["mpc"]["N"] = 0; });
    expect_error([](json& j) { j["mpc"]["Q"] = {{1.0}}; });
    expect_error([](json& j) { j["constraints"]["G"] = {{0.0, 1.0}}; });
    expect_error([](json& j) { j["disturbance"] = {{"lower", {0.0}}, {"upper", {0.0}}}; });
    expect_error([](json& j) { j["offline"].erase("tube_base"); });
    expect_error([](json& j) { j["offline"]["tube_base"]["u_upper"] = {1.0, 2.0}; });
    expect_error([](json& j) { j["run"]["disturbance_mode"] = "gaussian"; });
    expect_error([](json& j) { j["run"]["x0"] = {1.0}; });
    expect_error([](json& j) { j["run"].erase("alternate"); j["run"]["setpoints"] = {{{"start", 3}, {"x_s", {0.0, 0.0}}}}; });
    expect_error([](json& j) { j["constraints"]["F"] = "not a matrix"; });
    expect_error([](json& j) { j = json::array(); });
}

TEST(ScenarioFile, FileErrors) {
    EXPECT_THROW(load_scenario(testing::TempDir() + "does_not_exist.json"), ScenarioError);
    EXPECT_THROW(load_scenario(temp_file("broken.json", "{\"model\": ")), ScenarioError);
    EXPECT_THROW(load_artifact(temp_file("empty_artifact.json", "{}")), ScenarioError);
}

TEST(Artifact, RoundTripIsBitExact) {
    const auto& a = fixture::msd().artifact;
    const std::string text = to_json(a).dump(2);
    const auto b = artifact_from_json(json::parse(text));
    EXPECT_EQ(b.constants.K, a.constants.K);
    EXPECT_EQ(b.constants.P, a.constants.P);
    EXPECT_EQ(b.constants.tube.H, a.constants.tube.H);
    EXPECT_EQ(b.constants.tube.h, a.constants.tube.h);
    EXPECT_EQ(b.constants.rho_bar, a.constants.rho_bar);
    EXPECT_EQ(b.constants.L_B, a.constants.L_B);
    EXPECT_EQ(b.constants.d_bar_rows, a.constants.d_bar_rows);
    EXPECT_EQ(b.constants.c, a.constants.c);
    EXPECT_EQ(b.mu_bound, a.mu_bound);
    ASSERT_EQ(b.terminals.size(), a.terminals.size());
    for (std::size_t i = 0; i < a.terminals.size(); ++i) {
        EXPECT_EQ(b.terminals[i].kind, a.terminals[i].kind);
        EXPECT_EQ(b.terminals[i].f_lower, a.terminals[i].f_lower);
        EXPECT_EQ(b.terminals[i].x_s, a.terminals[i].x_s);
        EXPECT_EQ(b.terminals[i].u_s.u0, a.terminals[i].u_s.u0);
        EXPECT_EQ(b.terminals[i].u_s.U, a.terminals[i].u_s.U);
    }
    EXPECT_EQ(to_json(b).dump(2), text);
}

TEST(Offline, SuppliedGainReproducesConstants) {
    const auto& m = fixture::msd();
    json j = study_json();
    j["offline"]["K"] = to_json(m.artifact.constants.K);
    j["offline"]["P"] = to_json(m.artifact.constants.P);
    const auto f = scenario_from_json(j);
    EXPECT_FALSE(f.offline.synthesize);
    const auto a = run_offline(f);
    EXPECT_LT(a.lambda, 0.0);
    EXPECT_EQ(a.constants.r(), m.artifact.constants.r());
    EXPECT_NEAR(a.constants.L_B, m.artifact.constants.L_B, 1e-12);
    EXPECT_NEAR(a.terminals[0].f_lower, m.artifact.terminals[0].f_lower, 1e-12);
}

TEST(Offline, SuppliedGainFailingLyapunovRejected) {
    json j = study_json();
    j["offline"]["K"] = {{0.0, 0.0}};
    j["offline"]["P"] = {{1.0, 0.0}, {0.0, 1.0}};
    EXPECT_THROW(run_offline(scenario_from_json(j)), SynthesisError);
}

TEST(Offline, SetpointNearBoundaryRejected) {
    json j = study_json();
    j["run"]["alternate"]["a"] = {1.09, 0.0};
    EXPECT_THROW(run_offline(scenario_from_json(j)), TerminalInfeasible);
}

TEST(Offline, RunScenarioResolvesGain) {
    const auto& m = fixture::msd();
    const auto sc = make_run_scenario(m.file, m.artifact, 11);
    EXPECT_EQ(sc.seed, 11u);
    EXPECT_NEAR(sc.mu, 0.9 / m.artifact.mu_bound, 1e-9);
    EXPECT_EQ(make_config(m.file, m.artifact).terminal.kind, TerminalSet::Kind::tracking);
}
