#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

const std::string cli = RAMP_CLI_PATH;
const std::string study = std::string(RAMP_SOURCE_DIR) + "/scenarios/msd.json";

std::string tmp(const std::string& name) { return testing::TempDir() + "ramp_cli_" + name; }

struct Result {
    int code = -1;
    std::string out;
};

Result run(const std::string& args) {
    const std::string cmd = cli + " " + args + " 2>/dev/null";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

nlohmann::json study_json() { return nlohmann::json::parse(slurp(study)); }

std::string write_json(const std::string& name, const nlohmann::json& j) {
    const std::string path = tmp(name);
    std::ofstream(path) << j.dump(2);
    return path;
}

// offline output shared by the tests below
const std::string& constants() {
    static const std::string path = [] {
        const std::string p = tmp("constants.json");
        const auto r = run("offline " + study + " -o " + p);
        EXPECT_EQ(r.code, 0) << r.out;
        return p;
    }();
    return path;
}

}  // namespace

TEST(Cli, OfflineWritesConstants) {
    const auto r = run("offline " + study + " -o " + tmp("c2.json"));
    EXPECT_EQ(r.code, 0);
    const auto j = nlohmann::json::parse(slurp(tmp("c2.json")));
    EXPECT_NEAR(j["rho_bar"].get<double>(), 0.75, 1e-9);
    EXPECT_EQ(j["terminals"].size(), 2u);
    EXPECT_NE(r.out.find("rho_bar"), std::string::npos);
}

TEST(Cli, MissingOrMalformedInputIsSchemaError) {
    EXPECT_EQ(run("offline " + tmp("nope.json")).code, 1);
    std::ofstream(tmp("bad.json")) << "{\"model\": [";
    EXPECT_EQ(run("offline " + tmp("bad.json")).code, 1);
    auto j = study_json();
    j.erase("prior");
    EXPECT_EQ(run("offline " + write_json("noprior.json", j)).code, 1);
    EXPECT_EQ(run("simulate " + study + " " + tmp("nope.json")).code, 1);
    EXPECT_EQ(run("frobnicate").code, 1);
    EXPECT_EQ(run("").code, 1);
}

TEST(Cli, TerminalInfeasibleSetpoint) {
    auto j = study_json();
    j["run"]["alternate"]["a"] = {1.09, 0.0};
    EXPECT_EQ(run("offline " + write_json("edge.json", j)).code, 2);
}

TEST(Cli, SynthesisFailure) {
    // first state unstable and unreachable from the input
    nlohmann::json j = study_json();
    j["model"] = {{"A", {{{1.5, 0.0}, {0.0, 0.9}}, {{0.0, 0.0}, {0.0, 0.1}}}}, {"B", {{{0.0}, {0.1}}, {{0.0}, {0.0}}}}};
    j["prior"] = {{"center", {0.0}}, {"eta", 1.0}};
    j["theta_true"] = {0.0};
    j["estimator"]["theta_hat0"] = {0.0};
    j["offline"]["synthesis"]["rho"] = 0.99;
    EXPECT_EQ(run("offline " + write_json("unstable.json", j)).code, 3);
}

TEST(Cli, SimulateIsDeterministic) {
    auto j = study_json();
    j["run"]["T"] = 60;
    const std::string sc = write_json("short.json", j);
    const auto a = run("simulate " + sc + " " + constants() + " --seed 3 --csv " + tmp("a.csv") + " --summary " + tmp("a.json") +
                       " --jsonl " + tmp("a.jsonl") + " --svg " + tmp("plot"));
    const auto b = run("simulate " + sc + " " + constants() + " --seed 3 --csv " + tmp("b.csv"));
    ASSERT_EQ(a.code, 0) << a.out;
    ASSERT_EQ(b.code, 0);
    const std::string ca = slurp(tmp("a.csv"));
    EXPECT_EQ(ca, slurp(tmp("b.csv")));
    EXPECT_EQ(std::count(ca.begin(), ca.end(), '\n'), 61);
    const auto s = nlohmann::json::parse(slurp(tmp("a.json")));
    EXPECT_EQ(s["seed"].get<int>(), 3);
    EXPECT_EQ(s["constraint_violations"].get<int>(), 0);
    EXPECT_EQ(s["steps"].get<int>(), 60);
    const std::string jl = slurp(tmp("a.jsonl"));
    EXPECT_EQ(std::count(jl.begin(), jl.end(), '\n'), 60);
    EXPECT_NE(slurp(tmp("plot_states.svg")).find("<svg"), std::string::npos);
    EXPECT_NE(slurp(tmp("plot_params.svg")).find("<svg"), std::string::npos);
    const auto c = run("simulate " + sc + " " + constants() + " --seed 4 --csv " + tmp("c.csv"));
    EXPECT_NE(ca, slurp(tmp("c.csv")));
}

TEST(Cli, SimulateRobustBaseline) {
    auto j = study_json();
    j["run"]["T"] = 30;
    const auto r = run("simulate " + write_json("short_r.json", j) + " " + constants() + " --no-adapt");
    ASSERT_EQ(r.code, 0);
    const auto s = nlohmann::json::parse(r.out);
    EXPECT_FALSE(s["adapt"].get<bool>());
    EXPECT_EQ(s["eta_final"].get<double>(), 2.0);
}

TEST(Cli, CompareTubes) {
    const auto r = run("compare-tubes " + study + " " + constants() + " --report " + tmp("tubes.json") + " --stages " + tmp("stages.csv"));
    ASSERT_EQ(r.code, 0);
    const auto rep = nlohmann::json::parse(slurp(tmp("tubes.json")));
    ASSERT_EQ(rep.size(), 5u);
    EXPECT_EQ(rep[0]["formulation"], "homothetic");
    EXPECT_EQ(rep[4]["formulation"], "nominal");
    EXPECT_LE(rep[0]["s_N"].get<double>(), rep[1]["s_N"].get<double>());
    EXPECT_GT(rep[3]["s_N"].get<double>(), rep[1]["s_N"].get<double>());
    const std::string st = slurp(tmp("stages.csv"));
    EXPECT_EQ(st.substr(0, st.find('\n')), "k,homothetic,w2,w1,w3,nominal");
    EXPECT_EQ(std::count(st.begin(), st.end(), '\n'), 16);
}

TEST(Cli, EstimateDemo) {
    const auto a = run("estimate-demo " + study + " -T 100 --seed 2 --csv " + tmp("est_a.csv"));
    const auto b = run("estimate-demo " + study + " -T 100 --seed 2 --csv " + tmp("est_b.csv"));
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(slurp(tmp("est_a.csv")), slurp(tmp("est_b.csv")));
    const std::string c = slurp(tmp("est_a.csv"));
    EXPECT_GE(std::count(c.begin(), c.end(), '\n'), 100);
}
