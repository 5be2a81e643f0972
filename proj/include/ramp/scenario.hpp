#pragma once

// Scenario files and offline artifacts as JSON.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ramp/simulation.hpp"

namespace ramp {

using json = nlohmann::json;

class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ------------------------------------------------------------ conversions

inline json to_json(const Vec& v) {
    json j = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
    return j;
}

inline json to_json(const Mat& M) {
    json j = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < M.cols(); ++k) row.push_back(M(i, k));
        j.push_back(row);
    }
    return j;
}

inline Vec vec_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) throw ScenarioError(what + ": expected an array of numbers");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ScenarioError(what + ": expected numbers");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

inline Mat mat_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) throw ScenarioError(what + ": expected an array of rows");
    if (j.empty()) return Mat(0, 0);
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Mat M(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != cols) throw ScenarioError(what + ": ragged or non-numeric matrix");
        for (std::size_t k = 0; k < cols; ++k) {
            if (!j[i][k].is_number()) throw ScenarioError(what + ": expected numbers");
            M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
        }
    }
    return M;
}

inline json to_json(const HPolytope& P) { return {{"H", to_json(P.H)}, {"h", to_json(P.h)}}; }

inline HPolytope polytope_from_json(const json& j, const std::string& what) {
    if (!j.is_object() || !j.contains("H") || !j.contains("h")) throw ScenarioError(what + ": polytope needs H and h");
    HPolytope P(mat_from_json(j.at("H"), what + ".H"), vec_from_json(j.at("h"), what + ".h"));
    if (P.H.rows() != P.h.size()) throw ScenarioError(what + ": H and h row counts differ");
    return P;
}

namespace detail {

inline const json& require(const json& j, const std::string& key, const std::string& ctx) {
    if (!j.is_object() || !j.contains(key)) throw ScenarioError(ctx + ": missing '" + key + "'");
    return j.at(key);
}

template <class T>
T get_or(const json& j, const std::string& key, T def) {
    if (!j.is_object() || !j.contains(key)) return def;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ScenarioError("field '" + key + "': " + e.what());
    }
}

}  // namespace detail

// -------------------------------------------------------------- scenario

struct OfflineRequest {
    bool synthesize = true;
    double rho = 0.75;
    std::vector<double> lambdas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    Mat K, P;  // supplied instead of synthesis
    TubeBase base;
    ContractiveSetOptions contractive;
};

struct ScenarioFile {
    Scenario scenario;  // seed set per run
    int N = 14;
    Mat Q, R;
    Formulation formulation = Formulation::w2;
    OfflineRequest offline;
    std::vector<std::uint64_t> seeds{0};
    double mu_scale = 0.9;  // mu = mu_scale / mu_bound when mu is not given
};

inline ScenarioFile scenario_from_json(const json& j) {
    using detail::require;
    ScenarioFile f;
    Scenario& sc = f.scenario;
    if (!j.is_object()) throw ScenarioError("scenario: top level must be an object");

    const json& jm = require(j, "model", "scenario");
    bool msd_template = false;
    MassSpringDamper msd;
    if (jm.contains("template")) {
        if (jm.at("template") != "mass-spring-damper") throw ScenarioError("model.template: only 'mass-spring-damper' is known");
        msd_template = true;
        msd.mass = detail::get_or(jm, "mass", msd.mass);
        msd.Ts = detail::get_or(jm, "Ts", msd.Ts);
        msd.c_nominal = detail::get_or(jm, "c_nominal", msd.c_nominal);
        msd.c_scale = detail::get_or(jm, "c_scale", msd.c_scale);
        msd.k_nominal = detail::get_or(jm, "k_nominal", msd.k_nominal);
        msd.k_scale = detail::get_or(jm, "k_scale", msd.k_scale);
        msd.d_max = detail::get_or(jm, "d_max", msd.d_max);
        sc.model = msd.model();
    } else {
        const json& jA = require(jm, "A", "model");
        const json& jB = require(jm, "B", "model");
        if (!jA.is_array() || !jB.is_array()) throw ScenarioError("model: A and B must be lists of matrices");
        std::vector<Mat> A, B;
        for (std::size_t i = 0; i < jA.size(); ++i) A.push_back(mat_from_json(jA[i], "model.A[" + std::to_string(i) + "]"));
        for (std::size_t i = 0; i < jB.size(); ++i) B.push_back(mat_from_json(jB[i], "model.B[" + std::to_string(i) + "]"));
        try {
            sc.model = UncertainModel(A, B);
        } catch (const std::invalid_argument& e) {
            throw ScenarioError(std::string("model: ") + e.what());
        }
    }
    const auto n = sc.model.n(), m = sc.model.m(), p = sc.model.p();

    if (j.contains("constraints")) {
        sc.Z = {mat_from_json(require(j["constraints"], "F", "constraints"), "constraints.F"),
                mat_from_json(require(j["constraints"], "G", "constraints"), "constraints.G")};
    } else if (msd_template) {
        sc.Z = MassSpringDamper::constraints();
    } else {
        throw ScenarioError("scenario: missing 'constraints'");
    }
    if (sc.Z.F.cols() != n || sc.Z.G.cols() != m || sc.Z.F.rows() != sc.Z.G.rows())
        throw ScenarioError("constraints: F must be q x n and G q x m");

    if (j.contains("disturbance")) {
        const json& jd = j["disturbance"];
        if (jd.contains("lower") || jd.contains("upper"))
            sc.D = {HPolytope::box(vec_from_json(require(jd, "lower", "disturbance"), "disturbance.lower"),
                                   vec_from_json(require(jd, "upper", "disturbance"), "disturbance.upper"))};
        else
            sc.D = {polytope_from_json(jd, "disturbance")};
    } else if (msd_template) {
        sc.D = msd.disturbance();
    } else {
        throw ScenarioError("scenario: missing 'disturbance'");
    }
    if (sc.D.n() != n) throw ScenarioError("disturbance: dimension must equal the state dimension");

    const json& jp = require(j, "prior", "scenario");
    sc.Theta0 = {vec_from_json(require(jp, "center", "prior"), "prior.center"), require(jp, "eta", "prior").get<double>()};
    if (sc.Theta0.p() != p) throw ScenarioError("prior.center: length must equal the parameter count");
    if (!(sc.Theta0.eta >= 0.0)) throw ScenarioError("prior.eta must be nonnegative");
    sc.theta_true = vec_from_json(require(j, "theta_true", "scenario"), "theta_true");
    if (sc.theta_true.size() != p) throw ScenarioError("theta_true: wrong length");

    const json est = j.value("estimator", json::object());
    sc.M = detail::get_or<std::size_t>(est, "M", 10);
    f.mu_scale = detail::get_or(est, "mu_scale", 0.9);
    sc.mu = detail::get_or(est, "mu", 0.0);
    sc.theta_hat0 = est.contains("theta_hat0") ? vec_from_json(est["theta_hat0"], "estimator.theta_hat0") : sc.Theta0.center;
    if (sc.theta_hat0.size() != p) throw ScenarioError("estimator.theta_hat0: wrong length");

    const json mpc = j.value("mpc", json::object());
    f.N = detail::get_or(mpc, "N", 14);
    if (f.N < 1) throw ScenarioError("mpc.N must be >= 1");
    f.Q = mpc.contains("Q") ? mat_from_json(mpc["Q"], "mpc.Q") : Mat(Mat::Identity(n, n));
    f.R = mpc.contains("R") ? mat_from_json(mpc["R"], "mpc.R") : Mat(Mat::Identity(m, m));
    if (f.Q.rows() != n || f.Q.cols() != n || f.R.rows() != m || f.R.cols() != m) throw ScenarioError("mpc: Q must be n x n and R m x m");
    try {
        f.formulation = formulation_from_string(detail::get_or<std::string>(mpc, "formulation", "w2"));
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(std::string("mpc.formulation: ") + e.what());
    }

    const json& joff = require(j, "offline", "scenario");
    auto& req = f.offline;
    if (joff.contains("K") || joff.contains("P")) {
        req.synthesize = false;
        req.K = mat_from_json(require(joff, "K", "offline"), "offline.K");
        req.P = mat_from_json(require(joff, "P", "offline"), "offline.P");
        if (req.K.rows() != m || req.K.cols() != n || req.P.rows() != n || req.P.cols() != n) throw ScenarioError("offline: K must be m x n and P n x n");
    }
    const json syn = joff.value("synthesis", json::object());
    req.rho = detail::get_or(syn, "rho", req.rho);
    req.lambdas = detail::get_or(syn, "lambdas", req.lambdas);
    const json& jb = require(joff, "tube_base", "offline");
    req.base = {vec_from_json(require(jb, "x_lower", "tube_base"), "tube_base.x_lower"), vec_from_json(require(jb, "x_upper", "tube_base"), "tube_base.x_upper"),
                vec_from_json(require(jb, "u_lower", "tube_base"), "tube_base.u_lower"), vec_from_json(require(jb, "u_upper", "tube_base"), "tube_base.u_upper")};
    if (req.base.x_lower.size() != n || req.base.x_upper.size() != n || req.base.u_lower.size() != m || req.base.u_upper.size() != m)
        throw ScenarioError("tube_base: bound dimensions do not match the model");
    req.contractive.max_iter = detail::get_or(joff, "max_iter", req.contractive.max_iter);

    const json& jr = require(j, "run", "scenario");
    sc.T = detail::get_or(jr, "T", 500);
    sc.x0 = jr.contains("x0") ? vec_from_json(jr["x0"], "run.x0") : Vec(Vec::Zero(n));
    if (sc.x0.size() != n) throw ScenarioError("run.x0: wrong length");
    if (jr.contains("seeds")) f.seeds = jr["seeds"].get<std::vector<std::uint64_t>>();
    try {
        sc.disturbance_mode = disturbance_mode_from_string(detail::get_or<std::string>(jr, "disturbance_mode", "uniform"));
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(std::string("run.disturbance_mode: ") + e.what());
    }
    if (jr.contains("disturbance_sequence"))
        for (const auto& d : jr["disturbance_sequence"]) sc.disturbance_sequence.push_back(vec_from_json(d, "run.disturbance_sequence"));
    if (jr.contains("alternate")) {
        const json& ja = jr["alternate"];
        sc.setpoints = alternating_setpoints(vec_from_json(require(ja, "a", "alternate"), "alternate.a"), vec_from_json(require(ja, "b", "alternate"), "alternate.b"),
                                             require(ja, "period", "alternate").get<int>(), sc.T);
    } else if (jr.contains("setpoints")) {
        for (const auto& s : jr["setpoints"]) sc.setpoints.push_back({require(s, "start", "setpoint").get<int>(), vec_from_json(require(s, "x_s", "setpoint"), "setpoint.x_s")});
    } else {
        sc.setpoints = {{0, Vec::Zero(n)}};
    }
    for (const auto& s : sc.setpoints)
        if (s.x_s.size() != n) throw ScenarioError("setpoint x_s: wrong length");
    if (sc.setpoints.empty() || sc.setpoints.front().start != 0) throw ScenarioError("run: first setpoint must start at 0");
    return f;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ScenarioError("'" + path + "': malformed JSON: " + e.what());
    }
}

inline ScenarioFile load_scenario(const std::string& path) {
    try {
        return scenario_from_json(read_json_file(path));
    } catch (const json::exception& e) {
        throw ScenarioError("'" + path + "': " + e.what());
    }
}

// -------------------------------------------------------------- artifact

/// Everything the offline stage produces.
struct OfflineArtifact {
    OfflineConstants constants;
    std::vector<TerminalSet> terminals;  // one per distinct setpoint
    double eta0 = 0.0;
    double lambda = -1.0;                // < 0 when (P, K) were supplied
    double logdet_X = 0.0;
    double mu_bound = 0.0;
};

inline json to_json(const TerminalSet& ts) {
    json us = {{"u0", to_json(ts.u_s.u0)}, {"U", to_json(ts.u_s.U)}};
    return {{"kind", ts.kind == TerminalSet::Kind::origin ? "origin" : "tracking"},
            {"c_max", ts.c_max},
            {"f_lower", ts.f_lower},
            {"w_upper", ts.w_upper},
            {"x_s", to_json(ts.x_s)},
            {"u_s", us},
            {"slack", ts.slack}};
}

inline TerminalSet terminal_from_json(const json& j) {
    using detail::require;
    TerminalSet ts;
    const std::string kind = require(j, "kind", "terminal").get<std::string>();
    if (kind != "origin" && kind != "tracking") throw ScenarioError("terminal.kind must be origin or tracking");
    ts.kind = kind == "origin" ? TerminalSet::Kind::origin : TerminalSet::Kind::tracking;
    ts.c_max = require(j, "c_max", "terminal").get<double>();
    ts.f_lower = require(j, "f_lower", "terminal").get<double>();
    ts.w_upper = require(j, "w_upper", "terminal").get<double>();
    ts.x_s = vec_from_json(require(j, "x_s", "terminal"), "terminal.x_s");
    const json& us = require(j, "u_s", "terminal");
    ts.u_s.u0 = vec_from_json(require(us, "u0", "terminal.u_s"), "terminal.u_s.u0");
    const json& jU = require(us, "U", "terminal.u_s");
    ts.u_s.U = jU.empty() ? Mat(ts.u_s.u0.size(), 0) : mat_from_json(jU, "terminal.u_s.U");
    if (ts.u_s.U.rows() == 0 && ts.u_s.u0.size() > 0) ts.u_s.U.resize(ts.u_s.u0.size(), 0);
    ts.slack = require(j, "slack", "terminal").get<double>();
    return ts;
}

inline json to_json(const OfflineArtifact& a) {
    const auto& oc = a.constants;
    json terms = json::array();
    for (const auto& t : a.terminals) terms.push_back(to_json(t));
    return {{"K", to_json(oc.K)},
            {"P", to_json(oc.P)},
            {"tube", to_json(oc.tube)},
            {"rho_bar", oc.rho_bar},
            {"L_B", oc.L_B},
            {"d_bar", oc.d_bar},
            {"d_bar_rows", to_json(oc.d_bar_rows)},
            {"c", to_json(oc.c)},
            {"c_max", oc.c_max},
            {"eta0", a.eta0},
            {"lambda", a.lambda},
            {"logdet_X", a.logdet_X},
            {"mu_bound", a.mu_bound},
            {"terminals", terms}};
}

inline OfflineArtifact artifact_from_json(const json& j) {
    using detail::require;
    try {
        OfflineArtifact a;
        auto& oc = a.constants;
        oc.K = mat_from_json(require(j, "K", "constants"), "K");
        oc.P = mat_from_json(require(j, "P", "constants"), "P");
        oc.tube = polytope_from_json(require(j, "tube", "constants"), "tube");
        oc.rho_bar = require(j, "rho_bar", "constants").get<double>();
        oc.L_B = require(j, "L_B", "constants").get<double>();
        oc.d_bar = require(j, "d_bar", "constants").get<double>();
        oc.d_bar_rows = vec_from_json(require(j, "d_bar_rows", "constants"), "d_bar_rows");
        oc.c = vec_from_json(require(j, "c", "constants"), "c");
        oc.c_max = require(j, "c_max", "constants").get<double>();
        a.eta0 = require(j, "eta0", "constants").get<double>();
        a.lambda = detail::get_or(j, "lambda", -1.0);
        a.logdet_X = detail::get_or(j, "logdet_X", 0.0);
        a.mu_bound = detail::get_or(j, "mu_bound", 0.0);
        for (const auto& t : require(j, "terminals", "constants")) a.terminals.push_back(terminal_from_json(t));
        if (a.terminals.empty()) throw ScenarioError("constants: no terminal set");
        return a;
    } catch (const json::exception& e) {
        throw ScenarioError(std::string("constants: ") + e.what());
    }
}

inline OfflineArtifact load_artifact(const std::string& path) { return artifact_from_json(read_json_file(path)); }

/// Offline pipeline: (P, K), tube polytope, constants, terminal sets.
/// Throws SynthesisError, TerminalInfeasible.
inline OfflineArtifact run_offline(const ScenarioFile& f) {
    const Scenario& sc = f.scenario;
    OfflineArtifact a;
    a.eta0 = sc.Theta0.eta;
    Mat K, P;
    if (f.offline.synthesize) {
        const auto syn = lmi_synthesis_scan(sc.model, sc.Theta0.vertices(), disturbance_vertices(sc.D), f.Q, f.R, f.offline.rho, sc.Z, f.offline.lambdas);
        K = syn.K;
        P = syn.P;
        a.lambda = syn.lambda;
        a.logdet_X = syn.logdet_X;
    } else {
        K = f.offline.K;
        P = f.offline.P;
        const auto rep = lyapunov_check(P, K, f.Q, f.R, sc.model, sc.Theta0);
        if (!rep.ok) {
            std::ostringstream os;
            os << "supplied (P, K) fail the Lyapunov check (worst eigenvalue " << rep.worst_eigenvalue << ")";
            throw SynthesisError(os.str(), "lyapunov");
        }
    }
    a.constants = design_constants(sc.model, sc.Z, sc.D, sc.Theta0, K, P, f.offline.base, f.offline.rho, f.offline.contractive);
    a.mu_bound = sc.model.p() > 0 ? mu_bound(sc.model, sc.Z) : 0.0;
    for (const auto& sp : sc.setpoints) {
        bool seen = false;
        for (const auto& t : a.terminals) seen = seen || (t.x_s - sp.x_s).lpNorm<Eigen::Infinity>() == 0.0;
        if (seen) continue;
        a.terminals.push_back(sp.x_s.lpNorm<Eigen::Infinity>() == 0.0 ? terminal_origin(a.constants, sc.Theta0.eta)
                                                                       : terminal_tracking(a.constants, sc.model, sc.Z, sc.Theta0, sp.x_s));
    }
    return a;
}

/// MPC configuration for the first setpoint of the schedule.
inline MPCConfig make_config(const ScenarioFile& f, const OfflineArtifact& a) {
    MPCConfig cfg;
    cfg.N = f.N;
    cfg.Q = f.Q;
    cfg.R = f.R;
    cfg.constants = a.constants;
    cfg.formulation = f.formulation;
    cfg.terminal = a.terminals.front();
    for (const auto& t : a.terminals)
        if ((t.x_s - f.scenario.setpoints.front().x_s).lpNorm<Eigen::Infinity>() == 0.0) cfg.terminal = t;
    return cfg;
}

/// Scenario for one seed with mu resolved.
inline Scenario make_run_scenario(const ScenarioFile& f, const OfflineArtifact& a, std::uint64_t seed) {
    Scenario sc = f.scenario;
    sc.seed = seed;
    if (!(sc.mu > 0.0)) sc.mu = a.mu_bound > 0.0 ? f.mu_scale / a.mu_bound : 1.0;
    return sc;
}

}  // namespace ramp
