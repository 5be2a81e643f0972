#pragma once

// Command implementations behind the `ramp` executable.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <spdlog/spdlog.h>

#include "ramp/scenario.hpp"
#include "ramp/svg.hpp"

namespace ramp::cli {

enum ExitCode : int { ok = 0, schema_error = 1, terminal_infeasible = 2, sdp_failure = 3, invariant_breach = 4 };

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// RAMP_LOG_LEVEL in {error, warn, info, debug}; default warn.
inline void configure_logging() {
    const char* env = std::getenv("RAMP_LOG_LEVEL");
    const std::string lvl = env ? env : "warn";
    if (lvl == "error") spdlog::set_level(spdlog::level::err);
    else if (lvl == "info") spdlog::set_level(spdlog::level::info);
    else if (lvl == "debug") spdlog::set_level(spdlog::level::debug);
    else spdlog::set_level(spdlog::level::warn);
}

inline void print_constants(std::ostream& out, const OfflineArtifact& a, const UncertainModel& model, const ParamHypercube& Theta0) {
    const auto& oc = a.constants;
    out << "tube rows r      " << oc.r() << "\n";
    out << "rho_bar          " << oc.rho_bar << "\n";
    out << "eta0 * L_B       " << a.eta0 * oc.L_B << "\n";
    out << "d_bar            " << oc.d_bar << "\n";
    out << "c_max            " << oc.c_max << "\n";
    if (a.lambda >= 0.0) out << "lambda           " << a.lambda << "  (log det X = " << a.logdet_X << ")\n";
    for (const auto& ts : a.terminals) {
        if (ts.kind == TerminalSet::Kind::origin) {
            out << "terminal origin: rho + eta0 L_B + c_max d_bar = " << oc.rho_bar + a.eta0 * oc.L_B + oc.c_max * oc.d_bar
                << " <= 1, slack " << ts.slack << "\n";
        } else {
            const Vec us = ts.u_s(Theta0.center);
            out << "terminal x_s = (" << ts.x_s.transpose() << "): w_eta0(x_s, u_s) = " << w_eta(model, oc.tube, ts.x_s, us, a.eta0)
                << ", eta0 w_bar + d_bar = " << a.eta0 * ts.w_upper + oc.d_bar << " <= f_lower (1 - rho - eta0 L_B) = "
                << ts.f_lower * (1.0 - oc.rho_bar - a.eta0 * oc.L_B) << ", slack " << ts.slack << "\n";
        }
    }
}

inline int cmd_offline(const std::string& scenario_path, const std::string& out_path, std::ostream& out = std::cout) {
    try {
        const auto f = load_scenario(scenario_path);
        const auto a = run_offline(f);
        print_constants(out, a, f.scenario.model, f.scenario.Theta0);
        if (!out_path.empty()) {
            std::ofstream o(out_path);
            if (!o) throw ScenarioError("cannot write '" + out_path + "'");
            o << to_json(a).dump(2) << "\n";
        }
        return ok;
    } catch (const ScenarioError& e) {
        spdlog::error("{}", e.what());
        return schema_error;
    } catch (const TerminalInfeasible& e) {
        spdlog::error("{}", e.what());
        for (const auto& [k, v] : e.quantities) out << "  " << k << " = " << v << "\n";
        return terminal_infeasible;
    } catch (const SynthesisError& e) {
        spdlog::error("{}", e.what());
        return sdp_failure;
    } catch (const GeometryError& e) {
        spdlog::error("offline: {}", e.what());
        return sdp_failure;
    }
}

struct SimulateOptions {
    bool adapt = true;
    std::optional<std::uint64_t> seed;
    std::string csv;      // trace CSV
    std::string jsonl;    // per-step records
    std::string summary;  // JSON summary
    std::string svg_prefix;
};

inline std::string csv_header(const Scenario& sc) {
    std::string h = "t";
    for (Eigen::Index i = 0; i < sc.model.n(); ++i) h += ",x" + std::to_string(i + 1);
    for (Eigen::Index i = 0; i < sc.model.m(); ++i) h += ",u" + std::to_string(i + 1);
    for (Eigen::Index i = 0; i < sc.model.n(); ++i) h += ",d" + std::to_string(i + 1);
    for (Eigen::Index i = 0; i < sc.model.p(); ++i) h += ",theta_bar" + std::to_string(i + 1);
    h += ",eta";
    for (Eigen::Index i = 0; i < sc.model.p(); ++i) h += ",theta_hat" + std::to_string(i + 1);
    return h + ",obj,feasible";
}

inline void write_trace_csv(const std::string& path, const Scenario& sc, const RunTrace& tr) {
    std::ofstream o(path, std::ios::binary);
    if (!o) throw ScenarioError("cannot write '" + path + "'");
    o << csv_header(sc) << '\n';
    for (const auto& s : tr.steps) {
        o << s.t;
        for (const Vec* v : {&s.x, &s.u, &s.d, &s.theta_bar})
            for (Eigen::Index i = 0; i < v->size(); ++i) o << ',' << fmt17((*v)(i));
        o << ',' << fmt17(s.eta);
        for (Eigen::Index i = 0; i < s.theta_hat.size(); ++i) o << ',' << fmt17(s.theta_hat(i));
        o << ',' << fmt17(s.objective) << ',' << (s.feasible ? 1 : 0) << '\n';
    }
}

inline json step_json(const StepRecord& s) {
    return {{"t", s.t}, {"x", to_json(s.x)}, {"u", to_json(s.u)}, {"objective", s.objective}, {"s", to_json(s.s)}, {"feasible", s.feasible}};
}

inline json summary_json(const RunTrace& tr) {
    const auto& S = tr.summary;
    const auto l2 = l2_gain_report(tr);
    return {{"seed", tr.seed},
            {"rng", tr.rng_name},
            {"adapt", tr.adapt},
            {"steps", tr.steps.size()},
            {"tracking_cost", S.tracking_cost},
            {"sum_x_sq", S.state_sq},
            {"sum_d_sq", S.disturbance_sq},
            {"constraint_violations", S.constraint_violations},
            {"infeasible_steps", S.infeasible_steps},
            {"deferred_switches", S.deferred_switches},
            {"lemma1_failures", S.lemma1_failures},
            {"lemma2_failures", S.lemma2_failures},
            {"nested_tube_failures", S.nest_failures},
            {"eta_final", S.eta_final},
            {"theta_hat_error_final", S.theta_hat_error_final},
            {"l2_max_ratio", l2.max_ratio},
            {"l2_argmax", l2.argmax},
            {"aborted", S.aborted},
            {"abort_reason", S.abort_reason}};
}

inline void write_plots(const std::string& prefix, const Scenario& sc, const RunTrace& tr) {
    svg::Plot states{"Closed-loop states", "t", "state", {}, {}, {}};
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    for (Eigen::Index i = 0; i < sc.model.n(); ++i) {
        svg::Series s{"x" + std::to_string(i + 1), {}, {}, colors[i % 4]};
        for (const auto& r : tr.steps) s.x.push_back(r.t), s.y.push_back(r.x(i));
        states.series.push_back(s);
    }
    svg::Series ref{"setpoint x1", {}, {}, "#777", true};
    for (const auto& r : tr.steps) ref.x.push_back(r.t), ref.y.push_back(r.x_s(0));
    states.series.push_back(ref);
    svg::write(prefix + "_states.svg", states);

    if (sc.model.p() >= 2) {
        svg::Plot sets{"Parameter set", "theta_1", "theta_2", {}, {}, {}};
        const std::size_t stride = std::max<std::size_t>(1, tr.steps.size() / 10);
        for (std::size_t k = 0; k < tr.steps.size(); k += stride) {
            const auto& r = tr.steps[k];
            const double h = 0.5 * r.eta;
            sets.rects.push_back({r.theta_bar(0) - h, r.theta_bar(1) - h, r.theta_bar(0) + h, r.theta_bar(1) + h});
        }
        svg::Series est{"LMS estimate", {}, {}, "#2ca02c"};
        for (const auto& r : tr.steps) est.x.push_back(r.theta_hat(0)), est.y.push_back(r.theta_hat(1));
        sets.series.push_back(est);
        sets.markers.push_back({sc.theta_true(0), sc.theta_true(1)});
        svg::write(prefix + "_params.svg", sets);
    }
}

inline int cmd_simulate(const std::string& scenario_path, const std::string& constants_path, const SimulateOptions& opt,
                        std::ostream& out = std::cout) {
    try {
        const auto f = load_scenario(scenario_path);
        const auto a = load_artifact(constants_path);
        const auto cfg = make_config(f, a);
        const auto sc = make_run_scenario(f, a, opt.seed.value_or(f.seeds.empty() ? 0 : f.seeds.front()));
        std::ofstream jl;
        if (!opt.jsonl.empty()) {
            jl.open(opt.jsonl, std::ios::binary);
            if (!jl) throw ScenarioError("cannot write '" + opt.jsonl + "'");
        }
        RunOptions ro;
        ro.on_step = [&](const StepRecord& s) {
            if (jl) jl << step_json(s).dump() << '\n';
            if (!s.feasible) spdlog::warn("t = {}: QP infeasible, applying the candidate input", s.t);
            spdlog::debug("t = {} objective {}", s.t, s.objective);
        };
        const auto tr = run(sc, cfg, opt.adapt, ro);
        if (!opt.csv.empty()) write_trace_csv(opt.csv, sc, tr);
        const json summ = summary_json(tr);
        if (!opt.summary.empty()) {
            std::ofstream o(opt.summary);
            o << summ.dump(2) << "\n";
        }
        if (!opt.svg_prefix.empty()) write_plots(opt.svg_prefix, sc, tr);
        out << summ.dump(2) << "\n";
        const auto& S = tr.summary;
        if (S.aborted || S.constraint_violations > 0 || S.infeasible_steps > 0) return invariant_breach;
        return ok;
    } catch (const ScenarioError& e) {
        spdlog::error("{}", e.what());
        return schema_error;
    } catch (const TerminalInfeasible& e) {
        spdlog::error("{}", e.what());
        return terminal_infeasible;
    } catch (const std::exception& e) {
        spdlog::error("simulate: {}", e.what());
        return invariant_breach;
    }
}

struct TubeRow {
    std::string name;
    long vars = 0, rows = 0;
    double s_N = 0.0;
    Vec s;
};

/// t = 0 QP under w2, then the other propagation rules along its trajectory.
inline std::vector<TubeRow> compare_tubes(const ScenarioFile& f, const OfflineArtifact& a) {
    const Scenario& sc = f.scenario;
    MPCConfig cfg = make_config(f, a);
    cfg.formulation = Formulation::w2;
    TubeMPC mpc(sc.model, sc.Z, cfg);
    StepData st{sc.x0, sc.Theta0, sc.theta_hat0, a.constants.rho_bar, terminal_level(cfg.terminal, a.constants, sc.model, sc.Z, sc.Theta0)};
    const auto [u, sol] = mpc.solve_step(st);
    (void)u;
    const double eta = sc.Theta0.eta, rho = a.constants.rho_bar;
    auto counts = [&](Formulation fm) {
        const auto L = qp_layout(fm, f.N, sc.model.m(), a.constants.r(), sc.Z.q(), sc.model.p(), sc.model.p_B());
        return std::pair<long, long>{L.nvar, L.counted_rows()};
    };
    std::vector<TubeRow> rows;
    const auto hom = tube_sizes_homothetic(sol, sc.model, a.constants, sc.Theta0, sc.D, static_cast<int>(sc.Z.q()));
    rows.push_back({"homothetic", hom.variables, hom.rows, hom.s(f.N), hom.s});
    auto add = [&](const std::string& name, Formulation fm, const Vec& s) {
        const auto [v, r] = counts(fm);
        rows.push_back({name, v, r, s(f.N), s});
    };
    add("w2", Formulation::w2, mpc.tube_sizes_w2(sol, eta, rho));
    add("w1", Formulation::w1, mpc.tube_sizes_w1(sol, eta, rho));
    add("w3", Formulation::w3, mpc.tube_sizes_w3(sol, eta, rho));
    add("nominal", Formulation::nominal, Vec::Zero(f.N + 1));
    return rows;
}

inline int cmd_compare_tubes(const std::string& scenario_path, const std::string& constants_path, const std::string& report_path,
                             const std::string& stage_csv, std::ostream& out = std::cout) {
    try {
        const auto f = load_scenario(scenario_path);
        const auto a = load_artifact(constants_path);
        const auto rows = compare_tubes(f, a);
        char line[160];
        std::snprintf(line, sizeof line, "%-12s %10s %10s %10s\n", "formulation", "vars", "rows", "s_N");
        out << line;
        json rep = json::array();
        for (const auto& r : rows) {
            std::snprintf(line, sizeof line, "%-12s %10ld %10ld %10.4f\n", r.name.c_str(), r.vars, r.rows, r.s_N);
            out << line;
            rep.push_back({{"formulation", r.name}, {"vars", r.vars}, {"rows", r.rows}, {"s_N", r.s_N}, {"s", to_json(r.s)}});
        }
        if (!report_path.empty()) {
            std::ofstream o(report_path);
            if (!o) throw ScenarioError("cannot write '" + report_path + "'");
            o << rep.dump(2) << "\n";
        }
        if (!stage_csv.empty()) {
            std::ofstream o(stage_csv, std::ios::binary);
            if (!o) throw ScenarioError("cannot write '" + stage_csv + "'");
            o << "k";
            for (const auto& r : rows) o << ',' << r.name;
            o << '\n';
            for (int k = 0; k <= f.N; ++k) {
                o << k;
                for (const auto& r : rows) o << ',' << fmt17(r.s(k));
                o << '\n';
            }
        }
        return ok;
    } catch (const ScenarioError& e) {
        spdlog::error("{}", e.what());
        return schema_error;
    } catch (const TerminalInfeasible& e) {
        spdlog::error("{}", e.what());
        return terminal_infeasible;
    } catch (const std::exception& e) {
        spdlog::error("compare-tubes: {}", e.what());
        return invariant_breach;
    }
}

/// Estimation loop only: random inputs on the true system.
inline int cmd_estimate_demo(const std::string& scenario_path, int T, std::uint64_t seed, const std::string& csv, std::ostream& out = std::cout) {
    try {
        const auto f = load_scenario(scenario_path);
        const Scenario& sc = f.scenario;
        const double mb = sc.model.p() > 0 ? mu_bound(sc.model, sc.Z) : 1.0;
        const double mu = sc.mu > 0.0 ? sc.mu : f.mu_scale / mb;
        auto est = make_estimator(sc.Theta0, sc.theta_hat0, mu, sc.M);
        Rng rng(seed);
        const auto dtrue = eval_dynamics(sc.model, sc.theta_true);
        // inputs uniform in [-1, 1]
        Vec ulo = Vec::Constant(sc.model.m(), -1.0), uhi = Vec::Constant(sc.model.m(), 1.0);
        std::ofstream o;
        if (!csv.empty()) {
            o.open(csv, std::ios::binary);
            if (!o) throw ScenarioError("cannot write '" + csv + "'");
            o << "t,eta";
            for (Eigen::Index i = 0; i < sc.model.p(); ++i) o << ",theta_bar" << i + 1;
            for (Eigen::Index i = 0; i < sc.model.p(); ++i) o << ",theta_hat" << i + 1;
            o << '\n';
        }
        Vec x = sc.x0;
        for (int t = 0; t < T; ++t) {
            Vec u(sc.model.m());
            for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = rng.uniform(ulo(i), uhi(i));
            const Vec xn = dtrue.A * x + dtrue.B * u + sample_disturbance(sc.D, sc.disturbance_mode, rng);
            hypercube_update(est, nonfalsified(sc.model, x, u, xn, sc.D));
            lms_update(est, sc.model, x, u, xn);
            if (o) {
                o << t + 1 << ',' << fmt17(est.theta_set.eta);
                for (Eigen::Index i = 0; i < sc.model.p(); ++i) o << ',' << fmt17(est.theta_set.center(i));
                for (Eigen::Index i = 0; i < sc.model.p(); ++i) o << ',' << fmt17(est.theta_hat(i));
                o << '\n';
            }
            x = xn;
        }
        out << "eta_T " << est.theta_set.eta << "\ntheta_bar_T " << est.theta_set.center.transpose() << "\ntheta_hat_T "
            << est.theta_hat.transpose() << "\ntheta_true_contained " << (est.theta_set.contains(sc.theta_true, 1e-7) ? "yes" : "no") << "\n";
        return ok;
    } catch (const ScenarioError& e) {
        spdlog::error("{}", e.what());
        return schema_error;
    } catch (const std::exception& e) {
        spdlog::error("estimate-demo: {}", e.what());
        return invariant_breach;
    }
}

}  // namespace ramp::cli
