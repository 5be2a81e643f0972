#pragma once

// Closed-loop simulation of the adaptive tube MPC against a true system, with
// disturbance generators, setpoint schedules and per-step guarantee checks.

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ramp/tube_mpc.hpp"

namespace ramp {

enum class DisturbanceMode { zero, uniform, vertex_adversarial, seeded_sequence };

inline const char* to_string(DisturbanceMode m) {
    switch (m) {
        case DisturbanceMode::zero: return "zero";
        case DisturbanceMode::uniform: return "uniform";
        case DisturbanceMode::vertex_adversarial: return "vertex-adversarial";
        case DisturbanceMode::seeded_sequence: return "seeded-sequence";
    }
    return "?";
}

inline DisturbanceMode disturbance_mode_from_string(const std::string& s) {
    if (s == "zero") return DisturbanceMode::zero;
    if (s == "uniform") return DisturbanceMode::uniform;
    if (s == "vertex-adversarial") return DisturbanceMode::vertex_adversarial;
    if (s == "seeded-sequence") return DisturbanceMode::seeded_sequence;
    throw std::invalid_argument("unknown disturbance mode '" + s + "'");
}

/// Seeded generator with a platform-independent uniform draw.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed), gen_(seed) {}
    [[nodiscard]] std::uint64_t seed() const { return seed_; }
    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::size_t index(std::size_t count) { return static_cast<std::size_t>(uniform() * static_cast<double>(count)) % count; }

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

namespace detail {

// Axis-aligned box bounds if every row of the polytope is a coordinate row.
inline std::optional<IntervalBox> as_box(const HPolytope& poly) {
    for (Eigen::Index i = 0; i < poly.rows(); ++i) {
        Eigen::Index nz = 0;
        for (Eigen::Index j = 0; j < poly.dim(); ++j)
            if (poly.H(i, j) != 0.0) ++nz;
        if (nz > 1) return std::nullopt;
    }
    return bounding_box(poly);
}

}  // namespace detail

/// Vertices of D (box corners without duplicates, or 2-D enumeration).
inline std::vector<Vec> disturbance_vertices(const DisturbanceSet& D) {
    if (is_empty(D.poly)) throw GeometryError("disturbance_vertices: empty disturbance set");
    std::vector<Vec> out;
    if (auto box = detail::as_box(D.poly)) {
        const Eigen::Index n = D.n();
        for (long mask = 0; mask < (1L << n); ++mask) {
            Vec v(n);
            for (Eigen::Index i = 0; i < n; ++i) v(i) = (mask >> i) & 1 ? box->upper(i) : box->lower(i);
            bool dup = false;
            for (const auto& w : out) dup = dup || (w - v).lpNorm<Eigen::Infinity>() == 0.0;
            if (!dup) out.push_back(v);
        }
        return out;
    }
    if (D.n() == 2) return vertices_2d(D.poly);
    throw std::invalid_argument("disturbance_vertices: only boxes or 2-D polytopes are supported");
}

/// Draws d in D according to the mode.
inline Vec sample_disturbance(const DisturbanceSet& D, DisturbanceMode mode, Rng& rng) {
    const Eigen::Index n = D.n();
    if (is_empty(D.poly)) throw GeometryError("sample_disturbance: empty disturbance set");
    switch (mode) {
        case DisturbanceMode::zero: return Vec::Zero(n);
        case DisturbanceMode::vertex_adversarial: {
            const auto V = disturbance_vertices(D);
            return V[rng.index(V.size())];
        }
        case DisturbanceMode::uniform:
        case DisturbanceMode::seeded_sequence: {
            if (auto box = detail::as_box(D.poly)) {
                Vec d(n);
                for (Eigen::Index i = 0; i < n; ++i) d(i) = rng.uniform(box->lower(i), box->upper(i));
                return d;
            }
            // hit-and-run from the Chebyshev center
            auto [x, radius] = chebyshev_center(D.poly);
            (void)radius;
            for (int it = 0; it < 20; ++it) {
                Vec dir(n);
                for (Eigen::Index i = 0; i < n; ++i) dir(i) = rng.uniform(-1.0, 1.0);
                if (dir.norm() == 0.0) continue;
                dir.normalize();
                double tlo = -std::numeric_limits<double>::infinity(), thi = std::numeric_limits<double>::infinity();
                const Vec a = D.poly.H * dir, slack = D.poly.h - D.poly.H * x;
                for (Eigen::Index i = 0; i < a.size(); ++i) {
                    if (a(i) > 1e-15) thi = std::min(thi, slack(i) / a(i));
                    else if (a(i) < -1e-15) tlo = std::max(tlo, slack(i) / a(i));
                }
                x += rng.uniform(tlo, thi) * dir;
            }
            return x;
        }
    }
    return Vec::Zero(n);
}

struct Setpoint {
    int start = 0;
    Vec x_s;
};

/// Alternates between a and b every `period` steps, starting with a at t = 0.
inline std::vector<Setpoint> alternating_setpoints(const Vec& a, const Vec& b, int period, int T) {
    std::vector<Setpoint> out;
    for (int t = 0, k = 0; t < T; t += period, ++k) out.push_back({t, k % 2 == 0 ? a : b});
    return out;
}

struct Scenario {
    UncertainModel model;
    ConstraintSet Z;
    DisturbanceSet D;
    ParamHypercube Theta0;
    Vec theta_true;
    Vec theta_hat0;
    Vec x0;
    int T = 500;
    std::vector<Setpoint> setpoints;  // sorted by start, first start = 0
    DisturbanceMode disturbance_mode = DisturbanceMode::uniform;
    std::uint64_t seed = 0;
    std::vector<Vec> disturbance_sequence;  // seeded-sequence replay (cycled); drawn from seed if empty
    double mu = 0.0;                        // LMS gain
    std::size_t M = 10;                     // estimator window
};

struct StepRecord {
    int t = 0;
    Vec x, u, d;
    Vec theta_bar;
    double eta = 0.0;
    Vec theta_hat;
    Vec s;             // s*_{.|t}
    double objective = 0.0;
    bool feasible = true;
    Vec x_s;           // active setpoint
    // guarantee checks, evaluated for the transition to t+1
    bool theta_true_contained = true;
    bool nested_sets = true;
    double prediction_error_sq = 0.0;  // ||x_{t+1} - A(theta_hat_t) x_t - B(theta_hat_t) u_t||^2
    double candidate_nest = 0.0;       // max_k s_k + s~_k - s*_{k+1} (at t, from t-1)
    double candidate_error = 0.0;      // max_k H e_k - s~_k
    double candidate_constraints = 0.0;
    bool candidate_checked = false;
    int qp_iterations = 0;
};

struct RunSummary {
    double tracking_cost = 0.0;   // sum ||x - x_s||_Q^2 + ||u - u_s*||_R^2
    double state_sq = 0.0;        // sum ||x||^2
    double disturbance_sq = 0.0;  // sum ||d||^2
    int constraint_violations = 0;
    int infeasible_steps = 0;     // QP failures outside setpoint switches
    int deferred_switches = 0;
    int lemma1_failures = 0;
    int lemma2_failures = 0;
    int nest_failures = 0;        // candidate checks above 1e-7
    double max_candidate_nest = -std::numeric_limits<double>::infinity();
    double max_candidate_error = -std::numeric_limits<double>::infinity();
    double max_candidate_constraints = 0.0;
    double eta_final = 0.0;
    double theta_hat_error_final = 0.0;
    bool aborted = false;
    std::string abort_reason;
};

struct RunTrace {
    std::uint64_t seed = 0;
    std::string rng_name = "mt19937_64";
    bool adapt = true;
    std::vector<StepRecord> steps;
    RunSummary summary;
    double theta_hat0_error_sq = 0.0;  // ||theta_hat_0 - theta*||^2
};

struct RunOptions {
    bool check_candidate = true;  // build the shifted candidate every step
    double check_tol = 1e-7;
    std::function<void(const StepRecord&)> on_step;  // streaming hook
};

/// Closed loop: measure, update set and LMS estimate, update rho, solve, apply.
inline RunTrace run(const Scenario& sc, const MPCConfig& base_cfg, bool adapt, const RunOptions& ropt = {}) {
    if (sc.setpoints.empty() || sc.setpoints.front().start != 0) throw std::invalid_argument("run: setpoint schedule must start at t = 0");
    if (!sc.Theta0.contains(sc.theta_true)) throw std::invalid_argument("run: theta_true outside the prior set");
    const auto& oc = base_cfg.constants;
    const auto& model = sc.model;
    RunTrace trace;
    trace.seed = sc.seed;
    trace.adapt = adapt;
    Rng rng(sc.seed);

    // terminal sets per distinct setpoint, checked up front
    std::vector<TerminalSet> terms;
    auto terminal_for = [&](const Vec& xs) -> const TerminalSet& {
        for (const auto& ts : terms)
            if ((ts.x_s - xs).lpNorm<Eigen::Infinity>() == 0.0) return ts;
        terms.push_back(xs.lpNorm<Eigen::Infinity>() == 0.0 ? terminal_origin(oc, sc.Theta0.eta)
                                                             : terminal_tracking(oc, model, sc.Z, sc.Theta0, xs));
        return terms.back();
    };
    for (const auto& sp : sc.setpoints) terminal_for(sp.x_s);

    EstimatorState est = make_estimator(sc.Theta0, sc.theta_hat0, sc.mu > 0.0 ? sc.mu : 1.0, sc.M);
    trace.theta_hat0_error_sq = (est.theta_hat - sc.theta_true).squaredNorm();
    const auto dtrue = eval_dynamics(model, sc.theta_true);

    std::size_t sp_index = 0;  // active setpoint
    MPCConfig cfg = base_cfg;
    cfg.terminal = terminal_for(sc.setpoints[0].x_s);
    TubeMPC mpc(model, sc.Z, cfg);

    Vec x = sc.x0;
    std::optional<TubeSolution> prev;
    double rho = oc.rho_bar;
    double cum_pred = 0.0, cum_d = 0.0;
    auto& S = trace.summary;

    for (int t = 0; t < sc.T; ++t) {
        StepRecord rec;
        rec.t = t;
        rec.x = x;
        rec.theta_bar = est.theta_set.center;
        rec.eta = est.theta_set.eta;
        rec.theta_hat = est.theta_hat;

        StepData st{x, est.theta_set, est.theta_hat, rho, 0.0};
        // setpoint switch if one is due (deferred while infeasible)
        std::size_t want = sp_index;
        while (want + 1 < sc.setpoints.size() && sc.setpoints[want + 1].start <= t) ++want;
        bool solved = false;
        TubeSolution sol;
        Vec u;
        if (want != sp_index) {
            mpc.config().terminal = terminal_for(sc.setpoints[want].x_s);
            st.level = terminal_level(mpc.config().terminal, oc, model, sc.Z, est.theta_set);
            try {
                std::tie(u, sol) = mpc.solve_step(st);
                solved = true;
                sp_index = want;
            } catch (const QpInfeasible&) {
                ++S.deferred_switches;
                mpc.config().terminal = terminal_for(sc.setpoints[sp_index].x_s);
            }
        }
        if (!solved) {
            st.level = terminal_level(mpc.config().terminal, oc, model, sc.Z, est.theta_set);
            std::optional<CandidateSolution> cand;
            if (prev) {
                cand = mpc.candidate(*prev, st);
                if (ropt.check_candidate) {
                    rec.candidate_checked = true;
                    rec.candidate_nest = cand->max_nest_violation;
                    rec.candidate_error = cand->max_error_violation;
                    rec.candidate_constraints = cand->max_constraint_violation;
                    S.max_candidate_nest = std::max(S.max_candidate_nest, rec.candidate_nest);
                    S.max_candidate_error = std::max(S.max_candidate_error, rec.candidate_error);
                    S.max_candidate_constraints = std::max(S.max_candidate_constraints, rec.candidate_constraints);
                    if (rec.candidate_nest > ropt.check_tol || rec.candidate_error > ropt.check_tol ||
                        rec.candidate_constraints > ropt.check_tol)
                        ++S.nest_failures;
                }
            }
            try {
                std::tie(u, sol) = mpc.solve_step(st, cand ? std::optional<Vec>(cand->sol.y) : std::nullopt);
                solved = true;
            } catch (const QpInfeasible& e) {
                ++S.infeasible_steps;
                if (!cand) {
                    S.aborted = true;
                    S.abort_reason = std::string("QP infeasible without a candidate at t = ") + std::to_string(t) + ": " + e.what();
                    break;
                }
                sol = cand->sol;
                u = sol.v.col(0) + oc.K * x;
                rec.feasible = false;
            }
        }
        rec.u = u;
        rec.s = sol.s;
        rec.objective = sol.objective;
        rec.x_s = mpc.config().terminal.x_s;
        rec.qp_iterations = sol.iterations;
        prev = sol;

        if (sc.Z.max_violation(x, u) > 1e-9) ++S.constraint_violations;
        const Vec us_true = mpc.steady_input(sc.theta_true);
        const Vec dx = x - rec.x_s, du = u - us_true;
        S.tracking_cost += dx.dot(cfg.Q * dx) + du.dot(cfg.R * du);
        S.state_sq += x.squaredNorm();

        // true system
        Vec d;
        if (sc.disturbance_mode == DisturbanceMode::seeded_sequence && !sc.disturbance_sequence.empty())
            d = sc.disturbance_sequence[static_cast<std::size_t>(t) % sc.disturbance_sequence.size()];
        else
            d = sample_disturbance(sc.D, sc.disturbance_mode, rng);
        rec.d = d;
        S.disturbance_sq += d.squaredNorm();
        const Vec xn = dtrue.A * x + dtrue.B * u + d;

        // one-step prediction error of the LMS model
        const auto dh = eval_dynamics(model, est.theta_hat);
        rec.prediction_error_sq = (xn - dh.A * x - dh.B * u).squaredNorm();
        cum_pred += rec.prediction_error_sq;
        cum_d += d.squaredNorm();
        if (adapt && cum_pred > trace.theta_hat0_error_sq / est.mu + cum_d + 1e-9) ++S.lemma2_failures;

        if (adapt) {
            const ParamHypercube before = est.theta_set;
            hypercube_update(est, nonfalsified(model, x, u, xn, sc.D));
            lms_update(est, model, x, u, xn);
            rec.nested_sets = est.theta_set.subset_of(before, 1e-7);
            rec.theta_true_contained = est.theta_set.contains(sc.theta_true, 1e-7);
            if (!rec.nested_sets || !rec.theta_true_contained) ++S.lemma1_failures;
            rho = contraction_rate(oc.tube, closed_loop(model, oc.K, est.theta_set.center));
        }
        if (ropt.on_step) ropt.on_step(rec);
        trace.steps.push_back(std::move(rec));
        x = xn;
    }
    S.eta_final = est.theta_set.eta;
    S.theta_hat_error_final = (est.theta_hat - sc.theta_true).norm();
    return trace;
}

// ---------------------------------------------------------------- L2 report

struct L2Report {
    std::vector<double> ratio;  // prefix ratios
    double max_ratio = 0.0;
    int argmax = -1;
    bool max_in_first_half = true;
    bool late_growth = false;  // monotone increase over the whole last half
};

/// sum ||x||^2 / (||x_0||^2 + ||theta_hat_0 - theta*||^2 + sum ||d||^2) over prefixes.
inline L2Report l2_gain_report(const RunTrace& trace) {
    L2Report rep;
    if (trace.steps.empty()) return rep;
    const double x0 = trace.steps.front().x.squaredNorm();
    double num = 0.0, dsum = 0.0;
    for (const auto& s : trace.steps) {
        num += s.x.squaredNorm();
        const double den = x0 + trace.theta_hat0_error_sq + dsum;
        dsum += s.d.size() ? s.d.squaredNorm() : 0.0;
        rep.ratio.push_back(den > 0.0 ? num / den : 0.0);
    }
    for (std::size_t k = 0; k < rep.ratio.size(); ++k)
        if (rep.argmax < 0 || rep.ratio[k] > rep.max_ratio) {
            rep.max_ratio = rep.ratio[k];
            rep.argmax = static_cast<int>(k);
        }
    const std::size_t half = rep.ratio.size() / 2;
    rep.max_in_first_half = static_cast<std::size_t>(rep.argmax) < std::max<std::size_t>(half, 1);
    rep.late_growth = rep.ratio.size() > 2;
    for (std::size_t k = half + 1; k < rep.ratio.size(); ++k) rep.late_growth = rep.late_growth && rep.ratio[k] > rep.ratio[k - 1];
    return rep;
}

}  // namespace ramp
