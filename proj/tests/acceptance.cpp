// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "msd_fixture.hpp"
#include "oracles.hpp"
#include "ramp/cli.hpp"

using namespace ramp;

namespace {

constexpr int kSeeds = 50;

struct Clock {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    [[nodiscard]] double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); }
};

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
    std::printf("%s %2d %s: %s\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string strf(const char* f, double a = 0, double b = 0, double c = 0, double d = 0, double e = 0) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, a, b, c, d, e);
    return buf;
}

bool within(double got, double ref) { return std::abs(got - ref) <= oracle::relative_tolerance * std::abs(ref); }

std::vector<RunTrace> run_set(const fixture::Msd& m, DisturbanceMode mode, bool adapt, bool regulation) {
    std::vector<RunTrace> out;
    for (int seed = 0; seed < kSeeds; ++seed) {
        Scenario sc = make_run_scenario(m.file, m.artifact, static_cast<std::uint64_t>(seed));
        sc.disturbance_mode = mode;
        MPCConfig cfg = m.config;
        if (regulation) {
            sc.x0 = (Vec(2) << 1.0, 0.0).finished();
            sc.setpoints = {{0, Vec::Zero(2)}};
        }
        RunOptions opt;
        opt.check_candidate = true;
        out.push_back(run(sc, cfg, adapt, opt));
    }
    return out;
}

}  // namespace

int main() {
    Clock total;
    const auto& m = fixture::msd();
    const auto& sc = m.file.scenario;
    const auto& oc = m.artifact.constants;

    // closed-loop run sets
    Clock tv;
    const auto vertex = run_set(m, DisturbanceMode::vertex_adversarial, true, false);
    const double t_vertex = tv.seconds();
    Clock tu;
    const auto uniform = run_set(m, DisturbanceMode::uniform, true, false);
    const auto robust = run_set(m, DisturbanceMode::uniform, false, false);
    const double t_uniform = tu.seconds();
    Clock tr;
    const auto regulation = run_set(m, DisturbanceMode::uniform, true, true);
    const double t_reg = tr.seconds();

    std::vector<const RunTrace*> adaptive;
    for (const auto* set : {&vertex, &uniform, &regulation})
        for (const auto& r : *set) adaptive.push_back(&r);

    // 1. hypercube contains theta* and is nested
    {
        long fail = 0, steps = 0;
        bool aborted = false;
        for (const auto* r : adaptive) {
            fail += r->summary.lemma1_failures;
            steps += static_cast<long>(r->steps.size());
            aborted = aborted || r->summary.aborted;
        }
        report(1, fail == 0 && !aborted, "parameter set contains theta* and is nested",
               strf("%.0f failures over %.0f adaptive runs, %.0f steps (%.1f s for 50 vertex runs)", fail, adaptive.size(), steps, t_vertex));
    }
    // 2. LMS prediction error bound
    {
        long fail = 0;
        for (const auto* r : adaptive) fail += r->summary.lemma2_failures;
        report(2, fail == 0, "LMS prediction error bound on every prefix",
               strf("%.0f violations over %.0f runs, mu = %.6g", fail, adaptive.size(), sc.mu > 0 ? sc.mu : m.file.mu_scale / m.artifact.mu_bound));
    }
    // 3. Propositions 1 and 2 on random draws
    {
        Clock t3;
        Rng rng(2024);
        auto U = [&] { return rng.uniform(-0.5, 0.5); };
        const auto box = bounding_box(oc.tube);
        double worst1 = std::numeric_limits<double>::infinity(), worst2 = worst1;
        for (int s = 0; s < 1000; ++s) {
            const double eta = sc.Theta0.eta * rng.uniform();
            Vec th = sc.Theta0.center, dth(2);
            for (int i = 0; i < 2; ++i) th(i) += (sc.Theta0.eta - eta) * U(), dth(i) = eta * U();
            worst1 = std::min(worst1, check_prop1(sc.model, oc.tube, oc.K, th, dth, eta, oc.L_B).residual());
        }
        for (int s = 0; s < 1000; ++s) {
            const double eta = sc.Theta0.eta * rng.uniform();
            const Vec z = (Vec(2) << rng.uniform(-0.1, 1.1), rng.uniform(-5.0, 5.0)).finished();
            Vec e(2);
            do e = box.center() + box.widths().cwiseProduct((Vec(2) << U(), U()).finished());
            while (!oc.tube.contains(e));
            const Vec v = (Vec(1) << rng.uniform(-5.0, 5.0)).finished();
            worst2 = std::min(worst2, check_prop2(sc.model, oc.tube, oc.K, z + e, z, v, eta, oc.L_B).residual());
        }
        report(3, worst1 >= -1e-9 && worst2 >= -1e-9, "Prop. 1 and 2 inequalities on 1000 draws each",
               strf("min residuals %.3g and %.3g (%.2f s)", worst1, worst2, t3.seconds()));
    }
    // 4. recursive feasibility and constraint satisfaction under vertex disturbances
    {
        long infeas = 0, viol = 0, deferred = 0, aborted = 0;
        for (const auto& r : vertex) {
            infeas += r.summary.infeasible_steps;
            viol += r.summary.constraint_violations;
            deferred += r.summary.deferred_switches;
            aborted += r.summary.aborted;
        }
        report(4, infeas == 0 && viol == 0 && aborted == 0, "recursive feasibility and constraint satisfaction",
               strf("%.0f infeasible QPs, %.0f violations of Z, %.0f aborted, %.0f deferred setpoint switches over 50 vertex-adversarial runs", infeas,
                   viol, aborted, deferred));
    }
    // 5. nested tubes of the shifted candidate
    {
        long fail = 0;
        double nest = -1e300, err = -1e300;
        for (const auto* r : adaptive) {
            fail += r->summary.nest_failures;
            nest = std::max(nest, r->summary.max_candidate_nest);
            err = std::max(err, r->summary.max_candidate_error);
        }
        report(5, fail == 0 && nest <= 1e-7 && err <= 1e-7, "nested tubes of the candidate solution",
               strf("%.0f failing steps, max nest residual %.3g, max error residual %.3g", fail, nest, err));
    }
    // 6. tube size comparison at t = 0
    {
        Clock t6;
        const auto rows = cli::compare_tubes(m.file, m.artifact);
        double hom = 0, w2 = 0, w1 = 0, w3 = 0;
        for (const auto& r : rows) {
            if (r.name == "homothetic") hom = r.s_N;
            if (r.name == "w2") w2 = r.s_N;
            if (r.name == "w1") w1 = r.s_N;
            if (r.name == "w3") w3 = r.s_N;
        }
        const bool order = hom <= w2 && std::abs(w1 - w2) <= 1e-6 && w2 <= w3;
        const bool tol = within(w2, oracle::s_N_w2) && within(w1, oracle::s_N_w1) && within(w3, oracle::s_N_w3) && within(hom, oracle::s_N_homothetic);
        const std::string detail = strf("s_N hom %.4f (%+.0f%%), w2 %.4f (%+.0f%%), ", hom, 100 * (hom / oracle::s_N_homothetic - 1), w2, 100 * (w2 / oracle::s_N_w2 - 1)) +
                 strf("w1 %.4f (%+.0f%%), w3 %.4f (%+.0f%%); ", w1, 100 * (w1 / oracle::s_N_w1 - 1), w3, 100 * (w3 / oracle::s_N_w3 - 1)) +
                 (order ? "ordering holds" : "ordering violated") + strf(" (%.1f s)", t6.seconds());
        report(6, order && tol, "tube sizes within 25% and ordered", detail);
    }
    // 7. complexity accounting
    {
        const auto w2 = qp_layout(Formulation::w2, 14, 1, 18, 6, 2, 0);
        const auto w3 = qp_layout(Formulation::w3, 14, 1, 18, 6, 2, 0);
        const auto nom = qp_layout(Formulation::nominal, 14, 1, 18, 6, 2, 0);
        const bool pass = w2.nvar == 30 && w2.counted_rows() == 1092 && w3.nvar == 30 && w3.counted_rows() == 336 && nom.nvar == 14 &&
                          nom.counted_rows() == 84;
        const TubeMPC ours(sc.model, sc.Z, m.config);
        report(7, pass, "variable and row counts for N = 14, r = 18",
               strf("w2 (%.0f, %.0f), w3 (%.0f, %.0f), nominal (%.0f, ", w2.nvar, w2.counted_rows(), w3.nvar, w3.counted_rows(), nom.nvar) +
                   strf("%.0f); study tube r = %.0f gives w2 (%.0f, %.0f)", nom.counted_rows(), oc.r(), ours.complexity().first, ours.complexity().second));
    }
    // 8. offline constants and terminal conditions
    {
        const auto& track = m.artifact.terminals.front();
        const double eta0 = m.artifact.eta0;
        const double w = w_eta(sc.model, oc.tube, track.x_s, track.u_s(sc.Theta0.center), eta0);
        bool cond = true;
        for (const auto& t : m.artifact.terminals) cond = cond && t.slack >= 0.0;
        const bool pass = cond && std::abs(oc.rho_bar - oracle::rho_bar) <= 1e-9 && within(eta0 * oc.L_B, oracle::eta0_L_B) && within(oc.d_bar, oracle::d_bar) &&
                          within(w, oracle::w_eta0_setpoint);
        report(8, pass, "offline constants and terminal condition",
               strf("rho %.4f, eta0 L_B %.4f, d_bar %.4f, w_eta0(x_s,u_s) %.4f, ", oc.rho_bar, eta0 * oc.L_B, oc.d_bar, w) +
                   strf("terminal slack %.4f (tracking) %.4f (origin)", track.slack, m.artifact.terminals.back().slack));
    }
    // 9. adaptive cost below robust cost
    {
        int wins = 0;
        double ca = 0, cr = 0;
        for (int s = 0; s < kSeeds; ++s) {
            wins += uniform[static_cast<std::size_t>(s)].summary.tracking_cost < robust[static_cast<std::size_t>(s)].summary.tracking_cost;
            ca += uniform[static_cast<std::size_t>(s)].summary.tracking_cost / kSeeds;
            cr += robust[static_cast<std::size_t>(s)].summary.tracking_cost / kSeeds;
        }
        report(9, wins >= 45, "adaptive tracking cost below robust cost",
               strf("%.0f of 50 seeds, mean cost %.2f vs %.2f (%.1f s for 100 runs)", wins, ca, cr, t_uniform));
    }
    // 10. parameter learning
    {
        int ok = 0;
        double eta_max = 0, err_max = 0;
        for (const auto& r : uniform) {
            ok += r.summary.eta_final < 0.5 * sc.Theta0.eta && r.summary.theta_hat_error_final < 0.15;
            eta_max = std::max(eta_max, r.summary.eta_final);
            err_max = std::max(err_max, r.summary.theta_hat_error_final);
        }
        report(10, ok >= 45, "parameter set shrinks and estimate converges",
               strf("%.0f of 50 seeds, max eta_T %.4f, max |theta_hat_T - theta*| %.4f", ok, eta_max, err_max));
    }
    // 11. finite-gain behaviour
    {
        int ok = 0, latest = -1;
        for (const auto& r : regulation) {
            const auto rep = l2_gain_report(r);
            ok += rep.max_in_first_half && !rep.late_growth;
            latest = std::max(latest, rep.argmax);
        }
        report(11, ok == kSeeds, "L2 prefix ratio peaks in the first half",
               strf("%.0f of 50 regulation runs from x0 = (1, 0), latest argmax t = %.0f (%.1f s)", ok, latest, t_reg));
    }

    std::printf("%d of 11 criteria failed, total %.1f s\n", failures, total.seconds());
    return failures == 0 ? 0 : 1;
}
