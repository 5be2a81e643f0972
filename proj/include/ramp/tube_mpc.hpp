#pragma once

// Tube MPC: condensed QP with scalar tube dynamics s+ = rho s + w, the shifted
// candidate solution, and alternative tube propagation rules.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ramp/offline.hpp"

namespace ramp {

enum class Formulation { w2, w1, w3, nominal };

inline const char* to_string(Formulation f) {
    switch (f) {
        case Formulation::w2: return "w2";
        case Formulation::w1: return "w1";
        case Formulation::w3: return "w3";
        case Formulation::nominal: return "nominal";
    }
    return "?";
}

inline Formulation formulation_from_string(const std::string& s) {
    if (s == "w2") return Formulation::w2;
    if (s == "w1") return Formulation::w1;
    if (s == "w3") return Formulation::w3;
    if (s == "nominal") return Formulation::nominal;
    throw std::invalid_argument("unknown formulation '" + s + "'");
}

struct MPCConfig {
    int N = 14;
    Mat Q;
    Mat R;
    OfflineConstants constants;
    TerminalSet terminal;
    Formulation formulation = Formulation::w2;
};

/// Per-step data entering the QP.
struct StepData {
    Vec x;                  // measured state
    ParamHypercube Theta;   // current hypercube
    Vec theta_hat;          // LMS estimate
    double rho = 0.0;       // contraction rate at Theta.center
    double level = 0.0;     // terminal level f_lower(Theta)
};

struct QpLayout {
    int nvar = 0;
    int n_v = 0, n_w = 0, n_aux = 0;  // aux: per-stage g (w3 with p_B > 0)
    int idx_sN = -1, idx_g = -1;      // terminal bookkeeping
    int rows_w = 0;                   // uncertainty rows
    int rows_tight = 0;               // tightened state/input rows
    int rows_terminal = 0;
    int eq_rows = 0;

    /// Row count as tabulated (terminal rows excluded).
    [[nodiscard]] int counted_rows() const { return rows_w + rows_tight; }
};

/// Variable and row bookkeeping of the condensed QP.
inline QpLayout qp_layout(Formulation f, int N, Eigen::Index m, Eigen::Index r, Eigen::Index q, Eigen::Index p, Eigen::Index pB) {
    QpLayout L;
    L.n_v = N * static_cast<int>(m);
    L.rows_tight = N * static_cast<int>(q);
    const int ri = static_cast<int>(r);
    if (f == Formulation::nominal) {
        L.nvar = L.n_v;
        L.rows_terminal = ri;
        return L;
    }
    L.n_w = N;
    if (f == Formulation::w3) {
        if (pB > 0) {
            L.n_aux = N;
            L.rows_w = N * ri * (1 + (1 << pB));
        } else {
            L.rows_w = N * ri;
        }
    } else {
        L.rows_w = N * ri * (1 << p);
    }
    L.idx_sN = L.n_v + L.n_w + L.n_aux;
    L.idx_g = L.idx_sN + 1;
    L.nvar = L.idx_g + 1;
    L.rows_terminal = ri + 1;
    L.eq_rows = 1;
    return L;
}

struct TubeSolution {
    Mat xbar;   // n x (N+1)
    Mat xhat;   // n x (N+1)
    Mat v;      // m x N
    Mat ubar;   // m x N
    Vec s;      // N+1
    Vec w;      // N
    double objective = 0.0;
    Vec y;      // QP decision vector after tightening
    SolveStatus status = SolveStatus::numerical_failure;
    int iterations = 0;
    // context the solution was computed for
    ParamHypercube Theta;
    Vec theta_hat;
    double rho = 0.0;
    double level = 0.0;

    [[nodiscard]] bool ok() const { return status == SolveStatus::optimal; }
};

struct CandidateSolution {
    TubeSolution sol;
    Vec s_tilde;          // N+1
    double max_nest_violation = 0.0;   // max_k s_k + s~_k - s*_{k+1}
    double max_error_violation = 0.0;  // max_k max_i H_i e_k - s~_k
    double max_constraint_violation = 0.0;  // candidate against the t+1 QP rows
};

class QpInfeasible : public std::runtime_error {
public:
    QpInfeasible(const std::string& what, QuadraticProgram qp_) : std::runtime_error(what), qp(std::move(qp_)) {}
    QuadraticProgram qp;
};

class TubeMPC {
public:
    TubeMPC(UncertainModel model, ConstraintSet Z, MPCConfig cfg) : model_(std::move(model)), Z_(std::move(Z)), cfg_(std::move(cfg)) {
        if (cfg_.N < 1) throw std::invalid_argument("TubeMPC: N must be >= 1");
        if (cfg_.Q.rows() != model_.n() || cfg_.R.rows() != model_.m()) throw std::invalid_argument("TubeMPC: Q/R size mismatch");
        E_ = ParamHypercube::unit_cube_vertices(model_.p());
        // reduced vertex set over parameters entering B
        std::vector<Eigen::Index> bidx;
        for (Eigen::Index j = 0; j < model_.p(); ++j)
            if (model_.B[static_cast<std::size_t>(j + 1)].cwiseAbs().maxCoeff() > 0.0) bidx.push_back(j);
        for (const auto& e : ParamHypercube::unit_cube_vertices(static_cast<Eigen::Index>(bidx.size()))) {
            Vec full = Vec::Zero(model_.p());
            for (std::size_t k = 0; k < bidx.size(); ++k) full(bidx[k]) = e(static_cast<Eigen::Index>(k));
            EB_.push_back(full);
        }
    }

    [[nodiscard]] const MPCConfig& config() const { return cfg_; }
    MPCConfig& config() { return cfg_; }
    [[nodiscard]] const UncertainModel& model() const { return model_; }
    [[nodiscard]] const ConstraintSet& constraints() const { return Z_; }

    /// Steady input for the current setpoint at theta.
    [[nodiscard]] Vec steady_input(const Vec& theta) const {
        if (cfg_.terminal.u_s.U.cols() == 0) return cfg_.terminal.u_s.u0;
        return cfg_.terminal.u_s(theta);
    }

    [[nodiscard]] QpLayout layout() const {
        return qp_layout(cfg_.formulation, cfg_.N, model_.m(), cfg_.constants.r(), Z_.q(), model_.p(), model_.p_B());
    }

    /// Condensed QP in y = (v, w, [g_k], s_N, g).
    [[nodiscard]] QuadraticProgram build_qp(const StepData& st) const {
        return assemble(st).qp;
    }

    /// Solves the QP and returns u = v_0 + K x with the tightened solution.
    /// Throws QpInfeasible if the QP has no solution.
    std::pair<Vec, TubeSolution> solve_step(const StepData& st, const std::optional<Vec>& warm = std::nullopt) const {
        const auto asmb = assemble(st);
        SolverOptions opt;
        if (warm) opt.initial_point = *warm;
        const auto res = solve_qp(asmb.qp, opt);
        if (!res.ok())
            throw QpInfeasible(std::string("tube MPC QP not solved: ") + to_string(res.status), asmb.qp);
        TubeSolution sol = evaluate(st, res.x().head(layout().n_v));
        sol.status = SolveStatus::optimal;
        sol.iterations = res.iterations;
        const Vec u = sol.v.col(0) + cfg_.constants.K * st.x;
        return {u, sol};
    }

    /// Rolls out trajectories for given inputs v with w at its lower bound.
    [[nodiscard]] TubeSolution evaluate(const StepData& st, const Vec& vflat) const {
        const int N = cfg_.N;
        const Eigen::Index n = model_.n(), m = model_.m();
        const Mat& K = cfg_.constants.K;
        TubeSolution sol;
        sol.Theta = st.Theta;
        sol.theta_hat = st.theta_hat;
        sol.rho = st.rho;
        sol.level = st.level;
        sol.v = Eigen::Map<const Mat>(vflat.data(), m, N);
        sol.xbar.resize(n, N + 1);
        sol.xhat.resize(n, N + 1);
        sol.ubar.resize(m, N);
        sol.s = Vec::Zero(N + 1);
        sol.w = Vec::Zero(N);
        const auto dbar = eval_dynamics(model_, st.Theta.center);
        const auto dhat = eval_dynamics(model_, st.theta_hat);
        const Mat Abar = dbar.A + dbar.B * K, Ahat = dhat.A + dhat.B * K;
        sol.xbar.col(0) = st.x;
        sol.xhat.col(0) = st.x;
        for (int k = 0; k < N; ++k) {
            sol.ubar.col(k) = sol.v.col(k) + K * sol.xbar.col(k);
            sol.xbar.col(k + 1) = Abar * sol.xbar.col(k) + dbar.B * sol.v.col(k);
            sol.xhat.col(k + 1) = Ahat * sol.xhat.col(k) + dhat.B * sol.v.col(k);
        }
        if (cfg_.formulation != Formulation::nominal) {
            Vec s;
            switch (cfg_.formulation) {
                case Formulation::w1: s = tube_sizes_w1(sol, st.Theta.eta, st.rho); break;
                case Formulation::w3: s = tube_sizes_w3(sol, st.Theta.eta, st.rho); break;
                default: s = tube_sizes_w2(sol, st.Theta.eta, st.rho); break;
            }
            sol.s = s;
            for (int k = 0; k < N; ++k) sol.w(k) = s(k + 1) - st.rho * s(k);
        }
        sol.objective = cost(sol, st);
        sol.y = decision_vector(sol);
        return sol;
    }

    /// Stage + terminal cost of the LMS trajectory.
    [[nodiscard]] double cost(const TubeSolution& sol, const StepData& st) const {
        const Vec& xs = cfg_.terminal.x_s;
        const Vec us = steady_input(st.theta_hat);
        const Mat& K = cfg_.constants.K;
        double J = 0.0;
        for (int k = 0; k < cfg_.N; ++k) {
            const Vec dx = sol.xhat.col(k) - xs;
            const Vec du = sol.v.col(k) + K * sol.xhat.col(k) - us;
            J += dx.dot(cfg_.Q * dx) + du.dot(cfg_.R * du);
        }
        const Vec dN = sol.xhat.col(cfg_.N) - xs;
        return J + dN.dot(cfg_.constants.P * dN);
    }

    [[nodiscard]] Vec decision_vector(const TubeSolution& sol) const {
        const auto L = layout();
        Vec y = Vec::Zero(L.nvar);
        y.head(L.n_v) = Eigen::Map<const Vec>(sol.v.data(), L.n_v);
        if (cfg_.formulation == Formulation::nominal) return y;
        y.segment(L.n_v, L.n_w) = sol.w;
        const auto& H = cfg_.constants.tube.H;
        if (L.n_aux > 0)
            for (int k = 0; k < cfg_.N; ++k) y(L.n_v + L.n_w + k) = (H * sol.xbar.col(k)).maxCoeff();
        y(L.idx_sN) = sol.s(cfg_.N);
        y(L.idx_g) = (H * (sol.xbar.col(cfg_.N) - cfg_.terminal.x_s)).maxCoeff();
        return y;
    }

    /// Largest violation of the QP rows at y (inequalities and equalities).
    [[nodiscard]] double qp_violation(const StepData& st, const Vec& y) const {
        const auto qp = build_qp(st);
        double viol = 0.0;
        if (qp.A.rows() > 0) viol = std::max(viol, (qp.A * y - qp.b).maxCoeff());
        if (qp.E.rows() > 0) viol = std::max(viol, (qp.E * y - qp.f).cwiseAbs().maxCoeff());
        return viol;
    }

    // ---------------------------------------------------------- tube rules

    /// (rho + eta L_B) s + d_bar + eta max_{i,l} H_i D(x, u) e_l, starting at 0.
    [[nodiscard]] Vec tube_sizes_w2(const TubeSolution& traj, double eta, double rho) const {
        const auto& oc = cfg_.constants;
        Vec s = Vec::Zero(cfg_.N + 1);
        for (int k = 0; k < cfg_.N; ++k) {
            const double wk = oc.d_bar + eta * oc.L_B * s(k) + w_eta(model_, oc.tube, traj.xbar.col(k), traj.ubar.col(k), eta);
            s(k + 1) = rho * s(k) + wk;
        }
        return s;
    }

    /// Per-row disturbance bound d_bar_i in place of d_bar.
    [[nodiscard]] Vec tube_sizes_w1(const TubeSolution& traj, double eta, double rho) const {
        const auto& oc = cfg_.constants;
        Vec s = Vec::Zero(cfg_.N + 1);
        for (int k = 0; k < cfg_.N; ++k) {
            Vec rows = oc.d_bar_rows;
            if (model_.p() > 0) rows += eta * w_rows(model_, oc.tube, traj.xbar.col(k), traj.ubar.col(k));
            s(k + 1) = rho * s(k) + eta * oc.L_B * s(k) + rows.maxCoeff();
        }
        return s;
    }

    /// w~ = w_eta(0, u - Kx) + eta L_B max_i H_i x
    [[nodiscard]] Vec tube_sizes_w3(const TubeSolution& traj, double eta, double rho) const {
        const auto& oc = cfg_.constants;
        Vec s = Vec::Zero(cfg_.N + 1);
        const Vec zero = Vec::Zero(model_.n());
        for (int k = 0; k < cfg_.N; ++k) {
            const Vec vk = traj.ubar.col(k) - oc.K * traj.xbar.col(k);
            const double wt = w_eta(model_, oc.tube, zero, vk, eta) + eta * oc.L_B * (oc.tube.H * traj.xbar.col(k)).maxCoeff();
            s(k + 1) = rho * s(k) + eta * oc.L_B * s(k) + wt + oc.d_bar;
        }
        return s;
    }

    // ----------------------------------------------------------- candidate

    /// Shifted candidate for time t+1 built from the optimum at t.
    [[nodiscard]] CandidateSolution candidate(const TubeSolution& prev, const StepData& next) const {
        if (!next.Theta.subset_of(prev.Theta, 1e-9)) throw std::logic_error("candidate: parameter set did not shrink");
        const int N = cfg_.N;
        const Eigen::Index m = model_.m();
        const auto& oc = cfg_.constants;
        const Mat& K = oc.K;
        // inputs: shift and append the terminal controller input
        Vec vflat(N * m);
        for (int k = 0; k + 1 < N; ++k) vflat.segment(k * m, m) = prev.v.col(k + 1);
        const Vec vN = steady_input(prev.Theta.center) - K * cfg_.terminal.x_s;
        vflat.segment((N - 1) * m, m) = vN;
        CandidateSolution cand;
        cand.sol = evaluate(next, vflat);
        cand.sol.status = SolveStatus::optimal;

        // previous solution extended by one step
        const auto dprev = eval_dynamics(model_, prev.Theta.center);
        const Mat Aprev = dprev.A + dprev.B * K;
        Mat xstar(model_.n(), N + 2);
        xstar.leftCols(N + 1) = prev.xbar;
        xstar.col(N + 1) = Aprev * prev.xbar.col(N) + dprev.B * vN;
        Mat ustar(m, N + 1);
        ustar.leftCols(N) = prev.ubar;
        ustar.col(N) = vN + K * prev.xbar.col(N);
        Vec sstar(N + 2);
        sstar.head(N + 1) = prev.s;
        const double wN = oc.d_bar + prev.Theta.eta * oc.L_B * prev.s(N) +
                          w_eta(model_, oc.tube, prev.xbar.col(N), ustar.col(N), prev.Theta.eta);
        sstar(N + 1) = prev.rho * prev.s(N) + wN;

        const double deta = prev.Theta.eta - next.Theta.eta;
        cand.s_tilde = Vec::Zero(N + 1);
        cand.s_tilde(0) = prev.w(0);
        for (int k = 0; k < N; ++k)
            cand.s_tilde(k + 1) = next.rho * cand.s_tilde(k) + w_eta(model_, oc.tube, xstar.col(k + 1), ustar.col(k + 1), deta);

        for (int k = 0; k <= N; ++k) {
            cand.max_nest_violation = std::max(cand.max_nest_violation, cand.sol.s(k) + cand.s_tilde(k) - sstar(k + 1));
            const double e = (oc.tube.H * (cand.sol.xbar.col(k) - xstar.col(k + 1))).maxCoeff();
            cand.max_error_violation = std::max(cand.max_error_violation, e - cand.s_tilde(k));
        }
        cand.max_constraint_violation = std::max(0.0, qp_violation(next, cand.sol.y));
        return cand;
    }

    // ------------------------------------------------------ accounting

    /// (variables, counted rows) of the condensed problem.
    [[nodiscard]] std::pair<int, int> complexity() const {
        const auto L = layout();
        return {L.nvar, L.counted_rows()};
    }

private:
    struct Assembled {
        QuadraticProgram qp;
        QpLayout L;
    };

    // x_k = a + M y
    struct Affine {
        Vec a;
        Mat M;
    };

    Assembled assemble(const StepData& st) const {
        const auto L = layout();
        const int N = cfg_.N;
        const Eigen::Index n = model_.n(), m = model_.m(), nv = L.nvar;
        const auto& oc = cfg_.constants;
        const Mat& K = oc.K;
        const Mat& H = oc.tube.H;
        const Eigen::Index r = H.rows();
        const double eta = st.Theta.eta;
        if (st.x.size() != n) throw std::invalid_argument("build_qp: state dimension mismatch");

        const auto dbar = eval_dynamics(model_, st.Theta.center);
        const auto dhat = eval_dynamics(model_, st.theta_hat);
        const Mat Abar = dbar.A + dbar.B * K, Ahat = dhat.A + dhat.B * K;

        auto vsel = [&](int k) {
            Mat S = Mat::Zero(m, nv);
            S.block(0, k * m, m, m) = Mat::Identity(m, m);
            return S;
        };
        std::vector<Affine> xb(static_cast<std::size_t>(N + 1)), xh(static_cast<std::size_t>(N + 1)), ub(static_cast<std::size_t>(N));
        xb[0] = {st.x, Mat::Zero(n, nv)};
        xh[0] = xb[0];
        for (int k = 0; k < N; ++k) {
            const Mat Sk = vsel(k);
            ub[static_cast<std::size_t>(k)] = {K * xb[static_cast<std::size_t>(k)].a, Sk + K * xb[static_cast<std::size_t>(k)].M};
            xb[static_cast<std::size_t>(k + 1)] = {Abar * xb[static_cast<std::size_t>(k)].a, Abar * xb[static_cast<std::size_t>(k)].M + dbar.B * Sk};
            xh[static_cast<std::size_t>(k + 1)] = {Ahat * xh[static_cast<std::size_t>(k)].a, Ahat * xh[static_cast<std::size_t>(k)].M + dhat.B * Sk};
        }
        // s_k = sum_j rho^{k-1-j} w_j  (row vectors)
        std::vector<Vec> srow(static_cast<std::size_t>(N + 1), Vec::Zero(nv));
        if (cfg_.formulation != Formulation::nominal)
            for (int k = 0; k < N; ++k) {
                srow[static_cast<std::size_t>(k + 1)] = st.rho * srow[static_cast<std::size_t>(k)];
                srow[static_cast<std::size_t>(k + 1)](L.n_v + k) += 1.0;
            }

        const Eigen::Index rows = L.rows_w + L.rows_tight + L.rows_terminal;
        Mat A = Mat::Zero(rows, nv);
        Vec b = Vec::Zero(rows);
        Eigen::Index row = 0;

        // uncertainty rows:  lower bound - w_k <= 0
        if (cfg_.formulation == Formulation::w1 || cfg_.formulation == Formulation::w2) {
            for (int k = 0; k < N; ++k) {
                const auto& X = xb[static_cast<std::size_t>(k)];
                const auto& U = ub[static_cast<std::size_t>(k)];
                for (const auto& e : E_) {
                    Vec ca = Vec::Zero(n);
                    Mat cM = Mat::Zero(n, nv);
                    for (Eigen::Index j = 0; j < model_.p(); ++j) {
                        const auto& Aj = model_.A[static_cast<std::size_t>(j + 1)];
                        const auto& Bj = model_.B[static_cast<std::size_t>(j + 1)];
                        ca += e(j) * (Aj * X.a + Bj * U.a);
                        cM += e(j) * (Aj * X.M + Bj * U.M);
                    }
                    const Vec ha = H * ca;
                    const Mat hM = H * cM;
                    for (Eigen::Index i = 0; i < r; ++i) {
                        const double dterm = cfg_.formulation == Formulation::w1 ? oc.d_bar_rows(i) : oc.d_bar;
                        A.row(row) = eta * hM.row(i) + eta * oc.L_B * srow[static_cast<std::size_t>(k)].transpose();
                        A(row, L.n_v + k) -= 1.0;
                        b(row) = -(dterm + eta * ha(i));
                        ++row;
                    }
                }
            }
        } else if (cfg_.formulation == Formulation::w3) {
            for (int k = 0; k < N; ++k) {
                const auto& X = xb[static_cast<std::size_t>(k)];
                const Mat Sk = vsel(k);
                if (L.n_aux == 0) {
                    for (Eigen::Index i = 0; i < r; ++i) {
                        A.row(row) = eta * oc.L_B * (srow[static_cast<std::size_t>(k)].transpose() + H.row(i) * X.M);
                        A(row, L.n_v + k) -= 1.0;
                        b(row) = -(oc.d_bar + eta * oc.L_B * H.row(i).dot(X.a));
                        ++row;
                    }
                } else {
                    const int gk = L.n_v + L.n_w + k;
                    for (Eigen::Index i = 0; i < r; ++i) {  // g_k >= H_i x_k
                        A.row(row) = H.row(i) * X.M;
                        A(row, gk) -= 1.0;
                        b(row) = -H.row(i).dot(X.a);
                        ++row;
                    }
                    for (const auto& e : EB_) {
                        Mat cM = Mat::Zero(n, nv);
                        for (Eigen::Index j = 0; j < model_.p(); ++j) cM += e(j) * model_.B[static_cast<std::size_t>(j + 1)] * Sk;
                        const Mat hM = H * cM;
                        for (Eigen::Index i = 0; i < r; ++i) {
                            A.row(row) = eta * hM.row(i) + eta * oc.L_B * srow[static_cast<std::size_t>(k)].transpose();
                            A(row, gk) += eta * oc.L_B;
                            A(row, L.n_v + k) -= 1.0;
                            b(row) = -oc.d_bar;
                            ++row;
                        }
                    }
                }
            }
        }

        // tightened constraints F x + G u + c s <= 1
        for (int k = 0; k < N; ++k) {
            const auto& X = xb[static_cast<std::size_t>(k)];
            const auto& U = ub[static_cast<std::size_t>(k)];
            for (Eigen::Index j = 0; j < Z_.q(); ++j) {
                A.row(row) = Z_.F.row(j) * X.M + Z_.G.row(j) * U.M;
                double cst = Z_.F.row(j).dot(X.a) + Z_.G.row(j).dot(U.a);
                if (cfg_.formulation != Formulation::nominal) A.row(row) += oc.c(j) * srow[static_cast<std::size_t>(k)].transpose();
                b(row) = 1.0 - cst;
                ++row;
            }
        }

        // terminal set: s_N + max_i H_i (x_N - x_s) <= level
        const Vec& xs = cfg_.terminal.x_s;
        const auto& XN = xb[static_cast<std::size_t>(N)];
        Mat E(L.eq_rows, nv);
        Vec f(L.eq_rows);
        if (cfg_.formulation == Formulation::nominal) {
            for (Eigen::Index i = 0; i < r; ++i) {
                A.row(row) = H.row(i) * XN.M;
                b(row) = st.level - H.row(i).dot(XN.a - xs);
                ++row;
            }
        } else {
            for (Eigen::Index i = 0; i < r; ++i) {
                A.row(row) = H.row(i) * XN.M;
                A(row, L.idx_g) = -1.0;
                b(row) = -H.row(i).dot(XN.a - xs);
                ++row;
            }
            A(row, L.idx_sN) = 1.0;
            A(row, L.idx_g) = 1.0;
            b(row) = st.level;
            ++row;
            E.row(0) = srow[static_cast<std::size_t>(N)].transpose();
            E(0, L.idx_sN) -= 1.0;
            f(0) = 0.0;
        }

        // cost on the LMS trajectory
        Mat Hs = Mat::Zero(nv, nv);
        Vec c = Vec::Zero(nv);
        const Vec us = steady_input(st.theta_hat);
        for (int k = 0; k < N; ++k) {
            const auto& X = xh[static_cast<std::size_t>(k)];
            const Mat Mu = vsel(k) + K * X.M;
            const Vec au = K * X.a - us;
            Hs += 2.0 * (X.M.transpose() * cfg_.Q * X.M + Mu.transpose() * cfg_.R * Mu);
            c += 2.0 * (X.M.transpose() * cfg_.Q * (X.a - xs) + Mu.transpose() * cfg_.R * au);
        }
        const auto& XhN = xh[static_cast<std::size_t>(N)];
        Hs += 2.0 * XhN.M.transpose() * oc.P * XhN.M;
        c += 2.0 * XhN.M.transpose() * oc.P * (XhN.a - xs);
        Hs = 0.5 * (Hs + Hs.transpose());

        Assembled out;
        out.L = L;
        out.qp.hessian = Hs;
        out.qp.linear = c;
        out.qp.A = A;
        out.qp.b = b;
        out.qp.E = E;
        out.qp.f = f;
        return out;
    }

    UncertainModel model_;
    ConstraintSet Z_;
    MPCConfig cfg_;
    std::vector<Vec> E_;   // vertices of B_p
    std::vector<Vec> EB_;  // reduced vertices over B-parameters
};

// ------------------------------------------------------- homothetic tube

struct HomotheticResult {
    Vec s;
    int r_v = 0;
    long variables = 0;  // N r_v r 2p + N m + (N + 1)
    long rows = 0;       // N r_v r 2p + N q
    int lps_solved = 0;
};

/// Minimal homothetic tube sizes along a fixed nominal trajectory, one small
/// LP over the multipliers per (row, tube vertex, stage).
inline HomotheticResult tube_sizes_homothetic(const TubeSolution& traj, const UncertainModel& model, const OfflineConstants& oc,
                                              const ParamHypercube& Theta, const DisturbanceSet& D, int q) {
    const auto& H = oc.tube.H;
    const Eigen::Index r = H.rows(), p = model.p();
    const auto Z = vertices_2d(oc.tube);
    const HPolytope Tpoly = Theta.polytope();  // H_theta theta <= h_theta
    const Mat Acl0 = model.A[0] + model.B[0] * oc.K;
    const auto dbar = eval_dynamics(model, Theta.center);
    const Mat Acl_bar = dbar.A + dbar.B * oc.K;
    const int N = static_cast<int>(traj.v.cols());
    HomotheticResult res;
    res.r_v = static_cast<int>(Z.size());
    res.s = Vec::Zero(N + 1);
    const long rvr2p = static_cast<long>(res.r_v) * r * 2 * p;
    res.variables = N * rvr2p + N * model.m() + (N + 1);
    res.rows = N * rvr2p + static_cast<long>(N) * q;
    const Vec dbar_i = disturbance_bound_rows(oc.tube, D);
    for (int k = 0; k < N; ++k) {
        const Vec xk = traj.xbar.col(k);
        const Vec vk = traj.v.col(k);
        const Vec uk = vk + oc.K * xk;
        const Vec xnext = Acl_bar * xk + dbar.B * vk;
        const Mat Dk = regressor(model, xk, uk);
        const double sk = res.s(k);
        double snext = 0.0;
        for (const auto& z : Z) {
            const Mat Dz = regressor(model, z, oc.K * z);
            for (Eigen::Index i = 0; i < r; ++i) {
                const Vec coeff = (H.row(i) * (Dk + sk * Dz)).transpose();
                // min Lambda h_theta  s.t.  Lambda H_theta = coeff', Lambda >= 0
                LinearProgram lp;
                lp.objective = Tpoly.h;
                lp.A = -Mat::Identity(Tpoly.rows(), Tpoly.rows());
                lp.b = Vec::Zero(Tpoly.rows());
                lp.E = Tpoly.H.transpose();
                lp.f = coeff;
                const auto sol = solve_lp(lp);
                ++res.lps_solved;
                if (!sol.ok()) throw GeometryError(std::string("tube_sizes_homothetic: multiplier LP ") + to_string(sol.status));
                const double val = sol.objective + H.row(i).dot(Acl0 * xk + model.B[0] * vk - xnext + sk * Acl0 * z) + dbar_i(i);
                snext = std::max(snext, val);
            }
        }
        res.s(k + 1) = snext;
    }
    return res;
}

}  // namespace ramp
