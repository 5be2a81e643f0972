#pragma once

// Offline ingredients: (P, K), tube constants, uncertainty function w_eta and
// terminal sets for the origin and for tracked steady states.

#include <cmath>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ramp/estimation.hpp"
#include "ramp/geometry.hpp"
#include "ramp/model.hpp"
#include "ramp/sdp.hpp"

namespace ramp {

// ---------------------------------------------------------------- constants

/// max_i max_{x in P} H_i A_cl x
inline double contraction_rate(const HPolytope& tube, const Mat& A_cl) {
    double rho = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < tube.rows(); ++i) rho = std::max(rho, support(tube, (tube.H.row(i) * A_cl).transpose()));
    return rho;
}

/// Directions c with H_i D(x, Kx) e_l = c'x, one per (i, l).
inline std::vector<Vec> lipschitz_directions(const HPolytope& tube, const UncertainModel& model, const Mat& K) {
    std::vector<Vec> dirs;
    const auto E = ParamHypercube::unit_cube_vertices(model.p());
    for (const auto& e : E) {
        Mat M = Mat::Zero(model.n(), model.n());
        for (Eigen::Index j = 0; j < model.p(); ++j)
            M += e(j) * (model.A[static_cast<std::size_t>(j + 1)] + model.B[static_cast<std::size_t>(j + 1)] * K);
        for (Eigen::Index i = 0; i < tube.rows(); ++i) dirs.push_back((tube.H.row(i) * M).transpose());
    }
    return dirs;
}

/// L_B = max_{i,l} max_{x in P} H_i D(x, Kx) e_l
inline double param_lipschitz(const HPolytope& tube, const UncertainModel& model, const Mat& K) {
    double L = 0.0;
    bool first = true;
    for (const auto& c : lipschitz_directions(tube, model, K)) {
        const double v = c.norm() == 0.0 ? 0.0 : support(tube, c);
        L = first ? v : std::max(L, v);
        first = false;
    }
    return L;
}

/// d_bar_i = max_{d in D} H_i d
inline Vec disturbance_bound_rows(const HPolytope& tube, const DisturbanceSet& D) {
    Vec out(tube.rows());
    for (Eigen::Index i = 0; i < tube.rows(); ++i) out(i) = support(D.poly, tube.H.row(i).transpose());
    return out;
}

inline double disturbance_bound(const HPolytope& tube, const DisturbanceSet& D) {
    return disturbance_bound_rows(tube, D).maxCoeff();
}

/// Row-wise worst case max_l H_i D(z,v) e_l = 0.5 ||H_i D(z,v)||_1.
inline Vec w_rows(const UncertainModel& model, const HPolytope& tube, const Vec& z, const Vec& v) {
    const Mat HD = tube.H * regressor(model, z, v);
    return 0.5 * HD.cwiseAbs().rowwise().sum();
}

/// w_eta(z,v) = eta max_{i,l} H_i D(z,v) e_l
inline double w_eta(const UncertainModel& model, const HPolytope& tube, const Vec& z, const Vec& v, double eta) {
    if (eta < 0.0) throw std::invalid_argument("w_eta: eta must be nonnegative");
    if (model.p() == 0) return 0.0;
    return eta * w_rows(model, tube, z, v).maxCoeff();
}

/// c_j = max_{x in P} [F + G K]_j x
inline Vec constraint_margins(const HPolytope& tube, const ConstraintSet& Z, const Mat& K) {
    const Mat FK = Z.F + Z.G * K;
    Vec c(FK.rows());
    for (Eigen::Index j = 0; j < FK.rows(); ++j) c(j) = FK.row(j).norm() == 0.0 ? 0.0 : support(tube, FK.row(j).transpose());
    return c;
}

struct OfflineConstants {
    Mat K;
    Mat P;
    HPolytope tube;  // h = 1
    double rho_bar = 0.0;  // contraction rate at the prior center
    double L_B = 0.0;
    double d_bar = 0.0;
    Vec d_bar_rows;
    Vec c;
    double c_max = 0.0;

    [[nodiscard]] Eigen::Index r() const { return tube.rows(); }
};

inline OfflineConstants compute_constants(const UncertainModel& model, const ConstraintSet& Z, const DisturbanceSet& D,
                                          const ParamHypercube& Theta0, const Mat& K, const Mat& P, const HPolytope& tube) {
    if (tube.rows() == 0) throw std::invalid_argument("compute_constants: empty tube description");
    if ((tube.h.array() - 1.0).abs().maxCoeff() > 1e-12) throw std::invalid_argument("compute_constants: tube must be normalized to h = 1");
    OfflineConstants oc;
    oc.K = K;
    oc.P = P;
    oc.tube = tube;
    oc.rho_bar = contraction_rate(tube, closed_loop(model, K, Theta0.center));
    oc.L_B = param_lipschitz(tube, model, K);
    oc.d_bar_rows = disturbance_bound_rows(tube, D);
    oc.d_bar = oc.d_bar_rows.maxCoeff();
    oc.c = constraint_margins(tube, Z, K);
    oc.c_max = oc.c.maxCoeff();
    return oc;
}

// ------------------------------------------------------------ property probes

struct ProbeResult {
    bool ok = true;
    double lhs = 0.0;
    double rhs = 0.0;
    [[nodiscard]] double residual() const { return rhs - lhs; }
};

/// rho_{theta + dtheta} <= rho_theta + eta L_B for ||dtheta||_inf <= eta/2
inline ProbeResult check_prop1(const UncertainModel& model, const HPolytope& tube, const Mat& K, const Vec& theta,
                               const Vec& dtheta, double eta, double L_B) {
    if (dtheta.lpNorm<Eigen::Infinity>() > 0.5 * eta + 1e-12) throw std::invalid_argument("check_prop1: dtheta outside eta B_p");
    ProbeResult r;
    r.lhs = contraction_rate(tube, closed_loop(model, K, theta + dtheta));
    r.rhs = contraction_rate(tube, closed_loop(model, K, theta)) + eta * L_B;
    r.ok = r.lhs <= r.rhs + 1e-9;
    return r;
}

inline ProbeResult check_prop1(const UncertainModel& model, const HPolytope& tube, const Mat& K, const Vec& theta,
                               const Vec& dtheta, double eta) {
    return check_prop1(model, tube, K, theta, dtheta, eta, param_lipschitz(tube, model, K));
}

/// w_eta(x, v + K(x - z)) <= w_eta(z, v) + eta L_B max_i H_i (x - z)
inline ProbeResult check_prop2(const UncertainModel& model, const HPolytope& tube, const Mat& K, const Vec& x, const Vec& z,
                               const Vec& v, double eta, double L_B) {
    ProbeResult r;
    r.lhs = w_eta(model, tube, x, v + K * (x - z), eta);
    r.rhs = w_eta(model, tube, z, v, eta) + eta * L_B * (tube.H * (x - z)).maxCoeff();
    r.ok = r.lhs <= r.rhs + 1e-9;
    return r;
}

inline ProbeResult check_prop2(const UncertainModel& model, const HPolytope& tube, const Mat& K, const Vec& x, const Vec& z,
                               const Vec& v, double eta) {
    return check_prop2(model, tube, K, x, z, v, eta, param_lipschitz(tube, model, K));
}

struct LyapunovReport {
    bool ok = false;
    double worst_eigenvalue = -std::numeric_limits<double>::infinity();  // max eig of lhs - P
    Vec worst_theta;
    bool worst_at_vertex = true;
};

/// A_cl' P A_cl + Q + K'RK <= P at every vertex of Theta0 plus random interior
/// samples; reports the worst residual.
inline LyapunovReport lyapunov_check(const Mat& P, const Mat& K, const Mat& Q, const Mat& R, const UncertainModel& model,
                                     const ParamHypercube& Theta0, int interior_samples = 10000, unsigned seed = 1) {
    LyapunovReport rep;
    auto residual = [&](const Vec& th) {
        const Mat Acl = closed_loop(model, K, th);
        Mat S = Acl.transpose() * P * Acl + Q + K.transpose() * R * K - P;
        S = 0.5 * (S + S.transpose());
        return Eigen::SelfAdjointEigenSolver<Mat>(S, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    };
    for (const auto& th : Theta0.vertices()) {
        const double e = residual(th);
        if (e > rep.worst_eigenvalue) {
            rep.worst_eigenvalue = e;
            rep.worst_theta = th;
            rep.worst_at_vertex = true;
        }
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-0.5, 0.5);
    for (int s = 0; s < interior_samples; ++s) {
        Vec th = Theta0.center;
        for (Eigen::Index i = 0; i < th.size(); ++i) th(i) += Theta0.eta * U(rng);
        const double e = residual(th);
        if (e > rep.worst_eigenvalue) {
            rep.worst_eigenvalue = e;
            rep.worst_theta = th;
            rep.worst_at_vertex = false;
        }
    }
    rep.ok = rep.worst_eigenvalue <= 1e-8;
    return rep;
}

// --------------------------------------------------------------- synthesis

class SynthesisError : public std::runtime_error {
public:
    SynthesisError(const std::string& what, std::string block) : std::runtime_error(what), violated_block(std::move(block)) {}
    std::string violated_block;
};

/// Discrete-time Riccati solution by fixed-point iteration.
inline Mat dare(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, int max_iter = 100000, double tol = 1e-13) {
    Mat P = Q;
    for (int it = 0; it < max_iter; ++it) {
        const Mat S = R + B.transpose() * P * B;
        const Mat Pn = A.transpose() * P * A - A.transpose() * P * B * S.ldlt().solve(B.transpose() * P * A) + Q;
        if ((Pn - P).cwiseAbs().maxCoeff() <= tol * std::max(1.0, P.cwiseAbs().maxCoeff())) return Pn;
        P = Pn;
    }
    throw std::runtime_error("dare: no convergence");
}

/// u = K x with K = -(R + B'PB)^{-1} B'PA
inline Mat lqr_gain(const Mat& A, const Mat& B, const Mat& P, const Mat& R) {
    return -(R + B.transpose() * P * B).ldlt().solve(B.transpose() * P * A);
}

struct SynthesisResult {
    Mat P;
    Mat K;
    Mat X;
    Mat Y;
    double rho = 0.0;
    double lambda = 0.0;
    double logdet_X = 0.0;
};

inline Mat sqrtm_psd(const Mat& M) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()));
    return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

/// max log det X subject to the Lyapunov, contraction, constraint and RPI LMIs
/// at every parameter vertex (and disturbance vertex for RPI).
inline SynthesisResult lmi_synthesis(const UncertainModel& model, const std::vector<Vec>& theta_vertices,
                                     const std::vector<Vec>& d_vertices, const Mat& Q, const Mat& R, double rho, double lambda,
                                     const ConstraintSet& Z) {
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("lmi_synthesis: rho must lie in (0,1)");
    if (!(lambda >= 0.0 && lambda < 1.0)) throw std::invalid_argument("lmi_synthesis: lambda must lie in [0,1)");
    const Eigen::Index n = model.n(), m = model.m();
    const Eigen::Index nx = n * (n + 1) / 2, nv = nx + m * n;
    auto unpack = [n, m, nx](const Vec& z, Mat& X, Mat& Y) {
        X.setZero(n, n);
        Eigen::Index k = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i; j < n; ++j) {
                X(i, j) = z(k);
                X(j, i) = z(k);
                ++k;
            }
        Y.resize(m, n);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < n; ++j) Y(i, j) = z(nx + i * n + j);
    };
    const Mat Qh = sqrtm_psd(Q), Rh = sqrtm_psd(R);
    SdpProblem pb;
    pb.nvar = nv;
    pb.blocks.push_back(LmiBlock::from_affine("X > 0", nv, [&](const Vec& z) {
        Mat X, Y;
        unpack(z, X, Y);
        return X;
    }));
    pb.logdet_block = 0;
    int vi = 0;
    for (const auto& th : theta_vertices) {
        const auto dyn = eval_dynamics(model, th);
        const std::string tag = " at parameter vertex " + std::to_string(vi++);
        pb.blocks.push_back(LmiBlock::from_affine("lyapunov" + tag, nv, [&](const Vec& z) {
            Mat X, Y;
            unpack(z, X, Y);
            const Mat AXBY = dyn.A * X + dyn.B * Y;
            const Eigen::Index s = 2 * n + n + m;
            Mat M = Mat::Zero(s, s);
            M.block(0, 0, n, n) = X;
            M.block(0, n, n, n) = AXBY.transpose();
            M.block(0, 2 * n, n, n) = X * Qh;
            M.block(0, 3 * n, n, m) = Y.transpose() * Rh;
            M.block(n, n, n, n) = X;
            M.block(2 * n, 2 * n, n, n) = Mat::Identity(n, n);
            M.block(3 * n, 3 * n, m, m) = Mat::Identity(m, m);
            M.block(n, 0, n, n) = AXBY;
            M.block(2 * n, 0, n, n) = Qh * X;
            M.block(3 * n, 0, m, n) = Rh * Y;
            return M;
        }));
        pb.blocks.push_back(LmiBlock::from_affine("contraction" + tag, nv, [&](const Vec& z) {
            Mat X, Y;
            unpack(z, X, Y);
            const Mat AXBY = dyn.A * X + dyn.B * Y;
            Mat M(2 * n, 2 * n);
            M << rho * X, AXBY.transpose(), AXBY, rho * X;
            return M;
        }));
        int di = 0;
        for (const auto& d : d_vertices) {
            pb.blocks.push_back(LmiBlock::from_affine("rpi" + tag + " disturbance vertex " + std::to_string(di++), nv, [&](const Vec& z) {
                Mat X, Y;
                unpack(z, X, Y);
                const Mat AXBY = dyn.A * X + dyn.B * Y;
                Mat M = Mat::Zero(2 * n + 1, 2 * n + 1);
                M.block(0, 0, n, n) = lambda * X;
                M(n, n) = 1.0 - lambda;
                M.block(0, n + 1, n, n) = AXBY.transpose();
                M.block(n + 1, 0, n, n) = AXBY;
                M.block(n, n + 1, 1, n) = d.transpose();
                M.block(n + 1, n, n, 1) = d;
                M.block(n + 1, n + 1, n, n) = X;
                return M;
            }));
        }
    }
    for (Eigen::Index j = 0; j < Z.q(); ++j) {
        pb.blocks.push_back(LmiBlock::from_affine("constraint row " + std::to_string(j), nv, [&](const Vec& z) {
            Mat X, Y;
            unpack(z, X, Y);
            const Mat row = Z.F.row(j) * X + Z.G.row(j) * Y;
            Mat M(n + 1, n + 1);
            M(0, 0) = 1.0;
            M.block(0, 1, 1, n) = row;
            M.block(1, 0, n, 1) = row.transpose();
            M.block(1, 1, n, n) = X;
            return M;
        }));
    }
    pb.radius = 1e4;
    const auto res = solve_sdp(pb);
    if (res.status == SolveStatus::infeasible)
        throw SynthesisError("lmi_synthesis: infeasible (violated block: " + res.violated_block + ")", res.violated_block);
    if (!res.ok()) throw SynthesisError("lmi_synthesis: SDP numerical failure", "");
    SynthesisResult out;
    unpack(res.z, out.X, out.Y);
    out.P = out.X.inverse();
    out.P = 0.5 * (out.P + out.P.transpose());
    out.K = out.Y * out.P;
    out.rho = rho;
    out.lambda = lambda;
    out.logdet_X = -res.objective;
    return out;
}

/// Scans lambda in {0.1, ..., 0.9} at the requested rho and keeps the feasible
/// pair with the largest log det X (first one on ties).
inline SynthesisResult lmi_synthesis_scan(const UncertainModel& model, const std::vector<Vec>& theta_vertices,
                                          const std::vector<Vec>& d_vertices, const Mat& Q, const Mat& R, double rho,
                                          const ConstraintSet& Z, const std::vector<double>& lambdas = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
    std::string last;
    std::string block;
    std::optional<SynthesisResult> best;
    for (double lam : lambdas) {
        try {
            auto res = lmi_synthesis(model, theta_vertices, d_vertices, Q, R, rho, lam, Z);
            if (!best || res.logdet_X > best->logdet_X + 1e-6) best = std::move(res);
        } catch (const SynthesisError& e) {
            last = e.what();
            block = e.violated_block;
        }
    }
    if (!best) throw SynthesisError("lmi_synthesis_scan: no feasible lambda for rho = " + std::to_string(rho) + "; last: " + last, block);
    return *best;
}

/// Base set for the tube polytope: a state box plus bounds on Kx.
struct TubeBase {
    Vec x_lower, x_upper;
    Vec u_lower, u_upper;
};

inline HPolytope tube_base_polytope(const TubeBase& base, const Mat& K) {
    const Eigen::Index n = K.cols(), m = K.rows();
    if (base.x_lower.size() != n || base.x_upper.size() != n || base.u_lower.size() != m || base.u_upper.size() != m)
        throw std::invalid_argument("tube_base_polytope: bound dimensions do not match K");
    Mat H(2 * n + 2 * m, n);
    Vec h(2 * n + 2 * m);
    H << Mat::Identity(n, n), -Mat::Identity(n, n), K, -K;
    h << base.x_upper, -base.x_lower, base.u_upper, -base.u_lower;
    return {H, h};
}

/// Tube polytope (maximal rho-contractive set for the nominal closed loop
/// inside the base set) and the constants built on it.
inline OfflineConstants design_constants(const UncertainModel& model, const ConstraintSet& Z, const DisturbanceSet& D,
                                         const ParamHypercube& Theta0, const Mat& K, const Mat& P, const TubeBase& base,
                                         double rho, const ContractiveSetOptions& opt = {}) {
    const HPolytope tube = max_contractive_set({closed_loop(model, K, Theta0.center)}, tube_base_polytope(base, K), rho, opt);
    return compute_constants(model, Z, D, Theta0, K, P, tube);
}

// -------------------------------------------------------------- terminal sets

class TerminalInfeasible : public std::runtime_error {
public:
    TerminalInfeasible(const std::string& what, std::vector<std::pair<std::string, double>> q)
        : std::runtime_error(what), quantities(std::move(q)) {}
    std::vector<std::pair<std::string, double>> quantities;
};

/// u_{s,theta} = u0 + U theta
struct SteadyInputMap {
    Vec u0;
    Mat U;
    [[nodiscard]] Vec operator()(const Vec& theta) const { return u0 + U * theta; }
};

/// Affine steady-input map for x_s; throws if x_s is not a steady state for
/// some vertex or the map is not affine.
inline SteadyInputMap steady_input_map(const UncertainModel& model, const Vec& x_s, const ParamHypercube& Theta) {
    const Eigen::Index p = model.p(), n = model.n();
    auto solve_at = [&](const Vec& th) {
        const auto dyn = eval_dynamics(model, th);
        const Vec rhs = x_s - dyn.A * x_s;
        return Vec(dyn.B.completeOrthogonalDecomposition().solve(rhs));
    };
    SteadyInputMap map;
    map.u0 = solve_at(Vec::Zero(p));
    map.U.resize(model.m(), p);
    for (Eigen::Index i = 0; i < p; ++i) map.U.col(i) = solve_at(Vec::Unit(p, i)) - map.u0;
    auto check = [&](const Vec& th) {
        const auto dyn = eval_dynamics(model, th);
        const Vec res = dyn.A * x_s + dyn.B * map(th) - x_s;
        return res.lpNorm<Eigen::Infinity>() <= 1e-9 * (1.0 + x_s.lpNorm<Eigen::Infinity>());
    };
    for (const auto& th : Theta.vertices())
        if (!check(th)) throw std::domain_error("steady_input_map: x_s is not an affine-input steady state over the parameter set");
    if (!check(Theta.center)) throw std::domain_error("steady_input_map: steady input is not affine in theta");
    (void)n;
    return map;
}

struct TerminalSet {
    enum class Kind { origin, tracking } kind = Kind::origin;
    double c_max = 0.0;
    double f_lower = 0.0;  // level of s + H_i (x - x_s) <= f_lower
    double w_upper = 0.0;  // w_bar over the parameter set (tracking)
    Vec x_s;
    SteadyInputMap u_s;
    double slack = 0.0;    // rhs - lhs of the verified condition

    [[nodiscard]] double level() const { return f_lower; }

    /// Membership of (x, s).
    [[nodiscard]] bool contains(const HPolytope& tube, const Vec& x, double s, double tol = 1e-9) const {
        return s + (tube.H * (x - x_s)).maxCoeff() <= f_lower + tol;
    }
};

/// Origin terminal set {c_max (s + H_i x) <= 1}, valid if
/// rho + eta0 L_B + c_max d_bar <= 1.
inline TerminalSet terminal_origin(const OfflineConstants& oc, double eta0) {
    const double lhs = oc.rho_bar + eta0 * oc.L_B + oc.c_max * oc.d_bar;
    if (lhs > 1.0) {
        std::ostringstream os;
        os << "terminal condition violated: rho + eta0 L_B + c_max d_bar = " << lhs << " > 1";
        throw TerminalInfeasible(os.str(), {{"rho", oc.rho_bar}, {"eta0_L_B", eta0 * oc.L_B}, {"c_max_d_bar", oc.c_max * oc.d_bar}});
    }
    if (!(oc.c_max > 0.0)) throw std::invalid_argument("terminal_origin: c_max must be positive");
    TerminalSet ts;
    ts.kind = TerminalSet::Kind::origin;
    ts.c_max = oc.c_max;
    ts.f_lower = 1.0 / oc.c_max;
    ts.x_s = Vec::Zero(oc.K.cols());
    ts.u_s = SteadyInputMap{Vec::Zero(oc.K.rows()), Mat::Zero(oc.K.rows(), 0)};
    ts.slack = 1.0 - lhs;
    return ts;
}

/// f_theta = min_j (1 - F_j x_s - G_j u_{s,theta}) / c_j over rows with c_j > 0.
inline double steady_margin(const ConstraintSet& Z, const Vec& c, const Vec& x_s, const Vec& u_s) {
    double f = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < Z.q(); ++j) {
        const double slack = 1.0 - Z.F.row(j).dot(x_s) - Z.G.row(j).dot(u_s);
        if (c(j) > 1e-14) f = std::min(f, slack / c(j));
        else if (slack < 0.0) f = -std::numeric_limits<double>::infinity();
    }
    return f;
}

struct TrackingQuantities {
    double f_lower = 0.0;
    double w_upper = 0.0;
};

/// f_lower and w_bar over the given hypercube (vertex evaluation).
inline TrackingQuantities tracking_quantities(const OfflineConstants& oc, const UncertainModel& model, const ConstraintSet& Z,
                                              const ParamHypercube& Theta, const Vec& x_s, const SteadyInputMap& us) {
    TrackingQuantities tq{std::numeric_limits<double>::infinity(), 0.0};
    for (const auto& th : Theta.vertices()) {
        const Vec u = us(th);
        tq.f_lower = std::min(tq.f_lower, steady_margin(Z, oc.c, x_s, u));
        if (model.p() > 0) tq.w_upper = std::max(tq.w_upper, w_rows(model, oc.tube, x_s, u).maxCoeff());
    }
    return tq;
}

/// Terminal set {s + H_i (x - x_s) <= f_lower} for a steady state x_s, valid if
/// eta0 w_bar + d_bar <= f_lower (1 - rho - eta0 L_B).
inline TerminalSet terminal_tracking(const OfflineConstants& oc, const UncertainModel& model, const ConstraintSet& Z,
                                     const ParamHypercube& Theta, const Vec& x_s) {
    SteadyInputMap us;
    try {
        us = steady_input_map(model, x_s, Theta);
    } catch (const std::domain_error& e) {
        throw std::domain_error(std::string("terminal_tracking: unsupported: ") + e.what());
    }
    const auto tq = tracking_quantities(oc, model, Z, Theta, x_s, us);
    const double lhs = Theta.eta * tq.w_upper + oc.d_bar;
    const double rhs = tq.f_lower * (1.0 - oc.rho_bar - Theta.eta * oc.L_B);
    if (!(tq.f_lower > 0.0) || lhs > rhs) {
        std::ostringstream os;
        os << "tracking terminal condition violated: eta w_bar + d_bar = " << lhs << " > f_lower (1 - rho - eta L_B) = " << rhs;
        throw TerminalInfeasible(os.str(), {{"eta_w_bar", Theta.eta * tq.w_upper},
                                            {"d_bar", oc.d_bar},
                                            {"f_lower", tq.f_lower},
                                            {"rho_plus_eta_L_B", oc.rho_bar + Theta.eta * oc.L_B}});
    }
    TerminalSet ts;
    ts.kind = TerminalSet::Kind::tracking;
    ts.c_max = oc.c_max;
    ts.f_lower = tq.f_lower;
    ts.w_upper = tq.w_upper;
    ts.x_s = x_s;
    ts.u_s = us;
    ts.slack = rhs - lhs;
    return ts;
}

/// Terminal level for a (smaller) hypercube Theta_t: the set grows as Theta
/// shrinks, so f_lower over Theta_t is at least the offline value.
inline double terminal_level(const TerminalSet& ts, const OfflineConstants& oc, const UncertainModel& model, const ConstraintSet& Z,
                             const ParamHypercube& Theta) {
    if (ts.kind == TerminalSet::Kind::origin) return ts.f_lower;
    return std::max(ts.f_lower, tracking_quantities(oc, model, Z, Theta, ts.x_s, ts.u_s).f_lower);
}

}  // namespace ramp
