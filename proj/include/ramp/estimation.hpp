#pragma once

// Set-membership identification (moving-window hypercube) and projected LMS.

#include <algorithm>
#include <deque>
#include <stdexcept>

#include "ramp/model.hpp"

namespace ramp {

class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parameters consistent with one observed transition.
struct NonFalsifiedSet {
    HPolytope poly;  // in parameter space
    bool always_violated = false;  // some theta-free row is violated (empty set)
};

inline NonFalsifiedSet nonfalsified(const UncertainModel& model, const Vec& x_prev, const Vec& u_prev, const Vec& x_next,
                                    const DisturbanceSet& D, double tol = 1e-9) {
    const Mat Dx = regressor(model, x_prev, u_prev);
    const Vec resid = x_next - model.A[0] * x_prev - model.B[0] * u_prev;
    // H_d (resid - D theta) <= h_d  <=>  -H_d D theta <= h_d - H_d resid
    const Mat Ht = -D.poly.H * Dx;
    const Vec ht = D.poly.h - D.poly.H * resid;
    NonFalsifiedSet out;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < Ht.rows(); ++i) {
        if (Ht.row(i).lpNorm<Eigen::Infinity>() <= 1e-14) {
            if (ht(i) < -tol) out.always_violated = true;
            continue;
        }
        keep.push_back(i);
    }
    out.poly.H.resize(static_cast<Eigen::Index>(keep.size()), model.p());
    out.poly.h.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        out.poly.H.row(static_cast<Eigen::Index>(k)) = Ht.row(keep[k]);
        out.poly.h(static_cast<Eigen::Index>(k)) = ht(keep[k]);
    }
    if (out.always_violated) {
        // infeasible marker row 0'theta <= -1 keeps downstream LPs honest
        Mat H2(out.poly.rows() + 1, model.p());
        H2 << out.poly.H, Mat::Zero(1, model.p());
        Vec h2(out.poly.rows() + 1);
        h2 << out.poly.h, -1.0;
        out.poly = HPolytope(H2, h2);
    }
    return out;
}

/// Rejection-free membership test for a single theta.
inline bool consistent(const UncertainModel& model, const Vec& x_prev, const Vec& u_prev, const Vec& x_next,
                       const DisturbanceSet& D, const Vec& theta, double tol = 1e-9) {
    const auto dyn = eval_dynamics(model, theta);
    return D.poly.contains(x_next - dyn.A * x_prev - dyn.B * u_prev, tol);
}

struct EstimatorState {
    ParamHypercube theta_set;
    std::deque<NonFalsifiedSet> window;
    Vec theta_hat;
    double mu = 0.0;
    std::size_t M = 10;  // window keeps M + 2 sets

    /// Most recent intersection Theta^M (before over-approximation).
    HPolytope last_intersection;
};

inline EstimatorState make_estimator(const ParamHypercube& prior, const Vec& theta_hat0, double mu, std::size_t M = 10) {
    EstimatorState s;
    s.theta_set = prior;
    s.theta_hat = prior.project(theta_hat0);
    s.mu = mu;
    s.M = M;
    s.last_intersection = prior.polytope();
    return s;
}

/// Moving-window hypercube update. Pushes new_delta into the window and
/// returns (and stores) the new hypercube.
inline ParamHypercube hypercube_update(EstimatorState& state, const NonFalsifiedSet& new_delta) {
    state.window.push_back(new_delta);
    while (state.window.size() > state.M + 2) state.window.pop_front();

    HPolytope inter = state.theta_set.polytope();
    for (const auto& d : state.window) inter = inter.intersect(d.poly);
    state.last_intersection = inter;

    IntervalBox box;
    try {
        box = bounding_box(inter);
    } catch (const GeometryError& e) {
        throw EstimationError(std::string("hypercube_update: data inconsistent with the model assumptions: ") + e.what());
    }
    const ParamHypercube& prev = state.theta_set;
    const double eta = std::min(prev.eta, box.widths().maxCoeff());
    const Vec mid = box.center();
    // project the center into theta_bar_prev + (eta_prev - eta) B_p
    const double half = 0.5 * (prev.eta - eta);
    const Vec lo = prev.center.array() - half, hi = prev.center.array() + half;
    const Vec center = mid.cwiseMax(lo).cwiseMin(hi);
    state.theta_set = ParamHypercube{center, eta};
    return state.theta_set;
}

/// One projected LMS step; uses the current state.theta_set for projection.
inline Vec lms_update(EstimatorState& state, const UncertainModel& model, const Vec& x_prev, const Vec& u_prev,
                      const Vec& x_next) {
    if (!(state.mu > 0.0)) throw std::invalid_argument("lms_update: mu must be positive");
    const auto dyn = eval_dynamics(model, state.theta_hat);
    const Vec err = x_next - dyn.A * x_prev - dyn.B * u_prev;
    const Mat Dx = regressor(model, x_prev, u_prev);
    state.theta_hat = state.theta_set.project(state.theta_hat + state.mu * Dx.transpose() * err);
    return state.theta_hat;
}

/// sup over Z of ||D(x,u)||_2^2, attained at a vertex of Z. Vertices are
/// enumerated through every (n+m)-subset of active rows, so this is meant for
/// small constraint sets.
inline double mu_bound(const UncertainModel& model, const ConstraintSet& Z) {
    const Eigen::Index n = model.n(), m = model.m(), dim = n + m;
    const HPolytope poly = Z.polytope();
    const Eigen::Index q = poly.rows();
    if (q < dim) throw GeometryError("mu_bound: Z is unbounded");
    Z.check_compact();
    double best = 0.0;
    // iterate all dim-combinations of rows
    std::vector<bool> mask(static_cast<std::size_t>(q), false);
    std::fill(mask.begin(), mask.begin() + dim, true);
    bool found = false;
    do {
        Mat M(dim, dim);
        Vec rhs(dim);
        Eigen::Index k = 0;
        for (Eigen::Index i = 0; i < q; ++i)
            if (mask[static_cast<std::size_t>(i)]) {
                M.row(k) = poly.H.row(i);
                rhs(k) = poly.h(i);
                ++k;
            }
        Eigen::FullPivLU<Mat> lu(M);
        if (lu.rank() < dim) continue;
        const Vec z = lu.solve(rhs);
        if (poly.max_violation(z) > 1e-9) continue;
        found = true;
        const Mat Dz = regressor(model, z.head(n), z.tail(m));
        if (Dz.size() == 0) continue;
        const double s = Dz.operatorNorm();
        best = std::max(best, s * s);
    } while (std::prev_permutation(mask.begin(), mask.end()));
    if (!found) throw GeometryError("mu_bound: Z has no vertices");
    return best;
}

}  // namespace ramp
