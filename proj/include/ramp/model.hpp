#pragma once

// Uncertain linear system x+ = A(theta) x + B(theta) u + d with
// A(theta) = A_0 + sum_i theta_i A_i (same for B), its constraint set and
// parameter hypercube.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ramp/geometry.hpp"

namespace ramp {

struct UncertainModel {
    std::vector<Mat> A;  // A_0..A_p
    std::vector<Mat> B;  // B_0..B_p

    UncertainModel() = default;
    UncertainModel(std::vector<Mat> A_, std::vector<Mat> B_) : A(std::move(A_)), B(std::move(B_)) { validate(); }

    [[nodiscard]] Eigen::Index n() const { return A.empty() ? 0 : A[0].rows(); }
    [[nodiscard]] Eigen::Index m() const { return B.empty() ? 0 : B[0].cols(); }
    [[nodiscard]] Eigen::Index p() const { return static_cast<Eigen::Index>(A.size()) - 1; }

    void validate() const {
        if (A.empty() || A.size() != B.size()) throw std::invalid_argument("UncertainModel: need p+1 matrices A_i and B_i");
        const auto nn = A[0].rows(), mm = B[0].cols();
        for (std::size_t i = 0; i < A.size(); ++i) {
            if (A[i].rows() != nn || A[i].cols() != nn) throw std::invalid_argument("UncertainModel: A_i must be n x n");
            if (B[i].rows() != nn || B[i].cols() != mm) throw std::invalid_argument("UncertainModel: B_i must be n x m");
        }
    }

    /// Number of parameters entering B (nonzero B_i, i >= 1).
    [[nodiscard]] Eigen::Index p_B() const {
        Eigen::Index count = 0;
        for (std::size_t i = 1; i < B.size(); ++i)
            if (B[i].cwiseAbs().maxCoeff() > 0.0) ++count;
        return count;
    }
};

struct Dynamics {
    Mat A;
    Mat B;
};

inline Dynamics eval_dynamics(const UncertainModel& model, const Vec& theta) {
    if (theta.size() != model.p()) throw std::invalid_argument("eval_dynamics: theta has wrong length");
    Dynamics d{model.A[0], model.B[0]};
    for (Eigen::Index i = 0; i < model.p(); ++i) {
        d.A += theta(i) * model.A[static_cast<std::size_t>(i + 1)];
        d.B += theta(i) * model.B[static_cast<std::size_t>(i + 1)];
    }
    return d;
}

/// D(x,u) = [A_1 x + B_1 u, ..., A_p x + B_p u]
inline Mat regressor(const UncertainModel& model, const Vec& x, const Vec& u) {
    if (x.size() != model.n() || u.size() != model.m()) throw std::invalid_argument("regressor: dimension mismatch");
    Mat D(model.n(), model.p());
    for (Eigen::Index i = 0; i < model.p(); ++i)
        D.col(i) = model.A[static_cast<std::size_t>(i + 1)] * x + model.B[static_cast<std::size_t>(i + 1)] * u;
    return D;
}

/// A(theta) + B(theta) K
inline Mat closed_loop(const UncertainModel& model, const Mat& K, const Vec& theta) {
    const auto d = eval_dynamics(model, theta);
    return d.A + d.B * K;
}

/// theta_bar + eta * B_p, with B_p the box of half-width 0.5.
struct ParamHypercube {
    Vec center;
    double eta = 0.0;

    [[nodiscard]] Eigen::Index p() const { return center.size(); }

    [[nodiscard]] bool contains(const Vec& theta, double tol = 1e-9) const {
        return (theta - center).lpNorm<Eigen::Infinity>() <= 0.5 * eta + tol;
    }

    [[nodiscard]] Vec lower() const { return center.array() - 0.5 * eta; }
    [[nodiscard]] Vec upper() const { return center.array() + 0.5 * eta; }

    [[nodiscard]] HPolytope polytope() const { return HPolytope::box(lower(), upper()); }

    /// Euclidean projection (componentwise clamp).
    [[nodiscard]] Vec project(const Vec& theta) const {
        const Vec lo = lower(), hi = upper();
        return theta.cwiseMax(lo).cwiseMin(hi);
    }

    /// All 2^p corners.
    [[nodiscard]] std::vector<Vec> vertices() const {
        std::vector<Vec> out;
        for (const auto& e : unit_cube_vertices(p())) out.push_back(center + eta * e);
        return out;
    }

    /// Vertices of B_p (components +-0.5).
    static std::vector<Vec> unit_cube_vertices(Eigen::Index p) {
        std::vector<Vec> out;
        const long count = 1L << p;
        for (long mask = 0; mask < count; ++mask) {
            Vec e(p);
            for (Eigen::Index i = 0; i < p; ++i) e(i) = (mask >> i) & 1 ? 0.5 : -0.5;
            out.push_back(e);
        }
        return out;
    }

    /// Nesting: this subset of other.
    [[nodiscard]] bool subset_of(const ParamHypercube& other, double tol = 1e-9) const {
        return (lower().array() >= other.lower().array() - tol).all() && (upper().array() <= other.upper().array() + tol).all();
    }
};

/// Z = {(x,u) | F x + G u <= 1}
struct ConstraintSet {
    Mat F;
    Mat G;

    [[nodiscard]] Eigen::Index q() const { return F.rows(); }

    /// As a polytope in (x,u).
    [[nodiscard]] HPolytope polytope() const {
        Mat H(F.rows(), F.cols() + G.cols());
        H << F, G;
        return {H, Vec::Ones(F.rows())};
    }

    [[nodiscard]] double max_violation(const Vec& x, const Vec& u) const {
        return (F * x + G * u).maxCoeff() - 1.0;
    }

    /// Bounded in all coordinate directions.
    void check_compact() const {
        if (F.rows() != G.rows()) throw std::invalid_argument("ConstraintSet: F and G row counts differ");
        const HPolytope Z = polytope();
        for (Eigen::Index i = 0; i < Z.dim(); ++i) {
            for (double sgn : {1.0, -1.0}) {
                LinearProgram lp{sgn * Vec::Unit(Z.dim(), i), Z.H, Z.h, {}, {}, Sense::maximize};
                const auto r = solve_lp(lp);
                if (r.status != SolveStatus::optimal) throw GeometryError("ConstraintSet: Z not compact");
            }
        }
    }
};

struct DisturbanceSet {
    HPolytope poly;

    [[nodiscard]] Eigen::Index n() const { return poly.dim(); }

    [[nodiscard]] bool contains_origin() const { return poly.contains(Vec::Zero(n()), 1e-12); }
};

/// Mass-spring-damper with c = 0.2 + 0.1 theta_1, k = 1 + 0.5 theta_2,
/// Euler-discretized with step Ts; disturbance enters the velocity.
struct MassSpringDamper {
    double mass = 1.0;
    double Ts = 0.1;
    double c_nominal = 0.2, c_scale = 0.1;
    double k_nominal = 1.0, k_scale = 0.5;
    double d_max = 0.2;  // |d| bound on the force disturbance

    [[nodiscard]] UncertainModel model() const {
        Mat A0(2, 2), A1 = Mat::Zero(2, 2), A2 = Mat::Zero(2, 2);
        A0 << 1.0, Ts, -Ts * k_nominal / mass, 1.0 - Ts * c_nominal / mass;
        A1(1, 1) = -Ts * c_scale / mass;
        A2(1, 0) = -Ts * k_scale / mass;
        Mat B0(2, 1);
        B0 << 0.0, Ts / mass;
        return UncertainModel({A0, A1, A2}, {B0, Mat::Zero(2, 1), Mat::Zero(2, 1)});
    }

    /// State-space disturbance set {0} x [-Ts d_max / m, Ts d_max / m].
    [[nodiscard]] DisturbanceSet disturbance() const {
        const double b = Ts * d_max / mass;
        Vec lo(2), hi(2);
        lo << 0.0, -b;
        hi << 0.0, b;
        return {HPolytope::box(lo, hi)};
    }

    /// x1 in [-0.1, 1.1], |x2| <= 5, |u| <= 5.
    static ConstraintSet constraints() {
        Mat F = Mat::Zero(6, 2), G = Mat::Zero(6, 1);
        F(0, 0) = 1.0 / 1.1;
        F(1, 0) = -10.0;
        F(2, 1) = 0.2;
        F(3, 1) = -0.2;
        G(4, 0) = 0.2;
        G(5, 0) = -0.2;
        return {F, G};
    }

    static ParamHypercube prior() { return {Vec::Zero(2), 2.0}; }
    static Vec theta_true() { return (Vec(2) << 1.0, -1.0).finished(); }
};

}  // namespace ramp
