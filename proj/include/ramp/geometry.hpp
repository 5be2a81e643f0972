#pragma once

// Halfspace polytopes {x | H x <= h} and the LP-backed primitives on them.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ramp/solver.hpp"

namespace ramp {

/// Raised for empty/unbounded sets or unsupported requests.
class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct HPolytope {
    Mat H;
    Vec h;

    HPolytope() = default;
    HPolytope(Mat H_, Vec h_) : H(std::move(H_)), h(std::move(h_)) {
        if (H.rows() != h.size()) throw std::invalid_argument("HPolytope: H and h row count differ");
    }

    [[nodiscard]] Eigen::Index dim() const { return H.cols(); }
    [[nodiscard]] Eigen::Index rows() const { return H.rows(); }

    [[nodiscard]] bool contains(const Vec& x, double tol = 1e-9) const {
        if (rows() == 0) return true;
        return ((H * x - h).array() <= tol).all();
    }

    /// Largest row residual H_i x - h_i.
    [[nodiscard]] double max_violation(const Vec& x) const {
        if (rows() == 0) return -std::numeric_limits<double>::infinity();
        return (H * x - h).maxCoeff();
    }

    /// Rows scaled so that h = 1. Requires h > 0 (origin in the interior).
    [[nodiscard]] HPolytope normalized_unit() const {
        HPolytope out = *this;
        for (Eigen::Index i = 0; i < rows(); ++i) {
            if (!(h(i) > 0.0)) throw GeometryError("normalized_unit: origin not in the interior (row " + std::to_string(i) + ")");
            out.H.row(i) /= h(i);
            out.h(i) = 1.0;
        }
        return out;
    }

    /// {x | x_lo <= x <= x_hi}.
    static HPolytope box(const Vec& lo, const Vec& hi) {
        const Eigen::Index n = lo.size();
        Mat H(2 * n, n);
        H << Mat::Identity(n, n), -Mat::Identity(n, n);
        Vec h(2 * n);
        h << hi, -lo;
        return {H, h};
    }

    /// Stacks the rows of both polytopes.
    [[nodiscard]] HPolytope intersect(const HPolytope& other) const {
        if (rows() > 0 && other.rows() > 0 && dim() != other.dim()) throw std::invalid_argument("intersect: dimension mismatch");
        const Eigen::Index n = rows() > 0 ? dim() : other.dim();
        Mat H2(rows() + other.rows(), n);
        Vec h2(rows() + other.rows());
        if (rows() > 0) {
            H2.topRows(rows()) = H;
            h2.head(rows()) = h;
        }
        if (other.rows() > 0) {
            H2.bottomRows(other.rows()) = other.H;
            h2.tail(other.rows()) = other.h;
        }
        return {H2, h2};
    }
};

struct IntervalBox {
    Vec lower;
    Vec upper;

    [[nodiscard]] Vec center() const { return 0.5 * (lower + upper); }
    [[nodiscard]] Vec widths() const { return upper - lower; }
    [[nodiscard]] HPolytope to_polytope() const { return HPolytope::box(lower, upper); }
};

/// max_{x in poly} dir'x
inline double support(const HPolytope& poly, const Vec& dir) {
    LinearProgram lp;
    lp.objective = dir;
    lp.A = poly.H;
    lp.b = poly.h;
    lp.sense = Sense::maximize;
    const auto r = solve_lp(lp);
    switch (r.status) {
        case SolveStatus::optimal: return r.objective;
        case SolveStatus::infeasible: throw GeometryError("support: polytope is empty");
        case SolveStatus::unbounded: throw GeometryError("support: polytope unbounded in requested direction");
        default: throw GeometryError("support: LP numerical failure");
    }
}

/// Maximizer of dir'x over poly.
inline Vec support_point(const HPolytope& poly, const Vec& dir) {
    LinearProgram lp{dir, poly.H, poly.h, {}, {}, Sense::maximize};
    const auto r = solve_lp(lp);
    if (!r.ok()) throw GeometryError(std::string("support_point: ") + to_string(r.status));
    return r.x();
}

inline bool is_empty(const HPolytope& poly) {
    LinearProgram lp;
    lp.objective = Vec::Zero(poly.dim());
    lp.A = poly.H;
    lp.b = poly.h;
    const auto r = solve_lp(lp);
    if (r.status == SolveStatus::numerical_failure) throw GeometryError("is_empty: LP numerical failure");
    return r.status == SolveStatus::infeasible;
}

/// Tight componentwise bounds from 2n support LPs.
inline IntervalBox bounding_box(const HPolytope& poly) {
    const Eigen::Index n = poly.dim();
    IntervalBox box{Vec(n), Vec(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec e = Vec::Unit(n, i);
        LinearProgram lp{e, poly.H, poly.h, {}, {}, Sense::maximize};
        auto r = solve_lp(lp);
        if (r.status == SolveStatus::infeasible)
            throw GeometryError("bounding_box: polytope is empty (phase-1 margin " + std::to_string(r.infeasibility_margin) + ")");
        if (!r.ok()) throw GeometryError(std::string("bounding_box: ") + to_string(r.status));
        box.upper(i) = r.objective;
        lp.sense = Sense::minimize;
        r = solve_lp(lp);
        if (!r.ok()) throw GeometryError(std::string("bounding_box: ") + to_string(r.status));
        box.lower(i) = r.objective;
    }
    return box;
}

/// Drops rows implied by the remaining ones. Rows are tested in order, so
/// duplicates keep their first occurrence.
inline HPolytope remove_redundant(const HPolytope& poly, double tol = 1e-9) {
    if (is_empty(poly)) throw GeometryError("remove_redundant: polytope is empty");
    const Eigen::Index r = poly.rows(), n = poly.dim();
    std::vector<bool> keep(static_cast<std::size_t>(r), true);
    for (Eigen::Index i = 0; i < r; ++i) {
        const double nr = poly.H.row(i).norm();
        if (nr < 1e-14) {
            keep[static_cast<std::size_t>(i)] = false;  // 0 <= h_i, already consistent
            continue;
        }
        std::vector<Eigen::Index> others;
        for (Eigen::Index j = 0; j < r; ++j)
            if (j != i && keep[static_cast<std::size_t>(j)]) others.push_back(j);
        Mat A(static_cast<Eigen::Index>(others.size()) + 1, n);
        Vec b(A.rows());
        for (std::size_t k = 0; k < others.size(); ++k) {
            A.row(static_cast<Eigen::Index>(k)) = poly.H.row(others[k]);
            b(static_cast<Eigen::Index>(k)) = poly.h(others[k]);
        }
        // relaxed copy of row i keeps the LP bounded in its own direction
        A.row(A.rows() - 1) = poly.H.row(i);
        b(A.rows() - 1) = poly.h(i) + 1.0 * nr;
        LinearProgram lp{poly.H.row(i).transpose(), A, b, {}, {}, Sense::maximize};
        const auto res = solve_lp(lp);
        if (!res.ok()) throw GeometryError(std::string("remove_redundant: ") + to_string(res.status));
        if (res.objective <= poly.h(i) + tol * std::max(1.0, nr)) keep[static_cast<std::size_t>(i)] = false;
    }
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < r; ++i)
        if (keep[static_cast<std::size_t>(i)]) idx.push_back(i);
    HPolytope out{Mat(static_cast<Eigen::Index>(idx.size()), n), Vec(static_cast<Eigen::Index>(idx.size()))};
    for (std::size_t k = 0; k < idx.size(); ++k) {
        out.H.row(static_cast<Eigen::Index>(k)) = poly.H.row(idx[k]);
        out.h(static_cast<Eigen::Index>(k)) = poly.h(idx[k]);
    }
    return out;
}

struct ContractiveSetOptions {
    int max_iter = 200;
    double add_tol = 1e-9;
};

/// Largest S in base with H_i A x <= rho h_i on S for every given A.
/// Backward recursion: preimage rows of the last additions are appended when
/// not implied, then the set is pruned; stops when a sweep adds nothing.
inline HPolytope max_contractive_set(const std::vector<Mat>& Acl_vertices, const HPolytope& base, double rho,
                                     const ContractiveSetOptions& opt = {}) {
    if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("max_contractive_set: rho must lie in (0, 1]");
    if (Acl_vertices.empty()) throw std::invalid_argument("max_contractive_set: no dynamics matrices");
    HPolytope S = remove_redundant(base);
    Mat frontier = S.H;
    Vec frontier_h = S.h;
    std::string trace;
    for (int it = 0; it < opt.max_iter; ++it) {
        std::vector<Vec> add_rows;
        std::vector<double> add_h;
        HPolytope grown = S;
        for (Eigen::Index i = 0; i < frontier.rows(); ++i) {
            for (const auto& A : Acl_vertices) {
                const Vec row = (frontier.row(i) * A).transpose();
                const double rhs = rho * frontier_h(i);
                const double nr = row.norm();
                if (nr < 1e-14) {
                    if (rhs < 0) throw GeometryError("max_contractive_set: empty result");
                    continue;
                }
                const double sup = support(grown, row);
                if (sup > rhs + opt.add_tol * std::max(1.0, nr)) {
                    add_rows.push_back(row);
                    add_h.push_back(rhs);
                    Mat H2(grown.rows() + 1, grown.dim());
                    H2 << grown.H, row.transpose();
                    Vec h2(grown.rows() + 1);
                    h2 << grown.h, rhs;
                    grown = HPolytope(H2, h2);
                }
            }
        }
        trace += "iter " + std::to_string(it) + ": +" + std::to_string(add_rows.size()) + " rows, total " +
                 std::to_string(grown.rows()) + "\n";
        if (add_rows.empty()) {
            S = remove_redundant(S);
            // normalize to h = 1 when the origin is interior
            bool interior = (S.h.array() > 0.0).all();
            return interior ? S.normalized_unit() : S;
        }
        S = remove_redundant(grown);
        // frontier = newly added rows that survived pruning
        std::vector<Eigen::Index> fresh;
        for (Eigen::Index i = 0; i < S.rows(); ++i) {
            for (std::size_t k = 0; k < add_rows.size(); ++k) {
                if ((S.H.row(i).transpose() - add_rows[k]).norm() < 1e-12 && std::abs(S.h(i) - add_h[k]) < 1e-12) {
                    fresh.push_back(i);
                    break;
                }
            }
        }
        frontier.resize(static_cast<Eigen::Index>(fresh.size()), S.dim());
        frontier_h.resize(static_cast<Eigen::Index>(fresh.size()));
        for (std::size_t k = 0; k < fresh.size(); ++k) {
            frontier.row(static_cast<Eigen::Index>(k)) = S.H.row(fresh[k]);
            frontier_h(static_cast<Eigen::Index>(k)) = S.h(fresh[k]);
        }
        if (fresh.empty()) {
            S = remove_redundant(S);
            return (S.h.array() > 0.0).all() ? S.normalized_unit() : S;
        }
    }
    throw GeometryError("max_contractive_set: no convergence after " + std::to_string(opt.max_iter) + " iterations\n" + trace);
}

/// Counterclockwise vertex list of a bounded 2-D polytope.
inline std::vector<Vec> vertices_2d(const HPolytope& poly, double tol = 1e-9) {
    if (poly.dim() != 2) throw GeometryError("vertices_2d: unsupported dimension " + std::to_string(poly.dim()));
    if (is_empty(poly)) throw GeometryError("vertices_2d: polytope is empty");
    std::vector<Vec> pts;
    const Eigen::Index r = poly.rows();
    for (Eigen::Index i = 0; i < r; ++i) {
        for (Eigen::Index j = i + 1; j < r; ++j) {
            Eigen::Matrix2d M;
            M << poly.H.row(i), poly.H.row(j);
            const double det = M.determinant();
            if (std::abs(det) < 1e-12 * M.norm() * M.norm()) continue;
            const Eigen::Vector2d x = M.inverse() * Eigen::Vector2d(poly.h(i), poly.h(j));
            const Vec xv = x;
            const double scale = 1.0 + xv.lpNorm<Eigen::Infinity>();
            if (poly.max_violation(xv) > tol * scale) continue;
            bool dup = false;
            for (const auto& p : pts)
                if ((p - xv).lpNorm<Eigen::Infinity>() < 1e-9 * scale) {
                    dup = true;
                    break;
                }
            if (!dup) pts.push_back(xv);
        }
    }
    if (pts.empty()) throw GeometryError("vertices_2d: no vertices (unbounded polytope?)");
    Vec c = Vec::Zero(2);
    for (const auto& p : pts) c += p;
    c /= static_cast<double>(pts.size());
    std::sort(pts.begin(), pts.end(), [&](const Vec& a, const Vec& b) {
        return std::atan2(a(1) - c(1), a(0) - c(0)) < std::atan2(b(1) - c(1), b(0) - c(0));
    });
    return pts;
}

/// Center and radius of the largest inscribed Euclidean ball.
inline std::pair<Vec, double> chebyshev_center(const HPolytope& poly) {
    const Eigen::Index n = poly.dim(), r = poly.rows();
    LinearProgram lp;
    lp.objective = Vec::Zero(n + 1);
    lp.objective(n) = 1.0;
    lp.sense = Sense::maximize;
    lp.A = Mat::Zero(r + 1, n + 1);
    lp.b = Vec::Zero(r + 1);
    for (Eigen::Index i = 0; i < r; ++i) {
        lp.A.row(i).head(n) = poly.H.row(i);
        lp.A(i, n) = poly.H.row(i).norm();
        lp.b(i) = poly.h(i);
    }
    lp.A(r, n) = -1.0;  // radius >= 0
    const auto res = solve_lp(lp);
    if (res.status == SolveStatus::infeasible) throw GeometryError("chebyshev_center: polytope is empty");
    if (!res.ok()) throw GeometryError(std::string("chebyshev_center: ") + to_string(res.status));
    return {res.x().head(n), res.x()(n)};
}

}  // namespace ramp
