#pragma once

// Dense LP/QP backend.
//
// Both problem classes are handled by one primal active-set method working
// directly in inequality form. LPs are passed through with a zero Hessian;
// zero-curvature subspaces of a PSD Hessian are traversed along descent rays,
// which makes the method behave like a simplex method on LPs.
//
//     minimize   0.5 x'Hx + c'x
//     subject to A x <= b,  E x = f

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ramp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class SolveStatus { optimal, infeasible, unbounded, numerical_failure };
enum class Sense { minimize, maximize };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::unbounded: return "unbounded";
        case SolveStatus::numerical_failure: return "numerical-failure";
    }
    return "unknown";
}

struct LinearProgram {
    Vec objective;
    Mat A;  // A x <= b
    Vec b;
    Mat E;  // E x == f
    Vec f;
    Sense sense = Sense::minimize;

    /// Number of decision variables.
    [[nodiscard]] Eigen::Index size() const { return objective.size(); }
};

struct QuadraticProgram {
    Mat hessian;
    Vec linear;
    Mat A;
    Vec b;
    Mat E;
    Vec f;

    [[nodiscard]] Eigen::Index size() const { return linear.size(); }
};

struct SolveResult {
    SolveStatus status = SolveStatus::numerical_failure;
    std::optional<Vec> primal;  // present iff status == optimal
    double objective = std::numeric_limits<double>::quiet_NaN();
    Vec ineq_multipliers;       // lambda >= 0 for A x <= b (optimal only)
    Vec eq_multipliers;
    int iterations = 0;
    double max_violation = 0.0;       // max(A x - b) at the returned point
    double stationarity = 0.0;        // ||H x + c + A'l + E'y||_inf
    double infeasibility_margin = 0.0;  // phase-1 optimum when infeasible

    [[nodiscard]] bool ok() const { return status == SolveStatus::optimal; }
    [[nodiscard]] const Vec& x() const {
        if (!primal) throw std::logic_error(std::string("no primal solution, status ") + to_string(status));
        return *primal;
    }
};

struct SolverOptions {
    double feasibility_tol = 1e-9;   // on unit-normalized rows
    double multiplier_tol = 1e-10;
    int max_iterations = 0;          // 0 => 20 (n + m) + 200
    std::optional<Vec> initial_point;  // used when feasible (skips phase 1)
};

namespace detail {

// Primal active-set iteration on unit-normalized rows.
class ActiveSetCore {
public:
    ActiveSetCore(const Mat& H, const Vec& c, const Mat& A, const Vec& b, const Mat& E, const Vec& f,
                  const SolverOptions& opt)
        : H_(H), c_(c), A_(A), b_(b), E_(E), f_(f), opt_(opt) {
        n_ = c_.size();
        m_ = A_.rows();
        me_ = E_.rows();
        max_iter_ = opt_.max_iterations > 0 ? opt_.max_iterations : static_cast<int>(20 * (n_ + m_ + me_) + 200);
    }

    enum class Outcome { optimal, unbounded, iteration_limit, singular };

    // x must be feasible. Working set is seeded with equalities and active rows.
    Outcome run(Vec& x, bool zero_hessian) {
        zero_hessian_ = zero_hessian;
        seed_working_set(x);
        bool last_degenerate = false;
        for (iterations_ = 0; iterations_ < max_iter_; ++iterations_) {
            const Vec g = gradient(x);
            const Eigen::Index w = static_cast<Eigen::Index>(working_.size()) + me_;
            Mat AW(w, n_);
            if (me_ > 0) AW.topRows(me_) = E_;
            for (std::size_t k = 0; k < working_.size(); ++k) AW.row(me_ + static_cast<Eigen::Index>(k)) = A_.row(working_[k]);

            Eigen::HouseholderQR<Mat> qr;
            Mat Q;
            if (w > 0) {
                qr.compute(AW.transpose());
                Q = qr.householderQ() * Mat::Identity(n_, n_);
            } else {
                Q = Mat::Identity(n_, n_);
            }
            const Eigen::Index nz = n_ - w;
            if (nz < 0) return Outcome::singular;

            Vec p = Vec::Zero(n_);
            double max_step = 1.0;
            if (nz > 0) {
                const Mat Z = Q.rightCols(nz);
                const Vec gz = Z.transpose() * g;
                if (zero_hessian_) {
                    p = -Z * gz;
                    max_step = std::numeric_limits<double>::infinity();
                    if (gz.norm() <= 1e-11 * (1.0 + g.norm())) p.setZero();
                } else {
                    const Mat Hz = Z.transpose() * H_ * Z;
                    Eigen::SelfAdjointEigenSolver<Mat> eig(Hz);
                    const Vec& lam = eig.eigenvalues();
                    const Mat& U = eig.eigenvectors();
                    const double lam_tol = 1e-10 * std::max(1.0, lam.cwiseAbs().maxCoeff());
                    Vec zero_comp = Vec::Zero(nz);
                    Vec newton = Vec::Zero(nz);
                    bool has_zero_curv = false;
                    for (Eigen::Index k = 0; k < nz; ++k) {
                        const double proj = U.col(k).dot(gz);
                        if (lam(k) <= lam_tol) {
                            zero_comp += proj * U.col(k);
                            has_zero_curv = true;
                        } else {
                            newton += (proj / lam(k)) * U.col(k);
                        }
                    }
                    if (has_zero_curv && zero_comp.norm() > 1e-11 * (1.0 + g.norm())) {
                        p = -Z * zero_comp;
                        max_step = std::numeric_limits<double>::infinity();
                    } else {
                        p = -Z * newton;
                    }
                }
            }

            const double pscale = 1.0 + x.lpNorm<Eigen::Infinity>();
            if (p.lpNorm<Eigen::Infinity>() <= 1e-13 * pscale) {
                // Stationary on the working set: check multipliers.
                if (w == 0) return Outcome::optimal;
                const Vec lam = solve_multipliers(qr, w, g);
                Eigen::Index drop = -1;
                double most_negative = -opt_.multiplier_tol;
                for (std::size_t k = 0; k < working_.size(); ++k) {
                    const double l = lam(me_ + static_cast<Eigen::Index>(k));
                    if (last_degenerate) {
                        if (l < -opt_.multiplier_tol &&
                            (drop < 0 || working_[k] < working_[static_cast<std::size_t>(drop)]))
                            drop = static_cast<Eigen::Index>(k);
                    } else if (l < most_negative) {
                        most_negative = l;
                        drop = static_cast<Eigen::Index>(k);
                    }
                }
                if (drop < 0) {
                    multipliers_ = lam;
                    return Outcome::optimal;
                }
                working_.erase(working_.begin() + drop);
                continue;
            }

            // Ratio test.
            double alpha = max_step;
            Eigen::Index block = -1;
            const Vec Ap = A_ * p;
            const double pn = p.norm();
            for (Eigen::Index i = 0; i < m_; ++i) {
                if (in_working_[static_cast<std::size_t>(i)]) continue;
                if (Ap(i) <= 1e-12 * pn) continue;
                const double slack = std::max(0.0, b_(i) - A_.row(i).dot(x));
                const double a = slack / Ap(i);
                if (a < alpha - 1e-15 || (block >= 0 && a <= alpha + 1e-15 && i < block && a == alpha)) {
                    alpha = a;
                    block = i;
                }
            }
            if (!std::isfinite(alpha)) return Outcome::unbounded;
            x += alpha * p;
            last_degenerate = alpha * pn <= 1e-14 * pscale;
            if (block >= 0) {
                working_.push_back(block);
                in_working_[static_cast<std::size_t>(block)] = true;
            }
            rebuild_flags();
        }
        return Outcome::iteration_limit;
    }

    [[nodiscard]] int iterations() const { return iterations_; }

    // Multipliers (eq first, then inequality rows of A in full indexing).
    void multipliers(Vec& ineq, Vec& eq) const {
        ineq = Vec::Zero(m_);
        eq = Vec::Zero(me_);
        if (multipliers_.size() == 0) return;
        eq = multipliers_.head(me_);
        for (std::size_t k = 0; k < working_.size(); ++k) ineq(working_[k]) = multipliers_(me_ + static_cast<Eigen::Index>(k));
    }

private:
    Vec gradient(const Vec& x) const {
        if (zero_hessian_) return c_;
        return H_ * x + c_;
    }

    Vec solve_multipliers(const Eigen::HouseholderQR<Mat>& qr, Eigen::Index w, const Vec& g) const {
        // A_W' lam = -g, A_W' = Q R
        const Vec rhs = -(qr.householderQ().transpose() * g);
        const Mat R = qr.matrixQR().topLeftCorner(w, w).template triangularView<Eigen::Upper>();
        return R.template triangularView<Eigen::Upper>().solve(rhs.head(w));
    }

    void seed_working_set(const Vec& x) {
        working_.clear();
        in_working_.assign(static_cast<std::size_t>(m_), false);
        Mat basis(n_, 0);
        if (me_ > 0) basis = E_.transpose();
        auto rank_of = [](const Mat& M) {
            if (M.cols() == 0) return Eigen::Index{0};
            Eigen::ColPivHouseholderQR<Mat> q(M);
            q.setThreshold(1e-10);
            return q.rank();
        };
        Eigen::Index rank = rank_of(basis);
        for (Eigen::Index i = 0; i < m_ && rank < n_; ++i) {
            if (std::abs(A_.row(i).dot(x) - b_(i)) > 1e-10 * (1.0 + std::abs(b_(i)))) continue;
            Mat trial(n_, basis.cols() + 1);
            trial << basis, A_.row(i).transpose();
            const Eigen::Index r = rank_of(trial);
            if (r > rank) {
                basis = trial;
                rank = r;
                working_.push_back(i);
                in_working_[static_cast<std::size_t>(i)] = true;
            }
        }
    }

    void rebuild_flags() {
        std::fill(in_working_.begin(), in_working_.end(), false);
        for (auto i : working_) in_working_[static_cast<std::size_t>(i)] = true;
    }

    const Mat& H_;
    const Vec& c_;
    const Mat& A_;
    const Vec& b_;
    const Mat& E_;
    const Vec& f_;
    SolverOptions opt_;
    Eigen::Index n_ = 0, m_ = 0, me_ = 0;
    int max_iter_ = 0;
    int iterations_ = 0;
    bool zero_hessian_ = false;
    std::vector<Eigen::Index> working_;
    std::vector<bool> in_working_;
    Vec multipliers_;
};

struct Normalized {
    Mat A;
    Vec b;
    Vec scale;  // original row norms (0 for dropped rows)
    std::vector<Eigen::Index> kept;
    Mat E;
    Vec f;
    bool infeasible = false;
};

inline Normalized normalize(const Mat& A, const Vec& b, const Mat& E, const Vec& f, Eigen::Index n, double tol) {
    Normalized out;
    out.scale = Vec::Zero(A.rows());
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        const double nr = A.row(i).norm();
        if (!std::isfinite(b(i)) && b(i) > 0) continue;
        if (nr < 1e-14) {
            if (b(i) < -tol) out.infeasible = true;
            continue;
        }
        out.scale(i) = nr;
        keep.push_back(i);
    }
    out.A.resize(static_cast<Eigen::Index>(keep.size()), n);
    out.b.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        const auto i = keep[k];
        out.A.row(static_cast<Eigen::Index>(k)) = A.row(i) / out.scale(i);
        out.b(static_cast<Eigen::Index>(k)) = b(i) / out.scale(i);
    }
    out.kept = std::move(keep);

    // Equalities: normalize and drop dependent rows (checking consistency).
    std::vector<Eigen::Index> ekeep;
    Mat Eb(0, n);
    Vec fb(0);
    for (Eigen::Index i = 0; i < E.rows(); ++i) {
        const double nr = E.row(i).norm();
        if (nr < 1e-14) {
            if (std::abs(f(i)) > tol) out.infeasible = true;
            continue;
        }
        Mat trial(Eb.rows() + 1, n);
        trial << Eb, E.row(i) / nr;
        Vec ftrial(fb.size() + 1);
        ftrial << fb, f(i) / nr;
        Eigen::ColPivHouseholderQR<Mat> q(trial.transpose());
        q.setThreshold(1e-10);
        if (q.rank() == trial.rows()) {
            Eb = trial;
            fb = ftrial;
        } else if (Eb.rows() > 0) {
            // dependent: must be consistent with earlier rows
            const Vec coeff = Eb.transpose().colPivHouseholderQr().solve(trial.row(trial.rows() - 1).transpose());
            if (std::abs(coeff.dot(fb) - ftrial(ftrial.size() - 1)) > 1e-8) out.infeasible = true;
        }
    }
    out.E = Eb;
    out.f = fb;
    return out;
}

inline SolveResult solve_dense(const Mat& H, const Vec& c, const Mat& A, const Vec& b, const Mat& E, const Vec& f,
                               bool zero_hessian, const SolverOptions& opt) {
    const Eigen::Index n = c.size();
    SolveResult res;
    if (A.cols() != n && A.rows() > 0) throw std::invalid_argument("inequality matrix column count mismatch");
    if (A.rows() != b.size()) throw std::invalid_argument("inequality rhs size mismatch");
    if (E.rows() > 0 && E.cols() != n) throw std::invalid_argument("equality matrix column count mismatch");
    if (E.rows() != f.size()) throw std::invalid_argument("equality rhs size mismatch");
    if (!zero_hessian && (H.rows() != n || H.cols() != n)) throw std::invalid_argument("hessian size mismatch");
    for (Eigen::Index i = 0; i < b.size(); ++i)
        if (std::isnan(b(i))) throw std::invalid_argument("NaN in inequality rhs");

    const Mat Afull = A.rows() > 0 ? A : Mat(0, n);
    const Mat Efull = E.rows() > 0 ? E : Mat(0, n);
    Normalized nz = normalize(Afull, b, Efull, f, n, opt.feasibility_tol);
    if (nz.infeasible) {
        res.status = SolveStatus::infeasible;
        return res;
    }

    // Initial point.
    Vec x = Vec::Zero(n);
    bool have_start = false;
    if (opt.initial_point && opt.initial_point->size() == n) {
        const Vec& x0 = *opt.initial_point;
        const double viol = nz.A.rows() > 0 ? (nz.A * x0 - nz.b).maxCoeff() : -1.0;
        const double eviol = nz.E.rows() > 0 ? (nz.E * x0 - nz.f).cwiseAbs().maxCoeff() : 0.0;
        if (viol <= opt.feasibility_tol && eviol <= 1e-10) {
            x = x0;
            have_start = true;
        }
    }
    if (!have_start) {
        if (nz.E.rows() > 0) x = nz.E.completeOrthogonalDecomposition().solve(nz.f);
        const double viol = nz.A.rows() > 0 ? (nz.A * x - nz.b).maxCoeff() : -1.0;
        if (viol > opt.feasibility_tol) {
            // Phase 1: min t  s.t. A x - t <= b, -t <= 0, E x = f.
            const Eigen::Index m = nz.A.rows();
            Mat A1 = Mat::Zero(m + 1, n + 1);
            A1.topLeftCorner(m, n) = nz.A;
            A1.block(0, n, m, 1).setConstant(-1.0);
            A1(m, n) = -1.0;
            Vec b1(m + 1);
            b1 << nz.b, 0.0;
            Mat E1 = Mat::Zero(nz.E.rows(), n + 1);
            if (nz.E.rows() > 0) E1.leftCols(n) = nz.E;
            Vec c1 = Vec::Zero(n + 1);
            c1(n) = 1.0;
            // keep t on the same footing as the unit rows
            Vec y(n + 1);
            y << x, viol;
            Mat H1(0, 0);
            SolverOptions o1 = opt;
            o1.initial_point.reset();
            ActiveSetCore core(H1, c1, A1, b1, E1, nz.f, o1);
            const auto outcome = core.run(y, true);
            res.iterations += core.iterations();
            if (outcome != ActiveSetCore::Outcome::optimal) {
                res.status = SolveStatus::numerical_failure;
                return res;
            }
            if (y(n) > opt.feasibility_tol) {
                res.status = SolveStatus::infeasible;
                res.infeasibility_margin = y(n);
                return res;
            }
            x = y.head(n);
        }
    }

    Mat Hloc = zero_hessian ? Mat(0, 0) : H;
    ActiveSetCore core(Hloc, c, nz.A, nz.b, nz.E, nz.f, opt);
    const auto outcome = core.run(x, zero_hessian);
    res.iterations += core.iterations();
    if (outcome == ActiveSetCore::Outcome::unbounded) {
        res.status = SolveStatus::unbounded;
        return res;
    }
    if (outcome != ActiveSetCore::Outcome::optimal) {
        res.status = SolveStatus::numerical_failure;
        return res;
    }

    Vec lam_n, lam_e;
    core.multipliers(lam_n, lam_e);
    // Map multipliers back to the caller's (unnormalized) rows.
    res.ineq_multipliers = Vec::Zero(A.rows());
    for (std::size_t k = 0; k < nz.kept.size(); ++k) {
        const auto i = nz.kept[k];
        res.ineq_multipliers(i) = lam_n(static_cast<Eigen::Index>(k)) / nz.scale(i);
    }
    res.eq_multipliers = lam_e;  // normalized equality rows

    const Vec grad = zero_hessian ? c : Vec(H * x + c);
    Vec resid = grad;
    if (nz.A.rows() > 0) resid += nz.A.transpose() * lam_n;
    if (nz.E.rows() > 0) resid += nz.E.transpose() * lam_e;
    res.stationarity = resid.lpNorm<Eigen::Infinity>();
    res.max_violation = nz.A.rows() > 0 ? std::max(0.0, (nz.A * x - nz.b).maxCoeff()) : 0.0;
    if (res.max_violation > 1e-7 || res.stationarity > 1e-6 * (1.0 + grad.lpNorm<Eigen::Infinity>())) {
        res.status = SolveStatus::numerical_failure;
        return res;
    }
    res.status = SolveStatus::optimal;
    res.objective = zero_hessian ? c.dot(x) : 0.5 * x.dot(H * x) + c.dot(x);
    res.primal = x;
    return res;
}

}  // namespace detail

/// Solves an LP. Infeasible and unbounded problems are reported through the status.
inline SolveResult solve_lp(const LinearProgram& lp, const SolverOptions& opt = {}) {
    const Eigen::Index n = lp.objective.size();
    const Vec c = lp.sense == Sense::maximize ? Vec(-lp.objective) : lp.objective;
    const Mat A = lp.A.rows() > 0 ? lp.A : Mat(0, n);
    const Vec b = lp.b.size() > 0 ? lp.b : Vec(0);
    const Mat E = lp.E.rows() > 0 ? lp.E : Mat(0, n);
    const Vec f = lp.f.size() > 0 ? lp.f : Vec(0);
    SolveResult r = detail::solve_dense(Mat(0, 0), c, A, b, E, f, true, opt);
    if (r.ok() && lp.sense == Sense::maximize) r.objective = -r.objective;
    return r;
}

/// Solves a convex QP; the Hessian must be symmetric PSD (checked).
inline SolveResult solve_qp(const QuadraticProgram& qp, const SolverOptions& opt = {}) {
    const Eigen::Index n = qp.linear.size();
    if (qp.hessian.rows() != n || qp.hessian.cols() != n) throw std::invalid_argument("hessian size mismatch");
    const double asym = (qp.hessian - qp.hessian.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * std::max(1.0, qp.hessian.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("hessian not symmetric");
    if (n > 0) {
        const double min_eig = Eigen::SelfAdjointEigenSolver<Mat>(qp.hessian, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
        if (min_eig < -1e-8) throw std::invalid_argument("hessian not positive semidefinite");
    }
    const Mat A = qp.A.rows() > 0 ? qp.A : Mat(0, n);
    const Vec b = qp.b.size() > 0 ? qp.b : Vec(0);
    const Mat E = qp.E.rows() > 0 ? qp.E : Mat(0, n);
    const Vec f = qp.f.size() > 0 ? qp.f : Vec(0);
    const bool zero_h = qp.hessian.size() == 0 || qp.hessian.cwiseAbs().maxCoeff() == 0.0;
    return detail::solve_dense(qp.hessian, qp.linear, A, b, E, f, zero_h, opt);
}

}  // namespace ramp
