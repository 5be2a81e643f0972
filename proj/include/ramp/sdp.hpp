#pragma once

// Small dense LMI solver (primal log-barrier, Newton steps).
//
//     minimize   c'z - w log det X(z)
//     subject to M_k(z) = M_k0 + sum_i z_i M_ki  >= 0  (PSD)
//
// X(z) is one of the blocks (index `logdet_block`) or absent.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ramp/solver.hpp"

namespace ramp {

/// Affine symmetric matrix function M0 + sum_i z_i Mi.
struct LmiBlock {
    std::string name;
    Mat M0;
    std::vector<Mat> Mi;

    [[nodiscard]] Mat eval(const Vec& z) const {
        Mat M = M0;
        for (std::size_t i = 0; i < Mi.size(); ++i) M += z(static_cast<Eigen::Index>(i)) * Mi[i];
        return M;
    }

    /// Builds a block from any affine map by probing unit vectors.
    static LmiBlock from_affine(std::string name, Eigen::Index nvar, const std::function<Mat(const Vec&)>& f) {
        LmiBlock b;
        b.name = std::move(name);
        b.M0 = f(Vec::Zero(nvar));
        for (Eigen::Index i = 0; i < nvar; ++i) {
            Mat Mi = f(Vec::Unit(nvar, i)) - b.M0;
            b.Mi.push_back(0.5 * (Mi + Mi.transpose()));
        }
        b.M0 = 0.5 * (b.M0 + b.M0.transpose());
        return b;
    }
};

struct SdpProblem {
    Eigen::Index nvar = 0;
    Vec c;                       // linear objective (may be empty -> 0)
    std::vector<LmiBlock> blocks;
    int logdet_block = -1;       // maximize log det of this block
    double logdet_weight = 1.0;
    double radius = 1e3;         // ||z|| <= radius keeps phase 1 bounded
};

struct SdpResult {
    SolveStatus status = SolveStatus::numerical_failure;
    Vec z;
    double objective = std::numeric_limits<double>::quiet_NaN();
    std::string violated_block;  // set when infeasible
    double phase1_margin = 0.0;  // min_k lambda_min(M_k) at the phase-1 optimum
    int newton_steps = 0;

    [[nodiscard]] bool ok() const { return status == SolveStatus::optimal; }
};

namespace detail {

inline bool chol_logdet(const Mat& M, double& logdet, Eigen::LLT<Mat>& llt) {
    llt.compute(M);
    if (llt.info() != Eigen::Success) return false;
    const auto& L = llt.matrixL();
    logdet = 0.0;
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        const double d = L(i, i);
        if (!(d > 0.0)) return false;
        logdet += 2.0 * std::log(d);
    }
    return true;
}

inline double min_eig(const Mat& M) {
    return Eigen::SelfAdjointEigenSolver<Mat>(M, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

// Barrier function phi(z) = t c'z - t w logdet(B_x) - sum logdet(B_k) - log(R^2 - ||z||^2)
struct Barrier {
    const SdpProblem& pb;
    double t;
    // extra shift sigma applied to every block (phase 1 uses the last variable)
    bool phase1 = false;

    [[nodiscard]] Eigen::Index nz() const { return pb.nvar + (phase1 ? 1 : 0); }

    Mat block_value(std::size_t k, const Vec& z) const {
        Mat M = pb.blocks[k].eval(z.head(pb.nvar));
        if (phase1) M.diagonal().array() += z(pb.nvar);
        return M;
    }

    bool value(const Vec& z, double& phi) const {
        phi = 0.0;
        Eigen::LLT<Mat> llt;
        for (std::size_t k = 0; k < pb.blocks.size(); ++k) {
            double ld;
            if (!chol_logdet(block_value(k, z), ld, llt)) return false;
            phi -= ld;
            if (!phase1 && static_cast<int>(k) == pb.logdet_block) phi -= t * pb.logdet_weight * ld;
        }
        const double r2 = pb.radius * pb.radius - z.head(pb.nvar).squaredNorm();
        if (!(r2 > 0.0)) return false;
        phi -= std::log(r2);
        if (phase1) {
            const double s = z(pb.nvar) + 1.0;  // sigma >= -1
            if (!(s > 0.0)) return false;
            phi -= std::log(s);
            phi += t * z(pb.nvar);
        } else if (pb.c.size() == pb.nvar) {
            phi += t * pb.c.dot(z);
        }
        return true;
    }

    void derivatives(const Vec& z, Vec& g, Mat& H) const {
        const Eigen::Index n = nz();
        g = Vec::Zero(n);
        H = Mat::Zero(n, n);
        for (std::size_t k = 0; k < pb.blocks.size(); ++k) {
            const Mat M = block_value(k, z);
            const Mat Minv = M.llt().solve(Mat::Identity(M.rows(), M.cols()));
            double wk = 1.0;
            if (!phase1 && static_cast<int>(k) == pb.logdet_block) wk += t * pb.logdet_weight;
            std::vector<Mat> S(static_cast<std::size_t>(n));
            for (Eigen::Index i = 0; i < n; ++i) {
                const Mat& Mi = (phase1 && i == pb.nvar) ? Mat(Mat::Identity(M.rows(), M.cols()))
                                                         : pb.blocks[k].Mi[static_cast<std::size_t>(i)];
                S[static_cast<std::size_t>(i)] = Minv * Mi;
                g(i) -= wk * S[static_cast<std::size_t>(i)].trace();
            }
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = i; j < n; ++j) {
                    const double v = wk * (S[static_cast<std::size_t>(i)].cwiseProduct(S[static_cast<std::size_t>(j)].transpose())).sum();
                    H(i, j) += v;
                    if (i != j) H(j, i) += v;
                }
        }
        const Vec zz = z.head(pb.nvar);
        const double r2 = pb.radius * pb.radius - zz.squaredNorm();
        g.head(pb.nvar) += 2.0 * zz / r2;
        H.topLeftCorner(pb.nvar, pb.nvar) += 2.0 * Mat::Identity(pb.nvar, pb.nvar) / r2 + 4.0 * zz * zz.transpose() / (r2 * r2);
        if (phase1) {
            const double s = z(pb.nvar) + 1.0;
            g(pb.nvar) += t - 1.0 / s;
            H(pb.nvar, pb.nvar) += 1.0 / (s * s);
        } else if (pb.c.size() == pb.nvar) {
            g += t * pb.c;
        }
    }
};

// Damped Newton minimization of the barrier; returns false on breakdown.
inline bool newton_center(const Barrier& bar, Vec& z, int& steps, double tol = 1e-9, int max_steps = 100,
                          const std::function<bool(const Vec&)>& stop = {}) {
    for (int it = 0; it < max_steps; ++it) {
        Vec g;
        Mat H;
        bar.derivatives(z, g, H);
        Eigen::LDLT<Mat> ldlt(H);
        if (ldlt.info() != Eigen::Success) return false;
        const Vec dz = -ldlt.solve(g);
        const double dec2 = -g.dot(dz);
        ++steps;
        if (dec2 < 0.0) return false;
        if (0.5 * dec2 <= tol) return true;
        double phi0;
        if (!bar.value(z, phi0)) return false;
        double a = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls) {
            const Vec zt = z + a * dz;
            double phi;
            if (bar.value(zt, phi) && phi <= phi0 - 0.25 * a * dec2) {
                z = zt;
                moved = true;
                break;
            }
            a *= 0.5;
        }
        if (!moved) return dec2 < 1e-6;
        if (stop && stop(z)) return true;
    }
    return true;
}

}  // namespace detail

inline SdpResult solve_sdp(const SdpProblem& pb, const Vec& z_init = Vec()) {
    SdpResult res;
    const Eigen::Index n = pb.nvar;
    Vec z = z_init.size() == n ? z_init : Vec::Zero(n);
    auto strictly_feasible = [&](const Vec& zz) {
        Eigen::LLT<Mat> llt;
        for (const auto& b : pb.blocks) {
            llt.compute(b.eval(zz));
            if (llt.info() != Eigen::Success) return false;
            if (detail::min_eig(b.eval(zz)) <= 0.0) return false;
        }
        return zz.norm() < pb.radius;
    };

    if (!strictly_feasible(z)) {
        // Phase 1: min sigma s.t. M_k(z) + sigma I >= 0.
        double worst = std::numeric_limits<double>::infinity();
        for (const auto& b : pb.blocks) worst = std::min(worst, detail::min_eig(b.eval(z)));
        Vec y(n + 1);
        y << z, std::max(0.0, -worst) + 1.0;
        detail::Barrier bar{pb, 1.0, true};
        const double target = -1e-7;
        bool found = false;
        for (int outer = 0; outer < 40; ++outer) {
            auto stop = [&](const Vec& yy) { return yy(n) < target; };
            if (!detail::newton_center(bar, y, res.newton_steps, 1e-10, 200, stop)) break;
            if (y(n) < target) {
                found = true;
                break;
            }
            const double members = [&] {
                double s = 2.0;
                for (const auto& b : pb.blocks) s += static_cast<double>(b.M0.rows());
                return s;
            }();
            if (members / bar.t < 1e-10) break;
            bar.t *= 10.0;
        }
        if (!found) {
            res.status = SolveStatus::infeasible;
            res.phase1_margin = -y(n);
            // name the block with the smallest eigenvalue at the phase-1 point
            double lo = std::numeric_limits<double>::infinity();
            for (const auto& b : pb.blocks) {
                const double e = detail::min_eig(b.eval(y.head(n)));
                if (e < lo) {
                    lo = e;
                    res.violated_block = b.name;
                }
            }
            return res;
        }
        z = y.head(n);
        if (!strictly_feasible(z)) {
            res.status = SolveStatus::numerical_failure;
            return res;
        }
    }

    double members = 1.0;
    for (const auto& b : pb.blocks) members += static_cast<double>(b.M0.rows());
    detail::Barrier bar{pb, 1.0, false};
    for (int outer = 0; outer < 20; ++outer) {
        if (!detail::newton_center(bar, z, res.newton_steps)) {
            res.status = SolveStatus::numerical_failure;
            return res;
        }
        if (members / bar.t < 1e-9) break;
        bar.t *= 10.0;
    }
    res.status = SolveStatus::optimal;
    res.z = z;
    double obj = pb.c.size() == n ? pb.c.dot(z) : 0.0;
    if (pb.logdet_block >= 0) {
        double ld = 0.0;
        Eigen::LLT<Mat> llt;
        detail::chol_logdet(pb.blocks[static_cast<std::size_t>(pb.logdet_block)].eval(z), ld, llt);
        obj -= pb.logdet_weight * ld;
    }
    res.objective = obj;
    return res;
}

}  // namespace ramp
