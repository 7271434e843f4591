#pragma once

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace sohb {

struct NewtonOptions {
    double tol = 1e-9;
    int max_iter = 50;
    double rel_step = 1e-7;
    int max_halvings = 8;
    // Per-coordinate magnitude floor for the finite-difference step and for
    // column scaling of the Jacobian. Empty means all ones.
    Eigen::VectorXd scales;
};

enum class NewtonStatus { Converged, MaxIterations, SingularJacobian, Stalled, EvaluationFailed };

inline const char* to_string(NewtonStatus s) {
    switch (s) {
        case NewtonStatus::Converged: return "converged";
        case NewtonStatus::MaxIterations: return "max iterations exceeded";
        case NewtonStatus::SingularJacobian: return "singular Jacobian";
        case NewtonStatus::Stalled: return "line search stalled";
        case NewtonStatus::EvaluationFailed: return "residual evaluation failed";
    }
    return "?";
}

struct NewtonReport {
    NewtonStatus status = NewtonStatus::MaxIterations;
    int iterations = 0;
    double residual_norm = INFINITY;
    Eigen::VectorXd x;
    std::string message;

    bool converged() const { return status == NewtonStatus::Converged; }
};

namespace detail {
inline double step_for(const Eigen::VectorXd& x, const Eigen::VectorXd& scales, Eigen::Index i, double rel) {
    const double floor = scales.size() ? scales(i) : 1.0;
    return rel * std::max(std::abs(x(i)), floor);
}
}  // namespace detail

// Forward-difference Jacobian. f must map Eigen::VectorXd -> Eigen::VectorXd.
template <class F>
Eigen::MatrixXd fd_jacobian(F&& f, const Eigen::VectorXd& x, const Eigen::VectorXd& r0, double rel_step,
                            const Eigen::VectorXd& scales = {}) {
    Eigen::MatrixXd J(r0.size(), x.size());
    Eigen::VectorXd xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = detail::step_for(x, scales, i, rel_step);
        xp(i) = x(i) + h;
        J.col(i) = (f(xp) - r0) / h;
        xp(i) = x(i);
    }
    return J;
}

template <class F>
Eigen::MatrixXd central_jacobian(F&& f, const Eigen::VectorXd& x, double rel_step, const Eigen::VectorXd& scales = {}) {
    Eigen::VectorXd r0 = f(x);
    Eigen::MatrixXd J(r0.size(), x.size());
    Eigen::VectorXd xp = x, xm = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = detail::step_for(x, scales, i, rel_step);
        xp(i) = x(i) + h;
        xm(i) = x(i) - h;
        J.col(i) = (f(xp) - f(xm)) / (2.0 * h);
        xp(i) = xm(i) = x(i);
    }
    return J;
}

// Damped Newton: full step first, halved while the infinity norm fails to drop.
// Exceptions from the residual are reported, never propagated.
template <class F>
NewtonReport newton_solve(F&& f, Eigen::VectorXd x0, const NewtonOptions& opt = {}) {
    NewtonReport rep;
    rep.x = std::move(x0);
    Eigen::VectorXd r;
    try {
        r = f(rep.x);
    } catch (const std::exception& e) {
        rep.status = NewtonStatus::EvaluationFailed;
        rep.message = e.what();
        return rep;
    }
    if (r.size() != rep.x.size()) {
        rep.status = NewtonStatus::EvaluationFailed;
        rep.message = "system is not square";
        return rep;
    }
    rep.residual_norm = r.lpNorm<Eigen::Infinity>();
    Eigen::VectorXd colscale = opt.scales.size() ? opt.scales : Eigen::VectorXd::Ones(rep.x.size());

    for (rep.iterations = 0; rep.iterations <= opt.max_iter; ++rep.iterations) {
        if (!std::isfinite(rep.residual_norm)) {
            rep.status = NewtonStatus::EvaluationFailed;
            rep.message = "non-finite residual";
            return rep;
        }
        if (rep.residual_norm <= opt.tol) {
            rep.status = NewtonStatus::Converged;
            return rep;
        }
        if (rep.iterations == opt.max_iter) break;

        Eigen::MatrixXd J;
        try {
            J = fd_jacobian(f, rep.x, r, opt.rel_step, opt.scales);
        } catch (const std::exception& e) {
            rep.status = NewtonStatus::EvaluationFailed;
            rep.message = std::string("Jacobian: ") + e.what();
            return rep;
        }
        const Eigen::MatrixXd Js = J * colscale.asDiagonal();
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(Js);
        if (!J.allFinite() || !(lu.rcond() > 1e-15)) {
            rep.status = NewtonStatus::SingularJacobian;
            rep.message = "rcond " + std::to_string(lu.rcond());
            return rep;
        }
        const Eigen::VectorXd dx = colscale.asDiagonal() * lu.solve(-r);

        double lambda = 1.0;
        bool accepted = false;
        for (int h = 0; h <= opt.max_halvings; ++h, lambda *= 0.5) {
            Eigen::VectorXd xt = rep.x + lambda * dx;
            Eigen::VectorXd rt;
            try {
                rt = f(xt);
            } catch (const std::exception&) {
                continue;
            }
            const double nt = rt.lpNorm<Eigen::Infinity>();
            if (std::isfinite(nt) && nt < rep.residual_norm) {
                rep.x = std::move(xt);
                r = std::move(rt);
                rep.residual_norm = nt;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            rep.status = NewtonStatus::Stalled;
            return rep;
        }
    }
    rep.status = NewtonStatus::MaxIterations;
    return rep;
}

}  // namespace sohb
