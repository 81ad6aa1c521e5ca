#pragma once

// BFGS minimizer with a Wolfe line search. The line search also accepts the approximate
// Wolfe conditions of Hager and Zhang, which stay usable once function differences fall
// below rounding error near the optimum.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <type_traits>
#include <utility>

namespace ambucare {

struct BfgsOptions {
    int max_iter = 1000;
    double grad_tol = 1e-6;       // max-norm of the gradient
    double rel_f_tol = 1e-10;     // relative change of f over one iteration
    int stall_iters = 5;          // consecutive stalled iterations before stopping
    double divergence_bound = 1e3;
    double c1 = 1e-4;
    double c2 = 0.9;
};

enum class BfgsStop { Gradient, Stalled, MaxIter, LineSearch, Diverged };

struct BfgsResult {
    Eigen::VectorXd x;
    double f = 0.0;
    Eigen::VectorXd grad;
    double grad_norm = 0.0;
    int iterations = 0;
    BfgsStop stop = BfgsStop::MaxIter;
    bool converged = false;  // grad_norm < grad_tol
};

namespace detail {

struct LinePoint {
    double alpha;
    double f;
    double d;  // directional derivative
};

template <class Fn>
struct LineSearch {
    Fn& fg;
    const Eigen::VectorXd& x;
    const Eigen::VectorXd& dir;
    double f0;
    double d0;
    const BfgsOptions& opt;
    Eigen::VectorXd x_tmp;
    Eigen::VectorXd g_tmp;
    Eigen::VectorXd x_best;
    Eigen::VectorXd g_best;
    double f_best = 0.0;

    LinePoint eval(double alpha) {
        x_tmp = x + alpha * dir;
        double f = fg(x_tmp, g_tmp);
        if (!std::isfinite(f)) return {alpha, std::numeric_limits<double>::infinity(), 0.0};
        return {alpha, f, g_tmp.dot(dir)};
    }

    bool sufficient(const LinePoint& p) const { return p.f <= f0 + opt.c1 * p.alpha * d0; }
    bool curvature(const LinePoint& p) const { return std::abs(p.d) <= -opt.c2 * d0; }
    bool approx_wolfe(const LinePoint& p) const {
        const double eps = 1e-12 * std::abs(f0);
        return std::isfinite(p.f) && p.f <= f0 + eps && opt.c2 * d0 <= p.d && p.d <= (2.0 * opt.c1 - 1.0) * d0;
    }
    bool accept(const LinePoint& p) {
        if ((sufficient(p) && curvature(p)) || approx_wolfe(p)) {
            x_best = x_tmp;
            g_best = g_tmp;
            f_best = p.f;
            return true;
        }
        return false;
    }

    std::pair<bool, double> zoom(LinePoint lo, LinePoint hi) {
        for (int it = 0; it < 60; ++it) {
            double a;
            // Safeguarded quadratic interpolation on (lo.f, lo.d, hi.f), else bisection.
            const double da = hi.alpha - lo.alpha;
            const double denom = 2.0 * (hi.f - lo.f - lo.d * da);
            a = (std::isfinite(hi.f) && denom > 0.0) ? lo.alpha - lo.d * da * da / denom : 0.5 * (lo.alpha + hi.alpha);
            const double lo_b = std::min(lo.alpha, hi.alpha);
            const double hi_b = std::max(lo.alpha, hi.alpha);
            const double margin = 0.1 * (hi_b - lo_b);
            if (!(a > lo_b + margin && a < hi_b - margin)) a = 0.5 * (lo.alpha + hi.alpha);
            LinePoint p = eval(a);
            if (accept(p)) return {true, a};
            if (!sufficient(p) || p.f >= lo.f) {
                hi = p;
            } else {
                if (p.d * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
                lo = p;
            }
            if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, std::abs(lo.alpha))) break;
        }
        return {false, 0.0};
    }

    std::pair<bool, double> run(double alpha) {
        LinePoint prev{0.0, f0, d0};
        for (int it = 0; it < 60; ++it) {
            LinePoint p = eval(alpha);
            if (accept(p)) return {true, alpha};
            if (std::isfinite(p.f) && sufficient(p) && x_tmp.template lpNorm<Eigen::Infinity>() > opt.divergence_bound) {
                // Still descending outside the bound; hand the point back so the caller reports divergence.
                x_best = x_tmp;
                g_best = g_tmp;
                f_best = p.f;
                return {true, alpha};
            }
            if (!sufficient(p) || (it > 0 && p.f >= prev.f)) return zoom(prev, p);
            if (p.d >= 0.0) return zoom(p, prev);
            prev = p;
            alpha *= 2.0;
        }
        return {false, 0.0};
    }
};

}  // namespace detail

/// Minimizes f. `fg(x, grad)` returns f(x) and writes the gradient into `grad`.
template <class Fn>
BfgsResult bfgs_minimize(Fn&& fg, Eigen::VectorXd x0, const BfgsOptions& opt = {}) {
    const auto n = x0.size();
    BfgsResult res;
    res.x = std::move(x0);
    res.grad.resize(n);
    res.f = fg(res.x, res.grad);
    Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
    bool scaled = false;
    int stalled = 0;

    for (res.iterations = 0; res.iterations < opt.max_iter; ++res.iterations) {
        res.grad_norm = res.grad.lpNorm<Eigen::Infinity>();
        if (res.grad_norm < opt.grad_tol) {
            res.stop = BfgsStop::Gradient;
            break;
        }
        Eigen::VectorXd dir = -hinv * res.grad;
        double d0 = dir.dot(res.grad);
        if (!(d0 < 0.0)) {
            hinv.setIdentity();
            scaled = false;
            dir = -res.grad;
            d0 = dir.dot(res.grad);
        }
        const double alpha0 = scaled ? 1.0 : std::min(1.0, 1.0 / std::max(res.grad_norm, 1e-300));
        detail::LineSearch<std::remove_reference_t<Fn>> ls{fg, res.x, dir, res.f, d0, opt, {}, {}, {}, {}, 0.0};
        ls.g_tmp.resize(n);
        auto [ok, alpha] = ls.run(alpha0);
        if (!ok) {
            if (scaled) {
                // Retry once along steepest descent from a fresh metric.
                hinv.setIdentity();
                scaled = false;
                continue;
            }
            res.stop = BfgsStop::LineSearch;
            break;
        }
        Eigen::VectorXd s = ls.x_best - res.x;
        Eigen::VectorXd y = ls.g_best - res.grad;
        const double f_old = res.f;
        res.x = std::move(ls.x_best);
        res.grad = std::move(ls.g_best);
        res.f = ls.f_best;

        if (res.x.lpNorm<Eigen::Infinity>() > opt.divergence_bound) {
            res.stop = BfgsStop::Diverged;
            ++res.iterations;
            break;
        }
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (!scaled) {
                hinv *= sy / y.squaredNorm();
                scaled = true;
            }
            const double rho = 1.0 / sy;
            Eigen::VectorXd hy = hinv * y;
            hinv += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
        }
        if (std::abs(res.f - f_old) <= opt.rel_f_tol * std::max(1.0, std::abs(res.f))) {
            if (++stalled >= opt.stall_iters) {
                res.stop = BfgsStop::Stalled;
                ++res.iterations;
                break;
            }
        } else {
            stalled = 0;
        }
    }
    res.grad_norm = res.grad.lpNorm<Eigen::Infinity>();
    res.converged = res.grad_norm < opt.grad_tol;
    if (res.converged) res.stop = BfgsStop::Gradient;
    return res;
}

}  // namespace ambucare
