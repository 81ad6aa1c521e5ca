#pragma once

// Probit maximum likelihood by Newton's method with cluster-robust standard errors and average
// marginal effects (delta-method standard errors).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ambucare/logit.hpp"
#include "ambucare/ols.hpp"

namespace ambucare {

inline double norm_pdf(double z) { return std::exp(-0.5 * z * z) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2); }

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z * (0.5 * std::numbers::sqrt2)); }

namespace detail {
// 1 - 1/z^2 + 3/z^4 - 15/z^6 + 105/z^8: Mills-ratio series for the lower tail.
inline double mills_series(double z) {
    const double r = 1.0 / (z * z);
    return 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r)));
}
}  // namespace detail

inline constexpr double kProbitTail = 8.0;

/// log Phi(z); the lower tail uses the asymptotic expansion beyond |z| > 8.
inline double log_norm_cdf(double z) {
    if (z < -kProbitTail) {
        return -0.5 * z * z - std::log(-z) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(detail::mills_series(z));
    }
    if (z > kProbitTail) return std::log1p(-norm_cdf(-z));
    return std::log(norm_cdf(z));
}

/// phi(z) / Phi(z), finite for every z.
inline double inverse_mills(double z) {
    if (z < -kProbitTail) return -z / detail::mills_series(z);
    return norm_pdf(z) / norm_cdf(z);
}

struct ProbitOptions {
    int max_iter = 100;
    double step_tol = 1e-10;
    // A fitted index with |x'b| beyond this on every observation of a group signals separation.
    double separation_index = 30.0;
};

struct ProbitModel {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    RegressionResult result;
    std::vector<bool> binary;  // per column: values in {0,1}
};

inline double probit_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& b) {
    const Eigen::VectorXd z = X * b;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) ll += log_norm_cdf(y(i) > 0.5 ? z(i) : -z(i));
    return ll;
}

inline bool is_binary_column(const Eigen::MatrixXd& X, Eigen::Index j) {
    bool zero = false, one = false;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double v = X(i, j);
        if (v == 0.0) zero = true;
        else if (v == 1.0) one = true;
        else return false;
    }
    return zero && one;
}

/// Average marginal effects at coefficients b: mean phi(x'b) b_k for continuous columns and the
/// mean discrete change Phi(x'b | x_k=1) - Phi(x'b | x_k=0) for indicators. The intercept gets 0.
inline Eigen::VectorXd average_marginal_effects(const Eigen::MatrixXd& X, const std::vector<bool>& binary,
                                                const std::vector<std::string>& names, const Eigen::VectorXd& b) {
    const Eigen::VectorXd z = X * b;
    const double n = static_cast<double>(X.rows());
    Eigen::VectorXd ame = Eigen::VectorXd::Zero(b.size());
    for (Eigen::Index k = 0; k < b.size(); ++k) {
        if (names[static_cast<std::size_t>(k)] == "const") continue;
        double acc = 0.0;
        if (binary[static_cast<std::size_t>(k)]) {
            for (Eigen::Index i = 0; i < X.rows(); ++i) {
                const double base = z(i) - X(i, k) * b(k);
                acc += norm_cdf(base + b(k)) - norm_cdf(base);
            }
        } else {
            for (Eigen::Index i = 0; i < X.rows(); ++i) acc += norm_pdf(z(i)) * b(k);
        }
        ame(k) = acc / n;
    }
    return ame;
}

/// Delta-method variance of a scalar or vector function of the coefficients, by central differences.
template <class F>
Eigen::MatrixXd delta_method(F&& f, const Eigen::VectorXd& b, const Eigen::MatrixXd& vcov) {
    const Eigen::VectorXd f0 = f(b);
    Eigen::MatrixXd J(f0.size(), b.size());
    for (Eigen::Index j = 0; j < b.size(); ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(b(j)));
        Eigen::VectorXd bp = b, bm = b;
        bp(j) += h;
        bm(j) -= h;
        J.col(j) = (f(bp) - f(bm)) / (2.0 * h);
    }
    return J * vcov * J.transpose();
}

inline void check_probit_separation(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    const std::vector<std::string>& names, const std::vector<bool>& binary) {
    const double s = y.sum();
    if (s == 0.0 || s == static_cast<double>(y.size())) {
        throw SeparationError("perfect separation: the outcome does not vary");
    }
    for (Eigen::Index k = 0; k < X.cols(); ++k) {
        if (!binary[static_cast<std::size_t>(k)]) continue;
        for (double level : {0.0, 1.0}) {
            double n = 0.0, ones = 0.0;
            for (Eigen::Index i = 0; i < X.rows(); ++i) {
                if (X(i, k) != level) continue;
                n += 1.0;
                ones += y(i);
            }
            if (n > 0.0 && (ones == 0.0 || ones == n)) {
                throw SeparationError("perfect separation: outcome is constant when " + names[static_cast<std::size_t>(k)] +
                                      " = " + std::to_string(static_cast<int>(level)));
            }
        }
    }
}

/// Probit fit. Standard errors are cluster-robust (CR1-type factor G/(G-1)) when `cluster` is
/// given, otherwise heteroskedasticity-robust with factor n/(n-1).
inline ProbitModel probit_fit(std::span<const double> y, std::span<const Column> columns,
                              std::span<const Categorical> fe = {}, std::span<const std::string> cluster = {},
                              const ProbitOptions& opt = {}) {
    const std::size_t n = y.size();
    if (!cluster.empty() && cluster.size() != n) throw std::invalid_argument("cluster vector has wrong length");
    for (double v : y) {
        if (v != 0.0 && v != 1.0) throw std::invalid_argument("probit outcomes must be 0 or 1");
    }
    auto [X, names] = build_design(n, columns, fe, true);
    if (n <= static_cast<std::size_t>(X.cols())) throw std::invalid_argument("probit needs more observations than parameters");
    require_full_rank(X, names);
    std::vector<bool> binary(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index k = 0; k < X.cols(); ++k) binary[static_cast<std::size_t>(k)] = is_binary_column(X, k);
    const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(n));
    check_probit_separation(X, yv, names, binary);

    const auto k = X.cols();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
    double ll = probit_loglik(X, yv, b);
    Eigen::VectorXd lam(static_cast<Eigen::Index>(n));
    Eigen::MatrixXd H(k, k);
    bool converged = false;
    auto score_hessian = [&](const Eigen::VectorXd& coef) {
        const Eigen::VectorXd z = X * coef;
        Eigen::VectorXd w(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            const double q = yv(i) > 0.5 ? 1.0 : -1.0;
            lam(i) = q * inverse_mills(q * z(i));
            w(i) = lam(i) * (lam(i) + z(i));
        }
        H.noalias() = -(X.transpose() * w.asDiagonal() * X);
        return Eigen::VectorXd(X.transpose() * lam);
    };
    for (int it = 0; it < opt.max_iter; ++it) {
        const Eigen::VectorXd g = score_hessian(b);
        const Eigen::VectorXd step = (-H).ldlt().solve(g);
        double t = 1.0;
        Eigen::VectorXd cand = b + step;
        double ll_c = probit_loglik(X, yv, cand);
        while (!(ll_c >= ll - 1e-12 * std::abs(ll)) && t > 1e-8) {
            t *= 0.5;
            cand = b + t * step;
            ll_c = probit_loglik(X, yv, cand);
        }
        b = cand;
        ll = ll_c;
        if ((t * step).lpNorm<Eigen::Infinity>() < opt.step_tol) {
            converged = true;
            break;
        }
    }
    if (!converged) throw std::runtime_error("probit Newton iteration did not converge");
    const Eigen::VectorXd z = X * b;
    if (z.cwiseAbs().minCoeff() > opt.separation_index) {
        throw SeparationError("perfect separation: every fitted index exceeds " + std::to_string(opt.separation_index));
    }
    score_hessian(b);

    const Eigen::MatrixXd bread = (-H).ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    const Eigen::MatrixXd scores = X.array().colwise() * lam.array();
    ProbitModel m;
    auto& r = m.result;
    std::size_t g = 0;
    double scale = static_cast<double>(n) / (static_cast<double>(n) - 1.0);
    if (!cluster.empty()) {
        sandwich(bread, scores, cluster, 1.0, &g);
        if (g < 2) throw std::invalid_argument("cluster-robust errors need at least two clusters");
        scale = static_cast<double>(g) / (static_cast<double>(g) - 1.0);
    }
    r.vcov = sandwich(bread, scores, cluster, scale, &r.n_clusters);
    r.robust_se = r.vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
    r.coef = b;
    r.names = names;
    r.n_obs = n;
    r.loglik = ll;
    // McFadden pseudo-R2 against the intercept-only model.
    const double pbar = yv.mean();
    const double ll0 = static_cast<double>(n) * (pbar * std::log(pbar) + (1.0 - pbar) * std::log(1.0 - pbar));
    r.r2 = 1.0 - ll / ll0;
    r.adj_r2 = 1.0 - (ll - static_cast<double>(k)) / ll0;
    r.residuals.resize(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < z.size(); ++i) r.residuals(i) = yv(i) - norm_cdf(z(i));
    r.ame = average_marginal_effects(X, binary, names, b);
    const Eigen::MatrixXd v_ame = delta_method(
        [&](const Eigen::VectorXd& coef) { return average_marginal_effects(X, binary, names, coef); }, b, r.vcov);
    r.ame_se = v_ame.diagonal().cwiseMax(0.0).cwiseSqrt();
    m.X = std::move(X);
    m.y = yv;
    m.binary = std::move(binary);
    return m;
}

}  // namespace ambucare
