#pragma once

// Least squares with dummy-encoded fixed effects and heteroskedasticity- or cluster-robust
// standard errors.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace ambucare {

struct Column {
    std::string name;
    std::vector<double> values;
};

/// A categorical regressor expanded to dummies; `base` (or the smallest level) is omitted.
struct Categorical {
    std::string name;
    std::vector<std::string> levels;
    std::optional<std::string> base;
};

class RankDeficientError : public std::runtime_error {
public:
    RankDeficientError(std::vector<std::string> cols, const std::string& what)
        : std::runtime_error(what), columns(std::move(cols)) {}
    std::vector<std::string> columns;
};

struct RegressionResult {
    std::vector<std::string> names;
    Eigen::VectorXd coef;
    Eigen::VectorXd robust_se;
    Eigen::MatrixXd vcov;
    double r2 = 0.0;
    double adj_r2 = 0.0;
    std::size_t n_obs = 0;
    std::size_t n_clusters = 0;
    Eigen::VectorXd residuals;
    double loglik = 0.0;  // probit only
    // Average marginal effects (probit only), aligned with `names`.
    Eigen::VectorXd ame;
    Eigen::VectorXd ame_se;

    std::size_t index_of(std::string_view name) const {
        auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) throw std::out_of_range("no coefficient named " + std::string(name));
        return static_cast<std::size_t>(it - names.begin());
    }
    double coefficient(std::string_view name) const { return coef(static_cast<Eigen::Index>(index_of(name))); }
    double se(std::string_view name) const { return robust_se(static_cast<Eigen::Index>(index_of(name))); }
    double marginal_effect(std::string_view name) const { return ame(static_cast<Eigen::Index>(index_of(name))); }
    double marginal_effect_se(std::string_view name) const {
        return ame_se(static_cast<Eigen::Index>(index_of(name)));
    }
};

struct DesignMatrix {
    Eigen::MatrixXd X;
    std::vector<std::string> names;
};

/// Intercept, numeric columns, then fixed-effect dummies (first level dropped).
inline DesignMatrix build_design(std::size_t n, std::span<const Column> columns, std::span<const Categorical> fe,
                                 bool intercept = true) {
    std::vector<std::string> names;
    std::vector<const std::vector<double>*> numeric;
    if (intercept) names.emplace_back("const");
    for (const auto& c : columns) {
        if (c.values.size() != n) throw std::invalid_argument("column " + c.name + " has wrong length");
        names.push_back(c.name);
        numeric.push_back(&c.values);
    }
    struct Dummy {
        const std::vector<std::string>* levels;
        std::string level;
    };
    std::vector<Dummy> dummies;
    for (const auto& f : fe) {
        if (f.levels.size() != n) throw std::invalid_argument("fixed effect " + f.name + " has wrong length");
        std::vector<std::string> uniq(f.levels.begin(), f.levels.end());
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        std::string base = f.base.value_or(uniq.empty() ? std::string{} : uniq.front());
        for (const auto& lv : uniq) {
            if (lv == base) continue;
            names.push_back(f.name + "=" + lv);
            dummies.push_back({&f.levels, lv});
        }
    }
    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::Index j = 0;
        const auto r = static_cast<Eigen::Index>(i);
        if (intercept) X(r, j++) = 1.0;
        for (const auto* col : numeric) X(r, j++) = (*col)[i];
        for (const auto& d : dummies) X(r, j++) = ((*d.levels)[i] == d.level) ? 1.0 : 0.0;
    }
    return {std::move(X), std::move(names)};
}

/// Throws RankDeficientError naming the columns that are linear combinations of earlier ones.
inline void require_full_rank(const Eigen::MatrixXd& X, const std::vector<std::string>& names) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    const auto rank = qr.rank();
    if (rank == X.cols()) return;
    std::vector<std::string> dropped;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = rank; k < X.cols(); ++k) dropped.push_back(names[static_cast<std::size_t>(perm(k))]);
    std::sort(dropped.begin(), dropped.end());
    std::string msg = "design matrix is rank deficient; collinear columns:";
    for (const auto& d : dropped) msg += " " + d;
    throw RankDeficientError(std::move(dropped), msg);
}

/// Sandwich variance from per-observation scores s_i (rows) and bread B = (-H)^{-1} or (X'X)^{-1}.
/// With clusters, scores are summed within cluster first. `scale` is the small-sample factor.
inline Eigen::MatrixXd sandwich(const Eigen::MatrixXd& bread, const Eigen::MatrixXd& scores,
                                std::span<const std::string> cluster, double scale, std::size_t* n_clusters) {
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(scores.cols(), scores.cols());
    if (cluster.empty()) {
        meat.noalias() = scores.transpose() * scores;
        if (n_clusters) *n_clusters = 0;
    } else {
        std::map<std::string, Eigen::VectorXd> sums;
        for (Eigen::Index i = 0; i < scores.rows(); ++i) {
            auto [it, inserted] = sums.try_emplace(cluster[static_cast<std::size_t>(i)], Eigen::VectorXd());
            if (inserted) it->second = Eigen::VectorXd::Zero(scores.cols());
            it->second += scores.row(i).transpose();
        }
        for (const auto& [key, s] : sums) meat.noalias() += s * s.transpose();
        if (n_clusters) *n_clusters = sums.size();
    }
    return scale * bread * meat * bread;
}

/// OLS with HC1 standard errors, or CR1 cluster-robust ones when `cluster` is non-empty.
inline RegressionResult ols(std::span<const double> y, std::span<const Column> columns,
                            std::span<const Categorical> fe = {}, std::span<const std::string> cluster = {},
                            bool intercept = true) {
    const std::size_t n = y.size();
    if (!cluster.empty() && cluster.size() != n) throw std::invalid_argument("cluster vector has wrong length");
    auto [X, names] = build_design(n, columns, fe, intercept);
    const auto k = static_cast<std::size_t>(X.cols());
    if (n <= k) {
        throw std::invalid_argument("ols needs more observations (" + std::to_string(n) + ") than parameters (" +
                                    std::to_string(k) + ")");
    }
    require_full_rank(X, names);

    Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(n));
    Eigen::MatrixXd xtx = X.transpose() * X;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
    Eigen::VectorXd coef = ldlt.solve(X.transpose() * yv);
    // One refinement step keeps zero-noise fits exact to rounding.
    Eigen::VectorXd resid = yv - X * coef;
    coef += ldlt.solve(X.transpose() * resid);
    resid = yv - X * coef;

    Eigen::MatrixXd bread = ldlt.solve(Eigen::MatrixXd::Identity(X.cols(), X.cols()));
    Eigen::MatrixXd scores = X.array().colwise() * resid.array();
    const double dn = static_cast<double>(n);
    const double dk = static_cast<double>(k);
    RegressionResult r;
    double scale = dn / (dn - dk);
    std::size_t g = 0;
    if (!cluster.empty()) {
        sandwich(bread, scores, cluster, 1.0, &g);
        const double dg = static_cast<double>(g);
        if (g < 2) throw std::invalid_argument("cluster-robust errors need at least two clusters");
        scale = dg / (dg - 1.0) * (dn - 1.0) / (dn - dk);
    }
    r.vcov = sandwich(bread, scores, cluster, scale, &r.n_clusters);
    r.robust_se = r.vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
    r.coef = std::move(coef);
    r.names = std::move(names);
    r.n_obs = n;

    const double ybar = yv.mean();
    const double tss = (yv.array() - ybar).square().sum();
    const double rss = resid.squaredNorm();
    r.r2 = tss > 0.0 ? 1.0 - rss / tss : 1.0;
    const double dof_model = intercept ? dk - 1.0 : dk;
    r.adj_r2 = 1.0 - (1.0 - r.r2) * (dn - (intercept ? 1.0 : 0.0)) / (dn - dof_model - (intercept ? 1.0 : 0.0));
    r.residuals = std::move(resid);
    return r;
}

}  // namespace ambucare
