#pragma once

// Second estimation step: binomial-logit maximum likelihood for the weighting and travel-cost
// parameters, with multi-start BFGS and a patient-level bootstrap.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <algorithm>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ambucare/model.hpp"
#include "ambucare/optimizer.hpp"
#include "ambucare/parallel.hpp"
#include "ambucare/rng.hpp"
#include "ambucare/types.hpp"

namespace ambucare {

class SeparationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::vector<std::string> preference_names(bool rural_minority) {
    if (rural_minority) return {"gamma_h", "gamma_l", "gamma_R", "gamma_M", "t_b", "t_H", "t_M"};
    return {"gamma_h", "gamma_l", "t_b", "t_H", "t_M"};
}

inline Eigen::VectorXd pack(const PreferenceParams& pp) {
    if (pp.rural_minority) {
        Eigen::VectorXd x(7);
        x << pp.gamma_h, pp.gamma_l, pp.gamma_R, pp.gamma_M, pp.t_b, pp.t_H, pp.t_M;
        return x;
    }
    Eigen::VectorXd x(5);
    x << pp.gamma_h, pp.gamma_l, pp.t_b, pp.t_H, pp.t_M;
    return x;
}

inline PreferenceParams unpack(const Eigen::VectorXd& x, bool rural_minority) {
    PreferenceParams pp;
    pp.rural_minority = rural_minority;
    if (rural_minority) {
        if (x.size() != 7) throw std::invalid_argument("expected 7 preference parameters");
        pp.gamma_h = x(0), pp.gamma_l = x(1), pp.gamma_R = x(2), pp.gamma_M = x(3);
        pp.t_b = x(4), pp.t_H = x(5), pp.t_M = x(6);
    } else {
        if (x.size() != 5) throw std::invalid_argument("expected 5 preference parameters");
        pp.gamma_h = x(0), pp.gamma_l = x(1), pp.t_b = x(2), pp.t_H = x(3), pp.t_M = x(4);
    }
    return pp;
}

/// v_i = offset_i + features_i . params; the deterministic utility is linear in the preference
/// parameters once cost parameters and cost-sharing are fixed.
struct LogitDesign {
    Eigen::VectorXd offset;
    Eigen::MatrixXd features;
    Eigen::VectorXd outcome;
    bool rural_minority = false;

    std::size_t size() const { return static_cast<std::size_t>(offset.size()); }

    LogitDesign subset(std::span<const std::size_t> rows) const {
        LogitDesign out;
        out.rural_minority = rural_minority;
        const auto n = static_cast<Eigen::Index>(rows.size());
        out.offset.resize(n);
        out.features.resize(n, features.cols());
        out.outcome.resize(n);
        for (Eigen::Index r = 0; r < n; ++r) {
            const auto i = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)]);
            out.offset(r) = offset(i);
            out.features.row(r) = features.row(i);
            out.outcome(r) = outcome(i);
        }
        return out;
    }
};

inline LogitDesign make_logit_design(std::span<const PatientProfile> pop, const CostParams& cp,
                                     const InsurancePlan& plan, bool rural_minority) {
    const auto n = static_cast<Eigen::Index>(pop.size());
    const Eigen::Index k = rural_minority ? 7 : 5;
    LogitDesign d;
    d.rural_minority = rural_minority;
    d.offset.resize(n);
    d.features.setZero(n, k);
    d.outcome.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = pop[static_cast<std::size_t>(i)];
        if (rural_minority && p.minority && !p.disadvantaged) {
            throw std::invalid_argument("patient " + p.id + " is minority but not disadvantaged");
        }
        const double phc = plan.phi_hc_for(p.poor_household);
        if (!(phc > 0.0)) throw std::invalid_argument("phi_hc must be positive");
        const double th = p.theta.effective();
        d.offset(i) = inpatient_savings(p.theta, cp, p.facility_choice) - (plan.phi_pc / phc) * ambulatory_cost(p.theta, cp);
        const double w = (1.0 - th) * cp.s(p.facility_choice) / phc;
        Eigen::Index j = 0;
        d.features(i, j++) = p.disadvantaged ? 0.0 : w;
        d.features(i, j++) = p.disadvantaged ? w : 0.0;
        if (rural_minority) {
            d.features(i, j++) = p.rural_hukou ? w : 0.0;
            d.features(i, j++) = p.minority ? w : 0.0;
        }
        d.features(i, j++) = -1.0 / phc;
        d.features(i, j++) = p.high_income ? -1.0 / phc : 0.0;
        d.features(i, j++) = p.male ? -1.0 / phc : 0.0;
        d.outcome(i) = p.used_ambulatory ? 1.0 : 0.0;
    }
    return d;
}

struct LoglikGrad {
    double loglik = 0.0;
    Eigen::VectorXd grad;
};

/// Log-likelihood and its analytic gradient, summed in patient order.
inline LoglikGrad loglik_and_grad(const Eigen::VectorXd& params, const LogitDesign& d) {
    LoglikGrad out;
    out.grad = Eigen::VectorXd::Zero(d.features.cols());
    const Eigen::VectorXd v = d.offset + d.features * params;
    Eigen::VectorXd resid(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double y = d.outcome(i);
        // log(1 - sigma(v)) = log sigma(-v)
        out.loglik += y > 0.5 ? log_choice_probability(v(i)) : log_choice_probability(-v(i));
        resid(i) = y - choice_probability(v(i));
    }
    out.grad.noalias() = d.features.transpose() * resid;
    return out;
}

inline LoglikGrad loglik_and_grad(const PreferenceParams& pp, std::span<const PatientProfile> pop, const CostParams& cp,
                                  const InsurancePlan& plan) {
    return loglik_and_grad(pack(pp), make_logit_design(pop, cp, plan, pp.rural_minority));
}

struct LogitOptions {
    bool rural_minority = false;
    int n_starts = 5;  // including the unperturbed start
    double perturbation = 0.05;
    std::uint64_t seed = 1;
    BfgsOptions bfgs;
};

struct LogitFit {
    PreferenceParams params;
    std::vector<std::string> names;
    Eigen::VectorXd estimate;
    double loglik = 0.0;
    bool converged = false;
    double grad_norm = 0.0;
    int iterations = 0;
    int starts_converged = 0;
    std::map<std::string, double> bootstrap_se;
    int n_bootstrap = 0;
    int n_dropped = 0;
};

/// Default start: every weighting parameter at 0 and every travel-cost parameter at 0.1.
inline PreferenceParams default_start(bool rural_minority) {
    PreferenceParams pp;
    pp.rural_minority = rural_minority;
    pp.t_b = pp.t_H = pp.t_M = 0.1;
    return pp;
}

inline void check_identification(std::span<const PatientProfile> pop, bool rural_minority) {
    auto count = [&](auto pred) {
        return std::count_if(pop.begin(), pop.end(), pred);
    };
    const auto n = static_cast<long>(pop.size());
    auto varies = [&](auto pred, const char* what) {
        const auto c = count(pred);
        if (c == 0 || c == n) throw std::invalid_argument(std::string("no variation in ") + what);
    };
    varies([](const PatientProfile& p) { return p.disadvantaged; }, "disadvantaged status");
    varies([](const PatientProfile& p) { return p.high_income; }, "high_income");
    varies([](const PatientProfile& p) { return p.male; }, "male");
    if (rural_minority) {
        varies([](const PatientProfile& p) { return p.rural_hukou; }, "rural_hukou");
        varies([](const PatientProfile& p) { return p.minority; }, "minority");
    }
}

inline BfgsResult maximize_loglik(const LogitDesign& d, const Eigen::VectorXd& start, const BfgsOptions& opt) {
    auto neg = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        auto lg = loglik_and_grad(x, d);
        g = -lg.grad;
        return -lg.loglik;
    };
    auto res = bfgs_minimize(neg, start, opt);
    if (res.stop == BfgsStop::Diverged) {
        throw SeparationError("perfect separation: a parameter diverged beyond " +
                              std::to_string(opt.divergence_bound) + " while the likelihood kept improving");
    }
    // The likelihood flattens exponentially under separation, so the search may stall well
    // inside the bound. Every decision being fitted almost exactly gives it away.
    const Eigen::VectorXd v = d.features * res.x + d.offset;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        worst = std::max(worst, std::abs(choice_probability(v(i)) - d.outcome(i)));
    }
    if (worst < 1e-6) throw SeparationError("perfect separation: the fitted choice probabilities reproduce every decision");
    return res;
}

inline void check_outcome_variation(const LogitDesign& d) {
    const double s = d.outcome.sum();
    if (s == 0.0 || s == static_cast<double>(d.outcome.size())) {
        throw SeparationError("perfect separation: every observed decision is identical");
    }
}

inline LogitFit fit_logit_mle(const LogitDesign& design, const PreferenceParams& init, const LogitOptions& opts) {
    if (design.rural_minority != opts.rural_minority || init.rural_minority != opts.rural_minority) {
        throw std::invalid_argument("design, start and options disagree on the rural/minority extension");
    }
    check_outcome_variation(design);
    const Eigen::VectorXd x0 = pack(init);
    LogitFit best;
    best.names = preference_names(opts.rural_minority);
    bool have = false;
    for (int s = 0; s < std::max(1, opts.n_starts); ++s) {
        Eigen::VectorXd start = x0;
        if (s > 0) {
            auto rng = make_stream(opts.seed, "multistart", static_cast<std::uint64_t>(s));
            for (Eigen::Index j = 0; j < start.size(); ++j) start(j) += opts.perturbation * (2.0 * rng.uniform() - 1.0);
        }
        const auto res = maximize_loglik(design, start, opts.bfgs);
        if (res.converged) ++best.starts_converged;
        const double ll = -res.f;
        const bool better = !have || (res.converged && !best.converged) ||
                            (res.converged == best.converged && ll > best.loglik);
        if (better) {
            best.estimate = res.x;
            best.loglik = ll;
            best.converged = res.converged;
            best.grad_norm = res.grad_norm;
            best.iterations = res.iterations;
            have = true;
        }
    }
    best.params = unpack(best.estimate, opts.rural_minority);
    return best;
}

inline LogitFit fit_logit_mle(std::span<const PatientProfile> pop, const CostParams& cp, const InsurancePlan& plan,
                              const PreferenceParams& init, const LogitOptions& opts) {
    check_identification(pop, opts.rural_minority);
    return fit_logit_mle(make_logit_design(pop, cp, plan, opts.rural_minority), init, opts);
}

struct BootstrapResult {
    Eigen::VectorXd se;
    Eigen::MatrixXd replicates;  // kept replicates, one per row
    int n_requested = 0;
    int n_dropped = 0;
};

/// Generic cluster bootstrap: `fit(indices)` refits on resampled units and returns an estimate,
/// or std::nullopt when the replicate fails. Replicate b draws from stream (seed, "bootstrap", b).
template <class Fit>
BootstrapResult bootstrap(std::size_t n_units, int B, std::uint64_t seed, unsigned threads, Fit&& fit,
                          double max_drop_share = 0.10) {
    if (B < 2) throw std::invalid_argument("bootstrap needs at least two replicates");
    if (n_units == 0) throw std::invalid_argument("bootstrap over an empty sample");
    std::vector<std::optional<Eigen::VectorXd>> reps(static_cast<std::size_t>(B));
    parallel_for(static_cast<std::size_t>(B), threads, [&](std::size_t b) {
        auto rng = make_stream(seed, "bootstrap", b);
        std::vector<std::size_t> idx(n_units);
        for (auto& i : idx) i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n_units));
        reps[b] = fit(std::span<const std::size_t>(idx));
    });
    BootstrapResult out;
    out.n_requested = B;
    std::vector<const Eigen::VectorXd*> kept;
    for (const auto& r : reps) {
        if (r) kept.push_back(&*r);
        else ++out.n_dropped;
    }
    if (static_cast<double>(out.n_dropped) > max_drop_share * B) {
        throw std::runtime_error("bootstrap dropped " + std::to_string(out.n_dropped) + " of " + std::to_string(B) +
                                 " replicates (limit " + std::to_string(static_cast<int>(max_drop_share * 100)) + "%)");
    }
    if (kept.size() < 2) throw std::runtime_error("fewer than two bootstrap replicates succeeded");
    const auto k = kept.front()->size();
    out.replicates.resize(static_cast<Eigen::Index>(kept.size()), k);
    for (std::size_t r = 0; r < kept.size(); ++r) out.replicates.row(static_cast<Eigen::Index>(r)) = kept[r]->transpose();
    const Eigen::RowVectorXd mean = out.replicates.colwise().mean();
    const Eigen::MatrixXd centered = out.replicates.rowwise() - mean;
    out.se = (centered.array().square().colwise().sum() / static_cast<double>(kept.size() - 1)).sqrt().transpose();
    return out;
}

/// Patient-resampling bootstrap of the logit fit; replicates start from the point estimate.
inline BootstrapResult bootstrap_se(const LogitDesign& design, const LogitFit& fit, const LogitOptions& opts, int B,
                                    std::uint64_t seed, unsigned threads) {
    if (B < 50) throw std::invalid_argument("bootstrap requires B >= 50");
    return bootstrap(design.size(), B, seed, threads,
                     [&](std::span<const std::size_t> idx) -> std::optional<Eigen::VectorXd> {
                         const LogitDesign sub = design.subset(idx);
                         try {
                             check_outcome_variation(sub);
                             const auto res = maximize_loglik(sub, fit.estimate, opts.bfgs);
                             if (!res.converged) return std::nullopt;
                             return res.x;
                         } catch (const SeparationError&) {
                             return std::nullopt;
                         }
                     });
}

inline void attach_bootstrap(LogitFit& fit, const BootstrapResult& b) {
    fit.bootstrap_se.clear();
    for (std::size_t j = 0; j < fit.names.size(); ++j) fit.bootstrap_se[fit.names[j]] = b.se(static_cast<Eigen::Index>(j));
    fit.n_bootstrap = b.n_requested - b.n_dropped;
    fit.n_dropped = b.n_dropped;
}

}  // namespace ambucare
