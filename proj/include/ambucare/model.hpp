#pragma once

// Closed-form model quantities: cost functions, utilities, choice probabilities.
// All monetary quantities are in units of the THC hospitalization ceiling unless suffixed _rmb.

#include <cmath>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <string>
#include <vector>

#include "ambucare/types.hpp"

namespace ambucare {

inline double ambulatory_cost(Severity theta, const CostParams& cp) {
    return std::pow(theta.effective(), cp.alpha) * cp.p_ratio;
}

inline double inpatient_cost(Severity theta, const CostParams& cp, Facility facility, bool used_ambulatory) {
    double eff = theta.effective();
    if (used_ambulatory) eff *= cp.lambda;
    return cp.s(facility) * std::pow(eff, cp.beta);
}

// Expected inpatient savings from using ambulatory care: (1 - lambda^beta) s theta^beta.
inline double inpatient_savings(Severity theta, const CostParams& cp, Facility facility) {
    return (1.0 - std::pow(cp.lambda, cp.beta)) * cp.s(facility) * std::pow(theta.effective(), cp.beta);
}

inline double gamma_for(const PatientProfile& p, const PreferenceParams& pp) {
    if (pp.rural_minority && p.minority && !p.disadvantaged) {
        throw std::invalid_argument("patient " + p.id + " is minority but not disadvantaged");
    }
    double g = p.disadvantaged ? pp.gamma_l : pp.gamma_h;
    if (pp.rural_minority) {
        if (p.rural_hukou) g += pp.gamma_R;
        if (p.minority) g += pp.gamma_M;
    }
    return g;
}

inline double travel_cost_for(const PatientProfile& p, const PreferenceParams& pp) {
    double t = pp.t_b;
    if (p.high_income) t += pp.t_H;
    if (p.male) t += pp.t_M;
    return t;
}

/// Uninsured utility of ambulatory care. The weighting term is not scaled by the facility multiplier.
inline double utility_uninsured(Severity theta, const CostParams& cp, Facility facility, double gamma, double travel) {
    const double th = theta.effective();
    return inpatient_savings(theta, cp, facility) + gamma * (1.0 - th) - (ambulatory_cost(theta, cp) + travel);
}

/// Deterministic utility with explicit cost-sharing rates. `travel` is already normalized.
inline double utility_insured(Severity theta, const CostParams& cp, Facility facility, double gamma, double travel,
                              double phi_pc, double phi_hc) {
    if (!(phi_hc > 0.0)) throw std::invalid_argument("phi_hc must be positive");
    const double th = theta.effective();
    const double s = cp.s(facility);
    return inpatient_savings(theta, cp, facility) + gamma * (1.0 - th) * s / phi_hc -
           (phi_pc / phi_hc) * ambulatory_cost(theta, cp) - travel / phi_hc;
}

inline double utility_insured(const PatientProfile& p, const CostParams& cp, const PreferenceParams& pp,
                              const InsurancePlan& plan) {
    return utility_insured(p.theta, cp, p.facility_choice, gamma_for(p, pp), travel_cost_for(p, pp), plan.phi_pc,
                           plan.phi_hc_for(p.poor_household));
}

/// Logistic CDF without overflow for any finite v.
inline double choice_probability(double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
}

/// log(sigma(v)), stable in both tails.
inline double log_choice_probability(double v) {
    if (v >= 0.0) return -std::log1p(std::exp(-v));
    return v - std::log1p(std::exp(v));
}

/// gamma (1-theta) s in RMB. Positive: extra cost the patient accepts for prevention;
/// negative: savings required before the patient uses ambulatory care.
inline double prevention_value_rmb(const PatientProfile& p, const CostParams& cp, const PreferenceParams& pp) {
    const double th = p.theta.effective();
    return gamma_for(p, pp) * (1.0 - th) * cp.s(p.facility_choice) * cp.money_scale_rmb;
}

inline double utility_variant(const BehavioralVariant& variant, Severity theta, const CostParams& cp,
                              Facility facility, double gamma, double travel) {
    validate_variant(variant);
    const double th = theta.effective();
    const double s = cp.s(facility);
    const double pc = ambulatory_cost(theta, cp);
    const double savings = inpatient_savings(theta, cp, facility);
    return std::visit(
        [&](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Baseline>) {
                return savings + gamma * (1.0 - th) - (pc + travel);
            } else if constexpr (std::is_same_v<T, PresentBias>) {
                return v.delta * (savings + gamma * (1.0 - th)) - (pc + travel);
            } else if constexpr (std::is_same_v<T, Salience>) {
                // Decision severity mu*theta replaces theta everywhere.
                const double dt = v.mu * th;
                return (1.0 - std::pow(cp.lambda, cp.beta)) * s * std::pow(dt, cp.beta) + gamma * (1.0 - dt) -
                       (std::pow(dt, cp.alpha) * cp.p_ratio + travel);
            } else {
                return (1.0 - std::pow(v.lambda_tilde, cp.beta)) * s * std::pow(th, cp.beta) + gamma * (1.0 - th) -
                       (pc + travel);
            }
        },
        variant);
}

// ---------------------------------------------------------------------------
// Figure data

struct CurveSeries {
    std::string label;
    double gamma = 0.0;
    double phi_pc = 1.0;
    double phi_hc = 1.0;
    double travel = 0.0;
    Facility facility = Facility::THC;
    BehavioralVariant variant = Baseline{};
};

struct CurveRow {
    double theta;
    std::string label;
    double utility;
};

/// Utility of one series at one severity. Cost-sharing other than (1,1) uses the insured rule with
/// the unscaled weighting term, as in the illustrative figures.
inline double curve_utility(const CurveSeries& series, Severity theta, const CostParams& cp) {
    if (series.phi_pc == 1.0 && series.phi_hc == 1.0) {
        return utility_variant(series.variant, theta, cp, series.facility, series.gamma, series.travel);
    }
    if (!std::holds_alternative<Baseline>(series.variant)) {
        throw std::invalid_argument("behavioral variants are only defined without cost-sharing");
    }
    const double th = theta.effective();
    return inpatient_savings(theta, cp, series.facility) + series.gamma * (1.0 - th) / series.phi_hc -
           (series.phi_pc / series.phi_hc) * ambulatory_cost(theta, cp) - series.travel / series.phi_hc;
}

inline std::vector<CurveRow> utility_curve(std::span<const Severity> grid, std::span<const CurveSeries> series,
                                           const CostParams& cp) {
    if (grid.empty()) throw std::invalid_argument("utility curve grid is empty");
    std::vector<CurveRow> rows;
    rows.reserve(grid.size() * series.size());
    for (const auto& s : series) {
        for (const auto& th : grid) rows.push_back({th.value(), s.label, curve_utility(s, th, cp)});
    }
    return rows;
}

/// n interior points theta_k = k/(n+1).
inline std::vector<Severity> uniform_grid(std::size_t n) {
    if (n == 0) throw std::invalid_argument("grid size must be positive");
    std::vector<Severity> g;
    g.reserve(n);
    for (std::size_t k = 1; k <= n; ++k) g.emplace_back(static_cast<double>(k) / static_cast<double>(n + 1));
    return g;
}

/// Cost parameters used by the illustrative utility figures.
inline CostParams figure_cost_params() {
    CostParams cp;
    cp.alpha = 1.0;
    cp.beta = 1.5;
    cp.lambda = 0.85;
    cp.rho = 1.5 * std::log(0.85);
    cp.p_ratio = 0.12;
    return cp;
}

/// Smallest root of f on [lo, hi] by bisection; requires a sign change.
template <class F>
double bisect_root(F&& f, double lo, double hi, double tol = 1e-14, int max_iter = 200) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo < 0.0) == (fhi < 0.0)) throw std::invalid_argument("bisect_root: no sign change on bracket");
    for (int i = 0; i < max_iter && hi - lo > tol; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace ambucare
