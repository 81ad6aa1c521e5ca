#pragma once

// Policy experiments: predicted use, expected total cost, welfare and fiscal cost for a targeted
// subpopulation under alternative cost-sharing and travel-subsidy rules.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ambucare/model.hpp"
#include "ambucare/types.hpp"

namespace ambucare {

enum class Target { Disadvantaged, Regular, Poor, All };

inline bool targets(Target t, const PatientProfile& p) {
    switch (t) {
    case Target::Disadvantaged: return p.disadvantaged;
    case Target::Regular: return !p.disadvantaged;
    case Target::Poor: return p.poor_household;
    case Target::All: return true;
    }
    return false;
}

struct PolicyScenario {
    std::string label = "baseline";
    double phi_pc_delta = 0.0;
    std::optional<double> phi_hc_poor;
    std::optional<double> phi_hc_regular;
    // Poor households pay the regular inpatient rate.
    bool remove_assistance = false;
    double travel_subsidy_rmb = 0.0;
    Target applies_to = Target::Disadvantaged;

    static PolicyScenario baseline() { return {}; }
    static PolicyScenario policy_a(double cut = 0.2) {
        PolicyScenario s;
        s.label = "policy_a";
        s.phi_pc_delta = -cut;
        return s;
    }
    static PolicyScenario policy_b(double subsidy_rmb = 200.0) {
        PolicyScenario s;
        s.label = "policy_b";
        s.travel_subsidy_rmb = subsidy_rmb;
        return s;
    }
    static PolicyScenario assistance_removal() {
        PolicyScenario s;
        s.label = "remove_assistance";
        s.remove_assistance = true;
        return s;
    }
};

/// Cost-sharing and travel cost faced by one patient under a scenario.
struct PatientTerms {
    double phi_pc;
    double phi_hc;
    double travel;
};

/// Plan faced by targeted patients; every rate must stay in (0,1].
inline InsurancePlan apply_scenario(const InsurancePlan& plan, const PolicyScenario& s) {
    if (!(s.travel_subsidy_rmb >= 0.0)) throw std::invalid_argument("travel subsidy must be non-negative");
    InsurancePlan out = plan;
    out.phi_pc += s.phi_pc_delta;
    if (s.remove_assistance) out.phi_hc_poor = plan.phi_hc_regular;
    if (s.phi_hc_poor) out.phi_hc_poor = *s.phi_hc_poor;
    if (s.phi_hc_regular) out.phi_hc_regular = *s.phi_hc_regular;
    if (!(out.phi_pc > 0.0)) {
        throw std::invalid_argument("scenario " + s.label + " drives phi_pc to " + std::to_string(out.phi_pc));
    }
    out.validate();
    return out;
}

inline PatientTerms patient_terms(const PatientProfile& p, const CostParams& cp, const PreferenceParams& pp,
                                  const InsurancePlan& plan, const PolicyScenario& s) {
    const double t = travel_cost_for(p, pp);
    if (!targets(s.applies_to, p)) return {plan.phi_pc, plan.phi_hc_for(p.poor_household), t};
    const InsurancePlan q = apply_scenario(plan, s);
    return {q.phi_pc, q.phi_hc_for(p.poor_household), std::max(0.0, t - cp.to_norm(s.travel_subsidy_rmb))};
}

inline double scenario_utility(const PatientProfile& p, const CostParams& cp, const PreferenceParams& pp,
                               const PatientTerms& terms) {
    return utility_insured(p.theta, cp, p.facility_choice, gamma_for(p, pp), terms.travel, terms.phi_pc, terms.phi_hc);
}

/// sigma P1 + (1 - sigma) P0 with P1 = s (lambda theta)^beta + theta^alpha p_ratio, P0 = s theta^beta.
inline double expected_cost(const PatientProfile& p, const CostParams& cp, double sigma) {
    const double with = inpatient_cost(p.theta, cp, p.facility_choice, true) + ambulatory_cost(p.theta, cp);
    const double without = inpatient_cost(p.theta, cp, p.facility_choice, false);
    return sigma * with + (1.0 - sigma) * without;
}

inline double expected_cost(const PatientProfile& p, const CostParams& cp, const PreferenceParams& pp,
                            const InsurancePlan& plan) {
    return expected_cost(p, cp, choice_probability(utility_insured(p, cp, pp, plan)));
}

inline double welfare(const PatientProfile& p, const CostParams& cp, const PreferenceParams& pp,
                      const InsurancePlan& plan) {
    const double v = utility_insured(p, cp, pp, plan);
    return choice_probability(v) * v;
}

struct ShareMeasures {
    double mean_sigma = 0.0;
    double closed_form = 0.0;
};

/// Mean predicted probability and the ratio sum(d sigma) / sum(d sigma + (1-d)(1-sigma)).
inline ShareMeasures share_measures(std::span<const double> sigma, std::span<const double> d) {
    if (sigma.empty()) throw std::invalid_argument("share of an empty population");
    if (sigma.size() != d.size()) throw std::invalid_argument("sigma and d differ in length");
    double s = 0.0, num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        s += sigma[i];
        num += d[i] * sigma[i];
        den += d[i] * sigma[i] + (1.0 - d[i]) * (1.0 - sigma[i]);
    }
    return {s / static_cast<double>(sigma.size()), num / den};
}

inline ShareMeasures predicted_share(std::span<const PatientProfile> pop, const CostParams& cp,
                                     const PreferenceParams& pp, const InsurancePlan& plan) {
    std::vector<double> sigma, d;
    for (const auto& p : pop) {
        sigma.push_back(choice_probability(utility_insured(p, cp, pp, plan)));
        d.push_back(p.used_ambulatory ? 1.0 : 0.0);
    }
    return share_measures(sigma, d);
}

struct MetricRow {
    std::string metric;
    double baseline = 0.0;
    double counterfactual = 0.0;
    double change = 0.0;
    double pct_base_baseline = 0.0;
    double pct_base_counterfactual = 0.0;
    std::optional<double> pct_custom_base;
};

struct ScenarioOutcome {
    std::string label;
    std::size_t n_targeted = 0;
    double use_share = 0.0;
    double use_share_closed_form = 0.0;
    double expected_cost_norm = 0.0;
    double expected_cost_rmb = 0.0;
    double welfare = 0.0;
    double fiscal_cost_rmb_per_head = 0.0;
    std::vector<MetricRow> diffs_vs_baseline;
};

struct CounterfactualOptions {
    // Denominator for an extra welfare percentage column; unset leaves it out.
    std::optional<double> welfare_pct_base;
};

namespace detail {

inline double pct(double change, double base) {
    return base != 0.0 ? 100.0 * change / std::abs(base) : std::nan("");
}

inline MetricRow metric_row(std::string name, double base, double cf, std::optional<double> custom = std::nullopt) {
    MetricRow r{std::move(name), base, cf, cf - base, 0.0, 0.0, std::nullopt};
    r.pct_base_baseline = pct(r.change, base);
    r.pct_base_counterfactual = pct(r.change, cf);
    if (custom) r.pct_custom_base = pct(r.change, *custom);
    return r;
}

struct Aggregate {
    std::size_t n = 0;
    double share = 0.0;
    double share_closed_form = 0.0;
    double cost = 0.0;
    double welfare = 0.0;
    double fiscal_rmb = 0.0;
};

inline Aggregate aggregate(std::span<const PatientProfile> pop, const CostParams& cp, const PreferenceParams& pp,
                           const InsurancePlan& plan, const PolicyScenario& s, Target group) {
    Aggregate a;
    std::vector<double> sigma, d;
    for (const auto& p : pop) {
        if (!targets(group, p)) continue;
        const PatientTerms terms = patient_terms(p, cp, pp, plan, s);
        const double v = scenario_utility(p, cp, pp, terms);
        const double sg = choice_probability(v);
        sigma.push_back(sg);
        d.push_back(p.used_ambulatory ? 1.0 : 0.0);
        a.cost += expected_cost(p, cp, sg);
        a.welfare += sg * v;
        if (targets(s.applies_to, p)) {
            a.fiscal_rmb += sg * (-s.phi_pc_delta) * cp.to_rmb(ambulatory_cost(p.theta, cp)) + sg * s.travel_subsidy_rmb;
        }
    }
    if (sigma.empty()) throw std::invalid_argument("no patients in the evaluated group");
    const auto sm = share_measures(sigma, d);
    a.n = sigma.size();
    a.share = sm.mean_sigma;
    a.share_closed_form = sm.closed_form;
    const double n = static_cast<double>(a.n);
    a.cost /= n;
    a.welfare /= n;
    a.fiscal_rmb /= n;
    return a;
}

}  // namespace detail

/// Mean extra public spending per targeted patient: the ambulatory subsidy sigma' dphi P^pc plus
/// the travel allowance sigma' x subsidy, both at post-policy probabilities.
inline double fiscal_cost(std::span<const PatientProfile> pop, const CostParams& cp, const PreferenceParams& pp,
                          const InsurancePlan& plan, const PolicyScenario& s) {
    return detail::aggregate(pop, cp, pp, plan, s, s.applies_to).fiscal_rmb;
}

/// Outcomes over the scenario's target group, compared with the unchanged plan on the same group.
inline ScenarioOutcome run_scenario(std::span<const PatientProfile> pop, const CostParams& cp,
                                    const PreferenceParams& pp, const InsurancePlan& plan, const PolicyScenario& s,
                                    const CounterfactualOptions& opt = {}) {
    PolicyScenario null_s;
    null_s.applies_to = s.applies_to;
    const auto base = detail::aggregate(pop, cp, pp, plan, null_s, s.applies_to);
    const auto cf = detail::aggregate(pop, cp, pp, plan, s, s.applies_to);
    ScenarioOutcome o;
    o.label = s.label;
    o.n_targeted = cf.n;
    o.use_share = cf.share;
    o.use_share_closed_form = cf.share_closed_form;
    o.expected_cost_norm = cf.cost;
    o.expected_cost_rmb = cp.to_rmb(cf.cost);
    o.welfare = cf.welfare;
    o.fiscal_cost_rmb_per_head = cf.fiscal_rmb;
    o.diffs_vs_baseline = {
        detail::metric_row("use_share", base.share, cf.share),
        detail::metric_row("use_share_closed_form", base.share_closed_form, cf.share_closed_form),
        detail::metric_row("expected_cost_norm", base.cost, cf.cost),
        detail::metric_row("expected_cost_rmb", cp.to_rmb(base.cost), cp.to_rmb(cf.cost)),
        detail::metric_row("welfare", base.welfare, cf.welfare, opt.welfare_pct_base),
        detail::metric_row("fiscal_cost_rmb_per_head", base.fiscal_rmb, cf.fiscal_rmb),
    };
    return o;
}

inline const MetricRow& find_metric(const ScenarioOutcome& o, std::string_view name) {
    for (const auto& r : o.diffs_vs_baseline) {
        if (r.metric == name) return r;
    }
    throw std::out_of_range("no metric " + std::string(name));
}

}  // namespace ambucare
