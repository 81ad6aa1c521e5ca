#pragma once

// Synthetic populations, choices, claims and two-period policy panels generated from known
// parameters. Every draw comes from a stream keyed by (seed, purpose, patient index).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ambucare/model.hpp"
#include "ambucare/published.hpp"
#include "ambucare/rng.hpp"
#include "ambucare/severity.hpp"
#include "ambucare/types.hpp"

namespace ambucare {

struct GroupShares {
    double disadvantaged = 0.748;
    double poor_within_disadvantaged = 0.489 / 0.748;
    double distant_within_disadvantaged = 0.525 / 0.748;
    double minority = 0.095;  // of all patients; only distant patients can be minority
    double rural = 0.658;
    double male = 0.475;
    double high_income = 0.2;  // among patients outside poor households
};

struct SeverityMix {
    bool continuous = false;
    std::array<double, 3> probs{0.394, 0.465, 0.141};
    std::array<double, 3> theta{0.1, 0.48, 0.72};
    // Continuous mode: theta ~ Beta(a, b); categories by the two cut points.
    double beta_a = 2.0;
    double beta_b = 3.0;
    std::array<double, 2> cuts{0.25, 0.6};
};

struct OtherDiagnosisConfig {
    // Yearly non-CVD inpatient cost ranges (RMB) by category; Mild patients have none.
    std::array<double, 2> moderate_range{3000.0, 14500.0};
    std::array<double, 2> severe_range{15500.0, 60000.0};
    double record_noise_sd = 0.3;
    std::vector<std::string> codes{"respiratory", "gastroenterology", "orthopedics", "renal_esrd",
                                   "appendicitis", "anorectal", "trauma"};
    std::vector<double> code_probs{0.3, 0.2, 0.15, 0.1, 0.1, 0.05, 0.1};
};

struct PolicyShock {
    int year = 2020;
    InsurancePlan post_plan;
    bool redraw_tastes = false;  // fresh taste draw in every year after the first
};

struct PopulationConfig {
    std::size_t n_patients = 1000;
    std::uint64_t seed = 20240601;
    GroupShares shares;
    SeverityMix severity;
    // Facility distribution per severity category (THC, TCM, General, NonLocal).
    std::array<std::array<double, 4>, 3> facility_probs{{{0.12, 0.0529, 0.4761, 0.351},
                                                         {0.12, 0.0529, 0.4761, 0.351},
                                                         {0.12, 0.0529, 0.4761, 0.351}}};
    double age_mean = 69.3;
    double age_sd = 9.0;
    double distance_log_mean = 2.2;
    double distance_log_sd = 0.6;
    CostParams true_cost = published::cost_params();
    PreferenceParams true_pref = published::preference_params();
    InsurancePlan plan = published::plan();
    double cost_noise_sd = 0.8;
    std::vector<int> years{2018, 2019};
    std::optional<PolicyShock> shock;
    OtherDiagnosisConfig other;

    void validate() const {
        auto prob = [](double p, const std::string& name) {
            if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(name + " must be a probability in [0,1]");
        };
        auto dist = [&](std::span<const double> ps, const std::string& name) {
            double sum = 0.0;
            for (double p : ps) {
                prob(p, name);
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument(name + " must sum to 1");
        };
        if (n_patients == 0) throw std::invalid_argument("n_patients must be positive");
        prob(shares.disadvantaged, "shares.disadvantaged");
        prob(shares.poor_within_disadvantaged, "shares.poor_within_disadvantaged");
        prob(shares.distant_within_disadvantaged, "shares.distant_within_disadvantaged");
        prob(shares.minority, "shares.minority");
        prob(shares.rural, "shares.rural");
        prob(shares.male, "shares.male");
        prob(shares.high_income, "shares.high_income");
        if (shares.distant_within_disadvantaged < 1.0 - shares.poor_within_disadvantaged - 1e-12) {
            throw std::invalid_argument("infeasible shares: every disadvantaged patient outside a poor household is distant, "
                                        "so distant_within_disadvantaged must be >= 1 - poor_within_disadvantaged");
        }
        if (shares.minority > shares.disadvantaged * shares.distant_within_disadvantaged + 1e-12) {
            throw std::invalid_argument("infeasible shares: minority share exceeds distant share");
        }
        if (!severity.continuous) dist(severity.probs, "severity.probs");
        for (const auto& f : facility_probs) dist(f, "facility_probs");
        dist(other.code_probs, "other.code_probs");
        if (other.codes.size() != other.code_probs.size()) throw std::invalid_argument("other.codes/code_probs size mismatch");
        if (!(cost_noise_sd >= 0.0)) throw std::invalid_argument("cost_noise_sd must be non-negative");
        if (years.empty()) throw std::invalid_argument("years must not be empty");
        true_cost.validate();
        true_pref.validate();
        plan.validate();
        if (shock) shock->post_plan.validate();
    }
};

/// Derived share of distant patients among poor disadvantaged households.
inline double distant_given_poor(const GroupShares& s) {
    if (s.poor_within_disadvantaged <= 0.0) return 1.0;
    const double q = (s.distant_within_disadvantaged - (1.0 - s.poor_within_disadvantaged)) / s.poor_within_disadvantaged;
    return std::clamp(q, 0.0, 1.0);
}

inline std::string patient_id(std::size_t i) {
    std::string digits = std::to_string(i + 1);
    return "P" + std::string(digits.size() < 6 ? 6 - digits.size() : 0, '0') + digits;
}

template <std::size_t N>
std::size_t draw_index(double u, const std::array<double, N>& probs) {
    double acc = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
        acc += probs[k];
        if (u < acc) return k;
    }
    return N - 1;
}

inline SeverityCategory category_from_theta(double theta, const SeverityMix& mix) {
    if (theta < mix.cuts[0]) return SeverityCategory::Mild;
    if (theta < mix.cuts[1]) return SeverityCategory::Moderate;
    return SeverityCategory::Severe;
}

inline std::vector<PatientProfile> generate_population(const PopulationConfig& cfg) {
    cfg.validate();
    const auto& sh = cfg.shares;
    const double q_distant = distant_given_poor(sh);
    const double distant_overall = sh.disadvantaged * sh.distant_within_disadvantaged;
    const double minority_given_distant = distant_overall > 0.0 ? sh.minority / distant_overall : 0.0;

    std::vector<PatientProfile> pop;
    pop.reserve(cfg.n_patients);
    for (std::size_t i = 0; i < cfg.n_patients; ++i) {
        auto rng = make_stream(cfg.seed, "population", i);
        // Fixed draw order per patient so shares can be varied with common random numbers.
        const double u_dis = rng.uniform(), u_poor = rng.uniform(), u_distant = rng.uniform();
        const double u_min = rng.uniform(), u_rural = rng.uniform(), u_male = rng.uniform();
        const double u_hi = rng.uniform(), u_sev = rng.uniform(), u_fac = rng.uniform();
        std::normal_distribution<double> z(0.0, 1.0);
        const double z_age = z(rng);
        const double z_dist = z(rng);

        PatientProfile p;
        p.id = patient_id(i);
        p.disadvantaged = u_dis < sh.disadvantaged;
        p.poor_household = p.disadvantaged && u_poor < sh.poor_within_disadvantaged;
        p.distant = p.disadvantaged && (!p.poor_household || u_distant < q_distant);
        p.disadvantaged = p.poor_household || p.distant;
        p.minority = p.distant && u_min < minority_given_distant;
        p.rural_hukou = u_rural < sh.rural;
        p.urban = !p.rural_hukou;
        p.male = u_male < sh.male;
        p.high_income = !p.poor_household && u_hi < sh.high_income;
        p.age = std::clamp(cfg.age_mean + cfg.age_sd * z_age, 40.0, 100.0);
        p.distance_km = std::exp(cfg.distance_log_mean + cfg.distance_log_sd * z_dist);

        SeverityCategory cat;
        if (cfg.severity.continuous) {
            std::gamma_distribution<double> ga(cfg.severity.beta_a, 1.0);
            std::gamma_distribution<double> gb(cfg.severity.beta_b, 1.0);
            const double x = ga(rng);
            const double y = gb(rng);
            p.theta = Severity::clamped(x / (x + y));
            cat = category_from_theta(p.theta.value(), cfg.severity);
        } else {
            const auto k = draw_index(u_sev, cfg.severity.probs);
            cat = static_cast<SeverityCategory>(k);
            p.theta = Severity(cfg.severity.theta[k]);
        }
        p.category = cat;
        p.facility_choice = facility_from_int(
            static_cast<int>(draw_index(u_fac, cfg.facility_probs[static_cast<std::size_t>(cat)])) + 1);
        pop.push_back(std::move(p));
    }
    return pop;
}

/// Draws d_i = 1{u_i < sigma(v_i)}; u_i is the patient's persistent taste draw.
inline std::vector<PatientProfile> simulate_choices(std::vector<PatientProfile> pop, const CostParams& cp,
                                                    const PreferenceParams& pp, const InsurancePlan& plan,
                                                    std::uint64_t seed) {
    for (std::size_t i = 0; i < pop.size(); ++i) {
        auto rng = make_stream(seed, "choices", i);
        pop[i].used_ambulatory = rng.uniform() < choice_probability(utility_insured(pop[i], cp, pp, plan));
    }
    return pop;
}

/// One patient-year of the usage panel, with the cost-sharing in force that year.
struct PanelRow {
    std::size_t patient = 0;
    int year = 0;
    bool post = false;
    bool used = false;
    double sigma = 0.0;
    double phi_pc = 1.0;
    double phi_hc = 1.0;
};

/// Usage panel that repeats each patient's cross-sectional decision in every year.
inline std::vector<PanelRow> static_usage(std::span<const PatientProfile> pop, std::span<const int> years,
                                          const CostParams& cp, const PreferenceParams& pp,
                                          const InsurancePlan& plan) {
    std::vector<PanelRow> rows;
    rows.reserve(pop.size() * years.size());
    for (std::size_t i = 0; i < pop.size(); ++i) {
        const double sigma = choice_probability(utility_insured(pop[i], cp, pp, plan));
        for (int y : years) {
            rows.push_back({i, y, false, pop[i].used_ambulatory, sigma, plan.phi_pc,
                            plan.phi_hc_for(pop[i].poor_household)});
        }
    }
    return rows;
}

/// Two-period panel: years before `shock.year` use `pre_plan`, later years the post plan.
/// Taste draws persist within patient, matching simulate_choices under `pre_plan`, unless the
/// shock asks for a fresh draw per year; the first year always keeps the cross-sectional draw.
inline std::vector<PanelRow> simulate_policy_shock(std::span<const PatientProfile> pop, const InsurancePlan& pre_plan,
                                                   const PolicyShock& shock, const PreferenceParams& pp,
                                                   const CostParams& cp, std::uint64_t seed,
                                                   std::span<const int> years) {
    std::vector<PanelRow> rows;
    rows.reserve(pop.size() * years.size());
    for (std::size_t i = 0; i < pop.size(); ++i) {
        auto rng = make_stream(seed, "choices", i);
        const double u0 = rng.uniform();
        for (std::size_t k = 0; k < years.size(); ++k) {
            const int y = years[k];
            const double u = (shock.redraw_tastes && k > 0)
                                 ? make_stream(seed, "yearly-tastes", i * 4096 + static_cast<std::size_t>(k)).uniform()
                                 : u0;
            const bool post = y >= shock.year;
            const InsurancePlan& plan = post ? shock.post_plan : pre_plan;
            const double sigma = choice_probability(utility_insured(pop[i], cp, pp, plan));
            rows.push_back({i, y, post, u < sigma, sigma, plan.phi_pc, plan.phi_hc_for(pop[i].poor_household)});
        }
    }
    return rows;
}

/// Expected change in use probability for treated (disadvantaged) patients between periods.
inline double true_policy_effect(std::span<const PatientProfile> pop, std::span<const PanelRow> panel) {
    std::vector<double> pre(pop.size(), 0.0), post(pop.size(), 0.0);
    std::vector<int> npre(pop.size(), 0), npost(pop.size(), 0);
    for (const auto& r : panel) {
        if (r.post) {
            post[r.patient] += r.sigma;
            ++npost[r.patient];
        } else {
            pre[r.patient] += r.sigma;
            ++npre[r.patient];
        }
    }
    double sum = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < pop.size(); ++i) {
        if (!pop[i].disadvantaged || npre[i] == 0 || npost[i] == 0) continue;
        sum += post[i] / npost[i] - pre[i] / npre[i];
        ++n;
    }
    if (n == 0) throw std::invalid_argument("no treated patients observed in both periods");
    return sum / n;
}

/// Claims implied by a usage panel: one CVD inpatient record per patient-year at the chosen
/// facility, an ambulatory record in years with use, and non-CVD inpatient records for
/// Moderate/Severe patients.
inline std::vector<ClaimRecord> simulate_costs(std::span<const PatientProfile> pop, std::span<const PanelRow> usage,
                                               const CostParams& cp, double noise_sd, std::uint64_t seed,
                                               const PopulationConfig& cfg) {
    std::vector<ClaimRecord> claims;
    const double scale = cp.money_scale_rmb;
    std::normal_distribution<double> z(0.0, 1.0);

    // Usage rows are grouped per patient for the non-CVD records.
    std::vector<std::vector<const PanelRow*>> by_patient(pop.size());
    for (const auto& r : usage) {
        if (r.patient >= pop.size()) throw std::out_of_range("usage row refers to unknown patient");
        by_patient[r.patient].push_back(&r);
    }

    for (std::size_t i = 0; i < pop.size(); ++i) {
        const auto& p = pop[i];
        auto rng = make_stream(seed, "costs", i);
        const double th = p.theta.effective();
        for (const PanelRow* r : by_patient[i]) {
            if (r->used) {
                const double total = scale * cp.p_ratio * std::pow(th, cp.alpha) * std::exp(noise_sd * z(rng));
                claims.push_back({p.id, r->year, RecordType::Ambulatory, Facility::THC, DiagnosisClass::CVD,
                                  "chronic_care", total, r->phi_pc * total});
            }
            const double log_cost = std::log(scale * cp.s(p.facility_choice)) + cp.beta * std::log(th) +
                                    (r->used ? cp.rho : 0.0) + noise_sd * z(rng);
            const double total = std::exp(log_cost);
            claims.push_back({p.id, r->year, RecordType::Inpatient, p.facility_choice, DiagnosisClass::CVD, "cvd",
                              total, r->phi_hc * total});
        }

        const SeverityCategory cat = p.category.value_or(category_from_theta(th, cfg.severity));
        if (cat == SeverityCategory::Mild || by_patient[i].empty()) continue;
        auto orng = make_stream(seed, "other_claims", i);
        double rank;
        if (cfg.severity.continuous) {
            const double lo = cat == SeverityCategory::Moderate ? cfg.severity.cuts[0] : cfg.severity.cuts[1];
            const double hi = cat == SeverityCategory::Moderate ? cfg.severity.cuts[1] : 1.0;
            rank = std::clamp((th - lo) / (hi - lo), 0.0, 1.0);
        } else {
            rank = orng.uniform();
        }
        const auto& range = cat == SeverityCategory::Moderate ? cfg.other.moderate_range : cfg.other.severe_range;
        const double target = range[0] * std::pow(range[1] / range[0], rank);

        // Distinct years of this patient, one record each, rescaled so the yearly mean is exactly `target`.
        std::vector<int> years;
        std::vector<double> phis;
        for (const PanelRow* r : by_patient[i]) {
            if (std::find(years.begin(), years.end(), r->year) == years.end()) {
                years.push_back(r->year);
                phis.push_back(r->phi_hc);
            }
        }
        std::vector<double> w(years.size());
        double wsum = 0.0;
        for (auto& x : w) {
            x = std::exp(cfg.other.record_noise_sd * z(orng));
            wsum += x;
        }
        const auto& cat_fac = cfg.facility_probs[static_cast<std::size_t>(cat)];
        for (std::size_t k = 0; k < years.size(); ++k) {
            double u = orng.uniform();
            std::size_t code = 0;
            for (double acc = 0.0; code < cfg.other.code_probs.size(); ++code) {
                acc += cfg.other.code_probs[code];
                if (u < acc) break;
            }
            code = std::min(code, cfg.other.codes.size() - 1);
            const Facility fac = facility_from_int(static_cast<int>(draw_index(orng.uniform(), cat_fac)) + 1);
            const double total = target * static_cast<double>(years.size()) * w[k] / wsum;
            claims.push_back({p.id, years[k], RecordType::Inpatient, fac, DiagnosisClass::Other, cfg.other.codes[code],
                              total, phis[k] * total});
        }
    }
    return claims;
}

/// Mean choice probability over disadvantaged patients.
inline double disadvantaged_use_share(std::span<const PatientProfile> pop, const CostParams& cp,
                                      const PreferenceParams& pp, const InsurancePlan& plan) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& p : pop) {
        if (!p.disadvantaged) continue;
        s += choice_probability(utility_insured(p, cp, pp, plan));
        ++n;
    }
    if (n == 0) throw std::invalid_argument("population has no disadvantaged patients");
    return s / static_cast<double>(n);
}

struct Calibration {
    PopulationConfig config;
    std::vector<PatientProfile> population;
    double use_share = 0.0;
    double lever = 0.0;
};

/// Calibration path x in [0, 2]. On [0, 1] the poor-household share within the disadvantaged
/// group rises from its feasible minimum to 1; on [1, 2] the discrete severity mix is tilted
/// towards Mild by (x - 1).
inline PopulationConfig apply_calibration_lever(PopulationConfig cfg, double x) {
    const double lo = std::max(0.0, 1.0 - cfg.shares.distant_within_disadvantaged);
    cfg.shares.poor_within_disadvantaged = lo + std::min(x, 1.0) * (1.0 - lo);
    if (x > 1.0 && !cfg.severity.continuous) {
        const double w = std::min(x, 2.0) - 1.0;
        auto& p = cfg.severity.probs;
        p = {p[0] + w * (1.0 - p[0]), (1.0 - w) * p[1], (1.0 - w) * p[2]};
        p[0] = 1.0 - p[1] - p[2];
    }
    return cfg;
}

/// Bisects the calibration path until the mean predicted use share of disadvantaged patients is
/// within `tol` of `target`.
inline Calibration calibrate_use_share(const PopulationConfig& base, double target, double tol = 1e-3) {
    auto share_at = [&](double x) {
        Calibration c;
        c.config = apply_calibration_lever(base, x);
        c.population = generate_population(c.config);
        c.use_share = disadvantaged_use_share(c.population, c.config.true_cost, c.config.true_pref, c.config.plan);
        c.lever = x;
        return c;
    };
    double lo = 0.0, hi = base.severity.continuous ? 1.0 : 2.0;
    const double s_lo = share_at(lo).use_share;
    const double s_hi = share_at(hi).use_share;
    if ((s_lo - target) * (s_hi - target) > 0.0) {
        throw std::invalid_argument("use-share target " + std::to_string(target) + " not bracketed by [" +
                                    std::to_string(std::min(s_lo, s_hi)) + ", " + std::to_string(std::max(s_lo, s_hi)) +
                                    "]");
    }
    double f_lo = s_lo - target;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        auto c = share_at(mid);
        if (std::abs(c.use_share - target) < tol) return c;
        if ((c.use_share - target) * f_lo > 0.0) {
            lo = mid;
            f_lo = c.use_share - target;
        } else {
            hi = mid;
        }
    }
    throw std::runtime_error("use-share calibration did not reach tolerance");
}

}  // namespace ambucare
