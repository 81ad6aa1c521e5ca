#pragma once

// End-to-end steps over claims data: severity construction, cost-sharing rates, the two-step
// estimator, the reduced-form panel and counterfactual inputs.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ambucare/cost_estimation.hpp"
#include "ambucare/did.hpp"
#include "ambucare/io.hpp"
#include "ambucare/logit.hpp"
#include "ambucare/published.hpp"
#include "ambucare/severity.hpp"
#include "ambucare/types.hpp"

namespace ambucare {

enum class SeverityMeasure { Discrete, PreferenceDiscounted, ModerateSevere, FiveBin };

inline SeverityMeasure parse_severity_measure(const std::string& s) {
    if (s == "discrete") return SeverityMeasure::Discrete;
    if (s == "pref" || s == "preference-discounted") return SeverityMeasure::PreferenceDiscounted;
    if (s == "mod-severe") return SeverityMeasure::ModerateSevere;
    if (s == "five-bin") return SeverityMeasure::FiveBin;
    throw std::invalid_argument("unknown severity measure '" + s + "' (expected discrete, pref, mod-severe or five-bin)");
}

inline std::string severity_measure_name(SeverityMeasure m) {
    switch (m) {
    case SeverityMeasure::Discrete: return "discrete";
    case SeverityMeasure::PreferenceDiscounted: return "pref";
    case SeverityMeasure::ModerateSevere: return "mod-severe";
    case SeverityMeasure::FiveBin: return "five-bin";
    }
    return "?";
}

/// Where category-level severities come from: the published constants, or the configured
/// percentile of the preference-discounted index within each category.
enum class CategoryTheta { Published, Percentile };

inline CategoryTheta parse_category_theta(const std::string& s) {
    if (s == "published") return CategoryTheta::Published;
    if (s == "percentile") return CategoryTheta::Percentile;
    throw std::invalid_argument("unknown category severity source '" + s + "' (expected published or percentile)");
}

inline std::string category_theta_name(CategoryTheta c) { return c == CategoryTheta::Published ? "published" : "percentile"; }

struct SeverityOptions {
    SeverityMeasure measure = SeverityMeasure::Discrete;
    CategoryTheta category_theta = CategoryTheta::Published;
    SeverityConfig config;
};

struct SeverityAssignment {
    std::map<std::string, Severity> theta;
    std::map<std::string, SeverityCategory> category;
    std::map<std::string, double> group_theta;  // severity of each category or bin
    std::vector<std::string> dropped;           // patients left out by the measure
};

inline std::map<std::string, PatientCovariates> covariates_of(std::span<const PatientProfile> patients) {
    std::map<std::string, PatientCovariates> out;
    for (const auto& p : patients) out[p.id] = {p.age, p.male, p.minority, p.urban};
    return out;
}

/// Discrete classes with the yearly average taken over every year in the data window.
inline std::map<std::string, SeverityCategory> classify_patients(std::span<const PatientProfile> patients,
                                                                 std::span<const ClaimRecord> claims,
                                                                 const SeverityConfig& cfg) {
    const int window = distinct_years(claims);
    const auto by_patient = group_by_patient(claims);
    std::map<std::string, SeverityCategory> out;
    for (const auto& p : patients) {
        auto it = by_patient.find(p.id);
        out[p.id] = it == by_patient.end() ? SeverityCategory::Mild : classify_discrete(it->second, cfg, window);
    }
    return out;
}

inline std::map<std::string, double> pref_theta_from_claims(std::span<const PatientProfile> patients,
                                                            std::span<const ClaimRecord> claims,
                                                            const SeverityConfig& cfg) {
    const bool any_other = std::any_of(claims.begin(), claims.end(), [&](const ClaimRecord& c) {
        return is_other_inpatient(c) && cfg.eligible_other_diagnoses.contains(c.diagnosis_code);
    });
    if (!any_other) {
        throw std::invalid_argument("preference-discounted severity needs non-CVD inpatient claims in eligible diagnosis groups");
    }
    const auto res = aux_residuals(claims, covariates_of(patients), cfg);
    return preference_discounted_theta(res, cfg);
}

inline SeverityAssignment assign_severity(std::span<const PatientProfile> patients, std::span<const ClaimRecord> claims,
                                          const SeverityOptions& opt) {
    const auto& cfg = opt.config;
    SeverityAssignment a;
    a.category = classify_patients(patients, claims, cfg);

    const bool need_pref = opt.measure == SeverityMeasure::PreferenceDiscounted || opt.measure == SeverityMeasure::FiveBin ||
                           opt.category_theta == CategoryTheta::Percentile;
    std::map<std::string, double> pref;
    if (need_pref) pref = pref_theta_from_claims(patients, claims, cfg);

    auto category_theta = [&](SeverityCategory c) {
        if (opt.category_theta == CategoryTheta::Published) return Severity(cfg.fallback_theta[static_cast<std::size_t>(c)]);
        std::vector<double> vals;
        for (const auto& [id, v] : pref) {
            auto it = a.category.find(id);
            if (it != a.category.end() && it->second == c) vals.push_back(v);
        }
        return assign_theta(c, vals, cfg, true);
    };
    std::array<std::optional<Severity>, 3> cat_theta;
    for (auto c : {SeverityCategory::Mild, SeverityCategory::Moderate, SeverityCategory::Severe}) {
        cat_theta[static_cast<std::size_t>(c)] = category_theta(c);
        a.group_theta[std::string(category_name(c))] = cat_theta[static_cast<std::size_t>(c)]->value();
    }

    switch (opt.measure) {
    case SeverityMeasure::Discrete:
        for (const auto& p : patients) a.theta.emplace(p.id, *cat_theta[static_cast<std::size_t>(a.category.at(p.id))]);
        break;
    case SeverityMeasure::ModerateSevere:
        for (const auto& p : patients) {
            const auto c = a.category.at(p.id);
            if (c == SeverityCategory::Mild) {
                a.dropped.push_back(p.id);
                continue;
            }
            a.theta.emplace(p.id, *cat_theta[static_cast<std::size_t>(c)]);
        }
        a.group_theta.erase("Mild");
        break;
    case SeverityMeasure::PreferenceDiscounted:
        // Patients outside the continuous index re-enter with their category severity.
        a.group_theta.erase("Moderate");
        a.group_theta.erase("Severe");
        for (const auto& p : patients) {
            auto it = pref.find(p.id);
            a.theta.emplace(p.id, it != pref.end() ? Severity::clamped(it->second)
                                                   : *cat_theta[static_cast<std::size_t>(a.category.at(p.id))]);
        }
        break;
    case SeverityMeasure::FiveBin: {
        const int window = distinct_years(claims);
        const auto by_patient = group_by_patient(claims);
        std::map<std::string, double> cost;
        for (const auto& p : patients) {
            if (a.category.at(p.id) == SeverityCategory::Mild) continue;
            cost[p.id] = yearly_other_cost(by_patient.at(p.id), window);
        }
        if (cost.size() < 5) throw std::invalid_argument("five-bin severity needs at least five Moderate/Severe patients");
        const auto bins = quantile_bins(cost, 5);
        std::array<std::vector<double>, 5> members;
        for (const auto& [id, b] : bins) {
            auto it = pref.find(id);
            if (it != pref.end()) members[static_cast<std::size_t>(b)].push_back(it->second);
        }
        std::array<std::optional<Severity>, 5> bin_theta;
        for (std::size_t b = 0; b < 5; ++b) {
            if (members[b].empty()) throw std::invalid_argument("five-bin severity: bin " + std::to_string(b + 1) + " is empty");
            bin_theta[b] = Severity::clamped(quantile(members[b], cfg.percentile));
            a.group_theta["bin" + std::to_string(b + 1)] = bin_theta[b]->value();
        }
        a.group_theta.erase("Moderate");
        a.group_theta.erase("Severe");
        for (const auto& p : patients) {
            auto it = bins.find(p.id);
            a.theta.emplace(p.id, it != bins.end() ? *bin_theta[static_cast<std::size_t>(it->second)] : *cat_theta[0]);
        }
        break;
    }
    }
    return a;
}

/// Patients with a severity under the assignment, theta and category filled in.
inline std::vector<PatientProfile> with_severity(std::span<const PatientProfile> patients, const SeverityAssignment& a) {
    std::vector<PatientProfile> out;
    for (const auto& p : patients) {
        auto it = a.theta.find(p.id);
        if (it == a.theta.end()) continue;
        PatientProfile q = p;
        q.theta = it->second;
        q.category = a.category.at(p.id);
        out.push_back(std::move(q));
    }
    return out;
}

/// Average cost-sharing rates as out-of-pocket over total spending: ambulatory claims for phi_pc and
/// CVD inpatient claims by poor-household status for phi_hc. Only years before `before_year` count
/// when it is set.
inline InsurancePlan plan_from_claims(std::span<const PatientProfile> patients, std::span<const ClaimRecord> claims,
                                      std::optional<int> before_year = std::nullopt) {
    std::map<std::string, bool> poor;
    for (const auto& p : patients) poor[p.id] = p.poor_household;
    double pc[2] = {0, 0}, hp[2] = {0, 0}, hr[2] = {0, 0};
    for (const auto& c : claims) {
        if (before_year && c.year >= *before_year) continue;
        auto it = poor.find(c.patient_id);
        if (it == poor.end()) continue;
        if (c.record_type == RecordType::Ambulatory) {
            pc[0] += c.oop_cost;
            pc[1] += c.total_cost;
        } else if (c.diagnosis_class == DiagnosisClass::CVD) {
            double* acc = it->second ? hp : hr;
            acc[0] += c.oop_cost;
            acc[1] += c.total_cost;
        }
    }
    auto rate = [](const double* a, const char* what) {
        if (!(a[1] > 0.0)) throw std::invalid_argument(std::string("no claims to compute ") + what);
        return a[0] / a[1];
    };
    InsurancePlan plan{rate(pc, "phi_pc"), rate(hp, "phi_hc for poor households"), rate(hr, "phi_hc for other patients")};
    plan.validate();
    return plan;
}

/// Patient-year panel: use = any ambulatory claim that year; treated = disadvantaged.
inline std::vector<DidObservation> did_panel(std::span<const PatientProfile> patients, std::span<const ClaimRecord> claims,
                                             int policy_year, const SeverityConfig& cfg = {}) {
    const auto cats = classify_patients(patients, claims, cfg);
    std::set<std::pair<std::string, int>> used, present;
    for (const auto& c : claims) {
        present.insert({c.patient_id, c.year});
        if (c.record_type == RecordType::Ambulatory) used.insert({c.patient_id, c.year});
    }
    std::map<std::string, const PatientProfile*> by_id;
    for (const auto& p : patients) by_id[p.id] = &p;
    std::vector<DidObservation> out;
    for (const auto& [id, year] : present) {
        auto it = by_id.find(id);
        if (it == by_id.end()) continue;
        const auto& p = *it->second;
        out.push_back({id, year, p.disadvantaged, year >= policy_year, used.contains({id, year}), p.age, p.male,
                       p.minority, p.urban, cats.at(id)});
    }
    std::set<int> years;
    for (const auto& o : out) years.insert(o.year);
    if (years.size() < 2) throw std::invalid_argument("difference-in-differences needs at least two years of data");
    return out;
}

// ---------------------------------------------------------------------------
// Two-step estimation

struct EstimateOptions {
    SeverityOptions severity;
    CostEstimationOptions cost;
    LogitOptions logit;
    int bootstrap = 0;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::optional<int> before_year;
};

struct EstimateOutput {
    SeverityAssignment severity;
    CostEstimate cost;
    InsurancePlan plan;
    LogitFit logit;
    std::size_t n_patients = 0;
};

inline EstimateOutput run_estimation(std::span<const PatientProfile> patients, std::span<const ClaimRecord> claims,
                                     const EstimateOptions& opt) {
    EstimateOutput out;
    std::vector<ClaimRecord> window;
    for (const auto& c : claims) {
        if (!opt.before_year || c.year < *opt.before_year) window.push_back(c);
    }
    if (window.empty()) throw std::invalid_argument("no claims in the estimation window");
    out.severity = assign_severity(patients, window, opt.severity);
    const auto pop = with_severity(patients, out.severity);
    out.cost = estimate_cost_params(window, out.severity.theta, covariates_of(pop), opt.cost);
    out.plan = plan_from_claims(pop, window);

    LogitOptions lo = opt.logit;
    lo.seed = opt.seed;
    const auto design = make_logit_design(pop, out.cost.params, out.plan, lo.rural_minority);
    check_identification(pop, lo.rural_minority);
    out.logit = fit_logit_mle(design, default_start(lo.rural_minority), lo);
    if (!out.logit.converged) {
        throw std::runtime_error("logit MLE did not converge (gradient max-norm " + std::to_string(out.logit.grad_norm) + ")");
    }
    if (opt.bootstrap > 0) {
        const auto b = bootstrap_se(design, out.logit, lo, opt.bootstrap, opt.seed, opt.threads);
        attach_bootstrap(out.logit, b);
    }
    out.n_patients = pop.size();
    return out;
}

inline io::json params_json(const EstimateOutput& e, const SeverityOptions& sev) {
    io::json groups = io::json::object();
    for (const auto& [k, v] : e.severity.group_theta) groups[k] = v;
    io::json j;
    j["severity"] = {{"measure", severity_measure_name(sev.measure)},
                     {"category_theta", category_theta_name(sev.category_theta)},
                     {"theta_by_group", groups},
                     {"n_dropped", e.severity.dropped.size()}};
    j["cost_params"] = io::to_json(e.cost.params);
    j["preference_params"] = io::to_json(e.logit.params);
    j["plan"] = io::to_json(e.plan);
    j["logit"] = io::to_json(e.logit);
    j["regressions"] = {{"ambulatory", io::to_json(e.cost.ambulatory)}, {"inpatient", io::to_json(e.cost.inpatient)}};
    j["n_patients"] = e.n_patients;
    j["warnings"] = e.cost.warnings;
    return j;
}

struct ModelParams {
    CostParams cost;
    PreferenceParams pref;
    InsurancePlan plan;
    SeverityOptions severity;
};

inline ModelParams model_params_from_json(const io::json& j) {
    if (!j.is_object()) throw io::ConfigError("parameter file must be a JSON object");
    for (const char* key : {"cost_params", "preference_params", "plan"}) {
        if (!j.contains(key)) throw io::ConfigError(std::string("parameter file lacks '") + key + "'");
    }
    ModelParams m;
    m.cost = io::cost_params_from_json(io::sub(j, "", "cost_params"), "cost_params");
    m.pref = io::preference_params_from_json(io::sub(j, "", "preference_params"), "preference_params");
    m.plan = io::plan_from_json(io::sub(j, "", "plan"), "plan");
    if (j.contains("severity")) {
        const auto& s = io::sub(j, "", "severity");
        std::string measure = "discrete", source = "published";
        io::read_key(s, "severity", "measure", measure);
        io::read_key(s, "severity", "category_theta", source);
        try {
            m.severity.measure = parse_severity_measure(measure);
            m.severity.category_theta = parse_category_theta(source);
        } catch (const std::invalid_argument& e) {
            throw io::ConfigError(std::string("config 'severity': ") + e.what());
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Scenario and figure configuration

struct ScenarioSet {
    std::vector<PolicyScenario> scenarios;
    CounterfactualOptions options;
};

inline Target parse_target(const std::string& s) {
    if (s == "disadvantaged") return Target::Disadvantaged;
    if (s == "regular") return Target::Regular;
    if (s == "poor") return Target::Poor;
    if (s == "all") return Target::All;
    throw io::ConfigError("unknown target group '" + s + "' (expected disadvantaged, regular, poor or all)");
}

inline ScenarioSet scenarios_from_json(const io::json& j) {
    if (!j.is_object()) throw io::ConfigError("scenario file must be a JSON object");
    io::reject_unknown(j, "", {"scenarios", "applies_to", "welfare_pct_base"});
    ScenarioSet set;
    std::string target = "disadvantaged";
    io::read_key(j, "", "applies_to", target);
    const Target default_target = parse_target(target);
    if (j.contains("welfare_pct_base")) {
        double b = 0.0;
        io::read_key(j, "", "welfare_pct_base", b);
        set.options.welfare_pct_base = b;
    }
    if (!j.contains("scenarios")) return set;
    const auto& arr = j.at("scenarios");
    if (!arr.is_array()) throw io::ConfigError("config key 'scenarios': expected array, got " + io::json_type_name(arr));
    std::set<std::string> labels;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string path = "scenarios[" + std::to_string(i) + "]";
        const auto& e = arr[i];
        if (!e.is_object()) throw io::ConfigError("config key '" + path + "': expected object, got " + io::json_type_name(e));
        io::reject_unknown(e, path, {"kind", "label", "cut", "subsidy_rmb", "phi_pc_delta", "phi_hc_poor",
                                     "phi_hc_regular", "remove_assistance", "travel_subsidy_rmb", "applies_to"});
        if (!e.contains("kind")) throw io::ConfigError("config key '" + path + ".kind' is required");
        std::string kind;
        io::read_key(e, path, "kind", kind);
        PolicyScenario s;
        if (kind == "baseline") {
            s = PolicyScenario::baseline();
        } else if (kind == "policy_a") {
            double cut = 0.2;
            io::read_key(e, path, "cut", cut);
            s = PolicyScenario::policy_a(cut);
        } else if (kind == "policy_b") {
            double subsidy = 200.0;
            io::read_key(e, path, "subsidy_rmb", subsidy);
            s = PolicyScenario::policy_b(subsidy);
        } else if (kind == "remove_assistance") {
            s = PolicyScenario::assistance_removal();
        } else if (kind == "custom") {
            s.label = "custom";
            io::read_key(e, path, "phi_pc_delta", s.phi_pc_delta);
            io::read_key(e, path, "remove_assistance", s.remove_assistance);
            io::read_key(e, path, "travel_subsidy_rmb", s.travel_subsidy_rmb);
            if (e.contains("phi_hc_poor")) {
                double v = 0.0;
                io::read_key(e, path, "phi_hc_poor", v);
                s.phi_hc_poor = v;
            }
            if (e.contains("phi_hc_regular")) {
                double v = 0.0;
                io::read_key(e, path, "phi_hc_regular", v);
                s.phi_hc_regular = v;
            }
        } else {
            throw io::ConfigError("config key '" + path + ".kind': unknown scenario kind '" + kind +
                                  "' (expected baseline, policy_a, policy_b, remove_assistance or custom)");
        }
        s.applies_to = default_target;
        if (e.contains("applies_to")) {
            std::string t;
            io::read_key(e, path, "applies_to", t);
            s.applies_to = parse_target(t);
        }
        io::read_key(e, path, "label", s.label);
        if (s.label.empty() || s.label.find_first_of(",/\\ ") != std::string::npos) {
            throw io::ConfigError("config key '" + path + ".label': labels must be non-empty without commas, slashes or spaces");
        }
        if (!labels.insert(s.label).second) throw io::ConfigError("duplicate scenario label '" + s.label + "'");
        set.scenarios.push_back(s);
    }
    return set;
}

struct CurveConfig {
    std::size_t grid_points = 99;
    CostParams cost = figure_cost_params();
    std::vector<CurveSeries> series;
};

inline std::vector<CurveSeries> curve_preset(const std::string& name) {
    if (name == "figure3") return {{"gamma=0", 0.0}, {"gamma=0.12", 0.12}, {"gamma=-0.04", -0.04}};
    if (name == "figure4") {
        return {{"gamma=0.12;ratio=1.0", 0.12, 1.0, 1.0},
                {"gamma=0.12;ratio=1.2", 0.12, 1.2, 1.0},
                {"gamma=-0.04;ratio=1.0", -0.04, 1.0, 1.0},
                {"gamma=-0.04;ratio=1.2", -0.04, 1.2, 1.0}};
    }
    auto variant = [](std::string label, BehavioralVariant v) {
        CurveSeries s;
        s.label = std::move(label);
        s.variant = v;
        return s;
    };
    if (name == "present_bias") {
        return {variant("delta=1", PresentBias{1.0}), variant("delta=0.8", PresentBias{0.8}),
                variant("delta=0.2", PresentBias{0.2})};
    }
    if (name == "salience") {
        return {variant("mu=1", Salience{1.0}), variant("mu=0.8", Salience{0.8}), variant("mu=0.2", Salience{0.2})};
    }
    if (name == "biased_belief") {
        return {variant("lambda_tilde=0.85", BiasedBelief{0.85}), variant("lambda_tilde=0.825", BiasedBelief{0.825}),
                variant("lambda_tilde=0.925", BiasedBelief{0.925})};
    }
    throw io::ConfigError("unknown curve preset '" + name +
                          "' (expected figure3, figure4, present_bias, salience or biased_belief)");
}

inline CurveConfig curves_from_json(const io::json& j) {
    if (!j.is_object()) throw io::ConfigError("curve configuration must be a JSON object");
    io::reject_unknown(j, "", {"preset", "grid_points", "cost_params", "series"});
    CurveConfig c;
    io::read_key(j, "", "grid_points", c.grid_points);
    if (c.grid_points == 0) throw io::ConfigError("config key 'grid_points': must be positive");
    if (j.contains("cost_params")) {
        // lambda alone fixes rho through the identity lambda = exp(rho / beta).
        io::json cj = io::sub(j, "", "cost_params");
        if (cj.contains("lambda") && !cj.contains("rho")) {
            double beta = c.cost.beta, lambda = 0.0;
            io::read_key(cj, "cost_params", "beta", beta);
            io::read_key(cj, "cost_params", "lambda", lambda);
            if (!(lambda > 0.0)) throw io::ConfigError("config key 'cost_params.lambda': must be positive");
            cj["rho"] = beta * std::log(lambda);
        }
        c.cost = io::cost_params_from_json(cj, "cost_params", c.cost);
    }
    if (j.contains("preset")) {
        std::string preset;
        io::read_key(j, "", "preset", preset);
        c.series = curve_preset(preset);
    }
    if (j.contains("series")) {
        const auto& arr = j.at("series");
        if (!arr.is_array()) throw io::ConfigError("config key 'series': expected array, got " + io::json_type_name(arr));
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string path = "series[" + std::to_string(i) + "]";
            const auto& e = arr[i];
            if (!e.is_object()) throw io::ConfigError("config key '" + path + "': expected object, got " + io::json_type_name(e));
            io::reject_unknown(e, path, {"label", "gamma", "phi_pc", "phi_hc", "travel_norm", "facility", "variant"});
            CurveSeries s;
            s.label = path;
            io::read_key(e, path, "label", s.label);
            if (s.label.empty() || s.label.find_first_of(",\"\n\r") != std::string::npos) {
                throw io::ConfigError("config key '" + path + ".label': labels must be non-empty without commas, quotes or newlines");
            }
            io::read_key(e, path, "gamma", s.gamma);
            io::read_key(e, path, "phi_pc", s.phi_pc);
            io::read_key(e, path, "phi_hc", s.phi_hc);
            io::read_key(e, path, "travel_norm", s.travel);
            int fac = 1;
            io::read_key(e, path, "facility", fac);
            try {
                s.facility = facility_from_int(fac);
            } catch (const std::invalid_argument& ex) {
                throw io::ConfigError("config key '" + path + ".facility': " + ex.what());
            }
            if (!(s.phi_pc > 0.0 && s.phi_hc > 0.0)) throw io::ConfigError("config key '" + path + "': cost-sharing must be positive");
            if (e.contains("variant")) {
                const auto& v = io::sub(e, path, "variant");
                const std::string vp = path + ".variant";
                io::reject_unknown(v, vp, {"kind", "delta", "mu", "lambda_tilde"});
                std::string kind = "baseline";
                io::read_key(v, vp, "kind", kind);
                double x = 1.0;
                if (kind == "baseline") s.variant = Baseline{};
                else if (kind == "present_bias") { io::read_key(v, vp, "delta", x); s.variant = PresentBias{x}; }
                else if (kind == "salience") { io::read_key(v, vp, "mu", x); s.variant = Salience{x}; }
                else if (kind == "biased_belief") { x = c.cost.lambda; io::read_key(v, vp, "lambda_tilde", x); s.variant = BiasedBelief{x}; }
                else throw io::ConfigError("config key '" + vp + ".kind': unknown variant '" + kind + "'");
                try {
                    validate_variant(s.variant);
                } catch (const std::invalid_argument& ex) {
                    throw io::ConfigError("config key '" + vp + "': " + ex.what());
                }
            }
            c.series.push_back(s);
        }
    }
    if (c.series.empty()) throw io::ConfigError("curve configuration defines no series (set 'preset' or 'series')");
    return c;
}

}  // namespace ambucare
