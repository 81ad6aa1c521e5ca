#pragma once

// Severity measures built from non-CVD hospitalization records: the Mild/Moderate/Severe
// classification and the continuous preference-discounted index.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ambucare/ols.hpp"
#include "ambucare/types.hpp"

namespace ambucare {

/// Diagnosis groups for which no ambulatory care is provided.
inline std::set<std::string> default_eligible_diagnoses() {
    return {"respiratory", "gastroenterology", "orthopedics", "renal_esrd", "appendicitis", "anorectal", "trauma"};
}

struct SeverityConfig {
    double moderate_threshold_rmb = 15000.0;
    double percentile = 0.99;
    std::set<std::string> eligible_other_diagnoses = default_eligible_diagnoses();
    // Empty means in-sample diagnosis frequencies.
    std::map<std::string, double> frequency_weights;
    std::array<double, 3> fallback_theta{0.1, 0.48, 0.72};
    // Demographic covariates of the auxiliary regression.
    std::vector<std::string> covariates{"age", "male", "minority", "urban"};
};

inline bool is_other_inpatient(const ClaimRecord& c) {
    return c.record_type == RecordType::Inpatient && c.diagnosis_class == DiagnosisClass::Other;
}

inline int distinct_years(std::span<const ClaimRecord> claims) {
    std::set<int> years;
    for (const auto& c : claims) years.insert(c.year);
    return static_cast<int>(years.size());
}

/// Total non-CVD inpatient cost divided by the number of enrolled years.
inline double yearly_other_cost(std::span<const ClaimRecord> claims, int enrolled_years) {
    double total = 0.0;
    for (const auto& c : claims) {
        if (is_other_inpatient(c)) total += c.total_cost;
    }
    return enrolled_years > 0 ? total / enrolled_years : 0.0;
}

/// Claims of a single patient. Enrollment years default to the distinct years present in the claims.
inline SeverityCategory classify_discrete(std::span<const ClaimRecord> claims, const SeverityConfig& cfg,
                                          int enrolled_years = 0) {
    const bool any_other = std::any_of(claims.begin(), claims.end(), is_other_inpatient);
    if (!any_other) return SeverityCategory::Mild;
    if (enrolled_years <= 0) enrolled_years = distinct_years(claims);
    return yearly_other_cost(claims, enrolled_years) < cfg.moderate_threshold_rmb ? SeverityCategory::Moderate
                                                                                   : SeverityCategory::Severe;
}

inline std::map<std::string, std::vector<ClaimRecord>> group_by_patient(std::span<const ClaimRecord> claims) {
    std::map<std::string, std::vector<ClaimRecord>> out;
    for (const auto& c : claims) out[c.patient_id].push_back(c);
    return out;
}

/// Linear-interpolation quantile (type 7).
inline double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level must lie in [0,1]");
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

/// Category severity: the configured percentile of the continuous values in the category, or the
/// fallback constant when none are available and `allow_fallback` is set.
inline Severity assign_theta(SeverityCategory category, std::span<const double> category_thetas,
                             const SeverityConfig& cfg, bool allow_fallback = true) {
    if (category_thetas.empty()) {
        if (!allow_fallback) {
            throw std::invalid_argument(std::string("no severity values for category ") +
                                        std::string(category_name(category)));
        }
        return Severity(cfg.fallback_theta[static_cast<std::size_t>(category)]);
    }
    return Severity::clamped(quantile({category_thetas.begin(), category_thetas.end()}, cfg.percentile));
}

struct PatientCovariates {
    double age = 0.0;
    bool male = false;
    bool minority = false;
    bool urban = false;

    double get(const std::string& name) const {
        if (name == "age") return age;
        if (name == "male") return male ? 1.0 : 0.0;
        if (name == "minority") return minority ? 1.0 : 0.0;
        if (name == "urban") return urban ? 1.0 : 0.0;
        throw std::invalid_argument("unknown covariate " + name);
    }
};

struct ResidualRecord {
    std::string patient_id;
    std::string diagnosis_code;
    int year = 0;
    double residual = 0.0;
};

/// Residuals of ln(cost) on demographics plus year and facility fixed effects, over eligible
/// non-CVD inpatient records.
inline std::vector<ResidualRecord> aux_residuals(std::span<const ClaimRecord> claims,
                                                 const std::map<std::string, PatientCovariates>& covariates,
                                                 const SeverityConfig& cfg) {
    std::vector<const ClaimRecord*> rows;
    for (const auto& c : claims) {
        if (!is_other_inpatient(c) || !cfg.eligible_other_diagnoses.contains(c.diagnosis_code)) continue;
        if (!(c.total_cost > 0.0)) throw std::invalid_argument("non-CVD claim with non-positive cost");
        rows.push_back(&c);
    }
    if (rows.empty()) throw std::invalid_argument("no eligible non-CVD inpatient claims");

    const std::size_t n = rows.size();
    std::vector<double> y(n);
    std::vector<Column> cols;
    for (const auto& name : cfg.covariates) cols.push_back({name, std::vector<double>(n)});
    Categorical year_fe{"year", std::vector<std::string>(n), std::nullopt};
    Categorical fac_fe{"facility", std::vector<std::string>(n), std::string("1")};
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = *rows[i];
        auto it = covariates.find(c.patient_id);
        if (it == covariates.end()) throw std::invalid_argument("no covariates for patient " + c.patient_id);
        y[i] = std::log(c.total_cost);
        for (std::size_t k = 0; k < cols.size(); ++k) cols[k].values[i] = it->second.get(cols[k].name);
        year_fe.levels[i] = std::to_string(c.year);
        fac_fe.levels[i] = std::to_string(static_cast<int>(c.facility));
    }
    // A base level that never occurs would leave every level in the design.
    if (std::find(fac_fe.levels.begin(), fac_fe.levels.end(), "1") == fac_fe.levels.end()) fac_fe.base.reset();
    const std::vector<Categorical> fe{year_fe, fac_fe};
    const auto fit = ols(y, cols, fe);
    std::vector<ResidualRecord> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({rows[i]->patient_id, rows[i]->diagnosis_code, rows[i]->year,
                       fit.residuals(static_cast<Eigen::Index>(i))});
    }
    return out;
}

/// In-sample diagnosis frequencies, normalized to sum to one.
inline std::map<std::string, double> diagnosis_frequencies(std::span<const ResidualRecord> residuals) {
    std::map<std::string, double> w;
    for (const auto& r : residuals) w[r.diagnosis_code] += 1.0;
    const double n = static_cast<double>(residuals.size());
    for (auto& [code, v] : w) v /= n;
    return w;
}

/// Per-patient frequency-weighted mean residual, min-max standardized to [0,1].
/// The endpoints are exact 0 and 1; callers clamp with Severity::clamped.
inline std::map<std::string, double> preference_discounted_theta(std::span<const ResidualRecord> residuals,
                                                                 const SeverityConfig& cfg) {
    std::map<std::string, double> weights = cfg.frequency_weights;
    if (weights.empty()) weights = diagnosis_frequencies(residuals);
    double wsum = 0.0;
    for (const auto& [code, v] : weights) wsum += v;
    if (!(wsum > 0.0)) throw std::invalid_argument("diagnosis weights must have a positive sum");

    std::map<std::string, std::pair<double, double>> acc;  // weighted sum, weight total
    for (const auto& r : residuals) {
        auto it = weights.find(r.diagnosis_code);
        if (it == weights.end()) throw std::invalid_argument("no weight for diagnosis " + r.diagnosis_code);
        const double w = it->second / wsum;
        auto& a = acc[r.patient_id];
        a.first += w * r.residual;
        a.second += w;
    }
    if (acc.size() < 2) throw std::invalid_argument("preference-discounted severity needs at least two patients");
    std::map<std::string, double> mean;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& [id, a] : acc) {
        if (!(a.second > 0.0)) throw std::invalid_argument("patient " + id + " has zero total diagnosis weight");
        const double m = a.first / a.second;
        mean[id] = m;
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    if (!(hi > lo)) throw std::invalid_argument("all weighted residual means are identical; standardization undefined");
    for (auto& [id, m] : mean) m = (m - lo) / (hi - lo);
    return mean;
}

/// Assigns each value to one of `bins` equal-count groups by rank (0-based), ties broken by key order.
inline std::map<std::string, int> quantile_bins(const std::map<std::string, double>& values, int bins) {
    if (bins < 1) throw std::invalid_argument("bin count must be positive");
    std::vector<std::pair<double, std::string>> order;
    for (const auto& [k, v] : values) order.emplace_back(v, k);
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::map<std::string, int> out;
    const auto n = order.size();
    for (std::size_t r = 0; r < n; ++r) {
        out[order[r].second] = static_cast<int>((r * static_cast<std::size_t>(bins)) / n);
    }
    return out;
}

}  // namespace ambucare
