#pragma once

// First estimation step: log-cost regressions for ambulatory and CVD inpatient spending.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "ambucare/ols.hpp"
#include "ambucare/severity.hpp"
#include "ambucare/types.hpp"

namespace ambucare {

struct CostEstimationOptions {
    std::vector<std::string> covariates{"age", "male"};
    bool cluster_by_patient = false;
    std::optional<double> p_ratio;          // overrides the data-derived ceiling ratio
    std::optional<double> money_scale_rmb;  // overrides the data-derived THC ceiling
};

struct CostEstimate {
    CostParams params;
    RegressionResult ambulatory;
    RegressionResult inpatient;
    std::vector<std::string> excluded_patients;
    std::vector<std::string> warnings;
};

namespace detail {

inline double covariate_mean_term(const RegressionResult& r, const std::vector<std::string>& names,
                                  const std::map<std::string, double>& means) {
    double acc = r.coefficient("const");
    for (const auto& name : names) acc += r.coefficient(name) * means.at(name);
    return acc;
}

}  // namespace detail

/// Ambulatory records are summed per patient-year; CVD inpatient records per patient-year-facility.
/// The use indicator of an inpatient cell is 1 when the patient has any ambulatory record that year.
/// The ceiling ratio and money scale are the two equations' predictions at theta = 1, base year and
/// sample-mean covariates.
inline CostEstimate estimate_cost_params(std::span<const ClaimRecord> claims,
                                         const std::map<std::string, Severity>& theta,
                                         const std::map<std::string, PatientCovariates>& covariates,
                                         const CostEstimationOptions& opt = {}) {
    CostEstimate out;
    std::set<std::string> excluded;
    auto usable = [&](const std::string& id) {
        auto it = theta.find(id);
        if (it == theta.end()) throw std::invalid_argument("no severity for patient " + id);
        if (!covariates.contains(id)) throw std::invalid_argument("no covariates for patient " + id);
        const double v = it->second.value();
        if (v <= kThetaFloor || v >= kThetaCeil) {
            excluded.insert(id);
            return false;
        }
        return true;
    };

    std::map<std::pair<std::string, int>, double> amb;
    std::map<std::tuple<std::string, int, int>, double> inp;
    for (const auto& c : claims) {
        c.validate();
        if (c.record_type == RecordType::Ambulatory) {
            amb[{c.patient_id, c.year}] += c.total_cost;
        } else if (c.diagnosis_class == DiagnosisClass::CVD) {
            inp[{c.patient_id, c.year, static_cast<int>(c.facility)}] += c.total_cost;
        }
    }
    if (amb.empty()) throw std::invalid_argument("no ambulatory claims for the ambulatory cost equation");
    if (inp.empty()) throw std::invalid_argument("no CVD inpatient claims for the inpatient cost equation");

    std::map<std::string, double> cov_sum;
    std::set<std::string> pooled;
    auto add_cov = [&](const std::string& id) {
        if (!pooled.insert(id).second) return;
        for (const auto& name : opt.covariates) cov_sum[name] += covariates.at(id).get(name);
    };

    // Ambulatory equation.
    std::vector<double> ya;
    std::vector<Column> ca{{"ln_theta", {}}};
    for (const auto& name : opt.covariates) ca.push_back({name, {}});
    Categorical yfa{"year", {}, std::nullopt};
    std::vector<std::string> cla;
    for (const auto& [key, total] : amb) {
        if (!usable(key.first)) continue;
        ya.push_back(std::log(total));
        ca[0].values.push_back(std::log(theta.at(key.first).value()));
        for (std::size_t j = 0; j < opt.covariates.size(); ++j) {
            ca[j + 1].values.push_back(covariates.at(key.first).get(opt.covariates[j]));
        }
        yfa.levels.push_back(std::to_string(key.second));
        cla.push_back(key.first);
        add_cov(key.first);
    }

    // Inpatient equation.
    std::vector<double> yh;
    std::vector<Column> ch{{"ln_theta", {}}, {"ambulatory", {}}};
    for (const auto& name : opt.covariates) ch.push_back({name, {}});
    Categorical yfh{"year", {}, std::nullopt};
    Categorical ffh{"facility", {}, std::string("1")};
    std::vector<std::string> clh;
    for (const auto& [key, total] : inp) {
        const auto& [id, year, fac] = key;
        if (!usable(id)) continue;
        yh.push_back(std::log(total));
        ch[0].values.push_back(std::log(theta.at(id).value()));
        ch[1].values.push_back(amb.contains({id, year}) ? 1.0 : 0.0);
        for (std::size_t j = 0; j < opt.covariates.size(); ++j) {
            ch[j + 2].values.push_back(covariates.at(id).get(opt.covariates[j]));
        }
        yfh.levels.push_back(std::to_string(year));
        ffh.levels.push_back(std::to_string(fac));
        clh.push_back(id);
        add_cov(id);
    }
    if (std::find(ffh.levels.begin(), ffh.levels.end(), "1") == ffh.levels.end()) {
        throw std::invalid_argument("no inpatient records at the benchmark facility type (THC)");
    }

    const std::vector<Categorical> fea{yfa};
    const std::vector<Categorical> feh{yfh, ffh};
    const std::span<const std::string> cluster_a = opt.cluster_by_patient ? std::span<const std::string>(cla) : std::span<const std::string>();
    const std::span<const std::string> cluster_h = opt.cluster_by_patient ? std::span<const std::string>(clh) : std::span<const std::string>();
    out.ambulatory = ols(ya, ca, fea, cluster_a);
    out.inpatient = ols(yh, ch, feh, cluster_h);

    const double alpha = out.ambulatory.coefficient("ln_theta");
    const double beta = out.inpatient.coefficient("ln_theta");
    const double rho = out.inpatient.coefficient("ambulatory");
    if (!(beta > 0.0)) throw std::runtime_error("estimated beta is not positive (" + std::to_string(beta) + "); lambda undefined");
    if (!(alpha > 0.0)) throw std::runtime_error("estimated alpha is not positive (" + std::to_string(alpha) + ")");
    if (!(rho < 0.0)) {
        throw std::runtime_error("estimated ambulatory-use coefficient is not negative (" + std::to_string(rho) +
                                 "); effectiveness would be >= 1");
    }
    std::array<double, 4> s{1.0, 1.0, 1.0, 1.0};
    for (int f = 2; f <= 4; ++f) {
        const std::string name = "facility=" + std::to_string(f);
        if (std::find(out.inpatient.names.begin(), out.inpatient.names.end(), name) == out.inpatient.names.end()) {
            out.warnings.push_back("facility type " + std::to_string(f) + " absent; multiplier set to 1");
            continue;
        }
        s[static_cast<std::size_t>(f - 1)] = std::exp(out.inpatient.coefficient(name));
        if (s[static_cast<std::size_t>(f - 1)] < 1.0) {
            throw std::runtime_error("estimated multiplier for facility type " + std::to_string(f) + " is below 1");
        }
    }

    std::map<std::string, double> means;
    for (const auto& name : opt.covariates) means[name] = cov_sum[name] / static_cast<double>(pooled.size());
    const double ln_k = detail::covariate_mean_term(out.inpatient, opt.covariates, means);
    const double ln_p = detail::covariate_mean_term(out.ambulatory, opt.covariates, means);
    const double scale = opt.money_scale_rmb.value_or(std::exp(ln_k));
    const double p_ratio = opt.p_ratio.value_or(std::exp(ln_p - ln_k));
    out.params = CostParams::from_regression(alpha, beta, rho, s, p_ratio, scale);

    out.excluded_patients.assign(excluded.begin(), excluded.end());
    if (!excluded.empty()) {
        out.warnings.push_back(std::to_string(excluded.size()) +
                               " patient(s) with severity at the clamp boundary excluded from the cost regressions");
    }
    return out;
}

}  // namespace ambucare
