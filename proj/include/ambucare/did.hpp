#pragma once

// Difference-in-differences probit on a patient-year panel: disadvantaged patients are treated,
// years from the reform onwards are post.

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ambucare/probit.hpp"
#include "ambucare/types.hpp"

namespace ambucare {

struct DidObservation {
    std::string patient_id;
    int year = 0;
    bool treated = false;
    bool post = false;
    bool used = false;
    double age = 0.0;
    bool male = false;
    bool minority = false;
    bool urban = false;
    SeverityCategory category = SeverityCategory::Mild;
};

struct DidSpec {
    std::string label;
    bool demographics = false;
    bool severity = false;
    bool mild_moderate_only = false;
    bool cluster_by_patient = true;
};

/// The three reported specifications: year effects only; plus demographics and severity;
/// the latter on Mild/Moderate patients.
inline std::vector<DidSpec> standard_did_specs() {
    return {{"(1)", false, false, false, true}, {"(2)", true, true, false, true}, {"(3)", true, true, true, true}};
}

inline constexpr const char* kInteraction = "disadvantaged_x_post";

struct DidResult {
    DidSpec spec;
    RegressionResult fit;
    // Average change in the use probability of treated post-period observations when the
    // interaction is switched off, with its delta-method standard error.
    double effect = 0.0;
    double effect_se = 0.0;
    std::size_t n_obs = 0;
    std::size_t n_treated = 0;
    std::size_t n_control = 0;
};

inline DidResult did_analysis(std::span<const DidObservation> panel, const DidSpec& spec) {
    std::vector<const DidObservation*> rows;
    for (const auto& o : panel) {
        if (spec.mild_moderate_only && o.category == SeverityCategory::Severe) continue;
        rows.push_back(&o);
    }
    DidResult out;
    out.spec = spec;
    std::set<std::string> treated_ids, control_ids;
    bool any_pre = false, any_post = false;
    for (const auto* o : rows) {
        (o->treated ? treated_ids : control_ids).insert(o->patient_id);
        (o->post ? any_post : any_pre) = true;
    }
    if (treated_ids.empty()) throw std::invalid_argument("difference-in-differences sample has no treated observations");
    if (control_ids.empty()) throw std::invalid_argument("difference-in-differences sample has no control observations");
    if (!any_pre || !any_post) throw std::invalid_argument("difference-in-differences needs pre- and post-period years");

    const std::size_t n = rows.size();
    std::vector<double> y(n);
    std::vector<Column> cols{{"disadvantaged", std::vector<double>(n)}, {kInteraction, std::vector<double>(n)}};
    if (spec.demographics) {
        for (const char* name : {"age", "male", "minority", "urban"}) cols.push_back({name, std::vector<double>(n)});
    }
    std::vector<Categorical> fe{{"year", std::vector<std::string>(n), std::nullopt}};
    if (spec.severity) fe.push_back({"severity", std::vector<std::string>(n), std::string("Mild")});
    std::vector<std::string> cluster;
    if (spec.cluster_by_patient) cluster.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& o = *rows[i];
        y[i] = o.used ? 1.0 : 0.0;
        cols[0].values[i] = o.treated ? 1.0 : 0.0;
        cols[1].values[i] = (o.treated && o.post) ? 1.0 : 0.0;
        if (spec.demographics) {
            cols[2].values[i] = o.age;
            cols[3].values[i] = o.male ? 1.0 : 0.0;
            cols[4].values[i] = o.minority ? 1.0 : 0.0;
            cols[5].values[i] = o.urban ? 1.0 : 0.0;
        }
        fe[0].levels[i] = std::to_string(o.year);
        if (spec.severity) fe[1].levels[i] = std::string(category_name(o.category));
        if (spec.cluster_by_patient) cluster[i] = o.patient_id;
    }
    if (spec.severity &&
        std::find(fe[1].levels.begin(), fe[1].levels.end(), "Mild") == fe[1].levels.end()) {
        fe[1].base.reset();
    }
    // Demographic columns without variation in the sample are dropped rather than reported as collinear.
    std::erase_if(cols, [](const Column& c) {
        return std::all_of(c.values.begin(), c.values.end(), [&](double v) { return v == c.values.front(); });
    });
    if (std::none_of(cols.begin(), cols.end(), [](const Column& c) { return c.name == kInteraction; })) {
        throw std::invalid_argument("treatment-by-post interaction has no variation");
    }

    auto model = probit_fit(y, cols, fe, cluster);
    const auto k = static_cast<Eigen::Index>(model.result.index_of(kInteraction));
    auto att = [&](const Eigen::VectorXd& b) {
        const Eigen::VectorXd z = model.X * b;
        double acc = 0.0, m = 0.0;
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            if (model.X(i, k) != 1.0) continue;
            acc += norm_cdf(z(i)) - norm_cdf(z(i) - b(k));
            m += 1.0;
        }
        Eigen::VectorXd r(1);
        r(0) = acc / m;
        return r;
    };
    out.effect = att(model.result.coef)(0);
    out.effect_se = std::sqrt(std::max(0.0, delta_method(att, model.result.coef, model.result.vcov)(0, 0)));
    out.fit = std::move(model.result);
    out.n_obs = n;
    out.n_treated = treated_ids.size();
    out.n_control = control_ids.size();
    return out;
}

}  // namespace ambucare
