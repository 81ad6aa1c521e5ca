#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace ambucare {

// Facility types ordered by treatment capacity; THC is the cost benchmark.
enum class Facility : int { THC = 1, TCM = 2, General = 3, NonLocal = 4 };

inline constexpr std::array<Facility, 4> kFacilities{Facility::THC, Facility::TCM, Facility::General,
                                                     Facility::NonLocal};

inline constexpr std::size_t facility_index(Facility f) { return static_cast<std::size_t>(f) - 1; }

inline Facility facility_from_int(int code) {
    if (code < 1 || code > 4) {
        throw std::invalid_argument("facility type must be 1..4, got " + std::to_string(code));
    }
    return static_cast<Facility>(code);
}

inline std::string_view facility_name(Facility f) {
    switch (f) {
    case Facility::THC: return "THC";
    case Facility::TCM: return "TCM";
    case Facility::General: return "General";
    case Facility::NonLocal: return "NonLocal";
    }
    return "?";
}

enum class SeverityCategory : int { Mild = 0, Moderate = 1, Severe = 2 };

inline std::string_view category_name(SeverityCategory c) {
    switch (c) {
    case SeverityCategory::Mild: return "Mild";
    case SeverityCategory::Moderate: return "Moderate";
    case SeverityCategory::Severe: return "Severe";
    }
    return "?";
}

inline constexpr double kThetaFloor = 1e-6;
inline constexpr double kThetaCeil = 1.0 - 1e-6;

/// Disease severity on the open interval (0,1).
class Severity {
public:
    explicit Severity(double theta) : theta_(theta) {
        if (!(theta > 0.0 && theta < 1.0)) {
            throw std::invalid_argument("severity must lie strictly inside (0,1), got " + std::to_string(theta));
        }
    }

    /// Maps any value in [0,1] into [kThetaFloor, kThetaCeil].
    static Severity clamped(double theta) {
        if (std::isnan(theta)) throw std::invalid_argument("severity is NaN");
        return Severity(std::clamp(theta, kThetaFloor, kThetaCeil));
    }

    double value() const noexcept { return theta_; }

    // Value used inside power laws.
    double effective() const noexcept { return std::clamp(theta_, kThetaFloor, kThetaCeil); }

    friend bool operator==(const Severity&, const Severity&) = default;

private:
    double theta_;
};

struct PatientProfile {
    std::string id;
    Severity theta{0.5};
    Facility facility_choice = Facility::THC;
    bool disadvantaged = false;
    bool poor_household = false;
    bool distant = false;
    bool rural_hukou = false;
    bool urban = false;
    bool minority = false;
    bool male = false;
    bool high_income = false;
    double age = 65.0;
    bool used_ambulatory = false;
    double distance_km = 0.0;
    // Discrete class when known; synthetic populations carry it, data-derived ones get it from claims.
    std::optional<SeverityCategory> category;

    void validate() const {
        if (disadvantaged != (poor_household || distant)) {
            throw std::invalid_argument("patient " + id + ": disadvantaged must equal poor_household OR distant");
        }
    }
};

inline constexpr double kDefaultMoneyScaleRmb = 6300.0;
inline constexpr double kLambdaTolerance = 1e-3;

/// Cost-function primitives in units of the THC hospitalization ceiling.
struct CostParams {
    double alpha = 1.0;
    double beta = 1.5;
    double lambda = 0.85;
    double rho = 1.5 * std::log(0.85);
    std::array<double, 4> s_mult{1.0, 1.0, 1.0, 1.0};
    double p_ratio = 0.12;
    double money_scale_rmb = kDefaultMoneyScaleRmb;

    double s(Facility f) const { return s_mult[facility_index(f)]; }

    /// Builds parameters from regression output; lambda is derived as exp(rho / beta).
    static CostParams from_regression(double alpha, double beta, double rho, std::array<double, 4> s_mult,
                                      double p_ratio, double money_scale_rmb = kDefaultMoneyScaleRmb) {
        if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive to derive lambda");
        CostParams cp{alpha, beta, std::exp(rho / beta), rho, s_mult, p_ratio, money_scale_rmb};
        cp.validate();
        return cp;
    }

    /// Throws on any violated invariant, including |lambda - exp(rho/beta)| > lambda_tol.
    void validate(double lambda_tol = kLambdaTolerance) const {
        if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
        if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
        if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("lambda must lie in (0,1)");
        if (s_mult[0] != 1.0) throw std::invalid_argument("s_mult[THC] must equal 1");
        for (double s : s_mult) {
            if (!(s >= 1.0)) throw std::invalid_argument("facility multipliers must be >= 1");
        }
        if (!(p_ratio > 0.0)) throw std::invalid_argument("p_ratio must be positive");
        if (!(money_scale_rmb > 0.0)) throw std::invalid_argument("money_scale_rmb must be positive");
        if (std::abs(lambda - std::exp(rho / beta)) > lambda_tol) {
            throw std::invalid_argument("lambda inconsistent with exp(rho/beta): " + std::to_string(lambda) +
                                        " vs " + std::to_string(std::exp(rho / beta)));
        }
    }

    double to_rmb(double normalized) const { return normalized * money_scale_rmb; }
    double to_norm(double rmb) const { return rmb / money_scale_rmb; }
};

struct PreferenceParams {
    double gamma_h = 0.0;
    double gamma_l = 0.0;
    double gamma_R = 0.0;
    double gamma_M = 0.0;
    double t_b = 0.1;
    double t_H = 0.0;
    double t_M = 0.0;
    bool rural_minority = false;

    void validate() const {
        if (!rural_minority && (gamma_R != 0.0 || gamma_M != 0.0)) {
            throw std::invalid_argument("gamma_R and gamma_M must be 0 when the rural/minority extension is off");
        }
        if (!(t_b >= 0.0)) throw std::invalid_argument("t_b must be non-negative");
    }
};

/// Average cost-sharing rates. Inpatient rates are split by poor-household status.
struct InsurancePlan {
    double phi_pc = 1.0;
    double phi_hc_poor = 1.0;
    double phi_hc_regular = 1.0;

    double phi_hc_for(bool poor_household) const { return poor_household ? phi_hc_poor : phi_hc_regular; }

    void validate() const {
        auto check = [](double v, const char* name) {
            if (!(v > 0.0 && v <= 1.0)) {
                throw std::invalid_argument(std::string(name) + " must lie in (0,1], got " + std::to_string(v));
            }
        };
        check(phi_pc, "phi_pc");
        check(phi_hc_poor, "phi_hc_poor");
        check(phi_hc_regular, "phi_hc_regular");
    }
};

struct Baseline {};
struct PresentBias {
    double delta;
};
struct Salience {
    double mu;
};
struct BiasedBelief {
    double lambda_tilde;
};

using BehavioralVariant = std::variant<Baseline, PresentBias, Salience, BiasedBelief>;

inline void validate_variant(const BehavioralVariant& v) {
    if (auto* p = std::get_if<PresentBias>(&v); p && !(p->delta > 0.0 && p->delta <= 1.0)) {
        throw std::invalid_argument("present-bias delta must lie in (0,1]");
    }
    if (auto* s = std::get_if<Salience>(&v); s && !(s->mu > 0.0 && s->mu <= 1.0)) {
        throw std::invalid_argument("salience mu must lie in (0,1]");
    }
    if (auto* b = std::get_if<BiasedBelief>(&v); b && !(b->lambda_tilde > 0.0 && b->lambda_tilde < 1.0)) {
        throw std::invalid_argument("believed lambda must lie in (0,1)");
    }
}

enum class RecordType : int { Ambulatory = 0, Inpatient = 1 };
enum class DiagnosisClass : int { CVD = 0, Other = 1 };

struct ClaimRecord {
    std::string patient_id;
    int year = 2018;
    RecordType record_type = RecordType::Inpatient;
    Facility facility = Facility::THC;
    DiagnosisClass diagnosis_class = DiagnosisClass::CVD;
    std::string diagnosis_code;
    double total_cost = 1.0;
    double oop_cost = 0.0;

    void validate() const {
        if (!(total_cost > 0.0)) throw std::invalid_argument("claim for " + patient_id + ": total cost must be positive");
        if (!(oop_cost >= 0.0 && oop_cost <= total_cost)) {
            throw std::invalid_argument("claim for " + patient_id + ": out-of-pocket must lie in [0, total]");
        }
    }
};

}  // namespace ambucare
