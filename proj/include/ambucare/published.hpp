#pragma once

// Published estimates used as simulation truth and as the default counterfactual inputs.

#include <array>
#include <cmath>

#include "ambucare/types.hpp"

namespace ambucare::published {

// Cost regressions (ln theta, ambulatory-use indicator, facility fixed effects).
inline constexpr double kAlpha = 0.882;
inline constexpr double kBeta = 1.489;
inline constexpr double kRho = -0.253;
inline constexpr double kLnS2 = 1.574;
inline constexpr double kLnS3 = 2.285;
inline constexpr double kLnS4 = 3.231;
inline constexpr double kSeAlpha = 0.311;
inline constexpr double kSeBeta = 0.440;
inline constexpr double kSeRho = 0.121;

// Parameter specification table.
inline constexpr double kLambda = 0.844;
inline constexpr std::array<double, 4> kSMult{1.0, 4.816, 9.836, 25.103};
inline constexpr double kPRatio = 0.7795;
inline constexpr double kPhiPc = 0.35;
inline constexpr double kPhiHcPoor = 0.15;
inline constexpr double kPhiHcOthers = 0.41;
inline constexpr std::array<double, 3> kThetaCategory{0.1, 0.48, 0.72};
inline constexpr double kMoneyScaleRmb = 6300.0;

inline CostParams cost_params() {
    CostParams cp;
    cp.alpha = kAlpha;
    cp.beta = kBeta;
    cp.lambda = kLambda;
    cp.rho = kRho;
    cp.s_mult = kSMult;
    cp.p_ratio = kPRatio;
    cp.money_scale_rmb = kMoneyScaleRmb;
    cp.validate();
    return cp;
}

inline InsurancePlan plan() { return {kPhiPc, kPhiHcPoor, kPhiHcOthers}; }

/// Baseline utility parameters (two weighting groups, three travel-cost terms).
inline PreferenceParams preference_params() {
    PreferenceParams pp;
    pp.gamma_h = 0.0225;
    pp.gamma_l = -0.0166;
    pp.t_b = 0.1001;
    pp.t_H = 0.4854;
    pp.t_M = 0.1166;
    return pp;
}

inline constexpr std::array<double, 5> kPreferenceSe{0.0009, 0.0007, 0.0067, 0.0092, 0.0077};

/// Utility parameters with rural and minority adjustments.
inline PreferenceParams preference_params_rural_minority() {
    PreferenceParams pp;
    pp.gamma_h = 0.0211;
    pp.gamma_l = -0.0134;
    pp.gamma_R = -0.0016;
    pp.gamma_M = -0.0369;
    pp.t_b = 0.0989;
    pp.t_H = 0.4512;
    pp.t_M = 0.1248;
    pp.rural_minority = true;
    return pp;
}

}  // namespace ambucare::published
