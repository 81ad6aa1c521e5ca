#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ambucare/model.hpp"
#include "ambucare/published.hpp"
#include "ambucare/rng.hpp"

using namespace ambucare;

namespace {

PatientProfile patient(double theta, Facility f, bool disadvantaged) {
    PatientProfile p;
    p.id = "X";
    p.theta = Severity(theta);
    p.facility_choice = f;
    p.disadvantaged = disadvantaged;
    p.poor_household = disadvantaged;
    return p;
}

}  // namespace

TEST(Severity, RejectsBoundaryAndOutside) {
    EXPECT_THROW(Severity(0.0), std::invalid_argument);
    EXPECT_THROW(Severity(1.0), std::invalid_argument);
    EXPECT_THROW(Severity(-0.2), std::invalid_argument);
    EXPECT_THROW(Severity(std::nan("")), std::invalid_argument);
    EXPECT_DOUBLE_EQ(Severity::clamped(1.0).value(), kThetaCeil);
    EXPECT_DOUBLE_EQ(Severity::clamped(0.0).value(), kThetaFloor);
    EXPECT_THROW(Severity::clamped(std::nan("")), std::invalid_argument);
}

TEST(CostParams, LambdaFromRegressionCoefficients) {
    const auto cp = CostParams::from_regression(0.882, 1.489, -0.253, {1.0, 4.816, 9.836, 25.103}, 0.7795);
    EXPECT_NEAR(cp.lambda, 0.843738478, 1e-9);
    EXPECT_NEAR(cp.lambda, published::kLambda, 0.001);
}

TEST(CostParams, ValidationCatchesInconsistentLambda) {
    CostParams cp = published::cost_params();
    cp.lambda = 0.9;
    EXPECT_THROW(cp.validate(), std::invalid_argument);
    cp = published::cost_params();
    cp.s_mult[2] = 0.5;
    EXPECT_THROW(cp.validate(), std::invalid_argument);
    EXPECT_THROW(CostParams::from_regression(0.8, -1.0, -0.2, {1, 1, 1, 1}, 0.5), std::invalid_argument);
}

TEST(CostFunctions, PublishedValuesAtModerateSeverity) {
    const auto cp = published::cost_params();
    EXPECT_NEAR(ambulatory_cost(Severity(0.48), cp), 0.408010078, 1e-8);
    EXPECT_NEAR(std::pow(cp.lambda, cp.beta), 0.776826269, 1e-8);
    // At theta -> 1 at the benchmark facility with use: lambda^beta + p_ratio.
    const Severity top = Severity::clamped(1.0);
    EXPECT_NEAR(inpatient_cost(top, cp, Facility::THC, true) + ambulatory_cost(top, cp), 1.556326269, 1e-5);
}

TEST(CostFunctions, UsingAmbulatoryCareLowersInpatientCost) {
    const auto cp = published::cost_params();
    for (double th : {0.05, 0.3, 0.7, 0.95}) {
        for (auto f : kFacilities) {
            EXPECT_LT(inpatient_cost(Severity(th), cp, f, true), inpatient_cost(Severity(th), cp, f, false));
        }
    }
}

TEST(Utility, PreventionValueInRmb) {
    const auto cp = published::cost_params();
    const auto pp = published::preference_params();
    EXPECT_NEAR(prevention_value_rmb(patient(0.48, Facility::General, false), cp, pp), 725.01156, 1e-3);
    EXPECT_NEAR(prevention_value_rmb(patient(0.48, Facility::General, true), cp, pp), -534.8974, 1e-3);
}

TEST(Utility, TravelCostInRmb) {
    const auto cp = published::cost_params();
    EXPECT_NEAR(cp.to_rmb(published::preference_params().t_b), 630.63, 1e-9);
}

TEST(Utility, InsuredReducesToUninsuredWithoutCostSharing) {
    const auto cp = published::cost_params();
    for (double th : {0.1, 0.48, 0.72}) {
        // The insured weighting term carries the facility multiplier; at THC it is 1.
        EXPECT_NEAR(utility_insured(Severity(th), cp, Facility::THC, 0.02, 0.1, 1.0, 1.0),
                    utility_uninsured(Severity(th), cp, Facility::THC, 0.02, 0.1), 1e-15);
    }
}

TEST(Utility, InsuredMatchesHandComputation) {
    const auto cp = published::cost_params();
    const double th = 0.48, g = 0.0225, t = 0.1001, phc = 0.41, ppc = 0.35;
    const double s = 9.836;
    const double expect = (1.0 - std::pow(cp.lambda, cp.beta)) * s * std::pow(th, cp.beta) + g * (1 - th) * s / phc -
                          (ppc / phc) * std::pow(th, cp.alpha) * cp.p_ratio - t / phc;
    EXPECT_NEAR(utility_insured(Severity(th), cp, Facility::General, g, t, ppc, phc), expect, 1e-14);
}

TEST(Utility, GroupParametersSelectedByStatus) {
    PreferenceParams pp = published::preference_params();
    PatientProfile p = patient(0.3, Facility::THC, true);
    EXPECT_DOUBLE_EQ(gamma_for(p, pp), pp.gamma_l);
    p.disadvantaged = false;
    p.poor_household = false;
    EXPECT_DOUBLE_EQ(gamma_for(p, pp), pp.gamma_h);
    p.high_income = true;
    p.male = true;
    EXPECT_DOUBLE_EQ(travel_cost_for(p, pp), pp.t_b + pp.t_H + pp.t_M);

    pp = published::preference_params_rural_minority();
    p.disadvantaged = p.distant = p.minority = p.rural_hukou = true;
    EXPECT_DOUBLE_EQ(gamma_for(p, pp), pp.gamma_l + pp.gamma_R + pp.gamma_M);
    p.disadvantaged = p.distant = false;
    EXPECT_THROW(gamma_for(p, pp), std::invalid_argument);
}

TEST(ChoiceProbability, StableInBothTails) {
    EXPECT_DOUBLE_EQ(choice_probability(0.0), 0.5);
    EXPECT_EQ(choice_probability(800.0), 1.0);
    EXPECT_GT(choice_probability(-700.0), 0.0);
    EXPECT_NEAR(log_choice_probability(-800.0), -800.0, 1e-12);
    EXPECT_NEAR(log_choice_probability(800.0), 0.0, 1e-300);
    for (double v : {-30.0, -2.5, 0.3, 4.0, 25.0}) {
        EXPECT_NEAR(choice_probability(v) + choice_probability(-v), 1.0, 1e-15);
        EXPECT_NEAR(std::exp(log_choice_probability(v)), choice_probability(v), 1e-15);
    }
}

TEST(ChoiceProbability, MatchesLogisticTasteDraws) {
    // d = 1{v + e1 > e0} with Gumbel errors; the difference is logistic.
    auto rng = make_stream(11, "test", 0);
    const double v = 0.7;
    const int n = 200000;
    int used = 0;
    for (int i = 0; i < n; ++i) {
        const double e1 = -std::log(-std::log(rng.uniform_open()));
        const double e0 = -std::log(-std::log(rng.uniform_open()));
        used += v + e1 > e0;
    }
    EXPECT_NEAR(static_cast<double>(used) / n, choice_probability(v), 0.004);
}

TEST(FigureCurves, BaselineRootClosedForm) {
    const auto cp = figure_cost_params();
    const double closed = std::pow(0.12 / (1.0 - std::pow(0.85, 1.5)), 2.0);
    EXPECT_NEAR(closed, 0.307676252, 1e-9);
    const CurveSeries s{"g0", 0.0};
    const double root = bisect_root([&](double th) { return curve_utility(s, Severity(th), cp); }, 0.01, 0.99);
    EXPECT_NEAR(root, closed, 1e-8);
    EXPECT_LT(std::abs(curve_utility(s, Severity(root), cp)), 1e-10);
    // Rounding 1 - 0.85^1.5 to four places gives the reported 0.3078.
    EXPECT_NEAR(std::pow(0.12 / 0.2163, 2.0), 0.3078, 5e-5);
}

TEST(FigureCurves, NegativeWeightRoot) {
    const auto cp = figure_cost_params();
    const CurveSeries s{"neg", -0.04};
    const double root = bisect_root([&](double th) { return curve_utility(s, Severity(th), cp); }, 0.01, 0.99);
    EXPECT_NEAR(root, 0.523096021, 1e-8);
}

TEST(FigureCurves, PositiveWeightShiftsCurveUp) {
    const auto cp = figure_cost_params();
    const CurveSeries base{"0", 0.0}, pos{"p", 0.12}, neg{"n", -0.04};
    for (const auto& th : uniform_grid(50)) {
        EXPECT_GT(curve_utility(pos, th, cp), curve_utility(base, th, cp));
        EXPECT_LT(curve_utility(neg, th, cp), curve_utility(base, th, cp));
    }
}

TEST(FigureCurves, HigherAmbulatoryShareLowersUtility) {
    const auto cp = figure_cost_params();
    const CurveSeries r1{"r1", 0.12, 1.0, 1.0}, r12{"r12", 0.12, 1.2, 1.0};
    for (const auto& th : uniform_grid(20)) EXPECT_LT(curve_utility(r12, th, cp), curve_utility(r1, th, cp));
}

TEST(FigureCurves, SalienceRootMovesRight) {
    const auto cp = figure_cost_params();
    CurveSeries s{"mu", 0.0};
    s.variant = Salience{0.8};
    const double root = bisect_root([&](double th) { return curve_utility(s, Severity(th), cp); }, 0.05, 0.99);
    EXPECT_NEAR(root, 0.384595314, 1e-8);
    EXPECT_GT(root, 0.307676252);
}

TEST(FigureCurves, GridAndBisectionContracts) {
    EXPECT_THROW(uniform_grid(0), std::invalid_argument);
    const auto g = uniform_grid(1);
    ASSERT_EQ(g.size(), 1u);
    EXPECT_DOUBLE_EQ(g[0].value(), 0.5);
    EXPECT_THROW(bisect_root([](double x) { return x + 1.0; }, 0.0, 1.0), std::invalid_argument);
}

TEST(Variants, IdentityParametersReproduceBaseline) {
    const auto cp = published::cost_params();
    const auto grid = uniform_grid(1000);
    for (auto f : kFacilities) {
        for (double g : {0.0225, -0.0166}) {
            for (const auto& th : grid) {
                const double base = utility_variant(Baseline{}, th, cp, f, g, 0.1);
                EXPECT_NEAR(utility_variant(PresentBias{1.0}, th, cp, f, g, 0.1), base, 1e-12);
                EXPECT_NEAR(utility_variant(Salience{1.0}, th, cp, f, g, 0.1), base, 1e-12);
                EXPECT_NEAR(utility_variant(BiasedBelief{cp.lambda}, th, cp, f, g, 0.1), base, 1e-12);
            }
        }
    }
}

TEST(Variants, InvalidParametersRejected) {
    EXPECT_THROW(validate_variant(PresentBias{0.0}), std::invalid_argument);
    EXPECT_THROW(validate_variant(PresentBias{1.5}), std::invalid_argument);
    EXPECT_THROW(validate_variant(Salience{-0.1}), std::invalid_argument);
    EXPECT_THROW(validate_variant(BiasedBelief{1.0}), std::invalid_argument);
}

TEST(Variants, PresentBiasDiscountsFutureGains) {
    const auto cp = figure_cost_params();
    // With no current cost the discounted utility is delta times the baseline.
    const Severity th(0.6);
    const double base = utility_variant(Baseline{}, th, cp, Facility::THC, 0.05, 0.0) + ambulatory_cost(th, cp);
    const double pb = utility_variant(PresentBias{0.5}, th, cp, Facility::THC, 0.05, 0.0) + ambulatory_cost(th, cp);
    EXPECT_NEAR(pb, 0.5 * base, 1e-14);
}

TEST(Variants, OptimisticBeliefRaisesUtility) {
    const auto cp = figure_cost_params();
    for (const auto& th : uniform_grid(30)) {
        EXPECT_GT(utility_variant(BiasedBelief{0.825}, th, cp, Facility::THC, 0.0, 0.0),
                  utility_variant(BiasedBelief{0.925}, th, cp, Facility::THC, 0.0, 0.0));
    }
}
