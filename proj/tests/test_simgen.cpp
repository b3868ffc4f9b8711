#include <gtest/gtest.h>

#include <cmath>

#include "qba/simgen.hpp"

using namespace qba;

namespace {

// OR_{X*-X} = (TP/FN)/(FP/TN) with TP = pN sens, FN = pN - TP,
// FP = (1-p)N spec, TN = (1-p)N - FP, written out independently.
double table_or(double sens, double spec, double p, double n) {
    const double tp = p * n * sens;
    const double fn = p * n - tp;
    const double fp = (1 - p) * n * spec;
    const double tn = (1 - p) * n - fp;
    return (tp / fn) / (fp / tn);
}

ScenarioConfig small(std::size_t n) {
    auto c = ScenarioConfig::realistic();
    c.n = n;
    return c;
}

double share(const Dataset& d, std::optional<bool> Record::*f) {
    double s = 0;
    for (const auto& r : d.records()) s += (r.*f).value() ? 1 : 0;
    return s / static_cast<double>(d.size());
}

}  // namespace

TEST(Scenario, EnhancementDoublesDistanceFromNull) {
    EXPECT_NEAR(enhance_parameter(1.20, 1), 1.40, 1e-12);
    EXPECT_NEAR(enhance_parameter(0.85, 1), 0.70, 1e-12);
    EXPECT_NEAR(enhance_parameter(0.70, 1), 0.40, 1e-12);
    EXPECT_NEAR(enhance_parameter(0.10, 0), 0.20, 1e-12);
    EXPECT_NEAR(enhance_parameter(0.60, 1), 0.20, 1e-12);
    EXPECT_NEAR(enhance_parameter(1.30, 1), 1.60, 1e-12);
    EXPECT_NEAR(enhance_parameter(0.90, 1), 0.80, 1e-12);
    EXPECT_NEAR(enhance_parameter(0.84, 1), 0.68, 1e-12);
    EXPECT_NEAR(enhance_parameter(0.83, 1), 0.66, 1e-12);
}

TEST(Scenario, EnhancedPresetAppliesTransform) {
    const auto r = ScenarioConfig::realistic(), e = ScenarioConfig::enhanced();
    EXPECT_NEAR(e.or_y_ry, enhance_parameter(r.or_y_ry, 1), 1e-15);
    EXPECT_NEAR(e.p_u, enhance_parameter(r.p_u, 0), 1e-15);
    EXPECT_NEAR(e.spec_y, enhance_parameter(r.spec_y, 1), 1e-15);
    EXPECT_EQ(e.p_a, r.p_a);
    EXPECT_EQ(e.p_y, r.p_y);
    EXPECT_EQ(e.a_coef, -0.05);
    EXPECT_EQ(e.name, "enhanced");
    EXPECT_THROW(ScenarioConfig::preset("pessimistic"), ConfigError);
}

TEST(Scenario, OddsRatioFormulaMatchesCountDefinition) {
    for (auto [se, sp, p] : {std::tuple{0.90, 0.84, 0.94}, {0.80, 0.68, 0.94}, {0.83, 0.90, 0.10},
                             {0.66, 0.80, 0.10}, {0.5, 0.5, 0.5}}) {
        EXPECT_NEAR(or_from_sens_spec(se, sp, p, 1000), table_or(se, sp, p, 1000), 1e-12);
        EXPECT_NEAR(or_from_sens_spec(se, sp, p, 1000), or_from_sens_spec(se, sp, p, 2000), 1e-12);
    }
    EXPECT_NEAR(ScenarioConfig::realistic().or_y_star(), 0.54, 0.005);
    EXPECT_THROW(or_from_sens_spec(1.0, 0.9), ConfigError);
    EXPECT_THROW(or_from_sens_spec(0.9, 0.0), ConfigError);
}

TEST(Scenario, ValidationRejectsNonsense) {
    auto c = ScenarioConfig::realistic();
    c.p_e = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = ScenarioConfig::realistic();
    c.or_a_u = -1;
    EXPECT_THROW(c.validate(), ConfigError);
    c = ScenarioConfig::realistic();
    c.dgp.p_ses = {0.5, 0.5};
    EXPECT_THROW(c.validate(), ConfigError);
    c = ScenarioConfig::realistic();
    c.dgp.exposure.terms.emplace_back("Height", 0.1);
    EXPECT_THROW(generate_ideal(c, 1), ConfigError);
}

TEST(Generate, DeterministicPerSeedAndReplicate) {
    const auto a = generate_ideal(small(3000), 5, 0);
    const auto b = generate_ideal(small(3000), 5, 0);
    const auto c = generate_ideal(small(3000), 5, 1);
    const auto d = generate_ideal(small(3000), 6, 0);
    EXPECT_EQ(a, b);
    EXPECT_FALSE(a == c);
    EXPECT_FALSE(a == d);
}

TEST(Generate, LongerPopulationExtendsShorterOne) {
    const auto shortp = generate_ideal(small(1000), 7);
    const auto longp = generate_ideal(small(70000), 7);
    for (std::size_t i = 0; i < shortp.size(); ++i) ASSERT_EQ(shortp[i], longp[i]);
}

TEST(Generate, MarginalsMatchConfiguration) {
    const auto pop = generate_ideal(small(200000), 8);
    const double n = static_cast<double>(pop.size());
    auto tol = [n](double p) { return 4 * std::sqrt(p * (1 - p) / n); };
    EXPECT_NEAR(share(pop, &Record::u), 0.10, tol(0.10));
    EXPECT_NEAR(share(pop, &Record::e), 0.85, tol(0.85));
    double sex = 0;
    for (const auto& r : pop.records()) sex += r.confounders[0];
    EXPECT_NEAR(sex / n, 0.49, tol(0.49));
    // exposure is common and the outcome is rare-ish
    EXPECT_GT(share(pop, &Record::a_true), 0.85);
    EXPECT_LT(share(pop, &Record::y_true), 0.25);
}

TEST(Generate, MisclassificationHasConfiguredOddsRatio) {
    // Conditional on the confounder predictor A* and A differ only through
    // log(OR_{A*-A}); crudely, A* is far more common among A = 1.
    const auto pop = generate_ideal(small(100000), 9);
    double a1 = 0, a1s = 0, a0 = 0, a0s = 0;
    for (const auto& r : pop.records()) {
        if (*r.a_true) {
            a1++;
            a1s += r.a_star;
        } else {
            a0++;
            a0s += r.a_star;
        }
    }
    EXPECT_GT(a1s / a1, a0s / a0);
}

TEST(Observed, KeepsEnglishSpeakersAndHidesLatents) {
    const auto ideal = generate_ideal(small(5000), 10);
    const auto obs = to_observed(ideal);
    std::size_t english = 0;
    for (const auto& r : ideal.records()) english += *r.e;
    EXPECT_EQ(obs.size(), english);
    EXPECT_EQ(obs.provenance(), Provenance::synthetic_observed);
    for (const auto& r : obs.records()) {
        EXPECT_FALSE(r.a_true || r.y_true || r.u || r.e);
        EXPECT_EQ(r.y_star.has_value(), r.r_y);
    }
}

TEST(Oracle, ParameterShapesAndScaling) {
    const auto ideal = generate_ideal(small(60000), 11);
    const auto op = correct_bias_params(ideal);
    EXPECT_EQ(op.correct.gamma.size(), 21);
    EXPECT_EQ(op.correct.alpha.size(), 21);
    EXPECT_EQ(op.correct.eta.size(), 21);
    EXPECT_EQ(op.correct.delta.size(), 3);
    EXPECT_EQ(op.correct.lambda.size(), 4);
    EXPECT_EQ(op.correct.theta.size(), 0);
    ASSERT_TRUE(op.single_bias.count(BiasKind::misclass_y));
    ASSERT_TRUE(op.single_bias.count(BiasKind::confounding_u));
    // U is independent of the starred stand-ins only through A, so its
    // stand-in model differs from the true one.
    EXPECT_NE(op.single_bias.at(BiasKind::confounding_u).delta, op.correct.delta);
    const auto two = op.scaled(2.0);
    EXPECT_EQ(two.correct.gamma, 2.0 * op.correct.gamma);
    EXPECT_EQ(two.single_bias.at(BiasKind::misclass_y).alpha, 2.0 * op.single_bias.at(BiasKind::misclass_y).alpha);
    // the U model recovers the generating log odds ratio of A given U
    EXPECT_LT(op.correct.delta(1), 0.0);
}

TEST(Oracle, TrueEffectIsProtective) {
    const auto ideal = generate_ideal(small(200000), 12);
    const auto t = true_effect(ideal);
    EXPECT_LT(t.rd, 0.0);
    EXPECT_LT(t.log_rr, 0.0);
    EXPECT_NEAR(t.log_rr, std::log(0.55), 0.15);
    EXPECT_THROW(compute_oracle(ScenarioConfig::realistic(), 10, 1), ConfigError);
}
