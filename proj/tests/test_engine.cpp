#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "qba/engine.hpp"

using namespace qba;
using qba::testing::case_study_cohort;
using qba::testing::tiny_cohort;
using qba::testing::tiny_schema;

namespace {

BiasSelection all_but_cb() {
    BiasSelection s;
    for (auto k : kAllBiases) s.flag(k) = k != BiasKind::confounding_u;
    return s;
}

BiasSelection everything() {
    BiasSelection s;
    for (auto k : kAllBiases) s.flag(k) = true;
    return s;
}

void expect_same(const EstimateResult& a, const EstimateResult& b) {
    EXPECT_EQ(a.rd_hat, b.rd_hat);
    EXPECT_EQ(a.rd_se, b.rd_se);
    EXPECT_EQ(a.log_rr_hat, b.log_rr_hat);
    EXPECT_EQ(a.log_rr_se, b.log_rr_se);
    EXPECT_EQ(a.interval_rd.lo, b.interval_rd.lo);
    EXPECT_EQ(a.interval_log_rr.hi, b.interval_log_rr.hi);
}

// Fixed priors equal to the identity parameters, everything else zero.
BiasParameterPrior point_priors(const BiasParameterSet& p, const BiasSelection& s) {
    BiasParameterPrior out;
    for (auto k : kAllBiases) {
        if (!s.has(k)) continue;
        ModelPrior m;
        m.others_zero = true;
        const auto terms = bias_model_terms(k, tiny_schema());
        const auto& v = p.model(k);
        m.intercept = ScalarPrior::point(v(0));
        for (std::size_t j = 0; j < terms.size(); ++j)
            if (terms[j].find(':') == std::string::npos && v(static_cast<Eigen::Index>(j + 1)) != 0.0)
                m.coefficients.emplace(terms[j], ScalarPrior::point(v(static_cast<Eigen::Index>(j + 1))));
        out.models.emplace(k, m);
    }
    return out;
}

}  // namespace

TEST(Quantile, TypeSevenInterpolation) {
    // R: quantile(c(1, 2, 3, 4), c(.25, .5, .975)) -> 1.75, 2.5, 3.925
    EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.25), 1.75);
    EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.975), 3.925);
    EXPECT_DOUBLE_EQ(quantile({7}, 0.025), 7.0);
    EXPECT_TRUE(std::isnan(quantile({}, 0.5)));
}

TEST(Primary, MatchesDirectFitsOnResponders) {
    const auto data = tiny_cohort(1500, 1);
    const auto r = primary_analysis(data);
    const auto resp = data.responders();
    const auto d = build_design_matrix(resp, {"a_star", "C1", "C2"});
    const auto y = field_vector(resp, Field::y_star);
    const auto rd = fit_identity_binomial(d.x, y, Eigen::VectorXd::Ones(y.size()), d.labels);
    const auto rr = fit_log_binomial(d.x, y, d.labels);
    EXPECT_NEAR(r.rd_hat, rd.coefficients(1), 1e-12);
    EXPECT_NEAR(r.rd_se, rd.robust_se(1), 1e-12);
    EXPECT_NEAR(r.log_rr_hat, rr.coefficients(1), 1e-12);
    EXPECT_EQ(r.n_analytic, resp.size());
    EXPECT_EQ(r.interval_kind, IntervalKind::confidence);
    EXPECT_NEAR(r.interval_rd.hi - r.rd_hat, 1.96 * r.rd_se, 1e-15);
}

TEST(AdjustOnce, IdentityWithoutConfoundingIsExact) {
    for (std::uint64_t seed : {2u, 3u}) {
        const auto data = case_study_cohort(3000, seed);
        const auto primary = primary_analysis(data);
        RngStream rng(seed, streams::imputation);
        const auto adj = adjust_once(data, identity_parameters(data.schema()), all_but_cb(), rng);
        expect_same(adj, primary);
        EXPECT_EQ(adj.max_weight, 1.0);
    }
}

TEST(AdjustOnce, IdentityWithConfoundingIsWithinNoise) {
    const auto data = case_study_cohort(3000, 4);
    const auto primary = primary_analysis(data);
    RngStream rng(4, streams::imputation);
    const auto adj = adjust_once(data, identity_parameters(data.schema()), everything(), rng);
    EXPECT_LT(std::abs(adj.rd_hat - primary.rd_hat), 0.25 * primary.rd_se);
    EXPECT_LT(std::abs(adj.log_rr_hat - primary.log_rr_hat), 0.25 * primary.log_rr_se);
}

TEST(AdjustOnce, FlippedClassificationInvertsExposure) {
    const auto data = tiny_cohort(1000, 5);
    BiasParameterSet p;
    p.gamma = Eigen::VectorXd::Zero(6);
    p.gamma(0) = kCertainLogit;
    p.gamma(1) = -2 * kCertainLogit;
    RngStream rng(5, streams::imputation);
    const auto work = impute_exposure(standin_dataset(data), p.gamma, rng);
    for (const auto& r : work.records()) EXPECT_EQ(r.a_true.value(), !r.a_star);
    // RD of the flipped exposure is minus the primary RD when the model has
    // no other covariates; here C shifts it, so only the sign flips.
    const auto adj = adjust_once(data, p, BiasSelection::only(BiasKind::misclass_a), rng);
    const auto primary = primary_analysis(data);
    EXPECT_LT(adj.rd_hat * primary.rd_hat, 0.0);
}

TEST(AdjustOnce, ConstantWeightsLeaveEstimatesUnchanged) {
    const auto data = tiny_cohort(1500, 6);
    BiasParameterSet p;
    p.eta = Eigen::VectorXd::Zero(6);  // [1, a*, y*, C1, C2_2, C2_3]
    p.eta(0) = logit(0.25);
    RngStream rng(6, streams::imputation);
    const auto adj = adjust_once(data, p, BiasSelection::only(BiasKind::missingness_ry), rng);
    const auto primary = primary_analysis(data);
    EXPECT_NEAR(adj.rd_hat, primary.rd_hat, 1e-12);
    EXPECT_NEAR(adj.log_rr_hat, primary.log_rr_hat, 1e-9);
    EXPECT_NEAR(adj.rd_se, primary.rd_se, 1e-12);
    EXPECT_NEAR(adj.max_weight, 4.0, 1e-12);
    EXPECT_NEAR(adj.weight_cv, 0.0, 1e-12);
}

TEST(AdjustOnce, SelectionWeightsEqualInverseProduct) {
    const auto data = tiny_cohort(400, 7);
    BiasParameterSet p;
    p.theta = Eigen::Vector4d(0.5, -0.3, 0.2, 0.4);
    p.lambda = Eigen::Vector4d(1.0, 0.1, -0.2, 0.0);
    BiasSelection s;
    s.selection_consent_s = s.selection_english_e = true;
    const auto standin = standin_dataset(data);
    const auto wv = derive_weights(standin, p, s);
    ASSERT_EQ(static_cast<std::size_t>(wv.w.size()), standin.size());
    for (std::size_t i = 0; i < standin.size(); ++i) {
        const double a = standin[i].a_star, y = standin[i].y_star.value();
        const double ps = expit(0.5 - 0.3 * a + 0.2 * y + 0.4 * a * y);
        const double pe = expit(1.0 + 0.1 * a - 0.2 * y);
        EXPECT_NEAR(wv.w(static_cast<Eigen::Index>(i)), 1.0 / (ps * pe), 1e-12);
    }
}

TEST(AdjustOnce, ExtremeWeightsReportOriginalRows) {
    const auto data = tiny_cohort(300, 8);
    BiasParameterSet p;
    p.lambda = Eigen::Vector4d(0.0, -40.0, 0.0, 0.0);  // exposed records get p ~ 4e-18
    RngStream rng(8, streams::imputation);
    try {
        adjust_once(data, p, BiasSelection::only(BiasKind::selection_english_e), rng);
        FAIL() << "expected ExtremeWeightError";
    } catch (const ExtremeWeightError& e) {
        std::vector<std::size_t> want;
        for (std::size_t i = 0; i < data.size(); ++i)
            if (data[i].r_y && data[i].a_star) want.push_back(i);
        EXPECT_EQ(e.records(), want);
    }
}

TEST(AdjustOnce, MissingParametersAreConfigErrors) {
    const auto data = tiny_cohort(200, 9);
    RngStream rng(9, streams::imputation);
    EXPECT_THROW(adjust_once(data, BiasParameterSet{}, BiasSelection::only(BiasKind::misclass_y), rng),
                 ConfigError);
    BiasParameterSet p;
    p.alpha = Eigen::VectorXd::Zero(3);
    EXPECT_THROW(adjust_once(data, p, BiasSelection::only(BiasKind::misclass_y), rng), ConfigError);
}

TEST(AdjustOnce, SameStreamIsReproducible) {
    const auto data = case_study_cohort(2000, 10);
    BiasParameterSet p = identity_parameters(data.schema());
    p.gamma(0) = -1.0;
    p.gamma(1) = 2.5;
    p.delta = Eigen::Vector3d(-2.0, -0.5, 0.3);
    RngStream a(10, streams::imputation, {1}), b(10, streams::imputation, {1});
    expect_same(adjust_once(data, p, everything(), a), adjust_once(data, p, everything(), b));
}

TEST(Plan, ValidationRules) {
    AdjustmentPlan plan;
    EXPECT_THROW(plan.validate(), ConfigError);  // no bias
    plan.selection = BiasSelection::only(BiasKind::confounding_u);
    EXPECT_THROW(plan.validate(), ConfigError);  // neither parameters nor priors
    plan.parameters = identity_parameters(tiny_schema());
    EXPECT_NO_THROW(plan.validate());
    plan.priors = BiasParameterPrior{};
    EXPECT_THROW(plan.validate(), ConfigError);  // both
    plan.priors.reset();
    plan.n_bootstrap = 50;
    EXPECT_THROW(plan.validate(), ConfigError);
}

TEST(Probabilistic, PointPriorsWithFixedStreamGiveZeroWidth) {
    const auto data = tiny_cohort(1200, 11);
    const auto sel = all_but_cb();
    BiasParameterSet id = identity_parameters(tiny_schema());
    AdjustmentPlan plan;
    plan.selection = sel;
    plan.priors = point_priors(id, sel);
    plan.n_parameter_draws = 20;
    plan.seed = 11;
    plan.fixed_imputation_stream = true;
    const auto r = probabilistic_qba(data, plan);
    const auto primary = primary_analysis(data);
    EXPECT_EQ(r.interval_kind, IntervalKind::simulation);
    EXPECT_EQ(r.interval_rd.width(), 0.0);
    EXPECT_EQ(r.interval_log_rr.width(), 0.0);
    EXPECT_EQ(r.rd_hat, primary.rd_hat);
    EXPECT_EQ(r.log_rr_hat, primary.log_rr_hat);
    EXPECT_EQ(r.dropped, 0u);
}

TEST(Probabilistic, ResultDoesNotDependOnWorkerCount) {
    const auto data = tiny_cohort(1000, 12);
    AdjustmentPlan plan;
    plan.selection = BiasSelection::only(BiasKind::confounding_u);
    ModelPrior m;
    m.others_zero = true;
    m.intercept = ScalarPrior::normal_log(std::log(0.12), 0.3);
    m.coefficients.emplace("a_true", ScalarPrior::normal_log(std::log(0.7), 0.2));
    m.coefficients.emplace("y_true", ScalarPrior::normal_log(std::log(2.0), 0.2));
    plan.priors = BiasParameterPrior{};
    plan.priors->models.emplace(BiasKind::confounding_u, m);
    plan.n_parameter_draws = 60;
    plan.seed = 12;
    plan.workers = 1;
    const auto one = probabilistic_qba(data, plan);
    plan.workers = 3;
    const auto three = probabilistic_qba(data, plan);
    EXPECT_EQ(one.draws_rd, three.draws_rd);
    EXPECT_EQ(one.draws_log_rr, three.draws_log_rr);
    EXPECT_GT(one.interval_rd.width(), 0.0);
    // median and percentiles are the type-7 summaries of the draws
    EXPECT_EQ(one.rd_hat, quantile(one.draws_rd, 0.5));
    EXPECT_EQ(one.interval_log_rr.lo, quantile(one.draws_log_rr, 0.025));
}

TEST(Probabilistic, DroppedDrawsAreCountedAndFlagged) {
    const auto data = tiny_cohort(600, 13);
    AdjustmentPlan plan;
    plan.selection = BiasSelection::only(BiasKind::selection_english_e);
    ModelPrior m;
    m.others_zero = true;
    m.intercept = ScalarPrior::uniform(-20.0, 2.0);  // below ~ -13.8 every weight is extreme
    plan.priors = BiasParameterPrior{};
    plan.priors->models.emplace(BiasKind::selection_english_e, m);
    plan.n_parameter_draws = 200;
    plan.seed = 13;
    const auto r = probabilistic_qba(data, plan);
    EXPECT_EQ(r.replicates, 200u);
    EXPECT_GT(r.dropped, 20u);
    EXPECT_LT(r.dropped, 100u);
    EXPECT_TRUE(r.warning);
    EXPECT_EQ(r.draws_rd.size() + r.dropped, 200u);

    plan.priors->models.at(BiasKind::selection_english_e).intercept = ScalarPrior::uniform(-30.0, -20.0);
    EXPECT_THROW(probabilistic_qba(data, plan), NumericError);
}

TEST(Probabilistic, BootstrapAddsSamplingVariability) {
    const auto data = tiny_cohort(800, 14);
    const auto sel = all_but_cb();
    AdjustmentPlan plan;
    plan.selection = sel;
    plan.priors = point_priors(identity_parameters(tiny_schema()), sel);
    plan.n_bootstrap = 200;
    plan.seed = 14;
    const auto r = probabilistic_qba(data, plan);
    const auto primary = primary_analysis(data);
    EXPECT_EQ(r.replicates, 200u);
    // Bootstrap SD approximates the sandwich SE of the original fit.
    EXPECT_NEAR(r.rd_se, primary.rd_se, 0.25 * primary.rd_se);
    EXPECT_TRUE(r.interval_rd.contains(primary.rd_hat));
}

TEST(Probabilistic, FixedParameterPlanRepeatsImputation) {
    const auto data = tiny_cohort(800, 15);
    AdjustmentPlan plan;
    plan.selection = BiasSelection::only(BiasKind::confounding_u);
    plan.parameters = identity_parameters(tiny_schema());
    plan.parameters->delta = Eigen::Vector3d(-1.5, -1.0, 1.0);
    plan.n_parameter_draws = 30;
    plan.seed = 15;
    const auto r = probabilistic_qba(data, plan);
    EXPECT_GT(r.interval_rd.width(), 0.0);  // imputation noise only
    plan.fixed_imputation_stream = true;
    EXPECT_EQ(probabilistic_qba(data, plan).interval_rd.width(), 0.0);
}

TEST(OneAtATime, IdentityRowsEqualPrimary) {
    const auto data = case_study_cohort(2500, 16);
    AdjustmentPlan plan;
    plan.selection = everything();
    plan.parameters = identity_parameters(data.schema());
    plan.seed = 16;
    const auto rows = one_at_a_time_suite(data, plan);
    const auto primary = primary_analysis(data);
    EXPECT_EQ(rows.size(), 6u);
    for (const auto& [k, r] : rows) {
        if (k == BiasKind::confounding_u) {
            EXPECT_LT(std::abs(r.rd_hat - primary.rd_hat), 0.25 * primary.rd_se);
        } else {
            SCOPED_TRACE(bias_key(k));
            expect_same(r, primary);
        }
    }
}

TEST(OneAtATime, OverridesApplyToTheirBiasOnly) {
    const auto data = tiny_cohort(1000, 17);
    AdjustmentPlan plan;
    plan.selection = everything();
    plan.parameters = identity_parameters(tiny_schema());
    BiasParameterSet flipped = *plan.parameters;
    flipped.gamma(0) = kCertainLogit;
    flipped.gamma(1) = -2 * kCertainLogit;
    plan.single_bias_parameters.emplace(BiasKind::misclass_a, flipped);
    plan.seed = 17;
    const auto rows = one_at_a_time_suite(data, plan);
    const auto primary = primary_analysis(data);
    EXPECT_LT(rows.at(BiasKind::misclass_a).rd_hat * primary.rd_hat, 0.0);
    expect_same(rows.at(BiasKind::misclass_y), primary);
}
