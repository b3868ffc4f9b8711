#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "qba/engine.hpp"
#include "qba/priors.hpp"

using namespace qba;
using qba::testing::tiny_cohort;

namespace {

double mean_of(std::vector<double> v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

std::vector<double> draws(const ScalarPrior& p, int n, std::uint64_t seed) {
    RngStream rng(seed, "prior-test");
    std::vector<double> out;
    for (int i = 0; i < n; ++i) out.push_back(p.draw(rng));
    return out;
}

// All slots point-zero except those given.
ModelPrior zeros() {
    ModelPrior m;
    m.others_zero = true;
    return m;
}

}  // namespace

TEST(ScalarPrior, AnchorsGiveLogScaleSd) {
    const auto p = ScalarPrior::normal_log_from_anchors(0.70, 0.50, 0.80);
    EXPECT_EQ(p.kind(), ScalarPrior::Kind::normal_log);
    EXPECT_DOUBLE_EQ(p.a(), std::log(0.70));
    EXPECT_NEAR(p.b(), (std::log(0.80) - std::log(0.50)) / 3.92, 1e-15);
    ASSERT_TRUE(p.anchors());
    EXPECT_EQ(p.anchors()->first, 0.50);
}

TEST(ScalarPrior, RejectsInvalidSpecs) {
    EXPECT_THROW(ScalarPrior::normal_log(0, 0), ConfigError);
    EXPECT_THROW(ScalarPrior::normal_log_from_anchors(1.0, 1.2, 0.9), ConfigError);
    EXPECT_THROW(ScalarPrior::normal_log_from_anchors(1.0, -1, 2), ConfigError);
    EXPECT_THROW(ScalarPrior::beta(0, 1), ConfigError);
    EXPECT_THROW(ScalarPrior::uniform(2, 1), ConfigError);
    EXPECT_THROW(ScalarPrior::point(std::nan("")), ConfigError);
}

TEST(ScalarPrior, DrawMomentsMatchFamilies) {
    const int n = 40000;
    // beta(44, 4): mean 44/48, sd ~ 0.0395
    EXPECT_NEAR(mean_of(draws(ScalarPrior::beta(44, 4), n, 1)), 44.0 / 48.0, 4 * 0.0395 / std::sqrt(n));
    // uniform(0.8, 0.9)
    auto u = draws(ScalarPrior::uniform(0.8, 0.9), n, 2);
    EXPECT_NEAR(mean_of(u), 0.85, 4 * 0.0289 / std::sqrt(n));
    EXPECT_GE(*std::min_element(u.begin(), u.end()), 0.8);
    EXPECT_LE(*std::max_element(u.begin(), u.end()), 0.9);
    // normal_log draws are log-odds
    EXPECT_NEAR(mean_of(draws(ScalarPrior::normal_log(std::log(1.2), 0.1), n, 3)), std::log(1.2),
                4 * 0.1 / std::sqrt(n));
    for (double v : draws(ScalarPrior::point(0.3), 10, 4)) EXPECT_EQ(v, 0.3);
}

TEST(ScalarPrior, WideningScalesSpread) {
    const auto p = ScalarPrior::normal_log(0.1, 0.2).widened(2);
    EXPECT_DOUBLE_EQ(p.b(), 0.4);
    const auto u = ScalarPrior::uniform(0.2, 0.4).widened(2);
    EXPECT_NEAR(u.a(), 0.1, 1e-15);
    EXPECT_NEAR(u.b(), 0.5, 1e-15);
    const auto b = ScalarPrior::beta(54, 13).widened(2);
    EXPECT_NEAR(b.a() / (b.a() + b.b()), 54.0 / 67.0, 1e-12);
    EXPECT_LT(b.a() + b.b(), 67.0);
}

// The classification slope must equal the log odds ratio of true exposure
// between A* = 1 and A* = 0 in a population misclassified with the given
// sensitivity and specificity. Checked against a brute-force population.
TEST(BindPriors, ClassificationSlopeMatchesSimulatedPopulation) {
    const double se = 0.85, sp = 0.90, prev = 0.3;
    RngStream rng(5, "misclassified-population");
    double n11 = 0, n1 = 0, n01 = 0, n0 = 0;
    for (int i = 0; i < 400000; ++i) {
        const bool a = rng.bernoulli(prev);
        const bool a_star = a ? rng.bernoulli(se) : !rng.bernoulli(sp);
        (a_star ? n1 : n0) += 1;
        if (a) (a_star ? n11 : n01) += 1;
    }
    const double empirical = logit(n11 / n1) - logit(n01 / n0);

    const auto data = tiny_cohort(500, 6);
    BiasParameterPrior pri;
    ModelPrior m = zeros();
    m.classification = ClassificationPrior{ScalarPrior::point(se), ScalarPrior::point(sp), ScalarPrior::point(prev)};
    pri.models.emplace(BiasKind::misclass_a, m);
    const auto bound = bind_priors(pri, data);
    RngStream draw(1, streams::priors);
    const auto params = sample_prior(bound, draw);
    EXPECT_NEAR(params.gamma(1), empirical, 0.03);
    // intercept: P(A=1 | A*=0) with every other column at zero
    EXPECT_NEAR(params.gamma(0), logit(n01 / n0), 0.03);
}

TEST(BindPriors, MarginalPrevalenceOfUIsCalibrated) {
    const auto data = tiny_cohort(800, 7);
    BiasParameterPrior pri;
    ModelPrior m = zeros();
    m.marginal = MarginalPrior{MarginalPrior::Scale::probability, ScalarPrior::point(0.2)};
    m.coefficients.emplace("a_true", ScalarPrior::point(std::log(0.5)));
    m.coefficients.emplace("y_true", ScalarPrior::point(std::log(1.5)));
    pri.models.emplace(BiasKind::confounding_u, m);
    RngStream draw(1, streams::priors);
    const auto p = sample_prior(bind_priors(pri, data), draw);
    const auto standin = standin_dataset(data);
    double mean = 0;
    for (const auto& r : standin.records())
        mean += expit(p.delta(0) + p.delta(1) * r.a_true.value() + p.delta(2) * r.y_true.value());
    EXPECT_NEAR(mean / static_cast<double>(standin.size()), 0.2, 1e-9);
}

TEST(BindPriors, SelectionInterceptSatisfiesHorvitzThompson) {
    const auto data = tiny_cohort(800, 8);
    BiasParameterPrior pri;
    ModelPrior m = zeros();
    m.marginal = MarginalPrior{MarginalPrior::Scale::log_odds, ScalarPrior::point(std::log(4.0))};  // P = 0.8
    m.coefficients.emplace("a_star", ScalarPrior::point(0.3));
    m.coefficients.emplace("a_star:y_star", ScalarPrior::point(-0.4));
    pri.models.emplace(BiasKind::selection_english_e, m);
    RngStream draw(1, streams::priors);
    const auto p = sample_prior(bind_priors(pri, data), draw);
    const auto standin = standin_dataset(data);
    double inv = 0;
    for (const auto& r : standin.records()) {
        const double a = r.a_star, y = r.y_star.value();
        inv += 1.0 / expit(p.lambda(0) + p.lambda(1) * a + p.lambda(2) * y + p.lambda(3) * a * y);
    }
    EXPECT_NEAR(static_cast<double>(standin.size()) / inv, 0.8, 1e-9);
}

TEST(BindPriors, ObservedResponseTargetsResponseRate) {
    const auto data = tiny_cohort(800, 9);
    BiasParameterPrior pri;
    ModelPrior m;
    m.others_observed = true;
    m.marginal = MarginalPrior{MarginalPrior::Scale::observed_response, std::nullopt};
    m.coefficients.emplace("y_star", ScalarPrior::point(std::log(1.2)));
    pri.models.emplace(BiasKind::missingness_ry, m);
    RngStream draw(1, streams::priors);
    const auto p = sample_prior(bind_priors(pri, data), draw);
    const auto standin = standin_dataset(data);
    const auto d = build_design_matrix(standin, bias_terms::eta(data.schema()));
    const Eigen::VectorXd prob = (d.x * p.eta).unaryExpr([](double v) { return expit(v); });
    const double rate = static_cast<double>(standin.size()) / static_cast<double>(data.size());
    EXPECT_NEAR(static_cast<double>(standin.size()) / prob.cwiseInverse().sum(), rate, 1e-9);
}

TEST(BindPriors, OthersObservedUsesProxyFit) {
    const auto data = tiny_cohort(1500, 10);
    BiasParameterPrior pri;
    ModelPrior m;
    m.others_observed = true;
    m.intercept = ScalarPrior::point(0.0);
    m.coefficients.emplace("a_star", ScalarPrior::point(2.0));
    pri.models.emplace(BiasKind::misclass_a, m);
    RngStream draw(1, streams::priors);
    const auto p = sample_prior(bind_priors(pri, data), draw);

    const auto standin = standin_dataset(data);
    const auto d = build_design_matrix(standin, {"y_star", "C1", "C2"});
    const auto fit = fit_logistic(d.x, field_vector(standin, Field::a_star), d.labels);
    ASSERT_TRUE(fit.converged);
    EXPECT_EQ(p.gamma(0), 0.0);
    EXPECT_EQ(p.gamma(1), 2.0);
    for (Eigen::Index j = 1; j < fit.coefficients.size(); ++j) EXPECT_NEAR(p.gamma(j + 1), fit.coefficients(j), 1e-10);
}

TEST(BindPriors, SimultaneousOnlySlotUsesProxyInSingleBiasMode) {
    const auto data = tiny_cohort(1500, 11);
    BiasParameterPrior pri;
    ModelPrior m;
    m.others_observed = true;
    m.intercept = ScalarPrior::point(-1.0);
    m.coefficients.emplace("y_star", ScalarPrior::point(3.0));
    m.coefficients.emplace("a_true", ScalarPrior::point(-0.5));
    m.simultaneous_only.insert("a_true");
    pri.models.emplace(BiasKind::misclass_y, m);
    const auto bound = bind_priors(pri, data);
    RngStream r1(1, streams::priors), r2(1, streams::priors);
    const auto joint = sample_prior(bound, r1, false);
    const auto single = sample_prior(bound, r2, true);
    EXPECT_EQ(joint.alpha(2), -0.5);
    EXPECT_NE(single.alpha(2), -0.5);
    // every other slot agrees
    for (Eigen::Index j = 0; j < joint.alpha.size(); ++j)
        if (j != 2) EXPECT_EQ(joint.alpha(j), single.alpha(j));
}

TEST(BindPriors, ConfigurationErrors) {
    const auto data = tiny_cohort(300, 12);
    auto bind_one = [&](BiasKind k, const ModelPrior& m) {
        BiasParameterPrior p;
        p.models.emplace(k, m);
        return bind_priors(p, data);
    };
    ModelPrior missing;
    EXPECT_THROW(bind_one(BiasKind::confounding_u, missing), ConfigError);
    ModelPrior unknown = zeros();
    unknown.coefficients.emplace("C9", ScalarPrior::point(1));
    EXPECT_THROW(bind_one(BiasKind::confounding_u, unknown), ConfigError);
    ModelPrior cls = zeros();
    cls.classification = ClassificationPrior{ScalarPrior::point(.9), ScalarPrior::point(.9), ScalarPrior::point(.5)};
    EXPECT_THROW(bind_one(BiasKind::confounding_u, cls), ConfigError);
    ModelPrior both = zeros();
    both.intercept = ScalarPrior::point(0);
    both.marginal = MarginalPrior{MarginalPrior::Scale::probability, ScalarPrior::point(.3)};
    EXPECT_THROW(bind_one(BiasKind::confounding_u, both), ConfigError);
    ModelPrior excl = zeros();
    excl.others_observed = true;
    EXPECT_THROW(bind_one(BiasKind::misclass_a, excl), ConfigError);
    ModelPrior resp = zeros();
    resp.marginal = MarginalPrior{MarginalPrior::Scale::observed_response, std::nullopt};
    EXPECT_THROW(bind_one(BiasKind::confounding_u, resp), ConfigError);
}

TEST(SamplePrior, OutOfRangeProbabilityIsNumericError) {
    const auto data = tiny_cohort(300, 13);
    BiasParameterPrior pri;
    ModelPrior m = zeros();
    m.marginal = MarginalPrior{MarginalPrior::Scale::probability, ScalarPrior::uniform(1.0, 2.0)};
    pri.models.emplace(BiasKind::confounding_u, m);
    const auto bound = bind_priors(pri, data);
    RngStream draw(1, streams::priors);
    EXPECT_THROW(sample_prior(bound, draw), NumericError);
}

TEST(SamplePrior, SameStreamSameDraw) {
    const auto data = tiny_cohort(300, 14);
    BiasParameterPrior pri;
    ModelPrior m = zeros();
    m.intercept = ScalarPrior::normal_log(-2, 0.3);
    m.coefficients.emplace("a_true", ScalarPrior::normal_log(0, 0.5));
    pri.models.emplace(BiasKind::confounding_u, m);
    const auto bound = bind_priors(pri, data);
    RngStream a(3, streams::priors, {17}), b(3, streams::priors, {17}), c(3, streams::priors, {18});
    const auto pa = sample_prior(bound, a), pb = sample_prior(bound, b), pc = sample_prior(bound, c);
    EXPECT_EQ(pa.delta, pb.delta);
    EXPECT_NE(pa.delta, pc.delta);
}
