#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "qba/bias_parameters.hpp"
#include "qba/csv.hpp"
#include "qba/design.hpp"
#include "qba/parallel.hpp"

using namespace qba;
using qba::testing::tiny_cohort;
using qba::testing::tiny_schema;

TEST(Schema, CaseStudyExpandsToEighteenColumns) {
    const auto s = case_study_schema();
    EXPECT_EQ(s.size(), 12u);
    EXPECT_EQ(s.design_width(), 18u);
    const auto labels = s.design_labels();
    EXPECT_EQ(labels.front(), "Sex");
    EXPECT_EQ(labels.back(), "MSmk");
    EXPECT_NE(std::find(labels.begin(), labels.end(), "SES_5"), labels.end());
    EXPECT_EQ(std::find(labels.begin(), labels.end(), "SES_1"), labels.end());
}

TEST(Schema, RejectsDuplicatesAndSingleLevelFactors) {
    using D = CovariateDescriptor;
    EXPECT_THROW(ConfounderSchema({D::binary("X"), D::binary("X")}), ConfigError);
    EXPECT_THROW(ConfounderSchema({D::categorical("F", {"only"})}), ConfigError);
    EXPECT_THROW(ConfounderSchema({D::categorical("F", {"a", "b"}, 2)}), ConfigError);
}

TEST(Schema, NonDefaultReferenceLevel) {
    const auto c = CovariateDescriptor::categorical("F", {"a", "b", "c"}, 1);
    EXPECT_EQ(c.design_labels(), (std::vector<std::string>{"F_1", "F_3"}));
}

TEST(Dataset, RejectsWrongConfounderCount) {
    Record r;
    r.confounders = {1.0};
    r.y_star = true;
    EXPECT_THROW(Dataset(tiny_schema(), {r}, Provenance::observed), DataError);
}

TEST(Dataset, RejectsEmptyAndBadValues) {
    EXPECT_THROW(Dataset(tiny_schema(), {}, Provenance::observed), DataError);
    Record r;
    r.confounders = {0.5, 0.0};  // binary must be 0/1
    r.y_star = true;
    EXPECT_THROW(Dataset(tiny_schema(), {r}, Provenance::observed), DataError);
    r.confounders = {1.0, 3.0};  // level out of range
    EXPECT_THROW(Dataset(tiny_schema(), {r}, Provenance::observed), DataError);
}

TEST(Dataset, RespondersKeepOrder) {
    const auto d = tiny_cohort(200, 1);
    const auto idx = d.responder_indices();
    const auto resp = d.responders();
    ASSERT_EQ(resp.size(), idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) EXPECT_EQ(resp[i], d[idx[i]]);
    EXPECT_LT(resp.size(), d.size());
}

TEST(Csv, RoundTripIsExact) {
    const auto d = tiny_cohort(300, 2);
    std::stringstream ss;
    write_csv(d, ss);
    const auto back = read_csv(ss, tiny_schema());
    EXPECT_EQ(back, d);
}

TEST(Csv, RoundTripCaseStudyCohort) {
    const auto d = qba::testing::case_study_cohort(500, 3);
    std::stringstream ss;
    write_csv(d, ss);
    const auto back = read_csv(ss, case_study_schema(), Provenance::synthetic_observed);
    EXPECT_EQ(back, d);  // continuous MAge survives shortest round-trip formatting
}

TEST(Csv, ReportsBadInputAsDataError) {
    auto parse = [](const std::string& text) {
        std::istringstream is(text);
        return read_csv(is, tiny_schema());
    };
    EXPECT_THROW(parse(""), DataError);
    EXPECT_THROW(parse("C1,C2,a_star,y_star\n1,lo,1,0\n"), DataError);           // no r_y
    EXPECT_THROW(parse("C1,C2,a_star,y_star,r_y,zzz\n1,lo,1,0,1,0\n"), DataError);  // unknown column
    EXPECT_THROW(parse("C1,C2,a_star,y_star,r_y\n1,top,1,0,1\n"), DataError);     // unknown level
    EXPECT_THROW(parse("C1,C2,a_star,y_star,r_y\n1,lo,2,0,1\n"), DataError);      // not binary
    EXPECT_THROW(parse("C1,C2,a_star,y_star,r_y\n1,lo,1,0\n"), DataError);        // short row
    EXPECT_THROW(parse("C1,C2,a_star,y_star,r_y\n1,lo,1,,1\n"), DataError);       // responder w/o outcome
    EXPECT_NO_THROW(parse("C1,C2,a_star,y_star,r_y\n1,lo,1,,0\n"));
}

TEST(Design, TreatmentCodingAndInteractions) {
    const auto d = tiny_cohort(50, 4);
    const auto dm = build_design_matrix(d, {"a_star", "C2", "a_star:C1"});
    EXPECT_EQ(dm.labels, (std::vector<std::string>{"(Intercept)", "a_star", "C2_2", "C2_3", "a_star:C1"}));
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto& r = d[i];
        const auto row = static_cast<Eigen::Index>(i);
        EXPECT_EQ(dm.x(row, 0), 1.0);
        EXPECT_EQ(dm.x(row, 1), r.a_star ? 1.0 : 0.0);
        EXPECT_EQ(dm.x(row, 2), r.confounders[1] == 1.0 ? 1.0 : 0.0);
        EXPECT_EQ(dm.x(row, 3), r.confounders[1] == 2.0 ? 1.0 : 0.0);
        EXPECT_EQ(dm.x(row, 4), (r.a_star ? 1.0 : 0.0) * r.confounders[0]);
    }
}

TEST(Design, UnknownTermIsConfigError) {
    const auto d = tiny_cohort(20, 5);
    EXPECT_THROW(build_design_matrix(d, {"nope"}), ConfigError);
}

TEST(Design, MissingResponseIsDataError) {
    const auto d = tiny_cohort(200, 6);
    EXPECT_THROW(field_vector(d, Field::y_star), DataError);
    EXPECT_THROW(field_vector(d, Field::u), DataError);
}

TEST(BiasParameters, IdentityLengthsMatchSchema) {
    const auto s = case_study_schema();
    const auto p = identity_parameters(s);
    EXPECT_EQ(p.gamma.size(), 21);
    EXPECT_EQ(p.alpha.size(), 21);
    EXPECT_EQ(p.eta.size(), 21);
    EXPECT_EQ(p.delta.size(), 3);
    EXPECT_EQ(p.theta.size(), 4);
    EXPECT_EQ(p.lambda.size(), 4);
    BiasSelection all;
    for (auto k : kAllBiases) all.flag(k) = true;
    EXPECT_NO_THROW(p.validate(s, all));
}

TEST(BiasParameters, ValidateCatchesLengthAndMissing) {
    const auto s = tiny_schema();
    BiasParameterSet p;
    EXPECT_THROW(p.validate(s, BiasSelection::only(BiasKind::confounding_u)), ConfigError);
    p.delta = Eigen::VectorXd::Zero(2);
    EXPECT_THROW(p.validate(s), ConfigError);
    p.delta = Eigen::VectorXd::Zero(3);
    p.delta(1) = std::numeric_limits<double>::infinity();
    EXPECT_THROW(p.validate(s), ConfigError);
}

TEST(BiasParameters, KeysAndLabelsResolve) {
    for (auto k : kAllBiases) {
        EXPECT_EQ(bias_from_key(bias_key(k)), k);
        EXPECT_EQ(bias_from_key(bias_report_label(k)), k);
    }
    EXPECT_FALSE(bias_from_key("XB").has_value());
}

TEST(BiasSelection, OnlyAndCount) {
    const auto s = BiasSelection::only(BiasKind::misclass_y);
    EXPECT_EQ(s.count(), 1u);
    EXPECT_TRUE(s.has(BiasKind::misclass_y));
    EXPECT_FALSE(s.has(BiasKind::misclass_a));
    EXPECT_FALSE(BiasSelection::none().any());
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
    RngStream a(42, "imputation", {3}), b(42, "imputation", {3}), c(42, "imputation", {4}),
        d(42, "priors", {3}), e(43, "imputation", {3});
    std::set<double> firsts;
    for (auto* r : {&c, &d, &e}) firsts.insert(r->uniform());
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    firsts.insert(x);
    EXPECT_EQ(firsts.size(), 4u);
}

TEST(Rng, UniformStaysInOpenInterval) {
    RngStream r(1, "u");
    for (int i = 0; i < 100000; ++i) {
        const double u = r.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(Rng, CertainLogitsGiveExactBernoulli) {
    RngStream r(9, "certain");
    for (int i = 0; i < 100000; ++i) {
        ASSERT_TRUE(r.bernoulli(expit(kCertainLogit)));
        ASSERT_FALSE(r.bernoulli(expit(-kCertainLogit)));
    }
}

TEST(Parallel, VisitsEveryIndexOnceAndRethrows) {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
    for (int h : hits) EXPECT_EQ(h, 1);
    EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
                     if (i == 7) throw NumericError("boom");
                 }),
                 NumericError);
}
