#pragma once

// Prior distributions over bias-model coefficients and their binding to an
// observed dataset.
//
// A model's coefficients are specified one of several ways:
//   - directly, one scalar prior per design column (log-odds scale);
//   - the intercept and the starred-variable slope of the exposure and
//     outcome models through (sensitivity, specificity, prevalence), using
//     Bayes' rule for the predictive values; the intercept is then centred
//     at the sample means of the other columns;
//   - the intercept through a marginal prevalence: for U the mean predicted
//     prevalence over the analytic records, for the selection and response
//     models the Horvitz-Thompson identity P(sel) = n / sum(1/p_i);
//   - remaining columns from a logistic fit of the starred proxy on the
//     observed data ("observed"), or fixed at zero.

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qba/bias_parameters.hpp"
#include "qba/dataset.hpp"
#include "qba/design.hpp"
#include "qba/error.hpp"
#include "qba/glm.hpp"
#include "qba/rng.hpp"

namespace qba {

class ScalarPrior {
public:
    enum class Kind { point, normal_log, beta, uniform };

    static ScalarPrior point(double v) {
        if (!std::isfinite(v)) throw ConfigError("point prior must be finite");
        return ScalarPrior(Kind::point, v, 0.0);
    }
    static ScalarPrior normal_log(double mean_log, double sd_log) {
        if (!std::isfinite(mean_log) || !(sd_log > 0) || !std::isfinite(sd_log))
            throw ConfigError("normal_log prior needs finite mean and sd > 0");
        return ScalarPrior(Kind::normal_log, mean_log, sd_log);
    }
    // Centre and 2.5th/97.5th percentile anchors given on the ratio scale.
    static ScalarPrior normal_log_from_anchors(double center, double p2_5, double p97_5) {
        if (!(center > 0) || !(p2_5 > 0) || !(p97_5 > 0))
            throw ConfigError("normal_log anchors must be positive ratios");
        if (!(p97_5 > p2_5)) throw ConfigError("normal_log anchors: p97.5 must exceed p2.5");
        ScalarPrior p = normal_log(std::log(center), anchor_sd(p2_5, p97_5));
        p.anchors_ = std::make_pair(p2_5, p97_5);
        return p;
    }
    static ScalarPrior beta(double a, double b) {
        if (!(a > 0) || !(b > 0)) throw ConfigError("beta prior needs a, b > 0");
        return ScalarPrior(Kind::beta, a, b);
    }
    static ScalarPrior uniform(double lo, double hi) {
        if (!(lo < hi)) throw ConfigError("uniform prior needs lo < hi");
        return ScalarPrior(Kind::uniform, lo, hi);
    }

    static double anchor_sd(double p2_5, double p97_5) {
        return (std::log(p97_5) - std::log(p2_5)) / (2 * 1.96);
    }

    double draw(RngStream& rng) const {
        switch (kind_) {
            case Kind::point: return a_;
            case Kind::normal_log: return rng.normal(a_, b_);
            case Kind::beta: return rng.beta(a_, b_);
            case Kind::uniform: return rng.uniform(a_, b_);
        }
        return a_;
    }

    // Same family with roughly `factor` times the spread.
    ScalarPrior widened(double factor) const {
        switch (kind_) {
            case Kind::point: return *this;
            case Kind::normal_log: return normal_log(a_, b_ * factor);
            case Kind::beta: {
                // Beta variance ~ m(1-m)/(a+b+1): shrink the concentration.
                const double m = a_ / (a_ + b_);
                const double conc = (a_ + b_ + 1) / (factor * factor) - 1;
                if (conc <= 0) return beta(m, 1 - m);
                return beta(m * conc, (1 - m) * conc);
            }
            case Kind::uniform: {
                const double c = 0.5 * (a_ + b_), h = 0.5 * (b_ - a_) * factor;
                return uniform(c - h, c + h);
            }
        }
        return *this;
    }

    Kind kind() const { return kind_; }
    double a() const { return a_; }
    double b() const { return b_; }
    const std::optional<std::pair<double, double>>& anchors() const { return anchors_; }

private:
    ScalarPrior(Kind k, double a, double b) : kind_(k), a_(a), b_(b) {}
    Kind kind_;
    double a_, b_;
    std::optional<std::pair<double, double>> anchors_;
};

struct ClassificationPrior {
    ScalarPrior sensitivity;
    ScalarPrior specificity;
    ScalarPrior prevalence;
};

struct MarginalPrior {
    enum class Scale { log_odds, probability, observed_response };
    Scale scale = Scale::probability;
    std::optional<ScalarPrior> prior;  // absent for observed_response
};

struct ModelPrior {
    std::optional<ScalarPrior> intercept;
    std::optional<MarginalPrior> marginal;
    std::optional<ClassificationPrior> classification;
    std::map<std::string, ScalarPrior> coefficients;  // by design label
    bool others_observed = false;
    bool others_zero = false;  // unlisted coefficients fixed at 0
    std::set<std::string> simultaneous_only;
};

struct BiasParameterPrior {
    std::map<BiasKind, ModelPrior> models;

    bool configured(BiasKind k) const { return models.count(k) > 0; }

    BiasParameterPrior widened(double factor) const {
        BiasParameterPrior out = *this;
        for (auto& [k, m] : out.models) {
            for (auto& [label, p] : m.coefficients) p = p.widened(factor);
            if (m.intercept) m.intercept = m.intercept->widened(factor);
            if (m.marginal && m.marginal->prior) m.marginal->prior = m.marginal->prior->widened(factor);
            if (m.classification) {
                m.classification->sensitivity = m.classification->sensitivity.widened(factor);
                m.classification->specificity = m.classification->specificity.widened(factor);
                m.classification->prevalence = m.classification->prevalence.widened(factor);
            }
        }
        return out;
    }
};

inline std::vector<std::string> bias_model_terms(BiasKind k, const ConfounderSchema& schema) {
    switch (k) {
        case BiasKind::misclass_a: return bias_terms::gamma(schema);
        case BiasKind::misclass_y: return bias_terms::alpha(schema);
        case BiasKind::confounding_u: return bias_terms::delta();
        case BiasKind::selection_consent_s:
        case BiasKind::selection_english_e: return bias_terms::selection();
        case BiasKind::missingness_ry: return bias_terms::eta(schema);
    }
    return {};
}

// Analytic records with the starred values standing in for the latent ones.
inline Dataset standin_dataset(const Dataset& data) {
    std::vector<Record> out;
    for (const auto& r : data.records()) {
        if (!r.r_y) continue;
        Record c = r;
        c.a_true = r.a_star;
        c.y_true = r.y_star;
        c.u.reset();
        out.push_back(std::move(c));
    }
    if (out.empty()) throw DataError("dataset has no records with an observed outcome");
    return Dataset(data.schema_ptr(), std::move(out), Provenance::observed);
}

// Coefficient slot after binding: drawn from a prior, or fixed.
struct BoundSlot {
    std::string label;
    std::optional<ScalarPrior> prior;  // absent for derived slots
    double single_value = 0.0;         // used in single-bias mode when simultaneous_only
    bool simultaneous_only = false;
};

struct BoundModel {
    BiasKind kind;
    std::vector<BoundSlot> slots;  // one per design column, intercept first
    std::optional<ClassificationPrior> classification;
    std::size_t star_column = 0;  // column receiving the classification slope
    std::optional<MarginalPrior> marginal;
    double observed_response = 0.0;
    Eigen::MatrixXd x;             // stand-in design over the analytic records
    Eigen::VectorXd column_means;
};

struct BoundPrior {
    std::vector<BoundModel> models;
    bool configured(BiasKind k) const {
        for (const auto& m : models)
            if (m.kind == k) return true;
        return false;
    }
};

namespace detail {

// Logistic fit of the observed proxy of a bias model's target; returns
// coefficients keyed by the bias model's own labels.
inline std::map<std::string, double> proxy_coefficients(BiasKind k, const Dataset& data,
                                                        const Dataset& standin) {
    const auto& schema = data.schema();
    std::vector<std::string> terms;
    Field target = Field::a_star;
    const Dataset* src = &standin;
    std::map<std::string, std::string> rename;
    switch (k) {
        case BiasKind::misclass_a:
            terms = bias_terms::with_confounders({"y_star"}, schema);
            target = Field::a_star;
            break;
        case BiasKind::misclass_y:
            terms = bias_terms::with_confounders({"a_star"}, schema);
            target = Field::y_star;
            rename["a_star"] = "a_true";
            break;
        case BiasKind::missingness_ry:
            terms = bias_terms::with_confounders({"a_star"}, schema);
            target = Field::r_y;
            src = &data;
            break;
        default: return {};
    }
    const auto d = build_design_matrix(*src, terms);
    const auto y = field_vector(*src, target);
    const auto fit = fit_logistic(d.x, y, d.labels);
    if (!fit.converged)
        throw NumericError(std::string("observed-data fit for ") + bias_key(k) + " did not converge");
    std::map<std::string, double> out;
    for (std::size_t j = 0; j < d.labels.size(); ++j) {
        auto it = rename.find(d.labels[j]);
        out[it == rename.end() ? d.labels[j] : it->second] = fit.coefficients(static_cast<Eigen::Index>(j));
    }
    return out;
}

inline bool is_selection_model(BiasKind k) {
    return k == BiasKind::selection_consent_s || k == BiasKind::selection_english_e ||
           k == BiasKind::missingness_ry;
}

}  // namespace detail

// Resolves every coefficient of every configured model to a prior or a
// derivation rule, using `data` for proxy fits and calibration statistics.
inline BoundPrior bind_priors(const BiasParameterPrior& priors, const Dataset& data) {
    const auto& schema = data.schema();
    const Dataset standin = standin_dataset(data);
    BoundPrior out;
    for (auto k : kAllBiases) {
        auto it = priors.models.find(k);
        if (it == priors.models.end()) continue;
        const ModelPrior& mp = it->second;
        const std::string name = bias_key(k);
        BoundModel bm;
        bm.kind = k;
        const auto terms = bias_model_terms(k, schema);
        const auto d = build_design_matrix(standin, terms);
        bm.x = d.x;
        bm.column_means = d.x.colwise().mean();

        for (const auto& [label, p] : mp.coefficients)
            if (std::find(d.labels.begin(), d.labels.end(), label) == d.labels.end())
                throw ConfigError("prior for " + name + " names unknown coefficient '" + label + "'");
        if (mp.others_observed && mp.others_zero)
            throw ConfigError("prior for " + name + ": others_observed and others_zero are exclusive");
        if (mp.classification) {
            if (k != BiasKind::misclass_a && k != BiasKind::misclass_y)
                throw ConfigError("classification priors apply to MB-A and MB-Y only");
            if (mp.marginal || mp.intercept)
                throw ConfigError("prior for " + name +
                                  ": classification fixes the intercept; drop intercept/marginal");
            bm.classification = mp.classification;
            bm.star_column = 1;  // a_star for gamma, y_star for alpha
        }
        if (mp.marginal) {
            if (mp.intercept) throw ConfigError("prior for " + name + ": both intercept and marginal");
            if (k == BiasKind::misclass_a || k == BiasKind::misclass_y)
                throw ConfigError("prior for " + name + ": marginal calibration is not available");
            if (mp.marginal->scale == MarginalPrior::Scale::observed_response &&
                k != BiasKind::missingness_ry)
                throw ConfigError("prior for " + name + ": observed response rate applies to SB-collider");
            bm.marginal = mp.marginal;
            std::size_t responders = 0;
            for (const auto& r : data.records()) responders += r.r_y ? 1 : 0;
            bm.observed_response = static_cast<double>(responders) / static_cast<double>(data.size());
        }

        std::optional<std::map<std::string, double>> proxy;
        auto proxy_value = [&](const std::string& label) -> std::optional<double> {
            if (!proxy) proxy = detail::proxy_coefficients(k, data, standin);
            auto p = proxy->find(label);
            if (p == proxy->end()) return std::nullopt;
            return p->second;
        };

        for (std::size_t j = 0; j < d.labels.size(); ++j) {
            const auto& label = d.labels[j];
            BoundSlot slot;
            slot.label = label;
            const bool derived = (j == 0 && (bm.classification || bm.marginal)) ||
                                 (bm.classification && j == bm.star_column);
            if (derived) {
                if (mp.coefficients.count(label))
                    throw ConfigError("prior for " + name + ": '" + label +
                                      "' is derived and cannot have its own prior");
            } else if (j == 0 && mp.intercept) {
                slot.prior = *mp.intercept;
            } else if (auto c = mp.coefficients.find(label); c != mp.coefficients.end()) {
                slot.prior = c->second;
            } else if (mp.others_zero) {
                slot.prior = ScalarPrior::point(0.0);
            } else if (mp.others_observed) {
                auto v = proxy_value(label);
                if (!v)
                    throw ConfigError("prior for " + name + ": no prior for '" + label +
                                      "' and no observed-data proxy for it");
                slot.prior = ScalarPrior::point(*v);
            } else {
                throw ConfigError("prior for " + name + ": missing prior for coefficient '" +
                                  label + "'");
            }
            if (mp.simultaneous_only.count(label)) {
                auto v = proxy_value(label);
                if (!v)
                    throw ConfigError("prior for " + name + ": '" + label +
                                      "' is simultaneous-only but has no observed-data proxy");
                slot.simultaneous_only = true;
                slot.single_value = *v;
            }
            bm.slots.push_back(std::move(slot));
        }
        out.models.push_back(std::move(bm));
    }
    return out;
}

namespace detail {

inline void check_probability(double p, const std::string& what) {
    if (!(p > 0 && p < 1)) throw NumericError(what + " drawn outside (0, 1): " + std::to_string(p));
}

// Intercept making the mean predicted prevalence equal `target`.
inline double calibrate_mean(const Eigen::VectorXd& offset, double target) {
    auto f = [&](double b0) {
        double s = 0;
        for (Eigen::Index i = 0; i < offset.size(); ++i) s += expit(b0 + offset(i));
        return s / static_cast<double>(offset.size()) - target;
    };
    double lo = -60, hi = 60;
    std::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(50),
                                               iters);
    return 0.5 * (r.first + r.second);
}

// Intercept solving n / sum_i 1/expit(b0 + o_i) = target, in closed form:
// sum_i (1 + exp(-b0 - o_i)) = n / target.
inline double calibrate_selection(const Eigen::VectorXd& offset, double target) {
    const double n = static_cast<double>(offset.size());
    const double m = offset.maxCoeff();
    double s = 0;
    for (Eigen::Index i = 0; i < offset.size(); ++i) s += std::exp(-(offset(i) - m));
    // sum exp(-o_i) = exp(-m) * s
    return -m + std::log(s) - std::log(n * (1 - target) / target);
}

}  // namespace detail

// One independent draw of every scalar, then the derivations. In
// single-bias mode simultaneous-only coefficients take their observed-data
// proxy values (the draw still happens so streams stay aligned).
inline BiasParameterSet sample_prior(const BoundPrior& bound, RngStream& rng, bool single_bias = false) {
    BiasParameterSet out;
    for (const auto& m : bound.models) {
        const Eigen::Index p = static_cast<Eigen::Index>(m.slots.size());
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
        for (Eigen::Index j = 0; j < p; ++j) {
            const auto& slot = m.slots[static_cast<std::size_t>(j)];
            if (slot.prior) beta(j) = slot.prior->draw(rng);
            if (single_bias && slot.simultaneous_only) beta(j) = slot.single_value;
        }
        const std::string name = bias_key(m.kind);
        if (m.classification) {
            const double se = m.classification->sensitivity.draw(rng);
            const double sp = m.classification->specificity.draw(rng);
            const double pr = m.classification->prevalence.draw(rng);
            detail::check_probability(se, name + " sensitivity");
            detail::check_probability(sp, name + " specificity");
            detail::check_probability(pr, name + " prevalence");
            const double ppv = se * pr / (se * pr + (1 - sp) * (1 - pr));
            const double fomr = (1 - se) * pr / ((1 - se) * pr + sp * (1 - pr));
            const auto star = static_cast<Eigen::Index>(m.star_column);
            beta(star) = logit(ppv) - logit(fomr);
            double centre = 0;
            for (Eigen::Index j = 1; j < p; ++j)
                if (j != star) centre += beta(j) * m.column_means(j);
            beta(0) = logit(fomr) - centre;
        }
        if (m.marginal) {
            double target = 0;
            switch (m.marginal->scale) {
                case MarginalPrior::Scale::log_odds: target = expit(m.marginal->prior->draw(rng)); break;
                case MarginalPrior::Scale::probability: target = m.marginal->prior->draw(rng); break;
                case MarginalPrior::Scale::observed_response: target = m.observed_response; break;
            }
            detail::check_probability(target, name + " marginal prevalence");
            beta(0) = 0;
            const Eigen::VectorXd offset = m.x * beta;
            beta(0) = detail::is_selection_model(m.kind) ? detail::calibrate_selection(offset, target)
                                                         : detail::calibrate_mean(offset, target);
        }
        out.model(m.kind) = beta;
    }
    return out;
}

}  // namespace qba
