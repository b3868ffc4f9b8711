#pragma once

// Bias adjustment by imputation and weighting: impute the latent exposure,
// outcome and unmeasured confounder from their bias models, weight the
// analytic records by the inverse of their selection and response
// probabilities, and refit the risk-difference and risk-ratio models.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qba/bias_parameters.hpp"
#include "qba/dataset.hpp"
#include "qba/design.hpp"
#include "qba/error.hpp"
#include "qba/glm.hpp"
#include "qba/parallel.hpp"
#include "qba/priors.hpp"
#include "qba/rng.hpp"

namespace qba {

inline constexpr double kWaldZ = 1.96;
inline constexpr double kSelectionFloor = 1e-6;

enum class IntervalKind { confidence, simulation };

inline const char* to_string(IntervalKind k) {
    return k == IntervalKind::confidence ? "confidence" : "simulation";
}

struct Interval {
    double lo = std::numeric_limits<double>::quiet_NaN();
    double hi = std::numeric_limits<double>::quiet_NaN();
    double width() const { return hi - lo; }
    bool contains(double v) const { return lo <= v && v <= hi; }
};

struct EstimateResult {
    static constexpr double nan = std::numeric_limits<double>::quiet_NaN();

    double rd_hat = nan;
    double log_rr_hat = nan;
    double rd_se = nan;      // sandwich SE (CI mode) or SD of draws (SI mode)
    double log_rr_se = nan;
    double rd_model_se = nan;
    double log_rr_model_se = nan;
    Interval interval_rd;
    Interval interval_log_rr;
    IntervalKind interval_kind = IntervalKind::confidence;

    bool converged = false;        // both outcome fits usable
    bool rd_converged = false;
    bool log_rr_converged = false;
    // The exposure coefficient of the log-link fit diverges (no events in an
    // exposure group). log_rr_hat then holds where the iterations stopped.
    bool log_rr_separated = false;
    bool log_rr_fallback = false;  // log RR came from the Poisson fallback
    std::size_t n_analytic = 0;
    std::size_t clamped = 0;
    double max_weight = 1.0;
    double weight_cv = 0.0;
    double effective_sample_size = 0.0;

    // Probabilistic runs only.
    std::size_t replicates = 0;
    std::size_t dropped = 0;
    bool warning = false;  // more than 5% of replicates dropped
    std::vector<double> draws_rd, draws_log_rr;
};

struct WeightVector {
    Eigen::VectorXd w;
    double max_weight = 1.0;
    double cv = 0.0;
    double effective_sample_size = 0.0;
};

namespace detail {

inline Dataset with_imputed(const Dataset& data, const std::vector<std::size_t>& rows,
                            const Eigen::VectorXd& p, RngStream& rng,
                            std::optional<bool> Record::*field) {
    std::vector<Record> out = data.records();
    for (std::size_t i = 0; i < rows.size(); ++i)
        out[rows[i]].*field = rng.bernoulli(p(static_cast<Eigen::Index>(i)));
    return Dataset(data.schema_ptr(), std::move(out), Provenance::observed);
}

inline void check_length(const Eigen::VectorXd& beta, std::size_t want, const char* what) {
    if (static_cast<std::size_t>(beta.size()) != want)
        throw ConfigError(std::string(what) + ": expected " + std::to_string(want) +
                          " coefficients, got " + std::to_string(beta.size()));
}

inline Eigen::VectorXd model_probabilities(const Dataset& data, const std::vector<std::size_t>& rows,
                                           const std::vector<std::string>& terms,
                                           const Eigen::VectorXd& beta, const char* what) {
    const auto d = build_design_matrix(data, terms, std::span<const std::size_t>(rows));
    check_length(beta, d.labels.size(), what);
    return predict_prob(Link::logit, beta, d.x).p;
}

}  // namespace detail

// a_true ~ Bernoulli(expit(gamma'[1, A*, Y*, C])) on records with r_y = 1.
inline Dataset impute_exposure(const Dataset& data, const Eigen::VectorXd& gamma, RngStream& rng) {
    const auto rows = data.responder_indices();
    const auto p = detail::model_probabilities(data, rows, bias_terms::gamma(data.schema()), gamma,
                                               "exposure model (gamma)");
    return detail::with_imputed(data, rows, p, rng, &Record::a_true);
}

// y_true ~ Bernoulli(expit(alpha'[1, Y*, A, C])); A is the imputed exposure
// or, when exposure misclassification is not adjusted, a copy of A*.
inline Dataset impute_outcome(const Dataset& data, const Eigen::VectorXd& alpha, RngStream& rng) {
    const auto rows = data.responder_indices();
    const auto p = detail::model_probabilities(data, rows, bias_terms::alpha(data.schema()), alpha,
                                               "outcome model (alpha)");
    return detail::with_imputed(data, rows, p, rng, &Record::y_true);
}

// u ~ Bernoulli(expit(delta0 + delta1 A + delta2 Y)).
inline Dataset impute_confounder_u(const Dataset& data, const Eigen::VectorXd& delta, RngStream& rng) {
    const auto rows = data.responder_indices();
    const auto p = detail::model_probabilities(data, rows, bias_terms::delta(), delta,
                                               "confounder model (delta)");
    return detail::with_imputed(data, rows, p, rng, &Record::u);
}

// 1 / product of the predicted selection and response probabilities of the
// active selection biases, one weight per record with r_y = 1.
inline WeightVector derive_weights(const Dataset& data, const BiasParameterSet& params,
                                   const BiasSelection& active) {
    const auto rows = data.responder_indices();
    Eigen::VectorXd prob = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(rows.size()));
    auto factor = [&](bool on, const Eigen::VectorXd& beta, const std::vector<std::string>& terms,
                      const char* what) {
        if (!on) return;
        prob.array() *= detail::model_probabilities(data, rows, terms, beta, what).array();
    };
    factor(active.selection_consent_s, params.theta, bias_terms::selection(), "consent model (theta)");
    factor(active.selection_english_e, params.lambda, bias_terms::selection(), "English model (lambda)");
    factor(active.missingness_ry, params.eta, bias_terms::eta(data.schema()), "response model (eta)");

    std::vector<std::size_t> bad;
    for (Eigen::Index i = 0; i < prob.size(); ++i)
        if (!(prob(i) >= kSelectionFloor)) bad.push_back(rows[static_cast<std::size_t>(i)]);
    if (!bad.empty()) throw ExtremeWeightError(bad, kSelectionFloor);

    WeightVector out;
    out.w = prob.cwiseInverse();
    out.max_weight = out.w.maxCoeff();
    const double mean = out.w.mean();
    const double var = (out.w.array() - mean).square().sum() /
                       std::max<double>(1.0, static_cast<double>(out.w.size() - 1));
    out.cv = std::sqrt(var) / mean;
    out.effective_sample_size = out.w.sum() * out.w.sum() / out.w.squaredNorm();
    return out;
}

namespace detail {

inline EstimateResult fit_outcome_models(const Dataset& work, const WeightVector& wv, bool with_u) {
    auto terms = bias_terms::with_confounders({"a_true"}, work.schema());
    if (with_u) terms.emplace_back("u");
    const auto d = build_design_matrix(work, terms);
    const auto y = field_vector(work, Field::y_true);

    EstimateResult r;
    r.n_analytic = work.size();
    r.max_weight = wv.max_weight;
    r.weight_cv = wv.cv;
    r.effective_sample_size = wv.effective_sample_size;

    const auto rd = fit_identity_binomial(d.x, y, wv.w, d.labels);
    const auto rr = fit_log_binomial(d.x, y, wv.w, d.labels);
    r.clamped = predict_prob(rd, d.x).clamped;
    r.log_rr_fallback = rr.fallback;
    r.rd_converged = rd.estimable(1);
    r.log_rr_converged = rr.estimable(1);
    r.log_rr_separated = rr.separated && !r.log_rr_converged;
    r.converged = r.rd_converged && r.log_rr_converged;
    auto take = [](const GlmFit& f, bool ok, double& hat, double& se, double& model_se, Interval& iv) {
        if (!ok || f.covariance.size() == 0) return;
        hat = f.coefficients(1);
        se = f.robust_se(1);
        model_se = f.se(1);
        iv = {hat - kWaldZ * se, hat + kWaldZ * se};
    };
    take(rd, r.rd_converged, r.rd_hat, r.rd_se, r.rd_model_se, r.interval_rd);
    take(rr, r.log_rr_converged || r.log_rr_separated, r.log_rr_hat, r.log_rr_se, r.log_rr_model_se,
         r.interval_log_rr);
    r.interval_kind = IntervalKind::confidence;
    return r;
}

}  // namespace detail

// One pass of impute -> weight -> weighted outcome regression on the records
// with an observed outcome. Inactive latents are copies of their starred
// counterparts. With no bias selected this is the primary analysis.
inline EstimateResult adjust_once(const Dataset& data, const BiasParameterSet& params,
                                  const BiasSelection& selection, RngStream& rng) {
    params.validate(data.schema(), selection);
    const auto original_rows = data.responder_indices();
    Dataset work = standin_dataset(data);
    if (selection.misclass_a) work = impute_exposure(work, params.gamma, rng);
    if (selection.misclass_y) work = impute_outcome(work, params.alpha, rng);
    if (selection.confounding_u) work = impute_confounder_u(work, params.delta, rng);
    WeightVector wv;
    try {
        wv = derive_weights(work, params, selection);
    } catch (const ExtremeWeightError& e) {
        std::vector<std::size_t> mapped;
        for (auto i : e.records()) mapped.push_back(original_rows[i]);
        throw ExtremeWeightError(mapped, kSelectionFloor);
    }
    return detail::fit_outcome_models(work, wv, selection.confounding_u);
}

inline EstimateResult primary_analysis(const Dataset& data) {
    RngStream unused(0, "primary");
    return adjust_once(data, BiasParameterSet{}, BiasSelection::none(), unused);
}

// Sample quantile with linear interpolation between order statistics
// (type 7): h = (n - 1) q.
inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct AdjustmentPlan {
    BiasSelection selection;
    std::optional<BiasParameterSet> parameters;  // fixed mode
    std::optional<BiasParameterPrior> priors;    // probabilistic mode
    // Parameters used instead of `parameters` when a bias is adjusted on its
    // own (one-at-a-time), for example models fitted with starred stand-ins.
    std::map<BiasKind, BiasParameterSet> single_bias_parameters;
    std::size_t n_parameter_draws = 1000;
    std::size_t n_bootstrap = 0;
    std::uint64_t seed = 0;
    bool fixed_imputation_stream = false;  // same imputation stream for every draw
    unsigned workers = 1;

    bool probabilistic() const { return priors.has_value(); }

    void validate() const {
        if (!selection.any()) throw ConfigError("adjustment plan selects no bias");
        if (parameters.has_value() == priors.has_value())
            throw ConfigError("adjustment plan needs exactly one of fixed parameters or priors");
        if (probabilistic() && n_parameter_draws < 1)
            throw ConfigError("probabilistic plan needs at least one parameter draw");
        if (n_bootstrap != 0 && n_bootstrap < 100)
            throw ConfigError("bootstrap count must be 0 or at least 100");
    }
};

namespace detail {

inline BiasParameterPrior restrict_priors(const BiasParameterPrior& p, const BiasSelection& s) {
    BiasParameterPrior out;
    for (const auto& [k, m] : p.models)
        if (s.has(k)) out.models.emplace(k, m);
    for (auto k : kAllBiases)
        if (s.has(k) && !out.configured(k))
            throw ConfigError(std::string("no prior configured for ") + bias_key(k));
    return out;
}

inline Dataset bootstrap_resample(const Dataset& data, RngStream& rng) {
    std::vector<Record> out;
    out.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out.push_back(data[rng.index(data.size())]);
    return data.with_records(std::move(out));
}

}  // namespace detail

// Repeats adjust_once under parameter draws (and bootstrap resamples when
// n_bootstrap > 0, one fresh draw per resample). The point estimate is the
// median and the 95% simulation interval the 2.5th/97.5th percentiles.
inline EstimateResult probabilistic_qba(const Dataset& data, const AdjustmentPlan& plan) {
    plan.validate();
    const bool single = plan.selection.count() == 1;
    std::optional<BoundPrior> bound;
    if (plan.priors) bound = bind_priors(detail::restrict_priors(*plan.priors, plan.selection), data);
    const std::size_t reps = plan.n_bootstrap > 0 ? plan.n_bootstrap : plan.n_parameter_draws;

    struct Outcome {
        bool ok = false;
        double rd = 0, lrr = 0;
    };
    std::vector<Outcome> results(reps);
    parallel_for(reps, plan.workers, [&](std::size_t i) {
        const std::uint64_t idx = i;
        RngStream prior_rng(plan.seed, streams::priors, {idx});
        RngStream imp_rng(plan.seed, streams::imputation, {plan.fixed_imputation_stream ? 0 : idx});
        BiasParameterSet params = bound ? sample_prior(*bound, prior_rng, single) : *plan.parameters;
        try {
            EstimateResult r;
            if (plan.n_bootstrap > 0) {
                RngStream boot_rng(plan.seed, streams::bootstrap, {idx});
                const Dataset resampled = detail::bootstrap_resample(data, boot_rng);
                r = adjust_once(resampled, params, plan.selection, imp_rng);
            } else {
                r = adjust_once(data, params, plan.selection, imp_rng);
            }
            if (r.converged && std::isfinite(r.rd_hat) && std::isfinite(r.log_rr_hat))
                results[i] = {true, r.rd_hat, r.log_rr_hat};
        } catch (const NumericError&) {
            // dropped and counted below
        }
    });

    EstimateResult out;
    out.interval_kind = IntervalKind::simulation;
    out.replicates = reps;
    for (const auto& o : results) {
        if (!o.ok) {
            ++out.dropped;
            continue;
        }
        out.draws_rd.push_back(o.rd);
        out.draws_log_rr.push_back(o.lrr);
    }
    if (out.draws_rd.empty()) throw NumericError("probabilistic bias analysis: every replicate failed");
    out.warning = static_cast<double>(out.dropped) > 0.05 * static_cast<double>(reps);
    out.converged = out.rd_converged = out.log_rr_converged = true;
    out.n_analytic = data.responder_indices().size();
    auto summarise = [](const std::vector<double>& v, double& point, double& sd, Interval& iv) {
        point = quantile(v, 0.5);
        iv = {quantile(v, 0.025), quantile(v, 0.975)};
        double mean = 0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double ss = 0;
        for (double x : v) ss += (x - mean) * (x - mean);
        sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    };
    summarise(out.draws_rd, out.rd_hat, out.rd_se, out.interval_rd);
    summarise(out.draws_log_rr, out.log_rr_hat, out.log_rr_se, out.interval_log_rr);
    return out;
}

// Runs each configured bias on its own. Fixed plans call adjust_once with
// imputation stream (seed, k); probabilistic plans restrict the priors to the
// bias at hand.
inline std::map<BiasKind, EstimateResult> one_at_a_time_suite(const Dataset& data,
                                                              const AdjustmentPlan& plan) {
    std::map<BiasKind, EstimateResult> out;
    for (auto k : kAllBiases) {
        const bool configured = plan.probabilistic() ? plan.priors->configured(k)
                                                     : plan.parameters->configured(k);
        if (!configured) continue;
        AdjustmentPlan sub = plan;
        sub.selection = BiasSelection::only(k);
        if (!plan.probabilistic()) {
            if (auto it = plan.single_bias_parameters.find(k); it != plan.single_bias_parameters.end())
                sub.parameters = it->second;
            RngStream rng(plan.seed, streams::imputation, {static_cast<std::uint64_t>(k)});
            out.emplace(k, adjust_once(data, *sub.parameters, sub.selection, rng));
        } else {
            out.emplace(k, probabilistic_qba(data, sub));
        }
    }
    return out;
}

}  // namespace qba
