#pragma once

// Synthetic breastfeeding/asthma cohorts: a sequential generating model for
// the confounders, the unmeasured confounder U, true and reported exposure and
// outcome, English ability E and outcome response R_y, plus the large-sample
// oracles (true effect, correct bias parameters) used by the simulation study.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
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

// theta_e = nv + (theta_r - nv) * 2
inline double enhance_parameter(double theta_r, double nv) { return nv + (theta_r - nv) * 2.0; }

// [TP/FN] / [FP/TN] with TP = p N sens, FN = p N - TP, FP = (1 - p) N spec,
// TN = (1 - p) N - FP.
inline double or_from_sens_spec(double sens, double spec, double prevalence = 0.5, double n = 1000.0) {
    if (!(sens > 0 && sens < 1) || !(spec > 0 && spec < 1))
        throw ConfigError("sensitivity and specificity must lie strictly between 0 and 1");
    if (!(prevalence > 0 && prevalence < 1) || !(n > 0))
        throw ConfigError("prevalence must lie in (0, 1) and n must be positive");
    const double tp = prevalence * n * sens;
    const double fn = prevalence * n - tp;
    const double fp = (1 - prevalence) * n * spec;
    const double tn = (1 - prevalence) * n - fp;
    return (tp / fn) / (fp / tn);
}

// Intercept plus named terms. Term names are confounder design labels
// (Sex, NSibs_2, SES_5, MAge, ...) or, for the outcome model, E.
struct LinearPredictor {
    double intercept = 0.0;
    std::vector<std::pair<std::string, double>> terms;
};

// Coefficients of the generating models that the scenarios do not vary.
struct DgpCoefficients {
    double p_sex = 0.49;  // female
    double p_fhx = 0.69;
    double p_fpa = 0.14;
    double p_fma = 0.15;
    std::vector<double> p_nsibs{0.50, 0.33, 0.13, 0.04};
    std::vector<double> p_peth{0.60, 0.10, 0.30};
    std::vector<double> p_ses{0.20, 0.20, 0.21, 0.19, 0.20};
    LinearPredictor mage{30.82, {{"SES_2", 2.2}, {"SES_3", 2.14}, {"SES_4", 2.65}, {"SES_5", 3.75}}};
    double mage_sd = 4.8;
    LinearPredictor msmk{-2.10, {{"SES_2", -1.25}, {"SES_3", -0.84}, {"SES_4", -1.48}, {"SES_5", -2.57}}};
    LinearPredictor gage{-2.51,
                         {{"MAge", 0.01}, {"SES_2", 0.04}, {"SES_3", -0.16}, {"SES_4", -0.31},
                          {"SES_5", -0.16}, {"MSmk", -0.08}}};
    LinearPredictor dmode{-2.92,
                          {{"MAge", 0.07}, {"SES_2", -0.05}, {"SES_3", -0.07}, {"SES_4", -0.16},
                           {"SES_5", -0.11}}};
    LinearPredictor lbw{-4.81,
                        {{"DMode", 0.70}, {"GAge", 3.85}, {"MAge", 0.01}, {"SES_2", 0.14},
                         {"SES_3", -0.01}, {"SES_4", 0.16}, {"SES_5", 0.34}, {"MSmk", 0.66}}};
    // Confounder part of the exposure model; also the confounder part of A*.
    LinearPredictor exposure{1.79,
                             {{"Sex", -0.17},   {"NSibs_2", -0.56}, {"NSibs_3", -0.99}, {"NSibs_4", -1.06},
                              {"LBW", -0.38},   {"PEth_2", 0.31},   {"PEth_3", 0.36},   {"FMa", 0.04},
                              {"FPa", -0.11},   {"FHx", -0.01},     {"DMode", -0.10},   {"GAge", 0.03},
                              {"MAge", 0.03},   {"SES_2", 0.86},    {"SES_3", 1.08},    {"SES_4", 0.72},
                              {"SES_5", 0.81},  {"MSmk", -0.575}}};
    // Confounder part of the outcome model; also the confounder part of Y*.
    LinearPredictor outcome{-2.39,
                            {{"Sex", -0.63},  {"NSibs_2", 0.05}, {"NSibs_3", 0.02}, {"NSibs_4", -0.02},
                             {"LBW", 0.19},   {"PEth_2", -0.04}, {"PEth_3", 0.07},  {"FMa", 0.95},
                             {"FPa", 0.69},   {"FHx", -0.11},    {"DMode", 0.17},   {"GAge", 0.19},
                             {"MAge", 0.02},  {"SES_2", 0.11},   {"SES_3", -0.05},  {"SES_4", -0.12},
                             {"SES_5", -0.02}, {"MSmk", 0.80}}};
    double outcome_e = 0.18;  // main effect of E on Y
    LinearPredictor response{-1.74,
                             {{"Sex", -0.11},  {"NSibs_2", -0.19}, {"NSibs_3", -0.30}, {"NSibs_4", -0.52},
                              {"LBW", -0.18},  {"PEth_2", -0.29},  {"PEth_3", -0.35},  {"FMa", 0.22},
                              {"FPa", 0.21},   {"FHx", 0.29},      {"DMode", -0.13},   {"GAge", 0.13},
                              {"MAge", 0.06},  {"SES_2", 0.07},    {"SES_3", 0.21},    {"SES_4", 0.13},
                              {"SES_5", -0.01}, {"MSmk", -0.54}}};
    double response_a = 0.79;  // coefficient of true A in the response model
};

struct ScenarioConfig {
    enum class Kind { realistic, enhanced, custom };

    Kind kind = Kind::realistic;
    std::string name = "realistic";
    double or_y_ry = 1.20;
    double p_e = 0.85;
    double or_ya_e = 0.70;
    double p_u = 0.10;
    double or_a_u = 0.60;
    double or_y_u = 1.30;
    double sens_a = 0.90, spec_a = 0.84, p_a = 0.94;
    double sens_y = 0.83, spec_y = 0.90, p_y = 0.10;
    double a_coef = -0.43;
    std::size_t n = 2000;
    DgpCoefficients dgp;

    static ScenarioConfig realistic() { return {}; }

    // Every varied parameter moved twice as far from its null value; the
    // exposure coefficient is set separately.
    static ScenarioConfig enhanced() {
        ScenarioConfig c;
        c.kind = Kind::enhanced;
        c.name = "enhanced";
        c.or_y_ry = enhance_parameter(c.or_y_ry, 1);
        c.p_e = enhance_parameter(c.p_e, 1);
        c.or_ya_e = enhance_parameter(c.or_ya_e, 1);
        c.p_u = enhance_parameter(c.p_u, 0);
        c.or_a_u = enhance_parameter(c.or_a_u, 1);
        c.or_y_u = enhance_parameter(c.or_y_u, 1);
        c.sens_a = enhance_parameter(c.sens_a, 1);
        c.spec_a = enhance_parameter(c.spec_a, 1);
        c.sens_y = enhance_parameter(c.sens_y, 1);
        c.spec_y = enhance_parameter(c.spec_y, 1);
        c.a_coef = -0.05;
        return c;
    }

    static ScenarioConfig preset(const std::string& name) {
        if (name == "realistic") return realistic();
        if (name == "enhanced") return enhanced();
        throw ConfigError("unknown scenario preset '" + name + "'");
    }

    double or_a_star() const { return or_from_sens_spec(sens_a, spec_a, p_a, static_cast<double>(n)); }
    double or_y_star() const { return or_from_sens_spec(sens_y, spec_y, p_y, static_cast<double>(n)); }

    void validate() const {
        auto prob = [](double v, const char* what) {
            if (!(v > 0 && v < 1)) throw ConfigError(std::string("scenario: ") + what + " must lie in (0, 1)");
        };
        auto ratio = [](double v, const char* what) {
            if (!(v > 0) || !std::isfinite(v))
                throw ConfigError(std::string("scenario: ") + what + " must be a positive odds ratio");
        };
        prob(p_e, "p_e");
        prob(p_u, "p_u");
        prob(sens_a, "sens_a");
        prob(spec_a, "spec_a");
        prob(p_a, "p_a");
        prob(sens_y, "sens_y");
        prob(spec_y, "spec_y");
        prob(p_y, "p_y");
        ratio(or_y_ry, "or_y_ry");
        ratio(or_ya_e, "or_ya_e");
        ratio(or_a_u, "or_a_u");
        ratio(or_y_u, "or_y_u");
        if (!std::isfinite(a_coef)) throw ConfigError("scenario: a_coef must be finite");
        if (n == 0) throw ConfigError("scenario: n must be positive");
        prob(dgp.p_sex, "p_sex");
        prob(dgp.p_fhx, "p_fhx");
        prob(dgp.p_fpa, "p_fpa");
        prob(dgp.p_fma, "p_fma");
        if (!(dgp.mage_sd > 0)) throw ConfigError("scenario: mage_sd must be positive");
        auto dist = [](const std::vector<double>& p, std::size_t k, const char* what) {
            if (p.size() != k) throw ConfigError(std::string("scenario: ") + what + " needs " + std::to_string(k) + " proportions");
            for (double v : p)
                if (!(v >= 0) || !std::isfinite(v)) throw ConfigError(std::string("scenario: ") + what + " has an invalid proportion");
        };
        dist(dgp.p_nsibs, 4, "p_nsibs");
        dist(dgp.p_peth, 3, "p_peth");
        dist(dgp.p_ses, 5, "p_ses");
    }
};

namespace detail {

// Per-record feature slots used by the generating models.
enum Feature : int {
    f_sex, f_nsibs2, f_nsibs3, f_nsibs4, f_lbw, f_peth2, f_peth3, f_fma, f_fpa, f_fhx,
    f_dmode, f_gage, f_mage, f_ses2, f_ses3, f_ses4, f_ses5, f_msmk, f_count
};

inline int feature_index(const std::string& label) {
    static const std::map<std::string, int> names{
        {"Sex", f_sex},     {"NSibs_2", f_nsibs2}, {"NSibs_3", f_nsibs3}, {"NSibs_4", f_nsibs4},
        {"LBW", f_lbw},     {"PEth_2", f_peth2},   {"PEth_3", f_peth3},   {"FMa", f_fma},
        {"FPa", f_fpa},     {"FHx", f_fhx},        {"DMode", f_dmode},    {"GAge", f_gage},
        {"MAge", f_mage},   {"SES_2", f_ses2},     {"SES_3", f_ses3},     {"SES_4", f_ses4},
        {"SES_5", f_ses5},  {"MSmk", f_msmk}};
    auto it = names.find(label);
    if (it == names.end()) throw ConfigError("generating model: unknown term '" + label + "'");
    return it->second;
}

struct CompiledPredictor {
    double intercept = 0.0;
    std::vector<std::pair<int, double>> terms;

    explicit CompiledPredictor(const LinearPredictor& lp) : intercept(lp.intercept) {
        for (const auto& [name, b] : lp.terms) terms.emplace_back(feature_index(name), b);
    }
    double operator()(const double* f) const {
        double s = intercept;
        for (const auto& [j, b] : terms) s += b * f[j];
        return s;
    }
};

inline constexpr std::size_t kGenerationChunk = 1 << 16;

}  // namespace detail

// Ideal population of `config.n` records with every field present. Each
// chunk of 65536 records draws from stream (seed, generation, replicate, chunk).
inline Dataset generate_ideal(const ScenarioConfig& config, std::uint64_t seed, std::uint64_t replicate = 0) {
    config.validate();
    const auto& g = config.dgp;
    const detail::CompiledPredictor mage(g.mage), msmk(g.msmk), gage(g.gage), dmode(g.dmode), lbw(g.lbw),
        lp_a(g.exposure), lp_y(g.outcome), lp_r(g.response);
    const double b_au = std::log(config.or_a_u), b_yu = std::log(config.or_y_u),
                 b_yae = std::log(config.or_ya_e), b_ry = std::log(config.or_y_ry),
                 b_as = std::log(config.or_a_star()), b_ys = std::log(config.or_y_star());

    std::vector<Record> out(config.n);
    for (std::size_t start = 0, chunk = 0; start < config.n; start += detail::kGenerationChunk, ++chunk) {
        RngStream rng(seed, streams::generation, {replicate, chunk});
        const std::size_t stop = std::min(config.n, start + detail::kGenerationChunk);
        for (std::size_t i = start; i < stop; ++i) {
            using namespace detail;
            double f[f_count] = {};
            const double fhx = rng.bernoulli(g.p_fhx);
            const double fpa = rng.bernoulli(g.p_fpa);
            const double fma = rng.bernoulli(g.p_fma);
            const auto peth = rng.categorical(g.p_peth);
            const auto nsibs = rng.categorical(g.p_nsibs);
            const double sex = rng.bernoulli(g.p_sex);
            const auto ses = rng.categorical(g.p_ses);
            f[f_fhx] = fhx;
            f[f_fpa] = fpa;
            f[f_fma] = fma;
            f[f_sex] = sex;
            if (peth > 0) f[f_peth2 + static_cast<int>(peth) - 1] = 1;
            if (nsibs > 0) f[f_nsibs2 + static_cast<int>(nsibs) - 1] = 1;
            if (ses > 0) f[f_ses2 + static_cast<int>(ses) - 1] = 1;
            f[f_mage] = rng.normal(mage(f), g.mage_sd);
            f[f_msmk] = rng.bernoulli(expit(msmk(f)));
            f[f_gage] = rng.bernoulli(expit(gage(f)));
            f[f_dmode] = rng.bernoulli(expit(dmode(f)));
            f[f_lbw] = rng.bernoulli(expit(lbw(f)));
            const bool u = rng.bernoulli(config.p_u);
            const double eta_a = lp_a(f);
            const bool a = rng.bernoulli(expit(eta_a + b_au * u));
            const bool e = rng.bernoulli(config.p_e);
            const double eta_y = lp_y(f);
            const bool y = rng.bernoulli(
                expit(eta_y + config.a_coef * a + b_yu * u + g.outcome_e * e + b_yae * (a && e)));
            const bool a_star = rng.bernoulli(expit(eta_a + b_as * a));
            const bool y_star = rng.bernoulli(expit(eta_y + config.a_coef * a + b_ys * y));
            const bool r_y = rng.bernoulli(expit(lp_r(f) + g.response_a * a + b_ry * y));

            Record& r = out[i];
            r.confounders = {sex,    static_cast<double>(nsibs), f[f_lbw],  static_cast<double>(peth),
                             fma,    fpa,                        fhx,       f[f_dmode],
                             f[f_gage], f[f_mage],               static_cast<double>(ses), f[f_msmk]};
            r.a_true = a;
            r.y_true = y;
            r.a_star = a_star;
            r.y_star = y_star;
            r.u = u;
            r.e = e;
            r.r_y = r_y;
        }
    }
    return Dataset(case_study_schema(), std::move(out), Provenance::synthetic_ideal);
}

// Keeps the English-speaking records and hides what an analyst would not see.
inline Dataset to_observed(const Dataset& ideal) {
    std::vector<Record> out;
    out.reserve(ideal.size());
    for (const auto& r : ideal.records()) {
        if (!r.e.has_value()) throw DataError("to_observed: ideal record without e");
        if (!*r.e) continue;
        Record c = r;
        c.u.reset();
        c.a_true.reset();
        c.y_true.reset();
        c.e.reset();
        if (!c.r_y) c.y_star.reset();
        out.push_back(std::move(c));
    }
    if (out.empty()) throw DataError("to_observed: no record has e = 1");
    return Dataset(ideal.schema_ptr(), std::move(out), Provenance::synthetic_observed);
}

struct TrueEffect {
    double rd = 0.0;
    double log_rr = 0.0;
    bool log_rr_fallback = false;
};

// Exposure coefficients of the outcome models fitted to an ideal population
// (all records, true A and Y, adjusted for C and U).
inline TrueEffect true_effect(const Dataset& ideal) {
    auto terms = bias_terms::with_confounders({"a_true"}, ideal.schema());
    terms.emplace_back("u");
    const auto d = build_design_matrix(ideal, terms);
    const auto y = field_vector(ideal, Field::y_true);
    const auto rd = fit_identity_binomial(d.x, y, Eigen::VectorXd::Ones(y.size()), d.labels);
    const auto rr = fit_log_binomial(d.x, y, d.labels);
    if (!rd.usable() || !rr.usable()) throw NumericError("true effect: outcome fit did not converge");
    return {rd.coefficients(1), rr.coefficients(1), rr.fallback};
}

struct OracleParameters {
    BiasParameterSet correct;
    // Models fitted with the starred variables standing in for inactive
    // latents, used when a bias is adjusted on its own.
    std::map<BiasKind, BiasParameterSet> single_bias;

    OracleParameters scaled(double factor) const {
        OracleParameters out{correct.scaled(factor), {}};
        for (const auto& [k, p] : single_bias) out.single_bias.emplace(k, p.scaled(factor));
        return out;
    }
};

namespace detail {

inline Eigen::VectorXd fit_bias_model(const Dataset& data, const std::vector<std::string>& terms, Field target,
                                      std::optional<std::span<const std::size_t>> rows = {}) {
    const auto d = build_design_matrix(data, terms, rows);
    const auto y = field_vector(data, target, rows);
    const auto fit = fit_logistic(d.x, y, d.labels);
    if (!fit.converged || fit.separated)
        throw NumericError("bias model for " + std::string(terms.empty() ? "?" : terms.front()) +
                           " did not converge");
    return fit.coefficients;
}

}  // namespace detail

// Bias-model coefficients fitted to an ideal population: the English model on
// all records, the response model on E = 1 records, the rest on all records.
// The consent pathway is not simulated, so theta stays empty.
inline OracleParameters correct_bias_params(const Dataset& ideal) {
    const auto& schema = ideal.schema();
    OracleParameters out;
    auto& p = out.correct;
    p.gamma = detail::fit_bias_model(ideal, bias_terms::gamma(schema), Field::a_true);
    p.alpha = detail::fit_bias_model(ideal, bias_terms::alpha(schema), Field::y_true);
    p.delta = detail::fit_bias_model(ideal, bias_terms::delta(), Field::u);
    p.lambda = detail::fit_bias_model(ideal, bias_terms::selection(), Field::e);
    std::vector<std::size_t> english;
    for (std::size_t i = 0; i < ideal.size(); ++i)
        if (ideal[i].e.value_or(false)) english.push_back(i);
    p.eta = detail::fit_bias_model(ideal, bias_terms::eta(schema), Field::r_y,
                                   std::span<const std::size_t>(english));

    BiasParameterSet y_only = p;
    y_only.alpha = detail::fit_bias_model(ideal, bias_terms::with_confounders({"y_star", "a_star"}, schema),
                                          Field::y_true);
    BiasParameterSet u_only = p;
    u_only.delta = detail::fit_bias_model(ideal, {"a_star", "y_star"}, Field::u);
    out.single_bias.emplace(BiasKind::misclass_y, std::move(y_only));
    out.single_bias.emplace(BiasKind::confounding_u, std::move(u_only));
    return out;
}

struct Oracle {
    TrueEffect truth;
    OracleParameters parameters;
};

// Truth and correct parameters from one ideal population of n_large records,
// drawn from stream (seed, oracle).
inline Oracle compute_oracle(ScenarioConfig config, std::size_t n_large, std::uint64_t seed) {
    if (n_large < 1000) throw ConfigError("oracle population must have at least 1000 records");
    config.n = n_large;
    const std::uint64_t oracle_key = fnv1a(streams::oracle);
    const Dataset ideal = generate_ideal(config, seed, oracle_key);
    return {true_effect(ideal), correct_bias_params(ideal)};
}

}  // namespace qba
