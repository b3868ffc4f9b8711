#pragma once

// JSON run configuration: dataset schema, priors or fixed bias parameters,
// scenario definitions and run settings. Unknown keys are errors.

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qba/bias_parameters.hpp"
#include "qba/error.hpp"
#include "qba/metrics.hpp"
#include "qba/priors.hpp"
#include "qba/schema.hpp"
#include "qba/simgen.hpp"

namespace qba {

using Json = nlohmann::ordered_json;

namespace config_detail {

inline void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

inline double number(const Json& j, const std::string& where) {
    if (!j.is_number()) throw ConfigError(where + ": expected a number");
    return j.get<double>();
}

inline double number(const Json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
    return number(obj.at(key), where + "." + key);
}

inline std::uint64_t count(const Json& j, const std::string& where) {
    if (!j.is_number_unsigned()) throw ConfigError(where + ": expected a non-negative integer");
    return j.get<std::uint64_t>();
}

inline std::string text(const Json& j, const std::string& where) {
    if (!j.is_string()) throw ConfigError(where + ": expected a string");
    return j.get<std::string>();
}

inline bool boolean(const Json& j, const std::string& where) {
    if (!j.is_boolean()) throw ConfigError(where + ": expected true or false");
    return j.get<bool>();
}

}  // namespace config_detail

// {"dist": "point", "value": v}
// {"dist": "normal_log", "mean": m, "sd": s}                 log scale
// {"dist": "ratio", "center": c, "lower": l, "upper": u}     2.5/97.5% anchors
// {"dist": "beta", "a": a, "b": b}
// {"dist": "uniform", "lo": lo, "hi": hi}
inline ScalarPrior parse_scalar_prior(const Json& j, const std::string& where) {
    using namespace config_detail;
    if (j.is_number()) return ScalarPrior::point(j.get<double>());
    if (!j.is_object() || !j.contains("dist")) throw ConfigError(where + ": expected a prior with a 'dist'");
    const std::string dist = text(j.at("dist"), where + ".dist");
    if (dist == "point") {
        check_keys(j, {"dist", "value"}, where);
        return ScalarPrior::point(number(j, "value", where));
    }
    if (dist == "normal_log") {
        check_keys(j, {"dist", "mean", "sd"}, where);
        return ScalarPrior::normal_log(number(j, "mean", where), number(j, "sd", where));
    }
    if (dist == "ratio") {
        check_keys(j, {"dist", "center", "lower", "upper"}, where);
        return ScalarPrior::normal_log_from_anchors(number(j, "center", where), number(j, "lower", where),
                                                    number(j, "upper", where));
    }
    if (dist == "beta") {
        check_keys(j, {"dist", "a", "b"}, where);
        return ScalarPrior::beta(number(j, "a", where), number(j, "b", where));
    }
    if (dist == "uniform") {
        check_keys(j, {"dist", "lo", "hi"}, where);
        return ScalarPrior::uniform(number(j, "lo", where), number(j, "hi", where));
    }
    throw ConfigError(where + ": unknown distribution '" + dist + "'");
}

inline ModelPrior parse_model_prior(const Json& j, const std::string& where) {
    using namespace config_detail;
    check_keys(j, {"intercept", "marginal", "classification", "coefficients", "others", "simultaneous_only"}, where);
    ModelPrior m;
    if (j.contains("intercept")) m.intercept = parse_scalar_prior(j.at("intercept"), where + ".intercept");
    if (j.contains("marginal")) {
        const auto& mj = j.at("marginal");
        const std::string w = where + ".marginal";
        check_keys(mj, {"scale", "prior"}, w);
        MarginalPrior mp;
        const std::string scale = mj.contains("scale") ? text(mj.at("scale"), w + ".scale") : "probability";
        if (scale == "log_odds")
            mp.scale = MarginalPrior::Scale::log_odds;
        else if (scale == "probability")
            mp.scale = MarginalPrior::Scale::probability;
        else if (scale == "observed_response")
            mp.scale = MarginalPrior::Scale::observed_response;
        else
            throw ConfigError(w + ": unknown scale '" + scale + "'");
        if (mp.scale == MarginalPrior::Scale::observed_response) {
            if (mj.contains("prior")) throw ConfigError(w + ": observed_response takes no prior");
        } else {
            if (!mj.contains("prior")) throw ConfigError(w + ": missing 'prior'");
            mp.prior = parse_scalar_prior(mj.at("prior"), w + ".prior");
        }
        m.marginal = mp;
    }
    if (j.contains("classification")) {
        const auto& cj = j.at("classification");
        const std::string w = where + ".classification";
        check_keys(cj, {"sensitivity", "specificity", "prevalence"}, w);
        for (const char* k : {"sensitivity", "specificity", "prevalence"})
            if (!cj.contains(k)) throw ConfigError(w + ": missing '" + k + "'");
        m.classification = ClassificationPrior{parse_scalar_prior(cj.at("sensitivity"), w + ".sensitivity"),
                                               parse_scalar_prior(cj.at("specificity"), w + ".specificity"),
                                               parse_scalar_prior(cj.at("prevalence"), w + ".prevalence")};
    }
    if (j.contains("coefficients")) {
        const auto& cj = j.at("coefficients");
        if (!cj.is_object()) throw ConfigError(where + ".coefficients: expected an object");
        for (const auto& [label, pj] : cj.items())
            m.coefficients.emplace(label, parse_scalar_prior(pj, where + ".coefficients." + label));
    }
    if (j.contains("others")) {
        const std::string o = text(j.at("others"), where + ".others");
        if (o == "observed")
            m.others_observed = true;
        else if (o == "zero")
            m.others_zero = true;
        else if (o != "none")
            throw ConfigError(where + ".others: expected 'observed', 'zero' or 'none'");
    }
    if (j.contains("simultaneous_only")) {
        const auto& sj = j.at("simultaneous_only");
        if (!sj.is_array()) throw ConfigError(where + ".simultaneous_only: expected an array");
        for (const auto& l : sj) m.simultaneous_only.insert(text(l, where + ".simultaneous_only"));
    }
    return m;
}

inline BiasKind parse_bias_key(const std::string& key, const std::string& where) {
    auto k = bias_from_key(key);
    if (!k) throw ConfigError(where + ": unknown bias '" + key + "'");
    return *k;
}

inline BiasParameterPrior parse_priors(const Json& j) {
    if (!j.is_object()) throw ConfigError("priors: expected an object");
    BiasParameterPrior out;
    for (const auto& [key, mj] : j.items()) {
        const auto k = parse_bias_key(key, "priors");
        if (!out.models.emplace(k, parse_model_prior(mj, "priors." + key)).second)
            throw ConfigError("priors: bias '" + key + "' given twice");
    }
    return out;
}

// {"CB": [d0, d1, d2], "MB-A": [...], ...} or "identity".
inline BiasParameterSet parse_parameters(const Json& j, const ConfounderSchema& schema) {
    using namespace config_detail;
    if (j.is_string()) {
        if (j.get<std::string>() == "identity") return identity_parameters(schema);
        throw ConfigError("parameters: expected an object or \"identity\"");
    }
    if (!j.is_object()) throw ConfigError("parameters: expected an object");
    BiasParameterSet p;
    for (const auto& [key, vj] : j.items()) {
        const auto k = parse_bias_key(key, "parameters");
        if (!vj.is_array()) throw ConfigError("parameters." + key + ": expected an array");
        Eigen::VectorXd v(static_cast<Eigen::Index>(vj.size()));
        for (std::size_t i = 0; i < vj.size(); ++i)
            v(static_cast<Eigen::Index>(i)) = number(vj[i], "parameters." + key);
        p.model(k) = v;
    }
    p.validate(schema);
    return p;
}

// "case_study" or [{"name", "kind", "levels", "reference", "units"}, ...]
inline ConfounderSchema parse_schema(const Json& j) {
    using namespace config_detail;
    if (j.is_string()) {
        if (j.get<std::string>() == "case_study") return case_study_schema();
        throw ConfigError("schema: unknown named schema '" + j.get<std::string>() + "'");
    }
    if (!j.is_array()) throw ConfigError("schema: expected \"case_study\" or an array of covariates");
    std::vector<CovariateDescriptor> cov;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& c = j[i];
        const std::string w = "schema[" + std::to_string(i) + "]";
        check_keys(c, {"name", "kind", "levels", "reference", "units"}, w);
        if (!c.contains("name") || !c.contains("kind")) throw ConfigError(w + ": needs 'name' and 'kind'");
        const std::string name = text(c.at("name"), w + ".name");
        const std::string kind = text(c.at("kind"), w + ".kind");
        if (kind == "binary") {
            cov.push_back(CovariateDescriptor::binary(name));
        } else if (kind == "continuous") {
            cov.push_back(CovariateDescriptor::continuous(name, c.contains("units") ? text(c.at("units"), w) : ""));
        } else if (kind == "categorical") {
            if (!c.contains("levels") || !c.at("levels").is_array())
                throw ConfigError(w + ": categorical needs a 'levels' array");
            std::vector<std::string> levels;
            for (const auto& l : c.at("levels")) levels.push_back(text(l, w + ".levels"));
            const std::size_t ref = c.contains("reference") ? count(c.at("reference"), w + ".reference") : 0;
            cov.push_back(CovariateDescriptor::categorical(name, std::move(levels), ref));
        } else {
            throw ConfigError(w + ": unknown kind '" + kind + "'");
        }
    }
    return ConfounderSchema(std::move(cov));
}

inline LinearPredictor parse_linear_predictor(const Json& j, const std::string& where) {
    using namespace config_detail;
    check_keys(j, {"intercept", "terms"}, where);
    LinearPredictor lp;
    lp.intercept = number(j, "intercept", where);
    if (j.contains("terms")) {
        const auto& t = j.at("terms");
        if (!t.is_object()) throw ConfigError(where + ".terms: expected an object");
        for (const auto& [name, v] : t.items()) {
            detail::feature_index(name);  // validates the label
            lp.terms.emplace_back(name, number(v, where + ".terms." + name));
        }
    }
    return lp;
}

inline void parse_dgp(const Json& j, DgpCoefficients& g) {
    using namespace config_detail;
    check_keys(j, {"p_sex", "p_fhx", "p_fpa", "p_fma", "p_nsibs", "p_peth", "p_ses", "mage", "mage_sd", "msmk",
                   "gage", "dmode", "lbw", "exposure", "outcome", "outcome_e", "response", "response_a"},
               "scenario.dgp");
    auto num = [&](const char* k, double& dst) {
        if (j.contains(k)) dst = number(j.at(k), std::string("scenario.dgp.") + k);
    };
    auto vec = [&](const char* k, std::vector<double>& dst) {
        if (!j.contains(k)) return;
        if (!j.at(k).is_array()) throw ConfigError(std::string("scenario.dgp.") + k + ": expected an array");
        dst.clear();
        for (const auto& v : j.at(k)) dst.push_back(number(v, std::string("scenario.dgp.") + k));
    };
    auto lin = [&](const char* k, LinearPredictor& dst) {
        if (j.contains(k)) dst = parse_linear_predictor(j.at(k), std::string("scenario.dgp.") + k);
    };
    num("p_sex", g.p_sex);
    num("p_fhx", g.p_fhx);
    num("p_fpa", g.p_fpa);
    num("p_fma", g.p_fma);
    vec("p_nsibs", g.p_nsibs);
    vec("p_peth", g.p_peth);
    vec("p_ses", g.p_ses);
    lin("mage", g.mage);
    num("mage_sd", g.mage_sd);
    lin("msmk", g.msmk);
    lin("gage", g.gage);
    lin("dmode", g.dmode);
    lin("lbw", g.lbw);
    lin("exposure", g.exposure);
    lin("outcome", g.outcome);
    num("outcome_e", g.outcome_e);
    lin("response", g.response);
    num("response_a", g.response_a);
}

// Scenario object: optional "base" preset, then overrides.
inline ScenarioConfig parse_scenario(const Json& j) {
    using namespace config_detail;
    check_keys(j, {"base", "name", "or_y_ry", "p_e", "or_ya_e", "p_u", "or_a_u", "or_y_u", "sens_a", "spec_a",
                   "p_a", "sens_y", "spec_y", "p_y", "a_coef", "n", "dgp"},
               "scenario");
    ScenarioConfig c = j.contains("base") ? ScenarioConfig::preset(text(j.at("base"), "scenario.base"))
                                          : ScenarioConfig::realistic();
    bool overridden = false;
    auto num = [&](const char* k, double& dst) {
        if (!j.contains(k)) return;
        dst = number(j.at(k), std::string("scenario.") + k);
        overridden = true;
    };
    num("or_y_ry", c.or_y_ry);
    num("p_e", c.p_e);
    num("or_ya_e", c.or_ya_e);
    num("p_u", c.p_u);
    num("or_a_u", c.or_a_u);
    num("or_y_u", c.or_y_u);
    num("sens_a", c.sens_a);
    num("spec_a", c.spec_a);
    num("p_a", c.p_a);
    num("sens_y", c.sens_y);
    num("spec_y", c.spec_y);
    num("p_y", c.p_y);
    num("a_coef", c.a_coef);
    if (j.contains("n")) c.n = count(j.at("n"), "scenario.n");
    if (j.contains("dgp")) {
        parse_dgp(j.at("dgp"), c.dgp);
        overridden = true;
    }
    if (overridden || !j.contains("base")) {
        c.kind = ScenarioConfig::Kind::custom;
        c.name = "custom";
    }
    if (j.contains("name")) c.name = text(j.at("name"), "scenario.name");
    c.validate();
    return c;
}

inline Json linear_predictor_json(const LinearPredictor& lp) {
    Json terms = Json::object();
    for (const auto& [name, v] : lp.terms) terms[name] = v;
    return Json{{"intercept", lp.intercept}, {"terms", terms}};
}

// Full scenario, readable back by parse_scenario.
inline Json scenario_json(const ScenarioConfig& c) {
    const auto& g = c.dgp;
    Json dgp{{"p_sex", g.p_sex},   {"p_fhx", g.p_fhx},     {"p_fpa", g.p_fpa},     {"p_fma", g.p_fma},
             {"p_nsibs", g.p_nsibs}, {"p_peth", g.p_peth}, {"p_ses", g.p_ses},
             {"mage", linear_predictor_json(g.mage)},       {"mage_sd", g.mage_sd},
             {"msmk", linear_predictor_json(g.msmk)},       {"gage", linear_predictor_json(g.gage)},
             {"dmode", linear_predictor_json(g.dmode)},     {"lbw", linear_predictor_json(g.lbw)},
             {"exposure", linear_predictor_json(g.exposure)}, {"outcome", linear_predictor_json(g.outcome)},
             {"outcome_e", g.outcome_e}, {"response", linear_predictor_json(g.response)},
             {"response_a", g.response_a}};
    return Json{{"name", c.name},       {"or_y_ry", c.or_y_ry}, {"p_e", c.p_e},       {"or_ya_e", c.or_ya_e},
                {"p_u", c.p_u},         {"or_a_u", c.or_a_u},   {"or_y_u", c.or_y_u}, {"sens_a", c.sens_a},
                {"spec_a", c.spec_a},   {"p_a", c.p_a},         {"sens_y", c.sens_y}, {"spec_y", c.spec_y},
                {"p_y", c.p_y},         {"a_coef", c.a_coef},   {"n", c.n},           {"dgp", dgp}};
}

// Everything a config file may set; the CLI lets flags override.
struct RunConfig {
    std::optional<ConfounderSchema> schema;
    std::optional<std::string> data;
    std::optional<BiasParameterPrior> priors;
    std::optional<Json> parameters;  // resolved against the schema later
    std::optional<std::vector<BiasKind>> biases;
    std::optional<std::size_t> draws;
    std::optional<std::size_t> bootstraps;
    std::optional<bool> fixed_imputation_stream;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::optional<ScenarioConfig> scenario;
    std::optional<std::size_t> reps;
    std::optional<std::size_t> n;
    std::optional<std::size_t> n_oracle;
    std::optional<std::vector<std::string>> arms;
    std::optional<SeparatedFits> separated_fits;
    std::optional<std::string> out;
    std::optional<std::string> format;
};

inline RunConfig parse_run_config(const Json& j) {
    using namespace config_detail;
    check_keys(j, {"schema", "data", "priors", "parameters", "biases", "draws", "bootstraps",
                   "fixed_imputation_stream", "seed", "workers", "scenario", "reps", "n", "n_oracle", "arms",
                   "separated_fits", "out", "format"},
               "config");
    RunConfig c;
    if (j.contains("schema")) c.schema = parse_schema(j.at("schema"));
    if (j.contains("data")) c.data = text(j.at("data"), "data");
    if (j.contains("priors")) c.priors = parse_priors(j.at("priors"));
    if (j.contains("parameters")) c.parameters = j.at("parameters");
    if (j.contains("biases")) {
        if (!j.at("biases").is_array()) throw ConfigError("biases: expected an array");
        std::vector<BiasKind> b;
        for (const auto& k : j.at("biases")) b.push_back(parse_bias_key(text(k, "biases"), "biases"));
        c.biases = b;
    }
    if (j.contains("draws")) c.draws = count(j.at("draws"), "draws");
    if (j.contains("bootstraps")) c.bootstraps = count(j.at("bootstraps"), "bootstraps");
    if (j.contains("fixed_imputation_stream"))
        c.fixed_imputation_stream = boolean(j.at("fixed_imputation_stream"), "fixed_imputation_stream");
    if (j.contains("seed")) c.seed = count(j.at("seed"), "seed");
    if (j.contains("workers")) c.workers = static_cast<unsigned>(count(j.at("workers"), "workers"));
    if (j.contains("scenario")) {
        const auto& s = j.at("scenario");
        c.scenario = s.is_string() ? ScenarioConfig::preset(s.get<std::string>()) : parse_scenario(s);
    }
    if (j.contains("reps")) c.reps = count(j.at("reps"), "reps");
    if (j.contains("n")) c.n = count(j.at("n"), "n");
    if (j.contains("n_oracle")) c.n_oracle = count(j.at("n_oracle"), "n_oracle");
    if (j.contains("arms")) {
        if (!j.at("arms").is_array()) throw ConfigError("arms: expected an array");
        std::vector<std::string> a;
        for (const auto& v : j.at("arms")) a.push_back(text(v, "arms"));
        c.arms = a;
    }
    if (j.contains("separated_fits")) {
        const std::string v = text(j.at("separated_fits"), "separated_fits");
        if (v == "include")
            c.separated_fits = SeparatedFits::include;
        else if (v == "exclude")
            c.separated_fits = SeparatedFits::exclude;
        else
            throw ConfigError("separated_fits: expected 'include' or 'exclude'");
    }
    if (j.contains("out")) c.out = text(j.at("out"), "out");
    if (j.contains("format")) c.format = text(j.at("format"), "format");
    return c;
}

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file '" + path + "': " + e.what());
    }
}

inline RunConfig load_run_config(const std::string& path) { return parse_run_config(read_json_file(path)); }

// A scenario argument is a preset name or a path to a JSON file holding a
// scenario object (or a config with a "scenario" key).
inline ScenarioConfig load_scenario(const std::string& name_or_path) {
    if (name_or_path == "realistic" || name_or_path == "enhanced") return ScenarioConfig::preset(name_or_path);
    const Json j = read_json_file(name_or_path);
    if (j.contains("scenario")) {
        const auto& s = j.at("scenario");
        return s.is_string() ? ScenarioConfig::preset(s.get<std::string>()) : parse_scenario(s);
    }
    return parse_scenario(j);
}

}  // namespace qba
