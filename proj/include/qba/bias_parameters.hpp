#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qba/error.hpp"
#include "qba/schema.hpp"

namespace qba {

// The six adjustable biases.
enum class BiasKind {
    confounding_u,        // CB
    misclass_a,           // MB-A
    misclass_y,           // MB-Y
    missingness_ry,       // SB-collider
    selection_english_e,  // SB-generalizability(E)
    selection_consent_s,  // SB-generalizability(S)
};

inline constexpr std::array<BiasKind, 6> kAllBiases = {
    BiasKind::confounding_u,  BiasKind::misclass_a,          BiasKind::misclass_y,
    BiasKind::missingness_ry, BiasKind::selection_english_e, BiasKind::selection_consent_s,
};

inline const char* bias_key(BiasKind k) {
    switch (k) {
        case BiasKind::confounding_u: return "CB";
        case BiasKind::misclass_a: return "MB-A";
        case BiasKind::misclass_y: return "MB-Y";
        case BiasKind::missingness_ry: return "SB-collider";
        case BiasKind::selection_english_e: return "SB-generalizability(E)";
        case BiasKind::selection_consent_s: return "SB-generalizability(S)";
    }
    return "?";
}

// Row labels used in case-study reports.
inline const char* bias_report_label(BiasKind k) {
    switch (k) {
        case BiasKind::selection_english_e: return "SB-generalizability(English)";
        case BiasKind::selection_consent_s: return "SB-generalizability(consent)";
        default: return bias_key(k);
    }
}

inline std::optional<BiasKind> bias_from_key(std::string_view key) {
    for (auto k : kAllBiases)
        if (key == bias_key(k) || key == bias_report_label(k)) return k;
    return std::nullopt;
}

struct BiasSelection {
    bool confounding_u = false;
    bool misclass_a = false;
    bool misclass_y = false;
    bool selection_consent_s = false;
    bool selection_english_e = false;
    bool missingness_ry = false;

    bool& flag(BiasKind k) {
        switch (k) {
            case BiasKind::confounding_u: return confounding_u;
            case BiasKind::misclass_a: return misclass_a;
            case BiasKind::misclass_y: return misclass_y;
            case BiasKind::missingness_ry: return missingness_ry;
            case BiasKind::selection_english_e: return selection_english_e;
            case BiasKind::selection_consent_s: return selection_consent_s;
        }
        return confounding_u;
    }
    bool has(BiasKind k) const { return const_cast<BiasSelection*>(this)->flag(k); }

    bool any() const {
        return confounding_u || misclass_a || misclass_y || selection_consent_s ||
               selection_english_e || missingness_ry;
    }
    std::size_t count() const {
        std::size_t c = 0;
        for (auto k : kAllBiases) c += has(k) ? 1 : 0;
        return c;
    }

    static BiasSelection only(BiasKind k) {
        BiasSelection s;
        s.flag(k) = true;
        return s;
    }
    static BiasSelection none() { return {}; }
    bool operator==(const BiasSelection&) const = default;
};

// Term lists of the bias models; confounders follow in schema order.
namespace bias_terms {
inline std::vector<std::string> with_confounders(std::vector<std::string> head,
                                                 const ConfounderSchema& schema) {
    for (const auto& c : schema.covariates()) head.push_back(c.name);
    return head;
}
inline std::vector<std::string> gamma(const ConfounderSchema& s) {
    return with_confounders({"a_star", "y_star"}, s);
}
inline std::vector<std::string> alpha(const ConfounderSchema& s) {
    return with_confounders({"y_star", "a_true"}, s);
}
inline std::vector<std::string> delta() { return {"a_true", "y_true"}; }
inline std::vector<std::string> selection() { return {"a_star", "y_star", "a_star:y_star"}; }
inline std::vector<std::string> eta(const ConfounderSchema& s) {
    return with_confounders({"a_star", "y_star"}, s);
}
}  // namespace bias_terms

// Coefficients of the bias models on the log-odds scale, intercept first.
// An empty vector means the model is not configured.
struct BiasParameterSet {
    Eigen::VectorXd gamma;   // P(A=1 | A*, Y*, C)
    Eigen::VectorXd alpha;   // P(Y=1 | Y*, A, C)
    Eigen::VectorXd delta;   // P(U=1 | A, Y)
    Eigen::VectorXd theta;   // P(S=1 | A*, Y*, A*Y*)
    Eigen::VectorXd lambda;  // P(E=1 | A*, Y*, A*Y*)
    Eigen::VectorXd eta;     // P(R_y=1 | A*, Y*, C)

    Eigen::VectorXd& model(BiasKind k) {
        switch (k) {
            case BiasKind::confounding_u: return delta;
            case BiasKind::misclass_a: return gamma;
            case BiasKind::misclass_y: return alpha;
            case BiasKind::missingness_ry: return eta;
            case BiasKind::selection_english_e: return lambda;
            case BiasKind::selection_consent_s: return theta;
        }
        return delta;
    }
    const Eigen::VectorXd& model(BiasKind k) const {
        return const_cast<BiasParameterSet*>(this)->model(k);
    }

    bool configured(BiasKind k) const { return model(k).size() > 0; }

    static std::size_t expected_length(BiasKind k, const ConfounderSchema& schema) {
        switch (k) {
            case BiasKind::misclass_a:
            case BiasKind::misclass_y:
            case BiasKind::missingness_ry: return 3 + schema.design_width();
            case BiasKind::confounding_u: return 3;
            case BiasKind::selection_english_e:
            case BiasKind::selection_consent_s: return 4;
        }
        return 0;
    }

    // Checks lengths and finiteness of the configured models, and that every
    // bias in `required` is configured.
    void validate(const ConfounderSchema& schema, const BiasSelection& required = {}) const {
        for (auto k : kAllBiases) {
            const auto& v = model(k);
            if (v.size() == 0) {
                if (required.has(k))
                    throw ConfigError(std::string("bias parameters for ") + bias_key(k) +
                                      " are required but not configured");
                continue;
            }
            const auto want = expected_length(k, schema);
            if (static_cast<std::size_t>(v.size()) != want)
                throw ConfigError(std::string("bias parameters for ") + bias_key(k) + ": expected " +
                                  std::to_string(want) + " coefficients, got " +
                                  std::to_string(v.size()));
            if (!v.allFinite())
                throw ConfigError(std::string("bias parameters for ") + bias_key(k) +
                                  " contain a non-finite value");
        }
    }

    BiasParameterSet scaled(double factor) const {
        BiasParameterSet out = *this;
        for (auto k : kAllBiases) out.model(k) *= factor;
        return out;
    }
};

// Log-odds used for "certain" events. expit(+/-50) rounds to exactly 1 and
// to a value below the smallest uniform draw, so Bernoulli draws are exact.
inline constexpr double kCertainLogit = 50.0;

// Parameters under which every adjustment is a no-op: perfect measurement
// (true value equals the starred one), U independent of (A, Y) with the
// given prevalence, and unit selection and response probabilities.
inline BiasParameterSet identity_parameters(const ConfounderSchema& schema, double p_u = 0.1) {
    const Eigen::Index wide = static_cast<Eigen::Index>(3 + schema.design_width());
    BiasParameterSet p;
    p.gamma = Eigen::VectorXd::Zero(wide);
    p.gamma(0) = -kCertainLogit;
    p.gamma(1) = 2 * kCertainLogit;  // a_star
    p.alpha = Eigen::VectorXd::Zero(wide);
    p.alpha(0) = -kCertainLogit;
    p.alpha(1) = 2 * kCertainLogit;  // y_star
    p.delta = Eigen::VectorXd::Zero(3);
    p.delta(0) = std::log(p_u / (1 - p_u));
    p.theta = Eigen::VectorXd::Zero(4);
    p.theta(0) = kCertainLogit;
    p.lambda = Eigen::VectorXd::Zero(4);
    p.lambda(0) = kCertainLogit;
    p.eta = Eigen::VectorXd::Zero(wide);
    p.eta(0) = kCertainLogit;
    return p;
}

}  // namespace qba
