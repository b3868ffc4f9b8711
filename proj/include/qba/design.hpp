#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qba/dataset.hpp"
#include "qba/error.hpp"

namespace qba {

// Record fields addressable in a term list, besides confounder names.
enum class Field { a_true, y_true, a_star, y_star, u, e, s, r_y };

inline std::optional<Field> field_from_name(const std::string& name) {
    if (name == "a_true") return Field::a_true;
    if (name == "y_true") return Field::y_true;
    if (name == "a_star") return Field::a_star;
    if (name == "y_star") return Field::y_star;
    if (name == "u") return Field::u;
    if (name == "e") return Field::e;
    if (name == "s") return Field::s;
    if (name == "r_y") return Field::r_y;
    return std::nullopt;
}

inline std::optional<bool> field_value(const Record& r, Field f) {
    switch (f) {
        case Field::a_true: return r.a_true;
        case Field::y_true: return r.y_true;
        case Field::a_star: return r.a_star;
        case Field::y_star: return r.y_star;
        case Field::u: return r.u;
        case Field::e: return r.e;
        case Field::s: return r.s;
        case Field::r_y: return r.r_y;
    }
    return std::nullopt;
}

struct DesignMatrix {
    Eigen::MatrixXd x;
    std::vector<std::string> labels;
};

// Names of all schema confounders, for splicing into term lists.
inline std::vector<std::string> confounder_terms(const ConfounderSchema& schema) {
    std::vector<std::string> out;
    for (const auto& c : schema.covariates()) out.push_back(c.name);
    return out;
}

namespace detail {

// One design column: a confounder column (with level for categorical
// indicators) or a record field, optionally multiplied by a second factor.
struct Factor {
    bool is_field = false;
    Field field = Field::a_star;
    std::size_t covariate = 0;
    std::optional<std::size_t> level;  // categorical indicator level
    std::string name;
};

struct Column {
    std::vector<Factor> factors;
    std::string label;
};

inline std::vector<Factor> resolve_main(const ConfounderSchema& schema, const std::string& term) {
    if (auto f = field_from_name(term)) {
        Factor fac;
        fac.is_field = true;
        fac.field = *f;
        fac.name = term;
        return {fac};
    }
    auto idx = schema.index_of(term);
    if (!idx) throw ConfigError("unknown design term '" + term + "'");
    const auto& cov = schema[*idx];
    std::vector<Factor> out;
    if (cov.kind == CovariateKind::categorical) {
        for (std::size_t k = 0; k < cov.levels.size(); ++k) {
            if (k == cov.reference) continue;
            Factor fac;
            fac.covariate = *idx;
            fac.level = k;
            fac.name = cov.name + "_" + std::to_string(k + 1);
            out.push_back(fac);
        }
    } else {
        Factor fac;
        fac.covariate = *idx;
        fac.name = cov.name;
        out.push_back(fac);
    }
    return out;
}

inline double factor_value(const Record& r, const Factor& f, std::size_t row) {
    if (f.is_field) {
        auto v = field_value(r, f.field);
        if (!v)
            throw DataError("design term '" + f.name + "' is absent in record " +
                            std::to_string(row));
        return *v ? 1.0 : 0.0;
    }
    const double v = r.confounders[f.covariate];
    if (f.level) return v == static_cast<double>(*f.level) ? 1.0 : 0.0;
    return v;
}

}  // namespace detail

// Builds [1, terms...] for the selected rows (all rows when `rows` is empty).
// A term is a confounder name, a record field name, or "x:y" for the product
// of two such terms. Categorical confounders expand to K-1 indicators.
// Main terms keep their listed order; interactions follow them.
inline DesignMatrix build_design_matrix(const Dataset& data, std::span<const std::string> terms,
                                        std::optional<std::span<const std::size_t>> rows = {}) {
    const auto& schema = data.schema();
    std::vector<detail::Column> main_cols, inter_cols;
    for (const auto& term : terms) {
        const auto colon = term.find(':');
        if (colon == std::string::npos) {
            for (auto& f : detail::resolve_main(schema, term)) {
                std::string label = f.name;
                main_cols.push_back({{std::move(f)}, std::move(label)});
            }
            continue;
        }
        const auto lhs = detail::resolve_main(schema, term.substr(0, colon));
        const auto rhs = detail::resolve_main(schema, term.substr(colon + 1));
        if (rhs.empty() || lhs.empty() || term.find(':', colon + 1) != std::string::npos)
            throw ConfigError("malformed interaction term '" + term + "'");
        for (const auto& a : lhs)
            for (const auto& b : rhs) inter_cols.push_back({{a, b}, a.name + ":" + b.name});
    }
    std::vector<detail::Column> cols = std::move(main_cols);
    for (auto& c : inter_cols) cols.push_back(std::move(c));

    const std::size_t n = rows ? rows->size() : data.size();
    DesignMatrix out;
    out.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size() + 1));
    out.labels.reserve(cols.size() + 1);
    out.labels.emplace_back("(Intercept)");
    for (const auto& c : cols) out.labels.push_back(c.label);

    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = rows ? (*rows)[i] : i;
        const Record& r = data[src];
        const auto row = static_cast<Eigen::Index>(i);
        out.x(row, 0) = 1.0;
        for (std::size_t j = 0; j < cols.size(); ++j) {
            double v = 1.0;
            for (const auto& f : cols[j].factors) v *= detail::factor_value(r, f, src);
            out.x(row, static_cast<Eigen::Index>(j + 1)) = v;
        }
    }
    return out;
}

inline DesignMatrix build_design_matrix(const Dataset& data, std::initializer_list<std::string> terms) {
    std::vector<std::string> t(terms);
    return build_design_matrix(data, std::span<const std::string>(t));
}

// Response vector for a binary field over the selected rows.
inline Eigen::VectorXd field_vector(const Dataset& data, Field field,
                                    std::optional<std::span<const std::size_t>> rows = {}) {
    const std::size_t n = rows ? rows->size() : data.size();
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = rows ? (*rows)[i] : i;
        auto v = field_value(data[src], field);
        if (!v) throw DataError("response field is absent in record " + std::to_string(src));
        y(static_cast<Eigen::Index>(i)) = *v ? 1.0 : 0.0;
    }
    return y;
}

}  // namespace qba
