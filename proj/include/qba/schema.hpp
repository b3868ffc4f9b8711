#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qba/error.hpp"

namespace qba {

enum class CovariateKind { binary, categorical, continuous };

struct CovariateDescriptor {
    std::string name;
    CovariateKind kind = CovariateKind::binary;
    std::vector<std::string> levels;  // categorical only
    std::size_t reference = 0;        // categorical only
    std::string units;                // continuous only, informational

    static CovariateDescriptor binary(std::string name) {
        return {std::move(name), CovariateKind::binary, {}, 0, {}};
    }
    static CovariateDescriptor categorical(std::string name, std::vector<std::string> levels,
                                           std::size_t reference = 0) {
        return {std::move(name), CovariateKind::categorical, std::move(levels), reference, {}};
    }
    static CovariateDescriptor continuous(std::string name, std::string units = {}) {
        return {std::move(name), CovariateKind::continuous, {}, 0, std::move(units)};
    }

    // Labels of the design columns this covariate expands to. Categorical
    // covariates use treatment coding: one indicator per non-reference level,
    // labelled with the 1-based level number (SES_2 ... SES_5).
    std::vector<std::string> design_labels() const {
        if (kind != CovariateKind::categorical) return {name};
        std::vector<std::string> out;
        for (std::size_t k = 0; k < levels.size(); ++k)
            if (k != reference) out.push_back(name + "_" + std::to_string(k + 1));
        return out;
    }

    std::size_t design_width() const {
        return kind == CovariateKind::categorical ? levels.size() - 1 : 1;
    }

    std::optional<std::size_t> level_index(const std::string& label) const {
        for (std::size_t k = 0; k < levels.size(); ++k)
            if (levels[k] == label) return k;
        return std::nullopt;
    }
};

class ConfounderSchema {
public:
    ConfounderSchema() = default;

    explicit ConfounderSchema(std::vector<CovariateDescriptor> covariates)
        : covariates_(std::move(covariates)) {
        validate();
    }

    const std::vector<CovariateDescriptor>& covariates() const noexcept { return covariates_; }
    std::size_t size() const noexcept { return covariates_.size(); }
    const CovariateDescriptor& operator[](std::size_t i) const { return covariates_[i]; }

    std::optional<std::size_t> index_of(const std::string& name) const {
        for (std::size_t i = 0; i < covariates_.size(); ++i)
            if (covariates_[i].name == name) return i;
        return std::nullopt;
    }

    // Design labels of all confounders, in schema order.
    std::vector<std::string> design_labels() const {
        std::vector<std::string> out;
        for (const auto& c : covariates_)
            for (auto& l : c.design_labels()) out.push_back(std::move(l));
        return out;
    }

    std::size_t design_width() const {
        std::size_t w = 0;
        for (const auto& c : covariates_) w += c.design_width();
        return w;
    }

    bool operator==(const ConfounderSchema& other) const {
        if (covariates_.size() != other.covariates_.size()) return false;
        for (std::size_t i = 0; i < covariates_.size(); ++i) {
            const auto& a = covariates_[i];
            const auto& b = other.covariates_[i];
            if (a.name != b.name || a.kind != b.kind || a.levels != b.levels ||
                a.reference != b.reference)
                return false;
        }
        return true;
    }

private:
    void validate() const {
        std::set<std::string> seen;
        for (const auto& c : covariates_) {
            if (c.name.empty()) throw ConfigError("schema: covariate with empty name");
            if (!seen.insert(c.name).second)
                throw ConfigError("schema: duplicate covariate name '" + c.name + "'");
            if (c.kind == CovariateKind::categorical) {
                if (c.levels.size() < 2)
                    throw ConfigError("schema: categorical '" + c.name + "' needs at least 2 levels");
                if (c.reference >= c.levels.size())
                    throw ConfigError("schema: reference level of '" + c.name + "' out of range");
                std::set<std::string> lv(c.levels.begin(), c.levels.end());
                if (lv.size() != c.levels.size())
                    throw ConfigError("schema: duplicate level names in '" + c.name + "'");
            }
        }
    }

    std::vector<CovariateDescriptor> covariates_;
};

// Confounders of the breastfeeding/asthma case study, in the order the
// simulation generates and reports them.
inline ConfounderSchema case_study_schema() {
    using D = CovariateDescriptor;
    return ConfounderSchema({
        D::binary("Sex"),
        D::categorical("NSibs", {"0", "1", "2", "3"}),
        D::binary("LBW"),
        D::categorical("PEth", {"Australian", "Asian", "Other"}),
        D::binary("FMa"),
        D::binary("FPa"),
        D::binary("FHx"),
        D::binary("DMode"),
        D::binary("GAge"),
        D::continuous("MAge", "years"),
        D::categorical("SES", {"Q1", "Q2", "Q3", "Q4", "Q5"}),
        D::binary("MSmk"),
    });
}

}  // namespace qba
