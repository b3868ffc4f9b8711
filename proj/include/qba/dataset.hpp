#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qba/error.hpp"
#include "qba/schema.hpp"

namespace qba {

// One individual. Confounder values follow the schema: 0/1 for binary, the
// 0-based level index for categorical, the raw value for continuous.
struct Record {
    std::vector<double> confounders;
    std::optional<bool> a_true;  // latent exposure A
    std::optional<bool> y_true;  // latent outcome Y
    bool a_star = false;         // reported exposure A*
    std::optional<bool> y_star;  // reported outcome Y*, absent when not observed
    std::optional<bool> u;       // latent unmeasured confounder U
    std::optional<bool> e;       // English-ability indicator E
    std::optional<bool> s;       // consent indicator S
    bool r_y = true;             // outcome response indicator

    bool operator==(const Record&) const = default;
};

enum class Provenance { observed, synthetic_ideal, synthetic_observed };

inline const char* to_string(Provenance p) {
    switch (p) {
        case Provenance::observed: return "observed";
        case Provenance::synthetic_ideal: return "synthetic-ideal";
        case Provenance::synthetic_observed: return "synthetic-observed";
    }
    return "?";
}

// Immutable after construction; safe to share between workers.
class Dataset {
public:
    Dataset(ConfounderSchema schema, std::vector<Record> records, Provenance provenance)
        : schema_(std::make_shared<const ConfounderSchema>(std::move(schema))),
          records_(std::move(records)),
          provenance_(provenance) {
        validate();
    }

    Dataset(std::shared_ptr<const ConfounderSchema> schema, std::vector<Record> records,
            Provenance provenance)
        : schema_(std::move(schema)), records_(std::move(records)), provenance_(provenance) {
        validate();
    }

    const ConfounderSchema& schema() const noexcept { return *schema_; }
    const std::shared_ptr<const ConfounderSchema>& schema_ptr() const noexcept { return schema_; }
    const std::vector<Record>& records() const noexcept { return records_; }
    const Record& operator[](std::size_t i) const { return records_[i]; }
    std::size_t size() const noexcept { return records_.size(); }
    Provenance provenance() const noexcept { return provenance_; }

    // New dataset sharing the schema, with the given records.
    Dataset with_records(std::vector<Record> records) const {
        return Dataset(schema_, std::move(records), provenance_);
    }

    // Records with r_y = 1, the analytic sample of the outcome regressions.
    Dataset responders() const {
        std::vector<Record> out;
        out.reserve(records_.size());
        for (const auto& r : records_)
            if (r.r_y) out.push_back(r);
        return with_records(std::move(out));
    }

    std::vector<std::size_t> responder_indices() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < records_.size(); ++i)
            if (records_[i].r_y) out.push_back(i);
        return out;
    }

    bool operator==(const Dataset& other) const {
        return provenance_ == other.provenance_ && *schema_ == *other.schema_ &&
               records_ == other.records_;
    }

private:
    void validate() const {
        if (records_.empty()) throw DataError("dataset has no records");
        const auto& cov = schema_->covariates();
        const bool analysis = provenance_ != Provenance::synthetic_ideal;
        for (std::size_t i = 0; i < records_.size(); ++i) {
            const auto& r = records_[i];
            if (r.confounders.size() != cov.size())
                throw DataError("record " + std::to_string(i) + ": expected " +
                                std::to_string(cov.size()) + " confounder values, got " +
                                std::to_string(r.confounders.size()));
            for (std::size_t j = 0; j < cov.size(); ++j) {
                const double v = r.confounders[j];
                if (!std::isfinite(v))
                    throw DataError("record " + std::to_string(i) + ": non-finite " + cov[j].name);
                if (cov[j].kind == CovariateKind::binary && v != 0.0 && v != 1.0)
                    throw DataError("record " + std::to_string(i) + ": " + cov[j].name +
                                    " is not binary");
                if (cov[j].kind == CovariateKind::categorical &&
                    (v < 0 || v >= static_cast<double>(cov[j].levels.size()) || v != std::floor(v)))
                    throw DataError("record " + std::to_string(i) + ": " + cov[j].name +
                                    " is not a valid level index");
            }
            // Synthetic-ideal data keeps Y* for non-responders; the response
            // model is fitted on it.
            if (analysis && r.y_star.has_value() != r.r_y)
                throw DataError("record " + std::to_string(i) +
                                ": y_star must be present exactly when r_y = 1");
            if (provenance_ == Provenance::synthetic_observed) {
                if (r.u || r.a_true || r.y_true)
                    throw DataError("record " + std::to_string(i) +
                                    ": synthetic-observed data must hide latent fields");
            }
        }
    }

    std::shared_ptr<const ConfounderSchema> schema_;
    std::vector<Record> records_;
    Provenance provenance_;
};

}  // namespace qba
