#pragma once

#include <cstdint>
#include <vector>

#include "qba/dataset.hpp"
#include "qba/rng.hpp"
#include "qba/schema.hpp"
#include "qba/simgen.hpp"

namespace qba::testing {

// Two confounders: a binary and a three-level factor.
inline ConfounderSchema tiny_schema() {
    using D = CovariateDescriptor;
    return ConfounderSchema({D::binary("C1"), D::categorical("C2", {"lo", "mid", "hi"})});
}

// Observed-style cohort on tiny_schema with confounded exposure, outcome,
// and some non-response.
inline Dataset tiny_cohort(std::size_t n, std::uint64_t seed) {
    RngStream rng(seed, "tiny-cohort");
    std::vector<Record> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Record r;
        const double c1 = rng.bernoulli(0.4) ? 1.0 : 0.0;
        const double c2 = static_cast<double>(rng.categorical({0.5, 0.3, 0.2}));
        r.confounders = {c1, c2};
        r.a_star = rng.bernoulli(expit(-0.2 + 0.6 * c1 - 0.3 * c2));
        r.y_star = rng.bernoulli(expit(-1.2 - 0.4 * r.a_star + 0.5 * c1 + 0.2 * c2));
        r.r_y = rng.bernoulli(expit(1.0 + 0.3 * r.a_star - 0.2 * c1));
        if (!r.r_y) r.y_star.reset();
        out.push_back(std::move(r));
    }
    return Dataset(tiny_schema(), std::move(out), Provenance::observed);
}

// Synthetic case-study cohort restricted to the observed sample.
inline Dataset case_study_cohort(std::size_t n, std::uint64_t seed) {
    ScenarioConfig c = ScenarioConfig::realistic();
    c.n = n;
    return to_observed(generate_ideal(c, seed));
}

}  // namespace qba::testing
