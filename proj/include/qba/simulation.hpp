#pragma once

// Simulation study driver: generate -> restrict to the observed cohort ->
// adjust with every method -> log. All methods in a replicate see the same
// data and the same imputation stream.

#include <cstdint>
#include <string>
#include <vector>

#include "qba/bias_parameters.hpp"
#include "qba/engine.hpp"
#include "qba/metrics.hpp"
#include "qba/parallel.hpp"
#include "qba/simgen.hpp"

namespace qba {

// Biases present in the simulated cohorts (the consent pathway is not
// generated).
inline constexpr std::array<BiasKind, 5> kSimulatedBiases = {
    BiasKind::confounding_u, BiasKind::misclass_a, BiasKind::misclass_y, BiasKind::missingness_ry,
    BiasKind::selection_english_e,
};

inline BiasSelection simulated_all_biases() {
    BiasSelection s;
    for (auto k : kSimulatedBiases) s.flag(k) = true;
    return s;
}

// Method label in simulation reports.
inline std::string simulation_method_label(BiasKind k) {
    return k == BiasKind::selection_english_e ? "SB-generalizability" : bias_key(k);
}

struct SimulationArm {
    std::string name;  // "correct" or "x2"
    double multiplier = 1.0;
};

struct SimulationSettings {
    ScenarioConfig scenario;
    std::size_t replications = 500;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    bool one_at_a_time = true;
};

// Runs every replicate under the given parameters. Replicate r uses
// generation stream (seed, r) and imputation stream (seed, r).
inline ReplicationLog run_simulation(const SimulationSettings& s, const OracleParameters& params,
                                     const TrueEffect& truth) {
    if (s.replications < 2) throw ConfigError("simulation needs at least 2 replications");
    s.scenario.validate();

    struct Method {
        std::string label;
        BiasSelection selection;
        const BiasParameterSet* parameters;
    };
    std::vector<Method> methods{{"All biases", simulated_all_biases(), &params.correct}};
    if (s.one_at_a_time) {
        for (auto k : kSimulatedBiases) {
            auto it = params.single_bias.find(k);
            methods.push_back({simulation_method_label(k), BiasSelection::only(k),
                               it != params.single_bias.end() ? &it->second : &params.correct});
        }
    }

    std::vector<std::vector<ReplicateEntry>> results(s.replications);
    parallel_for(s.replications, s.workers, [&](std::size_t r) {
        const Dataset observed = to_observed(generate_ideal(s.scenario, s.seed, r));
        auto& row = results[r];
        for (const auto& m : methods) {
            RngStream rng(s.seed, streams::imputation, {static_cast<std::uint64_t>(r)});
            try {
                row.push_back(ReplicateEntry::from(adjust_once(observed, *m.parameters, m.selection, rng)));
            } catch (const NumericError&) {
                row.push_back(ReplicateEntry::failed());
            }
        }
    });

    ReplicationLog log;
    log.rd_true = truth.rd;
    log.log_rr_true = truth.log_rr;
    for (std::size_t r = 0; r < s.replications; ++r)
        for (std::size_t j = 0; j < methods.size(); ++j) log.add(methods[j].label, results[r][j]);
    return log;
}

}  // namespace qba
