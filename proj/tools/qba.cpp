// qba: bias analysis, simulation study, oracles and synthetic data.
//
//   qba qba       --config run.json --data cohort.csv --seed 1 --out results/
//   qba simulate  --scenario realistic --reps 500 --seed 1 --out results/
//   qba oracle    --scenario enhanced --n 2000000 --seed 1 --out results/
//   qba generate  --scenario realistic --n 2000 --seed 1 --out data/
//
// Exit status: 0 ok, 2 configuration error, 3 data error, 4 numeric failure.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "qba/qba.hpp"

namespace fs = std::filesystem;
using namespace qba;

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> reps, n, n_oracle, draws, bootstraps;
    std::optional<std::string> scenario, out, format, data, separated;
    std::optional<unsigned> workers;
};

struct Settings {
    RunConfig file;
    Options cli;

    std::uint64_t seed() const {
        if (cli.seed) return *cli.seed;
        if (file.seed) return *file.seed;
        throw ConfigError("a seed is required (--seed or \"seed\" in the config file)");
    }
    std::string out() const { return cli.out.value_or(file.out.value_or("results")); }
    std::string format() const {
        const auto f = cli.format.value_or(file.format.value_or("table"));
        if (f != "csv" && f != "table") throw ConfigError("--format must be csv or table");
        return f;
    }
    unsigned workers() const { return cli.workers.value_or(file.workers.value_or(default_workers())); }
    ScenarioConfig scenario() const {
        ScenarioConfig s = cli.scenario ? load_scenario(*cli.scenario)
                                        : file.scenario.value_or(ScenarioConfig::realistic());
        return s;
    }
    SeparatedFits separated_fits() const {
        if (cli.separated) {
            if (*cli.separated == "include") return SeparatedFits::include;
            if (*cli.separated == "exclude") return SeparatedFits::exclude;
            throw ConfigError("--separated-fits must be include or exclude");
        }
        return file.separated_fits.value_or(SeparatedFits::include);
    }
};

fs::path prepare_out(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
    return p;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ConfigError("cannot write '" + p.string() + "'");
    return os;
}

std::string fmt(double v) { return detail::format_double(v); }

Json parameters_json(const BiasParameterSet& p) {
    Json j = Json::object();
    for (auto k : kAllBiases) {
        if (!p.configured(k)) continue;
        Json arr = Json::array();
        for (Eigen::Index i = 0; i < p.model(k).size(); ++i) arr.push_back(p.model(k)(i));
        j[bias_key(k)] = arr;
    }
    return j;
}

int cmd_qba(const Settings& s) {
    const auto seed = s.seed();
    const ConfounderSchema schema = s.file.schema.value_or(case_study_schema());
    const std::string data_path =
        s.cli.data ? *s.cli.data : s.file.data.value_or("");
    if (data_path.empty()) throw ConfigError("no dataset given (--data or \"data\" in the config file)");
    const Dataset data = read_csv(data_path, schema);

    AdjustmentPlan plan;
    plan.seed = seed;
    plan.workers = s.workers();
    plan.n_parameter_draws = s.cli.draws.value_or(s.file.draws.value_or(1000));
    plan.n_bootstrap = s.cli.bootstraps.value_or(s.file.bootstraps.value_or(0));
    plan.fixed_imputation_stream = s.file.fixed_imputation_stream.value_or(false);
    if (s.file.priors && s.file.parameters)
        throw ConfigError("config gives both priors and fixed parameters");
    if (s.file.priors)
        plan.priors = *s.file.priors;
    else if (s.file.parameters)
        plan.parameters = parse_parameters(*s.file.parameters, schema);
    else
        throw ConfigError("config needs \"priors\" or \"parameters\"");

    if (s.file.biases) {
        for (auto k : *s.file.biases) plan.selection.flag(k) = true;
    } else {
        for (auto k : kAllBiases)
            if (plan.priors ? plan.priors->configured(k) : plan.parameters->configured(k)) plan.selection.flag(k) = true;
    }

    const EstimateResult primary = primary_analysis(data);
    std::optional<EstimateResult> simultaneous;
    std::map<BiasKind, EstimateResult> single;
    if (plan.probabilistic()) {
        simultaneous = probabilistic_qba(data, plan);
        AdjustmentPlan sub = plan;
        BiasParameterPrior restricted;
        for (const auto& [k, m] : plan.priors->models)
            if (plan.selection.has(k)) restricted.models.emplace(k, m);
        sub.priors = restricted;
        single = one_at_a_time_suite(data, sub);
    } else {
        RngStream rng(seed, streams::imputation);
        simultaneous = adjust_once(data, *plan.parameters, plan.selection, rng);
        AdjustmentPlan sub = plan;
        BiasParameterSet restricted;
        for (auto k : kAllBiases)
            if (plan.selection.has(k)) restricted.model(k) = plan.parameters->model(k);
        sub.parameters = restricted;
        single = one_at_a_time_suite(data, sub);
    }
    const auto rows = assemble_report(primary, simultaneous, single);

    const auto out = prepare_out(s.out());
    {
        auto os = open_out(out / "estimates.csv");
        write_estimates_csv(rows, os);
    }
    {
        auto os = open_out(out / "report.txt");
        write_estimates_table(rows, os);
    }
    Manifest m{{"command", "qba"},
               {"seed", std::to_string(seed)},
               {"data", data_path},
               {"records", std::to_string(data.size())},
               {"analytic_records", std::to_string(primary.n_analytic)},
               {"mode", plan.probabilistic() ? "probabilistic" : "fixed"}};
    if (plan.probabilistic()) {
        m.emplace_back("draws", std::to_string(plan.n_parameter_draws));
        m.emplace_back("bootstraps", std::to_string(plan.n_bootstrap));
    }
    std::string biases;
    for (auto k : kAllBiases)
        if (plan.selection.has(k)) biases += (biases.empty() ? "" : ";") + std::string(bias_key(k));
    m.emplace_back("biases", biases);
    for (const auto& r : rows)
        if (r.result.replicates > 0)
            m.emplace_back("dropped[" + r.method + "]",
                           std::to_string(r.result.dropped) + "/" + std::to_string(r.result.replicates));
    {
        auto os = open_out(out / "manifest.txt");
        write_manifest(m, os);
    }
    if (s.format() == "csv")
        write_estimates_csv(rows, std::cout);
    else
        write_estimates_table(rows, std::cout);
    return 0;
}

int cmd_simulate(const Settings& s) {
    const auto seed = s.seed();
    ScenarioConfig scenario = s.scenario();
    if (auto n = s.cli.n ? s.cli.n : s.file.n) scenario.n = *n;
    const std::size_t reps = s.cli.reps.value_or(s.file.reps.value_or(500));
    const std::size_t n_oracle = s.cli.n_oracle.value_or(s.file.n_oracle.value_or(2'000'000));
    const auto arms_names = s.file.arms.value_or(std::vector<std::string>{"correct", "x2"});
    const auto policy = s.separated_fits();

    std::cerr << "oracle: " << n_oracle << " records\n";
    const Oracle oracle = compute_oracle(scenario, n_oracle, seed);
    const auto out = prepare_out(s.out());
    Manifest m{{"command", "simulate"},
               {"seed", std::to_string(seed)},
               {"scenario", scenario.name},
               {"n", std::to_string(scenario.n)},
               {"reps", std::to_string(reps)},
               {"n_oracle", std::to_string(n_oracle)},
               {"rd_true", fmt(oracle.truth.rd)},
               {"log_rr_true", fmt(oracle.truth.log_rr)},
               {"separated_fits", policy == SeparatedFits::include ? "include" : "exclude"}};
    for (const auto& arm : arms_names) {
        double mult = 0;
        if (arm == "correct")
            mult = 1.0;
        else if (arm == "x2")
            mult = 2.0;
        else
            throw ConfigError("unknown arm '" + arm + "' (expected correct or x2)");
        std::cerr << "arm " << arm << ": " << reps << " replications\n";
        SimulationSettings settings{scenario, reps, seed, s.workers(), true};
        const auto log = run_simulation(settings, oracle.parameters.scaled(mult), oracle.truth);
        const auto report = performance_report(log, policy);
        std::vector<PerformanceRow> ordered;
        for (auto k : {Estimand::rd, Estimand::log_rr})
            for (auto& r : comparative_table(report, k)) ordered.push_back(r);
        const std::string file = "performance_" + scenario.name + "_" + arm + ".csv";
        {
            auto os = open_out(out / file);
            write_performance_csv(ordered, os);
        }
        for (const auto& r : ordered)
            m.emplace_back("dropped[" + arm + "][" + r.method + "][" + to_string(r.estimand) + "]",
                           std::to_string(r.n_dropped) + "/" + std::to_string(reps) +
                               " separated " + std::to_string(r.n_separated));
        std::cout << "scenario " << scenario.name << ", arm " << arm << "\n";
        if (s.format() == "csv")
            write_performance_csv(ordered, std::cout);
        else
            write_performance_table(ordered, std::cout);
    }
    auto os = open_out(out / "manifest.txt");
    write_manifest(m, os);
    return 0;
}

int cmd_oracle(const Settings& s) {
    const auto seed = s.seed();
    const ScenarioConfig scenario = s.scenario();
    const std::size_t n_large = s.cli.n.value_or(s.file.n_oracle.value_or(2'000'000));
    if (n_large < 1'000'000) throw ConfigError("oracle needs --n of at least 1000000");
    const Oracle o = compute_oracle(scenario, n_large, seed);

    Json j = Json::object();
    j["scenario"] = scenario.name;
    j["n_large"] = n_large;
    j["seed"] = seed;
    j["rd_true"] = o.truth.rd;
    j["log_rr_true"] = o.truth.log_rr;
    j["log_rr_fallback"] = o.truth.log_rr_fallback;
    j["parameters"] = parameters_json(o.parameters.correct);
    Json single = Json::object();
    for (const auto& [k, p] : o.parameters.single_bias) {
        Json arr = Json::array();
        for (Eigen::Index i = 0; i < p.model(k).size(); ++i) arr.push_back(p.model(k)(i));
        single[bias_key(k)] = arr;
    }
    j["single_bias_parameters"] = single;

    const auto out = prepare_out(s.out());
    {
        auto os = open_out(out / ("oracle_" + scenario.name + ".json"));
        os << j.dump(2) << '\n';
    }
    Manifest m{{"command", "oracle"},
               {"seed", std::to_string(seed)},
               {"scenario", scenario.name},
               {"n_large", std::to_string(n_large)},
               {"rd_true", fmt(o.truth.rd)},
               {"log_rr_true", fmt(o.truth.log_rr)}};
    {
        auto os = open_out(out / "manifest.txt");
        write_manifest(m, os);
    }
    std::cout << "rd_true " << fmt(o.truth.rd) << "\nlog_rr_true " << fmt(o.truth.log_rr) << "\n";
    return 0;
}

int cmd_generate(const Settings& s) {
    const auto seed = s.seed();
    ScenarioConfig scenario = s.scenario();
    if (auto n = s.cli.n ? s.cli.n : s.file.n) scenario.n = *n;
    const Dataset ideal = generate_ideal(scenario, seed);
    const Dataset observed = to_observed(ideal);
    const auto out = prepare_out(s.out());
    write_csv(ideal, (out / "ideal.csv").string());
    write_csv(observed, (out / "observed.csv").string());
    Manifest m{{"command", "generate"},
               {"seed", std::to_string(seed)},
               {"scenario", scenario.name},
               {"n", std::to_string(scenario.n)},
               {"observed_records", std::to_string(observed.size())}};
    auto os = open_out(out / "manifest.txt");
    write_manifest(m, os);
    std::cout << "wrote " << ideal.size() << " ideal and " << observed.size() << " observed records\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiple-bias analysis for a binary exposure and outcome"};
    app.require_subcommand(1);
    Options o;

    auto common = [&o](CLI::App* c) {
        c->add_option("--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
        c->add_option("--seed", o.seed, "random seed (required here or in the config)");
        c->add_option("--out", o.out, "output directory");
        c->add_option("--workers", o.workers, "worker threads");
        c->add_option("--format", o.format, "stdout format: csv or table");
    };
    auto* qba_cmd = app.add_subcommand("qba", "run a bias analysis on a dataset");
    common(qba_cmd);
    qba_cmd->add_option("--data", o.data, "dataset CSV");
    qba_cmd->add_option("--draws", o.draws, "parameter draws");
    qba_cmd->add_option("--bootstraps", o.bootstraps, "bootstrap resamples (0 or >= 100)");

    auto* sim_cmd = app.add_subcommand("simulate", "run the simulation study");
    common(sim_cmd);
    sim_cmd->add_option("--scenario", o.scenario, "realistic, enhanced or a scenario file");
    sim_cmd->add_option("--reps", o.reps, "replications per arm");
    sim_cmd->add_option("--n", o.n, "records generated per replicate");
    sim_cmd->add_option("--n-oracle", o.n_oracle, "records in the oracle population");
    sim_cmd->add_option("--separated-fits", o.separated, "include or exclude separated log-RR fits");

    auto* oracle_cmd = app.add_subcommand("oracle", "true effect and correct bias parameters");
    common(oracle_cmd);
    oracle_cmd->add_option("--scenario", o.scenario, "realistic, enhanced or a scenario file");
    oracle_cmd->add_option("--n", o.n, "records in the oracle population");

    auto* gen_cmd = app.add_subcommand("generate", "write synthetic ideal and observed datasets");
    common(gen_cmd);
    gen_cmd->add_option("--scenario", o.scenario, "realistic, enhanced or a scenario file");
    gen_cmd->add_option("--n", o.n, "records to generate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        Settings s;
        s.cli = o;
        if (!o.config.empty()) s.file = load_run_config(o.config);
        if (qba_cmd->parsed()) return cmd_qba(s);
        if (sim_cmd->parsed()) return cmd_simulate(s);
        if (oracle_cmd->parsed()) return cmd_oracle(s);
        if (gen_cmd->parsed()) return cmd_generate(s);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        switch (e.category()) {
            case Error::Category::config: return 2;
            case Error::Category::data: return 3;
            case Error::Category::numeric: return 4;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
    return 0;
}
