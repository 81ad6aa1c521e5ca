#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ambucare/counterfactual.hpp"
#include "ambucare/did.hpp"
#include "ambucare/io.hpp"
#include "ambucare/model.hpp"
#include "ambucare/parallel.hpp"
#include "ambucare/pipeline.hpp"
#include "ambucare/synth.hpp"

namespace fs = std::filesystem;
using namespace ambucare;
using io::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Digest over named input contents and the options that shape the run.
std::string run_digest(const std::vector<std::pair<std::string, std::string>>& inputs, const json& options) {
    json j = json::object();
    for (const auto& [name, content] : inputs) j["inputs"][name] = io::sha256_hex(content);
    j["options"] = options;
    return io::sha256_hex(j.dump());
}

struct DataSet {
    std::vector<PatientProfile> patients;
    std::vector<ClaimRecord> claims;
    std::string patients_text;
    std::string claims_text;
};

DataSet load_data(const fs::path& dir) {
    DataSet d;
    const fs::path pp = dir / "patients.csv", cp = dir / "claims.csv";
    d.patients_text = io::read_file(pp);
    d.claims_text = io::read_file(cp);
    d.patients = io::read_patients(pp);
    d.claims = io::read_claims(cp);
    if (d.patients.empty()) throw io::SchemaError(pp.string() + ": no patient rows");
    return d;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

json group_shares(std::span<const PatientProfile> pop, const PopulationConfig& cfg) {
    double dis = 0, poor = 0, distant = 0, used = 0, used_dis = 0;
    std::array<double, 3> cat{0, 0, 0};
    for (const auto& p : pop) {
        dis += p.disadvantaged;
        poor += p.poor_household;
        distant += p.distant;
        used += p.used_ambulatory;
        if (p.disadvantaged) used_dis += p.used_ambulatory;
        if (p.category) cat[static_cast<std::size_t>(*p.category)] += 1.0;
    }
    const double n = static_cast<double>(pop.size());
    json cats = json::object();
    for (auto c : {SeverityCategory::Mild, SeverityCategory::Moderate, SeverityCategory::Severe}) {
        cats[std::string(category_name(c))] = cat[static_cast<std::size_t>(c)] / n;
    }
    return {{"n_patients", pop.size()},
            {"disadvantaged", dis / n},
            {"poor_household", poor / n},
            {"distant", distant / n},
            {"severity", cats},
            {"used_ambulatory", used / n},
            {"used_ambulatory_disadvantaged", dis > 0 ? used_dis / dis : 0.0},
            {"predicted_use_share_disadvantaged",
             dis > 0 ? disadvantaged_use_share(pop, cfg.true_cost, cfg.true_pref, cfg.plan) : 0.0}};
}

int cmd_simulate(const SimulateArgs& a) {
    const auto t0 = Clock::now();
    const std::string text = io::read_file(a.config);
    auto sc = io::simulate_config_from_json(io::parse_json_text(text, a.config));
    if (a.seed) sc.population.seed = *a.seed;

    PopulationConfig cfg = sc.population;
    std::vector<PatientProfile> pop;
    std::optional<double> lever;
    if (sc.calibrate_use_share) {
        auto cal = calibrate_use_share(cfg, *sc.calibrate_use_share);
        cfg = cal.config;
        pop = std::move(cal.population);
        lever = cal.lever;
    } else {
        pop = generate_population(cfg);
    }
    const auto& cp = cfg.true_cost;
    const auto& pp = cfg.true_pref;
    pop = simulate_choices(std::move(pop), cp, pp, cfg.plan, cfg.seed);

    std::vector<PanelRow> usage;
    std::optional<double> effect;
    if (cfg.shock) {
        usage = simulate_policy_shock(pop, cfg.plan, *cfg.shock, pp, cp, cfg.seed, cfg.years);
        effect = true_policy_effect(pop, usage);
    } else {
        usage = static_usage(pop, cfg.years, cp, pp, cfg.plan);
    }
    const auto claims = simulate_costs(pop, usage, cp, cfg.cost_noise_sd, cfg.seed, cfg);

    const json shares = group_shares(pop, cfg);
    json truth{{"seed", cfg.seed},
               {"cost_params", io::to_json(cp)},
               {"preference_params", io::to_json(pp)},
               {"plan", io::to_json(cfg.plan)},
               {"theta_by_category", cfg.severity.theta},
               {"realized_shares", shares}};
    if (cfg.shock) {
        truth["policy_shock"] = {{"year", cfg.shock->year},
                                 {"post_plan", io::to_json(cfg.shock->post_plan)},
                                 {"redraw_tastes", cfg.shock->redraw_tastes}};
        truth["true_policy_effect"] = *effect;
    }
    if (lever) {
        truth["calibration"] = {{"target_use_share", *sc.calibrate_use_share},
                                {"lever", *lever},
                                {"poor_within_disadvantaged", cfg.shares.poor_within_disadvantaged},
                                {"severity_probs", cfg.severity.probs}};
    }

    io::OutputSet out(a.out);
    out.add("patients.csv", io::patients_csv(pop));
    out.add("claims.csv", io::claims_csv(claims));
    out.add("truth.json", io::dump(truth));
    io::Manifest m;
    m.command = "simulate";
    m.config_digest = io::sha256_hex(text);
    m.seed = cfg.seed;
    m.inputs = {a.config};
    m.parameters = {{"n_patients", cfg.n_patients}, {"n_claims", claims.size()}, {"group_shares", shares}};
    m.wall_clock_seconds = seconds_since(t0);
    out.commit(m);
    return 0;
}

// ---------------------------------------------------------------------------

struct EstimateArgs {
    std::string data;
    std::string out;
    int bootstrap = 0;
    std::string severity = "discrete";
    std::string category_theta = "published";
    bool rural_minority = false;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::optional<int> before_year;
};

int cmd_estimate(const EstimateArgs& a) {
    const auto t0 = Clock::now();
    const auto data = load_data(a.data);
    EstimateOptions opt;
    opt.severity.measure = parse_severity_measure(a.severity);
    opt.severity.category_theta = parse_category_theta(a.category_theta);
    opt.logit.rural_minority = a.rural_minority;
    opt.bootstrap = a.bootstrap;
    opt.seed = a.seed;
    opt.threads = a.threads;
    opt.before_year = a.before_year;
    if (a.bootstrap < 0) throw std::invalid_argument("--bootstrap must be non-negative");
    if (a.bootstrap > 0 && a.bootstrap < 50) throw std::invalid_argument("--bootstrap needs at least 50 replicates");

    const auto est = run_estimation(data.patients, data.claims, opt);
    json options{{"severity", severity_measure_name(opt.severity.measure)},
                 {"category_theta", category_theta_name(opt.severity.category_theta)},
                 {"rural_minority", a.rural_minority},
                 {"bootstrap", a.bootstrap}};
    if (a.before_year) options["before_year"] = *a.before_year;

    io::OutputSet out(a.out);
    out.add("params.json", io::dump(params_json(est, opt.severity)));
    io::Manifest m;
    m.command = "estimate";
    m.config_digest = run_digest({{"patients.csv", data.patients_text}, {"claims.csv", data.claims_text}}, options);
    m.seed = a.seed;
    m.inputs = {(fs::path(a.data) / "patients.csv").string(), (fs::path(a.data) / "claims.csv").string()};
    m.parameters = options;
    m.wall_clock_seconds = seconds_since(t0);
    out.commit(m);
    return 0;
}

// ---------------------------------------------------------------------------

struct DidArgs {
    std::string data;
    std::string out;
    int policy_year = 2020;
};

int cmd_did(const DidArgs& a) {
    const auto t0 = Clock::now();
    const auto data = load_data(a.data);
    const auto panel = did_panel(data.patients, data.claims, a.policy_year);
    json specs = json::array();
    for (const auto& spec : standard_did_specs()) {
        const auto r = did_analysis(panel, spec);
        const auto k = static_cast<Eigen::Index>(r.fit.index_of(kInteraction));
        specs.push_back({{"specification", spec.label},
                         {"demographics", spec.demographics},
                         {"severity_effects", spec.severity},
                         {"mild_moderate_only", spec.mild_moderate_only},
                         {"n_obs", r.n_obs},
                         {"n_treated_patients", r.n_treated},
                         {"n_control_patients", r.n_control},
                         {"interaction_coef", r.fit.coef(k)},
                         {"interaction_se", r.fit.robust_se(k)},
                         {"interaction_ame", r.fit.ame(k)},
                         {"interaction_ame_se", r.fit.ame_se(k)},
                         {"treated_post_effect", r.effect},
                         {"treated_post_effect_se", r.effect_se},
                         {"probit", io::to_json(r.fit, true)}});
    }
    const json options{{"policy_year", a.policy_year}};
    json result{{"policy_year", a.policy_year}, {"interaction", kInteraction}, {"specifications", specs}};

    io::OutputSet out(a.out);
    out.add("did.json", io::dump(result));
    io::Manifest m;
    m.command = "did";
    m.config_digest = run_digest({{"patients.csv", data.patients_text}, {"claims.csv", data.claims_text}}, options);
    m.inputs = {(fs::path(a.data) / "patients.csv").string(), (fs::path(a.data) / "claims.csv").string()};
    m.parameters = options;
    m.wall_clock_seconds = seconds_since(t0);
    out.commit(m);
    return 0;
}

// ---------------------------------------------------------------------------

struct CounterfactualArgs {
    std::string params;
    std::string data;
    std::string scenario;
    std::string out;
};

// Rows are metrics, columns the change under each scenario.
std::string comparison_csv(const std::vector<std::pair<std::string, ScenarioOutcome>>& rows) {
    std::string out = "metric";
    for (const auto& [label, o] : rows) out += "," + label + "_level," + label + "_change";
    out += "\n";
    if (rows.empty()) return out;
    for (const auto& metric : rows.front().second.diffs_vs_baseline) {
        out += metric.metric;
        for (const auto& [label, o] : rows) {
            const auto& m = find_metric(o, metric.metric);
            out += "," + io::fmt(m.counterfactual) + "," + io::fmt(m.change);
        }
        out += "\n";
    }
    return out;
}

int cmd_counterfactual(const CounterfactualArgs& a) {
    const auto t0 = Clock::now();
    const std::string params_text = io::read_file(a.params);
    const auto params = model_params_from_json(io::parse_json_text(params_text, a.params));
    std::string scenario_text = "{}";
    ScenarioSet set;
    if (!a.scenario.empty()) {
        scenario_text = io::read_file(a.scenario);
        set = scenarios_from_json(io::parse_json_text(scenario_text, a.scenario));
    }
    const auto data = load_data(a.data);
    const auto sev = assign_severity(data.patients, data.claims, params.severity);
    const auto pop = with_severity(data.patients, sev);

    // The unchanged plan is always reported first.
    Target group = set.scenarios.empty() ? Target::Disadvantaged : set.scenarios.front().applies_to;
    PolicyScenario base = PolicyScenario::baseline();
    base.applies_to = group;
    std::vector<PolicyScenario> all{base};
    for (const auto& s : set.scenarios) {
        if (s.label == "baseline") continue;
        all.push_back(s);
    }

    std::vector<std::pair<std::string, ScenarioOutcome>> rows;
    json outcomes = json::array();
    io::OutputSet out(a.out);
    for (const auto& s : all) {
        auto o = run_scenario(pop, params.cost, params.pref, params.plan, s, set.options);
        outcomes.push_back(io::to_json(o));
        out.add("scenario_" + s.label + ".csv", io::metric_table_csv({{s.label, o}}));
        rows.emplace_back(s.label, std::move(o));
    }
    out.add("outcomes.json", io::dump(json{{"n_patients", pop.size()}, {"scenarios", outcomes}}));
    out.add("comparison.csv", comparison_csv(rows));

    const json options{{"severity", severity_measure_name(params.severity.measure)},
                       {"category_theta", category_theta_name(params.severity.category_theta)},
                       {"n_scenarios", all.size()}};
    io::Manifest m;
    m.command = "counterfactual";
    m.config_digest = run_digest({{"params.json", params_text},
                                  {"scenarios", scenario_text},
                                  {"patients.csv", data.patients_text},
                                  {"claims.csv", data.claims_text}},
                                 options);
    m.inputs = {a.params, (fs::path(a.data) / "patients.csv").string(), (fs::path(a.data) / "claims.csv").string()};
    if (!a.scenario.empty()) m.inputs.push_back(a.scenario);
    m.parameters = options;
    m.wall_clock_seconds = seconds_since(t0);
    out.commit(m);
    return 0;
}

// ---------------------------------------------------------------------------

struct CurvesArgs {
    std::string config;
    std::string out;
};

int cmd_curves(const CurvesArgs& a) {
    const auto t0 = Clock::now();
    const std::string text = io::read_file(a.config);
    const auto cfg = curves_from_json(io::parse_json_text(text, a.config));
    const auto grid = uniform_grid(cfg.grid_points);
    const auto rows = utility_curve(grid, cfg.series, cfg.cost);
    std::string csv = "theta,label,utility\n";
    for (const auto& r : rows) csv += io::fmt(r.theta) + "," + r.label + "," + io::fmt(r.utility) + "\n";

    io::OutputSet out(a.out);
    out.add("curves.csv", csv);
    json labels = json::array();
    for (const auto& s : cfg.series) labels.push_back(s.label);
    io::Manifest m;
    m.command = "curves";
    m.config_digest = io::sha256_hex(text);
    m.inputs = {a.config};
    m.parameters = {{"grid_points", cfg.grid_points}, {"series", labels}, {"cost_params", io::to_json(cfg.cost)}};
    m.wall_clock_seconds = seconds_since(t0);
    out.commit(m);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ambulatory-care demand: simulation, estimation and policy experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(io::kVersion));

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "generate a synthetic patients/claims dataset");
    s->add_option("--config", sim.config, "population configuration (JSON)")->required()->check(CLI::ExistingFile);
    s->add_option("--seed", sim.seed, "override the configured master seed");
    s->add_option("--out", sim.out, "output directory")->required();

    EstimateArgs est;
    est.threads = default_threads();
    auto* e = app.add_subcommand("estimate", "two-step estimation from a dataset directory");
    e->add_option("--data", est.data, "directory with patients.csv and claims.csv")->required()->check(CLI::ExistingDirectory);
    e->add_option("--out", est.out, "output directory")->required();
    e->add_option("--bootstrap", est.bootstrap, "bootstrap replicates for utility-parameter SEs (0 = none)");
    e->add_option("--severity", est.severity, "severity measure")
        ->check(CLI::IsMember({"discrete", "pref", "preference-discounted", "mod-severe", "five-bin"}));
    e->add_option("--category-theta", est.category_theta, "category severity source")
        ->check(CLI::IsMember({"published", "percentile"}));
    e->add_flag("--rural-minority", est.rural_minority, "add rural and minority weighting terms");
    e->add_option("--seed", est.seed, "seed for multi-start and bootstrap draws");
    e->add_option("--threads", est.threads, "worker threads")->check(CLI::PositiveNumber);
    e->add_option("--before-year", est.before_year, "use only claims from years before this one");

    DidArgs did;
    auto* d = app.add_subcommand("did", "difference-in-differences probit on the patient-year panel");
    d->add_option("--data", did.data, "directory with patients.csv and claims.csv")->required()->check(CLI::ExistingDirectory);
    d->add_option("--out", did.out, "output directory")->required();
    d->add_option("--policy-year", did.policy_year, "first post-reform year");

    CounterfactualArgs cf;
    auto* c = app.add_subcommand("counterfactual", "policy experiments at given parameters");
    c->add_option("--params", cf.params, "parameter file (estimate output or bundled published values)")
        ->required()
        ->check(CLI::ExistingFile);
    c->add_option("--data", cf.data, "directory with patients.csv and claims.csv")->required()->check(CLI::ExistingDirectory);
    c->add_option("--scenario", cf.scenario, "scenario configuration (JSON); baseline only when omitted")
        ->check(CLI::ExistingFile);
    c->add_option("--out", cf.out, "output directory")->required();

    CurvesArgs cv;
    auto* u = app.add_subcommand("curves", "utility-curve data for illustrative figures");
    u->add_option("--config", cv.config, "curve configuration (JSON)")->required()->check(CLI::ExistingFile);
    u->add_option("--out", cv.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& ex) {
        return app.exit(ex);
    }

    try {
        if (s->parsed()) return cmd_simulate(sim);
        if (e->parsed()) return cmd_estimate(est);
        if (d->parsed()) return cmd_did(did);
        if (c->parsed()) return cmd_counterfactual(cf);
        if (u->parsed()) return cmd_curves(cv);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 1;
}
