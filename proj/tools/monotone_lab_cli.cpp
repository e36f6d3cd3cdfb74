// Command-line front end: exact learning curves, monotonicity checks, the
// two-point margin and counterexample search, and the figure presets.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "monotone_lab/experiment.h"

namespace ml = monotone_lab;
namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kEngineError = 2, kFitError = 3 };

struct CommonOptions {
    std::string config_path;
    std::string preset;
    std::string out = "-";
    std::optional<int> n_start;
    std::optional<int> n_end;
    std::optional<double> tol;
};

ml::ExperimentConfig resolve_config(const CommonOptions& o) {
    if (o.config_path.empty() == o.preset.empty()) {
        throw ml::ConfigError("exactly one of --config or --preset is required");
    }
    auto cfg = o.preset.empty() ? ml::load_config(o.config_path) : ml::preset_config(o.preset);
    if (o.n_start) cfg.n_range.start = *o.n_start;
    if (o.n_end) cfg.n_range.end = *o.n_end;
    if (cfg.n_range.start < 1 || cfg.n_range.end < cfg.n_range.start) {
        throw ml::ConfigError("n range must satisfy 1 <= start <= end");
    }
    if (o.tol) {
        if (*o.tol < 0.0) throw ml::ConfigError("--tol must be >= 0");
        cfg.tolerance = *o.tol;
    }
    // Surface learner/loss/data mismatches as config errors before any
    // enumeration starts.
    try {
        (void)ml::limit_risk(cfg);
    } catch (const ml::ContractViolation& e) {
        throw ml::ConfigError(std::string("learner, loss and distribution are incompatible: ") + e.what());
    }
    return cfg;
}

void write_text(const std::string& out, const std::string& text) {
    if (out == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + out + "'");
    f << text;
}

std::string json_text(const nlohmann::json& j) { return j.dump(2) + "\n"; }

void add_common(CLI::App* cmd, CommonOptions& o, bool with_range, bool with_tol) {
    cmd->add_option("--config", o.config_path, "Experiment config (JSON)");
    cmd->add_option("--preset", o.preset, "Built-in experiment: fig1a, fig1b, fig1c_plain, fig1c_ridge, fig1d");
    cmd->add_option("--out", o.out, "Output path, '-' for stdout");
    if (with_range) {
        cmd->add_option("--n-start", o.n_start, "First training set size");
        cmd->add_option("--n-end", o.n_end, "Last training set size");
    }
    if (with_tol) cmd->add_option("--tol", o.tol, "Violation tolerance on E R(n+1) - E R(n)");
}

int run_curve(const CommonOptions& o, const std::string& format, std::optional<std::uint64_t> reps,
              std::optional<std::uint64_t> seed) {
    auto cfg = resolve_config(o);
    if (reps) cfg.monte_carlo = ml::MonteCarloSettings{*reps, seed.value_or(1)};
    if (seed && cfg.monte_carlo) cfg.monte_carlo->seed = *seed;

    const auto curve =
        ml::learning_curve(cfg.learner, cfg.distribution, cfg.loss, cfg.n_range.start, cfg.n_range.end, cfg.engine);
    std::vector<ml::CurveRow> rows;
    for (const auto& e : curve.entries) {
        ml::CurveRow row{e.n, e.risk, std::nullopt};
        if (cfg.monte_carlo) {
            row.mc = ml::mc_expected_risk(cfg.learner, cfg.distribution, cfg.loss, e.n, cfg.monte_carlo->replicates,
                                          cfg.monte_carlo->seed, cfg.engine);
        }
        rows.push_back(row);
    }
    const double limit = ml::limit_risk(cfg);
    if (format == "csv") {
        std::ostringstream os;
        ml::write_curve_csv(os, rows, limit);
        write_text(o.out, os.str());
    } else {
        write_text(o.out, json_text(ml::curve_to_json(cfg, curve, rows, limit)));
    }
    return kOk;
}

int run_check(const CommonOptions& o) {
    const auto cfg = resolve_config(o);
    const auto report = ml::scan(cfg.learner, cfg.distribution, cfg.loss, cfg.n_range.start, cfg.n_range.end,
                                 cfg.tolerance, cfg.engine);
    write_text(o.out, json_text(ml::report_to_json(report)));
    return kOk;
}

ml::LemmaInstance lemma_instance(const ml::ExperimentConfig& cfg, int n) {
    if (!cfg.lemma) throw ml::ConfigError("config field /lemma: missing required field");
    return ml::LemmaInstance{cfg.lemma->a, cfg.lemma->b, n, cfg.learner, cfg.loss};
}

ml::CounterexampleSearch search_options(const ml::ExperimentConfig& cfg) {
    ml::CounterexampleSearch s;
    s.tolerance = cfg.tolerance;
    s.engine = cfg.engine;
    return s;
}

int run_lemma(const CommonOptions& o, std::optional<int> n_override, bool find_q) {
    const auto cfg = resolve_config(o);
    const auto inst = lemma_instance(cfg, n_override.value_or(cfg.lemma ? cfg.lemma->n : 1));
    if (inst.n < 1) throw ml::ConfigError("--n must be >= 1");
    auto j = ml::lemma_to_json(inst, ml::lemma_margin(inst, cfg.engine.solver));
    if (find_q) j["counterexample"] = ml::counterexample_to_json(ml::find_counterexample_q(inst, search_options(cfg)));
    write_text(o.out, json_text(j));
    return kOk;
}

int run_find_q(const CommonOptions& o) {
    const auto cfg = resolve_config(o);
    const int base_n = cfg.lemma ? cfg.lemma->n : 1;
    const int first = o.n_start.value_or(base_n);
    const int last = o.n_end.value_or(o.n_start ? first : base_n);
    if (first < 1 || last < first) throw ml::ConfigError("n range must satisfy 1 <= start <= end");
    nlohmann::json results = nlohmann::json::array();
    for (int n = first; n <= last; ++n) {
        const auto inst = lemma_instance(cfg, n);
        const auto margin = ml::lemma_margin(inst, cfg.engine.solver);
        auto r = ml::counterexample_to_json(ml::find_counterexample_q(inst, search_options(cfg)));
        r["n"] = n;
        r["margin"] = margin.margin;
        results.push_back(std::move(r));
    }
    write_text(o.out, json_text(results.size() == 1 ? results[0] : results));
    return kOk;
}

int run_reproduce(const std::string& figure, const std::string& out_dir, std::optional<int> n_start,
                  std::optional<int> n_end) {
    const auto curves = ml::figure_curves(figure);
    fs::create_directories(out_dir);
    nlohmann::json summary{{"figure", figure}, {"curves", nlohmann::json::array()}};
    for (const auto& id : curves) {
        CommonOptions o;
        o.preset = id;
        o.n_start = n_start;
        o.n_end = n_end;
        const auto cfg = resolve_config(o);
        const auto report = ml::scan(cfg.learner, cfg.distribution, cfg.loss, cfg.n_range.start, cfg.n_range.end,
                                     cfg.tolerance, cfg.engine);
        std::vector<ml::CurveRow> rows;
        for (const auto& e : report.curve.entries) {
            if (e.n <= cfg.n_range.end) rows.push_back({e.n, e.risk, std::nullopt});
        }
        const double limit = ml::limit_risk(cfg);
        const std::string file = id + ".csv";
        std::ostringstream os;
        ml::write_curve_csv(os, rows, limit);
        write_text((fs::path(out_dir) / file).string(), os.str());

        auto r = ml::report_to_json(report);
        r.erase("deltas");
        r["name"] = id;
        r["file"] = file;
        r["limit_risk"] = limit;
        r["violation_count"] = report.violations.size();
        summary["curves"].push_back(std::move(r));
    }
    write_text((fs::path(out_dir) / (figure + "_summary.json")).string(), json_text(summary));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact learning curves and risk-monotonicity checks for ERM learners"};
    app.require_subcommand(1);

    CommonOptions curve_opts;
    std::string format = "csv";
    std::optional<std::uint64_t> mc_reps;
    std::optional<std::uint64_t> seed;
    auto* curve = app.add_subcommand("curve", "Exact expected-risk curve plus the population-limit risk");
    add_common(curve, curve_opts, true, false);
    curve->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    curve->add_option("--mc-replicates", mc_reps, "Add a Monte Carlo estimate per n");
    curve->add_option("--seed", seed, "Monte Carlo seed");

    CommonOptions check_opts;
    auto* check = app.add_subcommand("check", "Local monotonicity report over the n range");
    add_common(check, check_opts, true, true);

    CommonOptions lemma_opts;
    std::optional<int> lemma_n;
    bool lemma_find_q = false;
    auto* lemma = app.add_subcommand("lemma", "Two-point margin for the config's lemma instance");
    add_common(lemma, lemma_opts, false, true);
    lemma->add_option("--n", lemma_n, "Override lemma.n");
    lemma->add_flag("--find-q", lemma_find_q, "Also search for a violating q");

    CommonOptions findq_opts;
    auto* findq = app.add_subcommand("find-q", "Search q for a violation at each n");
    add_common(findq, findq_opts, true, true);

    std::string figure;
    std::string out_dir = ".";
    std::optional<int> repro_start;
    std::optional<int> repro_end;
    auto* repro = app.add_subcommand("reproduce", "Write the curves and summary for one figure panel");
    repro->add_option("figure", figure, "fig1a, fig1b, fig1c or fig1d")->required();
    repro->add_option("--out", out_dir, "Output directory");
    repro->add_option("--n-start", repro_start, "First training set size");
    repro->add_option("--n-end", repro_end, "Last training set size");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (curve->parsed()) return run_curve(curve_opts, format, mc_reps, seed);
        if (check->parsed()) return run_check(check_opts);
        if (lemma->parsed()) return run_lemma(lemma_opts, lemma_n, lemma_find_q);
        if (findq->parsed()) return run_find_q(findq_opts);
        if (repro->parsed()) return run_reproduce(figure, out_dir, repro_start, repro_end);
    } catch (const ml::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const ml::FitError& e) {
        std::cerr << "fit error: " << e.what() << '\n';
        return kFitError;
    } catch (const std::exception& e) {
        std::cerr << "engine error: " << e.what() << '\n';
        return kEngineError;
    }
    return kOk;
}
