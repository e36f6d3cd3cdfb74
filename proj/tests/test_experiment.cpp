#include <random>
#include <sstream>

#include "doctest.h"

#include "monotone_lab/experiment.h"

using namespace monotone_lab;

namespace {

std::string error_of(std::string_view text) {
    try {
        (void)parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const char* kMinimal = R"({
  "schema_version": 1,
  "distribution": {"points": [{"x": [1], "y": 1}, {"x": [0.1], "y": 1}], "probs": [0.1, 0.9]},
  "learner": {"kind": "linear_absolute"}
})";

void check_round_trip(const ExperimentConfig& c) {
    const auto once = parse_config(emit_config(c));
    CHECK(once == c);
    const auto twice = parse_config(emit_config(once));
    CHECK(twice == once);
    CHECK(emit_config(twice) == emit_config(once));
}

}  // namespace

TEST_CASE("minimal config fills defaults and the native loss") {
    const auto c = parse_config(kMinimal);
    CHECK(std::holds_alternative<LinearAbsoluteSpec>(c.learner));
    CHECK(std::holds_alternative<AbsoluteLoss>(c.loss));
    CHECK(c.n_range.start == 1);
    CHECK(c.n_range.end == 100);
    CHECK(c.tolerance == 1e-12);
    CHECK_FALSE(c.monte_carlo);
    CHECK_FALSE(c.lemma);
    CHECK(c.distribution.size() == 2);
}

TEST_CASE("config round trip") {
    for (const auto& id : preset_ids()) check_round_trip(preset_config(id));

    const auto full = parse_config(R"({
      "schema_version": 1,
      "name": "everything",
      "distribution": {"points": [{"z": [0.5, -1]}, {"z": [2, 0.25]}, {"z": [-1, 1]}], "probs": [0.2, 0.3, 0.5]},
      "learner": {"kind": "gaussian_mean_mle", "sigma": [[2, 0.5], [0.5, 1]]},
      "loss": {"kind": "nll_gaussian_mean", "sigma": [[2, 0.5], [0.5, 1]]},
      "n_range": {"start": 3, "end": 9, "step": 1},
      "tolerance": 1e-10,
      "engine": {"max_compositions": 5000, "threads": 2, "pinv_rtol": 1e-11},
      "monte_carlo": {"replicates": 1000, "seed": 77},
      "lemma": {"a": {"z": [1, 1]}, "b": {"z": [0, 0]}, "n": 4}
    })");
    CHECK(full.n_range.start == 3);
    CHECK(full.engine.threads == 2);
    CHECK(full.monte_carlo->seed == 77);
    CHECK(full.lemma->n == 4);
    check_round_trip(full);

    // Awkward decimals and every learner kind.
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    const std::vector<std::string> learners{
        R"({"kind": "linear_squared", "intercept": true, "ridge_lambda0": 0.3})",
        R"({"kind": "linear_hinge"})",
        R"({"kind": "memorize", "default_label": 1})",
        R"({"kind": "histogram", "bin_edges": [-0.5, 0.25], "default_label": -1})",
    };
    for (const auto& learner : learners) {
        for (int trial = 0; trial < 25; ++trial) {
            const double p1 = u(rng), p2 = u(rng), p3 = u(rng);
            const double s = p1 + p2 + p3;
            std::ostringstream text;
            text.precision(17);
            text << R"({"schema_version": 1, "distribution": {"points": [{"x": [)" << u(rng)
                 << R"(], "y": 1}, {"x": [-0.3], "y": -1}, {"x": [0.7], "y": -1}], "probs": [)" << p1 / s << ", "
                 << p2 / s << ", " << p3 / s << R"(]}, "learner": )" << learner << "}";
            check_round_trip(parse_config(text.str()));
        }
    }
}

TEST_CASE("syntax errors report line and column") {
    const auto msg = error_of("{\n  \"schema_version\": 1,\n  \"name\": }\n");
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("column") != std::string::npos);
}

TEST_CASE("field errors name the JSON pointer") {
    auto with = [](const std::string& extra) {
        return std::string(R"({"schema_version": 1, "distribution": {"points": [{"z": 0}, {"z": 1}], "probs": [0.5, 0.5]},)") +
               extra + "}";
    };
    CHECK(error_of(with(R"("learner": {"kind": "gaussian_variance_mle", "bogus": 1})")).find("/learner/bogus") !=
          std::string::npos);
    CHECK(error_of(with(R"("learner": {"kind": "nope"})")).find("/learner/kind") != std::string::npos);
    CHECK(error_of(with(R"("learner": {"kind": "gaussian_variance_mle"}, "n_range": {"start": "x", "end": 3})"))
              .find("/n_range/start") != std::string::npos);
    CHECK(error_of(with(R"("learner": {"kind": "gaussian_variance_mle"}, "n_range": {"start": 5, "end": 3})"))
              .find("/n_range") != std::string::npos);
    CHECK(error_of(with(R"("learner": {"kind": "gaussian_variance_mle"}, "extra": 1)")).find("/extra") !=
          std::string::npos);
    CHECK(error_of(with(R"("learner": {"kind": "memorize", "default_label": 0})")).find("/learner/default_label") !=
          std::string::npos);
    CHECK(error_of(R"({"schema_version": 1, "learner": {"kind": "linear_absolute"},
                       "distribution": {"points": [{"z": 0}, {"z": 1}], "probs": [0.5, 0.6]}})")
              .find("/distribution") != std::string::npos);
    CHECK(error_of(R"({"schema_version": 2, "learner": {"kind": "linear_absolute"},
                       "distribution": {"points": [{"z": 0}], "probs": [1]}})")
              .find("/schema_version") != std::string::npos);
    CHECK(error_of(R"({"learner": {"kind": "linear_absolute"},
                       "distribution": {"points": [{"z": 0}], "probs": [1]}})")
              .find("/schema_version") != std::string::npos);
    CHECK(error_of(with(R"("learner": {"kind": "gaussian_mean_mle", "sigma": [[1, 2], [2, 1]]})"))
              .find("/learner/sigma") != std::string::npos);
    CHECK(error_of(with(R"("learner": {"kind": "gaussian_variance_mle"}, "lemma": {"a": {"z": 1}, "b": {"z": 1}})"))
              .find("/lemma") != std::string::npos);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("presets and figures") {
    CHECK(preset_ids().size() == 5);
    CHECK(figure_curves("fig1c") == std::vector<std::string>{"fig1c_plain", "fig1c_ridge"});
    CHECK(figure_curves("fig1b") == std::vector<std::string>{"fig1b"});
    CHECK_THROWS_AS(figure_curves("fig2"), ConfigError);
    CHECK_THROWS_AS(preset_config("fig1c"), ConfigError);

    const auto d = preset_config("fig1d");
    CHECK(d.distribution.size() == 3);
    CHECK(std::get<LinearSquaredSpec>(d.learner).intercept);
    CHECK(std::get<LinearSquaredSpec>(preset_config("fig1c_ridge").learner).ridge_lambda0 == 0.01);
    CHECK(preset_config("fig1a").distribution.probs()[0] == 1e-5);
    CHECK(preset_config("fig1b").n_range.end == 100);

    const double w = (1e-5 + 0.99999 * 0.1) / (1e-5 + 0.99999 * 0.01);
    const double limit = 1e-5 * (w - 1) * (w - 1) + 0.99999 * (0.1 * w - 1) * (0.1 * w - 1);
    CHECK(limit_risk(preset_config("fig1a")) == doctest::Approx(limit).epsilon(1e-12));
}

TEST_CASE("number formatting is full precision and locale independent") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(-2.5e-7) == "-2.4999999999999999e-07");
    CHECK(format_double(0.0) == "0");
    for (double v : {0.1, 1.0 / 3.0, 8.0919080110690412e-4, 1e300, -7.25}) {
        CHECK(std::stod(format_double(v)) == v);
    }
}

TEST_CASE("curve CSV layout") {
    std::ostringstream os;
    write_curve_csv(os, {{1, 0.5, std::nullopt}, {2, 0.25, std::nullopt}}, 0.1);
    CHECK(os.str() == "n,expected_risk,limit_risk\n1,0.5,0.10000000000000001\n2,0.25,0.10000000000000001\n");

    std::ostringstream mc;
    write_curve_csv(mc, {{1, 0.5, MonteCarloEstimate{0.49, 0.01, 100}}}, 0.0);
    CHECK(mc.str() == "n,expected_risk,limit_risk,mc_estimate,mc_stderr\n1,0.5,0,0.48999999999999999,0.01\n");
    CHECK(mc.str().find('\r') == std::string::npos);
}

TEST_CASE("JSON reports") {
    const auto cfg = preset_config("fig1c_ridge");
    const auto report = scan(cfg.learner, cfg.distribution, cfg.loss, 1, 30, cfg.tolerance);
    const auto j = report_to_json(report);
    CHECK(j["verdict"] == std::string(verdict_code(report.verdict)));
    CHECK(j["deltas"].size() == 30);
    CHECK(j["violations"].size() == report.violations.size());
    CHECK(j["distribution_digest"] == cfg.distribution.digest());

    const LemmaInstance inst{labeled_point({1.0}, 1.0), labeled_point({0.01}, 1.0), 5, LinearSquaredSpec{},
                             SquaredLoss{}};
    const auto lj = lemma_to_json(inst, lemma_margin(inst));
    CHECK(lj["margin"].get<double>() > 0.0);
    CHECK(lj["hypotheses"]["one_a"]["h"]["kind"] == "linear");
    CHECK(lj["hypotheses"]["b_only"]["h"]["intercept"].is_null());
    CHECK(counterexample_to_json(std::nullopt)["found"] == false);

    const auto curve = learning_curve(cfg.learner, cfg.distribution, cfg.loss, 1, 3);
    std::vector<CurveRow> rows;
    for (const auto& e : curve.entries) rows.push_back({e.n, e.risk, std::nullopt});
    const auto cj = curve_to_json(cfg, curve, rows, limit_risk(cfg));
    CHECK(cj["entries"].size() == 3);
    CHECK(cj["learner"]["ridge_lambda0"] == 0.01);
}
