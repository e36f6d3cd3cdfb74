#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "monotone_lab/domain.h"
#include "monotone_lab/exact_curve.h"
#include "monotone_lab/learners.h"
#include "monotone_lab/monotonicity.h"

namespace monotone_lab {

inline constexpr int kConfigSchemaVersion = 1;

/// Malformed experiment config. The message names the line/column (syntax
/// errors) or the JSON pointer of the offending field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct NRange {
    int start = 1;
    int end = 100;
    bool operator==(const NRange&) const = default;
};

struct MonteCarloSettings {
    std::uint64_t replicates = 1'000'000;
    std::uint64_t seed = 1;
    bool operator==(const MonteCarloSettings&) const = default;
};

struct LemmaSettings {
    DataPoint a;
    DataPoint b;
    int n = 1;
    bool operator==(const LemmaSettings& o) const {
        return identical_points(a, o.a) && identical_points(b, o.b) && n == o.n;
    }
};

struct ExperimentConfig {
    std::string name;
    DiscreteDistribution distribution;
    LearnerSpec learner;
    LossKind loss;
    NRange n_range;
    double tolerance = kDefaultViolationTolerance;
    EngineOptions engine;
    std::optional<MonteCarloSettings> monte_carlo;
    std::optional<LemmaSettings> lemma;

    bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

nlohmann::json config_to_json(const ExperimentConfig& config);
std::string emit_config(const ExperimentConfig& config);

// Component codecs, shared with the report writers.
DataPoint point_from_json(const nlohmann::json& j, const std::string& path = "");
nlohmann::json point_to_json(const DataPoint& p);
nlohmann::json hypothesis_to_json(const Hypothesis& h);

// ---------------------------------------------------------------------------
// Presets for the four published two/three-point experiments
// ---------------------------------------------------------------------------

/// Curve ids: fig1a, fig1b, fig1c_plain, fig1c_ridge, fig1d.
ExperimentConfig preset_config(std::string_view curve_id);
std::vector<std::string> preset_ids();

/// Curve ids making up a figure panel (fig1a .. fig1d); fig1c has two.
std::vector<std::string> figure_curves(std::string_view figure_id);

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

/// Shortest-free, locale-independent rendering with 17 significant digits.
std::string format_double(double v);

struct CurveRow {
    int n = 0;
    double expected_risk = 0.0;
    std::optional<MonteCarloEstimate> mc;
};

/// CSV with columns n,expected_risk,limit_risk (plus mc_estimate,mc_stderr
/// when Monte Carlo rows are present). LF line endings.
void write_curve_csv(std::ostream& os, const std::vector<CurveRow>& rows, double limit_risk);

nlohmann::json curve_to_json(const ExperimentConfig& config, const LearningCurve& curve,
                             const std::vector<CurveRow>& rows, double limit_risk);
nlohmann::json report_to_json(const MonotonicityReport& report);
nlohmann::json lemma_to_json(const LemmaInstance& inst, const LemmaMargin& margin);
nlohmann::json counterexample_to_json(const std::optional<Counterexample>& found);

/// The population-limit risk R_D(population_erm(spec, D)).
double limit_risk(const ExperimentConfig& config);

}  // namespace monotone_lab
