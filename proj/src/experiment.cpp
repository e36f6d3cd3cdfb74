#include "monotone_lab/experiment.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <sstream>

namespace monotone_lab {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError("config field " + (path.empty() ? std::string("/") : path) + ": " + what);
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) fail(path + "/" + key, "unknown field");
    }
}

const json& required(const json& obj, const std::string& path, const std::string& key) {
    auto it = obj.find(key);
    if (it == obj.end()) fail(path + "/" + key, "missing required field");
    return *it;
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(path, "expected a finite number");
    return v;
}

long long as_integer(const json& j, const std::string& path) {
    if (j.is_number_integer()) return j.get<long long>();
    if (j.is_number_float()) {
        const double v = j.get<double>();
        if (std::floor(v) == v && std::abs(v) < 9.0e15) return static_cast<long long>(v);
    }
    fail(path, "expected an integer");
}

bool as_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) fail(path, "expected true or false");
    return j.get<bool>();
}

std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

std::vector<double> as_vector(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_number(j[i], path + "/" + std::to_string(i)));
    return out;
}

Eigen::MatrixXd as_matrix(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    Eigen::MatrixXd m;
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto row = as_vector(j[static_cast<std::size_t>(r)], path + "/" + std::to_string(r));
        if (r == 0) m.resize(rows, static_cast<Eigen::Index>(row.size()));
        if (static_cast<Eigen::Index>(row.size()) != m.cols()) fail(path, "rows differ in length");
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = row[static_cast<std::size_t>(c)];
    }
    return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

int as_label(const json& j, const std::string& path) {
    const auto v = as_integer(j, path);
    if (v != 1 && v != -1) fail(path, "label must be -1 or +1");
    return static_cast<int>(v);
}

template <class F>
auto guarded(const std::string& path, F&& make) {
    try {
        return make();
    } catch (const ContractViolation& e) {
        fail(path, e.what());
    }
}

SpdMatrix spd_from_json(const json& j, const std::string& path) {
    return guarded(path, [&] { return SpdMatrix(as_matrix(j, path)); });
}

LearnerSpec learner_from_json(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    const auto kind = as_string(required(j, path, "kind"), path + "/kind");
    LearnerSpec spec;
    if (kind == "linear_squared") {
        check_keys(j, path, {"kind", "intercept", "ridge_lambda0"});
        LinearSquaredSpec s;
        if (j.contains("intercept")) s.intercept = as_bool(j["intercept"], path + "/intercept");
        if (j.contains("ridge_lambda0")) s.ridge_lambda0 = as_number(j["ridge_lambda0"], path + "/ridge_lambda0");
        spec = s;
    } else if (kind == "linear_absolute") {
        check_keys(j, path, {"kind"});
        spec = LinearAbsoluteSpec{};
    } else if (kind == "linear_hinge") {
        check_keys(j, path, {"kind"});
        spec = LinearHingeSpec{};
    } else if (kind == "gaussian_mean_mle") {
        check_keys(j, path, {"kind", "sigma"});
        spec = GaussianMeanMleSpec{spd_from_json(required(j, path, "sigma"), path + "/sigma")};
    } else if (kind == "gaussian_variance_mle") {
        check_keys(j, path, {"kind"});
        spec = GaussianVarianceMleSpec{};
    } else if (kind == "memorize") {
        check_keys(j, path, {"kind", "default_label"});
        MemorizeSpec s;
        if (j.contains("default_label")) s.default_label = as_label(j["default_label"], path + "/default_label");
        spec = s;
    } else if (kind == "histogram") {
        check_keys(j, path, {"kind", "bin_edges", "default_label"});
        HistogramSpec s;
        s.bin_edges = as_vector(required(j, path, "bin_edges"), path + "/bin_edges");
        if (j.contains("default_label")) s.default_label = as_label(j["default_label"], path + "/default_label");
        spec = s;
    } else {
        fail(path + "/kind", "unknown learner '" + kind + "'");
    }
    guarded(path, [&] {
        validate_spec(spec);
        return 0;
    });
    return spec;
}

json learner_to_json(const LearnerSpec& spec) {
    json j{{"kind", std::string(learner_name(spec))}};
    std::visit(overloaded{
                   [&](const LinearSquaredSpec& s) {
                       j["intercept"] = s.intercept;
                       j["ridge_lambda0"] = s.ridge_lambda0;
                   },
                   [&](const GaussianMeanMleSpec& s) { j["sigma"] = matrix_to_json(s.sigma.matrix()); },
                   [&](const MemorizeSpec& s) { j["default_label"] = s.default_label; },
                   [&](const HistogramSpec& s) {
                       j["bin_edges"] = s.bin_edges;
                       j["default_label"] = s.default_label;
                   },
                   [](const auto&) {},
               },
               spec);
    return j;
}

LossKind loss_from_json(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    const auto kind = as_string(required(j, path, "kind"), path + "/kind");
    const bool has_sigma = kind == "nll_gaussian_mean" || kind == "mahalanobis";
    if (has_sigma) {
        check_keys(j, path, {"kind", "sigma"});
    } else {
        check_keys(j, path, {"kind"});
    }
    if (kind == "squared") return SquaredLoss{};
    if (kind == "absolute") return AbsoluteLoss{};
    if (kind == "hinge") return HingeLoss{};
    if (kind == "zero_one") return ZeroOneLoss{};
    if (kind == "nll_gaussian_variance") return NllGaussianVarianceLoss{};
    if (kind == "nll_gaussian_mean") {
        return NllGaussianMeanLoss{spd_from_json(required(j, path, "sigma"), path + "/sigma")};
    }
    if (kind == "mahalanobis") {
        const auto& s = required(j, path, "sigma");
        return MahalanobisLoss{guarded(path + "/sigma", [&] { return PsdMatrix(as_matrix(s, path + "/sigma")); })};
    }
    fail(path + "/kind", "unknown loss '" + kind + "'");
}

json loss_to_json(const LossKind& loss) {
    json j{{"kind", std::string(loss_name(loss))}};
    if (const auto* l = std::get_if<NllGaussianMeanLoss>(&loss)) j["sigma"] = matrix_to_json(l->sigma.matrix());
    if (const auto* l = std::get_if<MahalanobisLoss>(&loss)) j["sigma"] = matrix_to_json(l->sigma.matrix());
    return j;
}

DiscreteDistribution distribution_from_json(const json& j, const std::string& path) {
    check_keys(j, path, {"points", "probs"});
    const auto& pts = required(j, path, "points");
    if (!pts.is_array() || pts.empty()) fail(path + "/points", "expected a non-empty array");
    std::vector<DataPoint> points;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        points.push_back(point_from_json(pts[i], path + "/points/" + std::to_string(i)));
    }
    auto probs = as_vector(required(j, path, "probs"), path + "/probs");
    return guarded(path, [&] { return DiscreteDistribution(std::move(points), std::move(probs)); });
}

json distribution_to_json(const DiscreteDistribution& d) {
    json pts = json::array();
    for (const auto& p : d.points()) pts.push_back(point_to_json(p));
    return json{{"points", pts}, {"probs", std::vector<double>(d.probs().begin(), d.probs().end())}};
}

std::pair<std::size_t, std::size_t> line_and_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

ExperimentConfig config_from_json(const json& root) {
    check_keys(root, "",
               {"schema_version", "name", "distribution", "learner", "loss", "n_range", "tolerance", "engine",
                "monte_carlo", "lemma"});
    const auto version = as_integer(required(root, "", "schema_version"), "/schema_version");
    if (version != kConfigSchemaVersion) {
        fail("/schema_version", "unsupported version " + std::to_string(version) + " (expected " +
                                    std::to_string(kConfigSchemaVersion) + ")");
    }

    auto learner = learner_from_json(required(root, "", "learner"), "/learner");
    LossKind loss;
    if (root.contains("loss")) {
        loss = loss_from_json(root["loss"], "/loss");
    } else if (auto native = native_loss(learner)) {
        loss = *native;
    } else {
        fail("/loss", "missing required field");
    }

    ExperimentConfig cfg{
        .name = root.contains("name") ? as_string(root["name"], "/name") : std::string(),
        .distribution = distribution_from_json(required(root, "", "distribution"), "/distribution"),
        .learner = std::move(learner),
        .loss = std::move(loss),
    };

    if (root.contains("n_range")) {
        const auto& r = root["n_range"];
        check_keys(r, "/n_range", {"start", "end", "step"});
        if (r.contains("step") && as_integer(r["step"], "/n_range/step") != 1) {
            fail("/n_range/step", "only step 1 is supported");
        }
        cfg.n_range.start = static_cast<int>(as_integer(required(r, "/n_range", "start"), "/n_range/start"));
        cfg.n_range.end = static_cast<int>(as_integer(required(r, "/n_range", "end"), "/n_range/end"));
    }
    if (cfg.n_range.start < 1 || cfg.n_range.end < cfg.n_range.start) {
        fail("/n_range", "need 1 <= start <= end");
    }
    if (root.contains("tolerance")) {
        cfg.tolerance = as_number(root["tolerance"], "/tolerance");
        if (cfg.tolerance < 0.0) fail("/tolerance", "must be >= 0");
    }
    if (root.contains("engine")) {
        const auto& e = root["engine"];
        check_keys(e, "/engine", {"max_compositions", "threads", "pinv_rtol"});
        if (e.contains("max_compositions")) {
            const auto v = as_integer(e["max_compositions"], "/engine/max_compositions");
            if (v < 1) fail("/engine/max_compositions", "must be >= 1");
            cfg.engine.max_compositions = static_cast<std::uint64_t>(v);
        }
        if (e.contains("threads")) {
            const auto v = as_integer(e["threads"], "/engine/threads");
            if (v < 0) fail("/engine/threads", "must be >= 0");
            cfg.engine.threads = static_cast<unsigned>(v);
        }
        if (e.contains("pinv_rtol")) {
            cfg.engine.solver.pinv_rtol = as_number(e["pinv_rtol"], "/engine/pinv_rtol");
            if (cfg.engine.solver.pinv_rtol < 0.0) fail("/engine/pinv_rtol", "must be >= 0");
        }
    }
    if (root.contains("monte_carlo")) {
        const auto& m = root["monte_carlo"];
        check_keys(m, "/monte_carlo", {"replicates", "seed"});
        MonteCarloSettings mc;
        const auto reps = as_integer(required(m, "/monte_carlo", "replicates"), "/monte_carlo/replicates");
        if (reps < 1) fail("/monte_carlo/replicates", "must be >= 1");
        mc.replicates = static_cast<std::uint64_t>(reps);
        if (m.contains("seed")) {
            const auto seed = as_integer(m["seed"], "/monte_carlo/seed");
            if (seed < 0) fail("/monte_carlo/seed", "must be >= 0");
            mc.seed = static_cast<std::uint64_t>(seed);
        }
        cfg.monte_carlo = mc;
    }
    if (root.contains("lemma")) {
        const auto& l = root["lemma"];
        check_keys(l, "/lemma", {"a", "b", "n"});
        LemmaSettings lemma{point_from_json(required(l, "/lemma", "a"), "/lemma/a"),
                            point_from_json(required(l, "/lemma", "b"), "/lemma/b"), 1};
        if (l.contains("n")) lemma.n = static_cast<int>(as_integer(l["n"], "/lemma/n"));
        if (lemma.n < 1) fail("/lemma/n", "must be >= 1");
        if (identical_points(lemma.a, lemma.b)) fail("/lemma", "a and b must differ");
        cfg.lemma = std::move(lemma);
    }
    return cfg;
}

}  // namespace

// ---------------------------------------------------------------------------

DataPoint point_from_json(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object with 'z' or 'x'/'y'");
    if (j.contains("z")) {
        check_keys(j, path, {"z"});
        const auto& z = j["z"];
        if (z.is_array()) {
            auto v = as_vector(z, path + "/z");
            return guarded(path, [&] { return vector_point(std::move(v)); });
        }
        return scalar_point(as_number(z, path + "/z"));
    }
    check_keys(j, path, {"x", "y"});
    auto x = as_vector(required(j, path, "x"), path + "/x");
    const double y = as_number(required(j, path, "y"), path + "/y");
    return guarded(path, [&] { return labeled_point(std::move(x), y); });
}

json point_to_json(const DataPoint& p) {
    return std::visit(overloaded{
                          [](const ScalarPoint& s) { return json{{"z", s.z}}; },
                          [](const VectorPoint& v) { return json{{"z", v.z}}; },
                          [](const LabeledPoint& l) { return json{{"x", l.x}, {"y", l.y}}; },
                      },
                      p);
}

json hypothesis_to_json(const Hypothesis& h) {
    return std::visit(overloaded{
                          [](const LinearHypothesis& l) {
                              json j{{"kind", "linear"}, {"w", l.w}};
                              j["intercept"] = l.intercept ? json(*l.intercept) : json(nullptr);
                              return j;
                          },
                          [](const GaussianMeanHypothesis& g) { return json{{"kind", "gaussian_mean"}, {"mu", g.mu}}; },
                          [](const GaussianVarianceHypothesis& g) {
                              return json{{"kind", "gaussian_variance"}, {"sigma2", g.sigma2}};
                          },
                          [](const LookupHypothesis& l) {
                              json table = json::array();
                              if (l.binned) {
                                  for (const auto& [bin, label] : l.by_bin) {
                                      table.push_back({{"bin", bin}, {"label", label}});
                                  }
                              } else {
                                  for (const auto& [x, label] : l.by_input) {
                                      table.push_back({{"x", x}, {"label", label}});
                                  }
                              }
                              json j{{"kind", "lookup"}, {"table", table}, {"default_label", l.default_label}};
                              if (l.binned) j["bin_edges"] = l.bin_edges;
                              return j;
                          },
                      },
                      h);
}

ExperimentConfig parse_config(std::string_view text) {
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_and_column(text, e.byte == 0 ? 0 : e.byte - 1);
        throw ConfigError("config syntax error at line " + std::to_string(line) + ", column " +
                          std::to_string(col) + ": " + e.what());
    }
    return config_from_json(root);
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

json config_to_json(const ExperimentConfig& c) {
    json j{
        {"schema_version", kConfigSchemaVersion},
        {"name", c.name},
        {"distribution", distribution_to_json(c.distribution)},
        {"learner", learner_to_json(c.learner)},
        {"loss", loss_to_json(c.loss)},
        {"n_range", {{"start", c.n_range.start}, {"end", c.n_range.end}, {"step", 1}}},
        {"tolerance", c.tolerance},
        {"engine",
         {{"max_compositions", c.engine.max_compositions},
          {"threads", c.engine.threads},
          {"pinv_rtol", c.engine.solver.pinv_rtol}}},
    };
    if (c.monte_carlo) {
        j["monte_carlo"] = {{"replicates", c.monte_carlo->replicates}, {"seed", c.monte_carlo->seed}};
    }
    if (c.lemma) {
        j["lemma"] = {{"a", point_to_json(c.lemma->a)}, {"b", point_to_json(c.lemma->b)}, {"n", c.lemma->n}};
    }
    return j;
}

std::string emit_config(const ExperimentConfig& config) { return config_to_json(config).dump(2) + "\n"; }

// ---------------------------------------------------------------------------

std::vector<std::string> preset_ids() { return {"fig1a", "fig1b", "fig1c_plain", "fig1c_ridge", "fig1d"}; }

ExperimentConfig preset_config(std::string_view id) {
    const auto a = labeled_point({1.0}, 1.0);
    const auto b = labeled_point({0.1}, 1.0);
    auto two_point = [&](double pa) { return DiscreteDistribution({a, b}, {pa, 1.0 - pa}); };
    auto make = [&](DiscreteDistribution d, LearnerSpec spec, LossKind loss) {
        return ExperimentConfig{.name = std::string(id),
                                .distribution = std::move(d),
                                .learner = std::move(spec),
                                .loss = std::move(loss)};
    };
    if (id == "fig1a") return make(two_point(1e-5), LinearSquaredSpec{}, SquaredLoss{});
    if (id == "fig1b") return make(two_point(0.1), LinearAbsoluteSpec{}, AbsoluteLoss{});
    if (id == "fig1c_plain") return make(two_point(0.01), LinearSquaredSpec{}, SquaredLoss{});
    if (id == "fig1c_ridge") return make(two_point(0.01), LinearSquaredSpec{false, 0.01}, SquaredLoss{});
    if (id == "fig1d") {
        DiscreteDistribution d({a, labeled_point({0.1}, -1.0), labeled_point({-1.0}, 1.0)}, {0.01, 0.01, 0.98});
        return make(std::move(d), LinearSquaredSpec{true, 0.0}, SquaredLoss{});
    }
    throw ConfigError("unknown preset '" + std::string(id) + "'");
}

std::vector<std::string> figure_curves(std::string_view figure_id) {
    if (figure_id == "fig1a" || figure_id == "fig1b" || figure_id == "fig1d") return {std::string(figure_id)};
    if (figure_id == "fig1c") return {"fig1c_plain", "fig1c_ridge"};
    throw ConfigError("unknown figure '" + std::string(figure_id) + "' (expected fig1a, fig1b, fig1c or fig1d)");
}

// ---------------------------------------------------------------------------

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

void write_curve_csv(std::ostream& os, const std::vector<CurveRow>& rows, double limit) {
    const bool with_mc = std::any_of(rows.begin(), rows.end(), [](const CurveRow& r) { return r.mc.has_value(); });
    os << "n,expected_risk,limit_risk";
    if (with_mc) os << ",mc_estimate,mc_stderr";
    os << '\n';
    for (const auto& r : rows) {
        os << r.n << ',' << format_double(r.expected_risk) << ',' << format_double(limit);
        if (with_mc) {
            if (r.mc) {
                os << ',' << format_double(r.mc->mean) << ',' << format_double(r.mc->standard_error);
            } else {
                os << ",,";
            }
        }
        os << '\n';
    }
}

json curve_to_json(const ExperimentConfig& config, const LearningCurve& curve, const std::vector<CurveRow>& rows,
                   double limit) {
    json entries = json::array();
    for (const auto& r : rows) {
        json e{{"n", r.n}, {"expected_risk", r.expected_risk}};
        if (r.mc) e["monte_carlo"] = {{"estimate", r.mc->mean}, {"stderr", r.mc->standard_error},
                                      {"replicates", r.mc->replicates}};
        entries.push_back(std::move(e));
    }
    return json{
        {"name", config.name},
        {"learner", learner_to_json(config.learner)},
        {"loss", loss_to_json(config.loss)},
        {"distribution", distribution_to_json(config.distribution)},
        {"distribution_digest", curve.distribution_digest},
        {"arithmetic", curve.arithmetic},
        {"limit_risk", limit},
        {"entries", entries},
    };
}

json report_to_json(const MonotonicityReport& report) {
    auto list = [](const std::vector<DeltaEntry>& v) {
        json a = json::array();
        for (const auto& d : v) a.push_back({{"n", d.n}, {"delta", d.delta}});
        return a;
    };
    return json{
        {"n_start", report.n_start},
        {"n_end", report.n_end},
        {"tolerance", report.tolerance},
        {"learner", report.curve.learner},
        {"loss", report.curve.loss},
        {"distribution_digest", report.curve.distribution_digest},
        {"deltas", list(report.deltas)},
        {"violations", list(report.violations)},
        {"verdict", std::string(verdict_code(report.verdict))},
        {"verdict_text", std::string(verdict_text(report.verdict))},
    };
}

json lemma_to_json(const LemmaInstance& inst, const LemmaMargin& m) {
    return json{
        {"a", point_to_json(inst.a)},
        {"b", point_to_json(inst.b)},
        {"n", inst.n},
        {"learner", std::string(learner_name(inst.spec))},
        {"loss", std::string(loss_name(inst.loss))},
        {"margin", m.margin},
        {"hypotheses",
         {{"b_only", {{"sample", "n+1 copies of b"}, {"h", hypothesis_to_json(m.h_b_only)}, {"loss_b", m.loss_b_only}}},
          {"one_a", {{"sample", "a and n copies of b"}, {"h", hypothesis_to_json(m.h_one_a)}, {"loss_b", m.loss_one_a}}},
          {"one_a_prev",
           {{"sample", "a and n-1 copies of b"},
            {"h", hypothesis_to_json(m.h_one_a_prev)},
            {"loss_b", m.loss_one_a_prev}}}}},
        {"rate_ratio", m.rate_ratio ? json(*m.rate_ratio) : json(nullptr)},
        {"rate_reference", m.rate_reference},
    };
}

json counterexample_to_json(const std::optional<Counterexample>& found) {
    if (!found) return json{{"found", false}};
    return json{
        {"found", true},       {"q", found->q},           {"delta", found->delta},
        {"grid_index", found->grid_index}, {"grid_q", found->grid_q}, {"grid_delta", found->grid_delta},
    };
}

double limit_risk(const ExperimentConfig& config) {
    const auto h = population_erm(config.learner, config.distribution, config.engine.solver);
    return population_risk(config.distribution, h, config.loss);
}

}  // namespace monotone_lab
