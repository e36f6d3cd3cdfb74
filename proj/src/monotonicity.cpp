#include "monotone_lab/monotonicity.h"

#include <cmath>
#include <numbers>

#include "monotone_lab/numeric.h"
#include "monotone_lab/parallel.h"

namespace monotone_lab {

namespace {

WeightedSample one_a_sample(const DataPoint& a, const DataPoint& b, int b_count) {
    std::vector<WeightedItem> items{{a, 1.0}};
    if (b_count > 0) items.push_back({b, static_cast<double>(b_count)});
    return WeightedSample(std::move(items));
}

Hypothesis fit_sized(const LearnerSpec& spec, const WeightedSample& sample, const SolverOptions& opts) {
    return fit(spec, sample, sample.total_weight(), opts);
}

}  // namespace

std::string_view verdict_code(Verdict v) {
    return v == Verdict::MonotoneOnRange ? "monotone-on-range" : "violations-found";
}

std::string_view verdict_text(Verdict v) {
    return v == Verdict::MonotoneOnRange ? "no violation found on tested range"
                                         : "local monotonicity violated on tested range";
}

double local_delta(const LearnerSpec& spec, const DiscreteDistribution& dist, const LossKind& loss, int n,
                   const EngineOptions& opts) {
    return expected_risk(spec, dist, loss, n + 1, opts) - expected_risk(spec, dist, loss, n, opts);
}

MonotonicityReport scan(const LearnerSpec& spec, const DiscreteDistribution& dist, const LossKind& loss,
                        int n_start, int n_end, double tolerance, const EngineOptions& opts) {
    if (!(tolerance >= 0.0)) throw ContractViolation("tolerance must be >= 0");
    MonotonicityReport report;
    report.n_start = n_start;
    report.n_end = n_end;
    report.tolerance = tolerance;
    report.curve = learning_curve(spec, dist, loss, n_start, n_end + 1, opts);
    const auto& e = report.curve.entries;
    for (std::size_t i = 0; i + 1 < e.size(); ++i) {
        const DeltaEntry d{e[i].n, e[i + 1].risk - e[i].risk};
        report.deltas.push_back(d);
        if (d.delta > tolerance) report.violations.push_back(d);
    }
    report.verdict = report.violations.empty() ? Verdict::MonotoneOnRange : Verdict::ViolationsFound;
    return report;
}

// ---------------------------------------------------------------------------

LemmaMargin lemma_margin(const LemmaInstance& inst, const SolverOptions& opts) {
    if (inst.n < 1) throw ContractViolation("lemma instance needs n >= 1");
    if (identical_points(inst.a, inst.b)) throw ContractViolation("lemma instance needs a != b");
    const int n = inst.n;

    LemmaMargin out;
    out.h_b_only = fit_sized(inst.spec, WeightedSample({{inst.b, static_cast<double>(n + 1)}}), opts);
    out.h_one_a = fit_sized(inst.spec, one_a_sample(inst.a, inst.b, n), opts);
    out.h_one_a_prev = fit_sized(inst.spec, one_a_sample(inst.a, inst.b, n - 1), opts);
    out.loss_b_only = loss_eval(inst.loss, inst.b, out.h_b_only);
    out.loss_one_a = loss_eval(inst.loss, inst.b, out.h_one_a);
    out.loss_one_a_prev = loss_eval(inst.loss, inst.b, out.h_one_a_prev);
    out.margin = -out.loss_b_only + (n + 1) * out.loss_one_a - n * out.loss_one_a_prev;
    if (out.loss_one_a_prev != 0.0) {
        out.rate_ratio = (out.loss_one_a - out.loss_b_only / (n + 1)) / out.loss_one_a_prev;
    }
    out.rate_reference = static_cast<double>(n) / (n + 1);
    return out;
}

DiscreteDistribution two_point_distribution(const DataPoint& a, const DataPoint& b, double q) {
    if (!(q > 0.0 && q < 1.0)) throw ContractViolation("q must lie in (0, 1)");
    return DiscreteDistribution({a, b}, {q, 1.0 - q});
}

std::optional<Counterexample> find_counterexample_q(const LemmaInstance& inst, const CounterexampleSearch& search) {
    if (search.grid_depth < 1) throw ContractViolation("grid depth must be >= 1");
    auto delta_at_log2 = [&](double t) {
        const auto dist = two_point_distribution(inst.a, inst.b, std::exp2(t));
        return local_delta(inst.spec, dist, inst.loss, inst.n, search.engine);
    };

    std::vector<double> grid(static_cast<std::size_t>(search.grid_depth));
    EngineOptions sequential = search.engine;
    sequential.threads = 1;
    parallel_for(grid.size(), resolve_thread_count(search.engine.threads), [&](std::size_t i) {
        const auto dist = two_point_distribution(inst.a, inst.b, std::exp2(-static_cast<double>(i + 1)));
        grid[i] = local_delta(inst.spec, dist, inst.loss, inst.n, sequential);
    });

    std::size_t first = grid.size();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] > search.tolerance) {
            first = i;
            break;
        }
    }
    if (first == grid.size()) return std::nullopt;

    Counterexample out;
    out.grid_index = static_cast<int>(first + 1);
    out.grid_q = std::exp2(-static_cast<double>(out.grid_index));
    out.grid_delta = grid[first];
    out.q = out.grid_q;
    out.delta = out.grid_delta;

    // Golden-section search for the largest delta over log2 q in the two
    // neighbouring grid cells. Only the best evaluated point is kept, so a
    // non-unimodal delta can not make the result worse than the grid point.
    double lo = std::max(-static_cast<double>(search.grid_depth), -static_cast<double>(out.grid_index + 1));
    double hi = std::min(-1.0, -static_cast<double>(out.grid_index - 1));
    const double ratio = 1.0 / std::numbers::phi;
    double x1 = hi - ratio * (hi - lo);
    double x2 = lo + ratio * (hi - lo);
    double f1 = delta_at_log2(x1);
    double f2 = delta_at_log2(x2);
    auto consider = [&](double t, double f) {
        if (f > out.delta) {
            out.delta = f;
            out.q = std::exp2(t);
        }
    };
    consider(x1, f1);
    consider(x2, f2);
    for (int it = 0; it < search.refine_iterations && hi - lo > 1e-9; ++it) {
        if (f1 >= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = delta_at_log2(x1);
            consider(x1, f1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = delta_at_log2(x2);
            consider(x2, f2);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

double mahalanobis_spread(const DiscreteDistribution& dist, const SpdMatrix& sigma) {
    const auto d = static_cast<Eigen::Index>(sigma.dim());
    if (dist.dimension() != sigma.dim()) throw ContractViolation("covariance dimension does not match data");
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    const auto probs = dist.probs();
    std::vector<Eigen::VectorXd> pts;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        const auto z = unlabeled_coordinates(dist.points()[i]);
        pts.emplace_back(Eigen::Map<const Eigen::VectorXd>(z.data(), d));
        mean += probs[i] * pts.back();
    }
    CompensatedSum spread;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Eigen::VectorXd r = pts[i] - mean;
        spread.add(probs[i] * r.dot(sigma.inverse() * r));
    }
    return spread.value();
}

double gaussian_mean_closed_form(const DiscreteDistribution& dist, const SpdMatrix& sigma, int n) {
    if (n < 1) throw ContractViolation("training set size must be >= 1");
    const double d = static_cast<double>(sigma.dim());
    const double spread = mahalanobis_spread(dist, sigma);
    return 0.5 * d * std::log(2.0 * std::numbers::pi) + 0.5 * sigma.log_det() + 0.5 * (1.0 + 1.0 / n) * spread;
}

}  // namespace monotone_lab
