#include "monotone_lab/learners.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "monotone_lab/numeric.h"

namespace monotone_lab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

// Relative tolerance for deciding exact ties between accumulated weights or
// objective values.
constexpr double kTieTolerance = 1e-12;

const LabeledPoint& labeled(const WeightedItem& item, std::string_view learner) {
    if (const auto* p = std::get_if<LabeledPoint>(&item.point)) return *p;
    throw ContractViolation(std::string(learner) + " requires labeled points");
}

std::size_t common_dimension(const WeightedSample& sample) {
    const auto d = point_dimension(sample.items().front().point);
    const auto tag = sample.items().front().point.index();
    for (const auto& it : sample.items()) {
        if (it.point.index() != tag || point_dimension(it.point) != d) {
            throw ContractViolation("sample points must share variant and dimension");
        }
    }
    return d;
}

int binary_label(double y, std::string_view learner) {
    if (y == 1.0) return +1;
    if (y == -1.0) return -1;
    throw ContractViolation(std::string(learner) + " requires labels in {-1,+1}");
}

int majority(double signed_weight, double total, int default_label) {
    if (std::abs(signed_weight) <= kTieTolerance * total) return default_label;
    return signed_weight > 0.0 ? +1 : -1;
}

double smallest_magnitude_in(double lo, double hi) {
    if (lo <= 0.0 && 0.0 <= hi) return 0.0;
    return std::abs(lo) <= std::abs(hi) ? lo : hi;
}

struct Ratio {
    double value;
    double weight;
};

/// Ratios y/x with weights w|x| for the 1-D through-origin solvers.
std::vector<Ratio> one_dimensional_ratios(const WeightedSample& sample, std::string_view learner) {
    std::vector<Ratio> out;
    out.reserve(sample.size());
    for (const auto& it : sample.items()) {
        const auto& p = labeled(it, learner);
        if (p.x.size() != 1) throw ContractViolation(std::string(learner) + " is implemented for d = 1 only");
        if (p.x[0] == 0.0) throw FitError(std::string(learner) + ": input x = 0 gives an undefined ratio");
        out.push_back({p.y / p.x[0], it.weight * std::abs(p.x[0])});
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

WeightedSample::WeightedSample(std::vector<WeightedItem> items) : items_(std::move(items)) {
    if (items_.empty()) throw ContractViolation("a sample needs at least one item");
    CompensatedSum total;
    for (const auto& it : items_) {
        validate_point(it.point);
        if (!(it.weight > 0.0) || !std::isfinite(it.weight)) {
            throw ContractViolation("sample weights must be positive and finite");
        }
        total.add(it.weight);
    }
    total_weight_ = total.value();
}

std::string_view learner_name(const LearnerSpec& spec) {
    return std::visit(overloaded{
                          [](const LinearSquaredSpec&) { return std::string_view("linear_squared"); },
                          [](const LinearAbsoluteSpec&) { return std::string_view("linear_absolute"); },
                          [](const LinearHingeSpec&) { return std::string_view("linear_hinge"); },
                          [](const GaussianMeanMleSpec&) { return std::string_view("gaussian_mean_mle"); },
                          [](const GaussianVarianceMleSpec&) { return std::string_view("gaussian_variance_mle"); },
                          [](const MemorizeSpec&) { return std::string_view("memorize"); },
                          [](const HistogramSpec&) { return std::string_view("histogram"); },
                      },
                      spec);
}

void validate_spec(const LearnerSpec& spec) {
    auto check_label = [](int label) {
        if (label != 1 && label != -1) throw ContractViolation("default label must be -1 or +1");
    };
    std::visit(overloaded{
                   [](const LinearSquaredSpec& s) {
                       if (!(s.ridge_lambda0 >= 0.0) || !std::isfinite(s.ridge_lambda0)) {
                           throw ContractViolation("ridge_lambda0 must be finite and >= 0");
                       }
                   },
                   [&](const MemorizeSpec& s) { check_label(s.default_label); },
                   [&](const HistogramSpec& s) {
                       check_label(s.default_label);
                       for (std::size_t i = 0; i < s.bin_edges.size(); ++i) {
                           if (!std::isfinite(s.bin_edges[i])) throw ContractViolation("bin edges must be finite");
                           if (i > 0 && !(s.bin_edges[i - 1] < s.bin_edges[i])) {
                               throw ContractViolation("bin edges must be strictly increasing");
                           }
                       }
                   },
                   [](const auto&) {},
               },
               spec);
}

// ---------------------------------------------------------------------------

LinearHypothesis fit_linear_squared(const WeightedSample& sample, bool intercept, double lambda_effective,
                                    const SolverOptions& opts) {
    if (!(lambda_effective >= 0.0) || !std::isfinite(lambda_effective)) {
        throw ContractViolation("ridge penalty must be finite and >= 0");
    }
    const auto d = common_dimension(sample);
    const auto p = static_cast<Eigen::Index>(d + (intercept ? 1 : 0));

    // Work with the weighted design matrix A (rows sqrt(w_i / W) x_i) rather
    // than its normal matrix A^T A: same minimizers, without squaring the
    // condition number. The rank rule is the one for A^T A, i.e. keep
    // sigma_i^2 > pinv_rtol * sigma_max^2.
    const auto m = static_cast<Eigen::Index>(sample.size());
    Eigen::MatrixXd design(m, p);
    Eigen::VectorXd target(m);
    const double total = sample.total_weight();
    Eigen::Index r = 0;
    for (const auto& it : sample.items()) {
        const auto& pt = labeled(it, "least squares");
        const double s = std::sqrt(it.weight / total);
        for (std::size_t j = 0; j < d; ++j) design(r, static_cast<Eigen::Index>(j)) = s * pt.x[j];
        if (intercept) design(r, p - 1) = s;
        target(r) = s * pt.y;
        ++r;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
    const double cutoff = sv.size() > 0 ? opts.pinv_rtol * sv(0) * sv(0) : 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        const double s2 = sv(i) * sv(i);
        double gain = 0.0;
        if (lambda_effective > 0.0) {
            gain = sv(i) / (s2 + lambda_effective);
        } else if (s2 > cutoff && sv(i) > 0.0) {
            gain = 1.0 / sv(i);
        }
        if (gain != 0.0) theta += svd.matrixV().col(i) * (gain * svd.matrixU().col(i).dot(target));
    }

    LinearHypothesis h;
    h.w.assign(theta.data(), theta.data() + d);
    if (intercept) h.intercept = theta(p - 1);
    return h;
}

AbsoluteFit solve_linear_absolute(const WeightedSample& sample) {
    auto ratios = one_dimensional_ratios(sample, "absolute-loss ERM");
    std::sort(ratios.begin(), ratios.end(), [](const Ratio& a, const Ratio& b) { return a.value < b.value; });

    // Merge equal ratios so the cumulative scan sees each breakpoint once.
    std::vector<Ratio> merged;
    for (const auto& r : ratios) {
        if (!merged.empty() && merged.back().value == r.value) {
            merged.back().weight += r.weight;
        } else {
            merged.push_back(r);
        }
    }
    CompensatedSum total_sum;
    for (const auto& r : merged) total_sum.add(r.weight);
    const double half = 0.5 * total_sum.value();

    AbsoluteFit out{merged.back().value, std::nullopt};
    CompensatedSum cum;
    for (std::size_t j = 0; j < merged.size(); ++j) {
        cum.add(merged[j].weight);
        const double c = cum.value();
        if (j + 1 < merged.size() && std::abs(c - half) <= kTieTolerance * total_sum.value()) {
            // Every point of [r_j, r_{j+1}] attains the minimum.
            out.tie_interval = std::make_pair(merged[j].value, merged[j + 1].value);
            out.h = smallest_magnitude_in(merged[j].value, merged[j + 1].value);
            break;
        }
        if (c > half) {
            out.h = merged[j].value;
            break;
        }
    }
    return out;
}

LinearHypothesis fit_linear_absolute(const WeightedSample& sample) {
    return LinearHypothesis{{solve_linear_absolute(sample).h}, std::nullopt};
}

LinearHypothesis fit_linear_hinge(const WeightedSample& sample) {
    struct Term {
        double margin_slope;  // y * x
        double weight;
    };
    std::vector<Term> terms;
    std::vector<double> candidates{0.0};
    for (const auto& it : sample.items()) {
        const auto& p = labeled(it, "hinge-loss ERM");
        if (p.x.size() != 1) throw ContractViolation("hinge-loss ERM is implemented for d = 1 only");
        if (p.x[0] == 0.0) throw FitError("hinge-loss ERM: input x = 0 gives an undefined breakpoint");
        const double s = binary_label(p.y, "hinge-loss ERM") * p.x[0];
        terms.push_back({s, it.weight});
        candidates.push_back(1.0 / s);
    }
    const double total = sample.total_weight();
    auto objective = [&](double h) {
        CompensatedSum sum;
        for (const auto& t : terms) sum.add(t.weight * std::max(0.0, 1.0 - t.margin_slope * h));
        return sum.value() / total;
    };

    std::vector<double> values;
    values.reserve(candidates.size());
    for (double c : candidates) values.push_back(objective(c));
    const double best = *std::min_element(values.begin(), values.end());
    const double slack = kTieTolerance * std::max(1.0, std::abs(best));

    // The minimizer set is an interval whose finite endpoints are candidates,
    // and 0 is a candidate, so the smallest-magnitude minimizing candidate is
    // the smallest-magnitude minimizer overall.
    double h = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (values[i] <= best + slack && std::abs(candidates[i]) < std::abs(h)) h = candidates[i];
    }
    return LinearHypothesis{{h}, std::nullopt};
}

GaussianMeanHypothesis fit_gaussian_mean(const WeightedSample& sample) {
    const auto d = common_dimension(sample);
    std::vector<CompensatedSum> sums(d);
    for (const auto& it : sample.items()) {
        const auto z = unlabeled_coordinates(it.point);
        for (std::size_t j = 0; j < d; ++j) sums[j].add(it.weight * z[j]);
    }
    GaussianMeanHypothesis h;
    h.mu.resize(d);
    for (std::size_t j = 0; j < d; ++j) h.mu[j] = sums[j].value() / sample.total_weight();
    return h;
}

GaussianVarianceHypothesis fit_gaussian_variance(const WeightedSample& sample) {
    CompensatedSum sum;
    for (const auto& it : sample.items()) {
        const auto* s = std::get_if<ScalarPoint>(&it.point);
        if (s == nullptr) throw ContractViolation("variance MLE requires scalar points");
        sum.add(it.weight * s->z * s->z);
    }
    const double sigma2 = sum.value() / sample.total_weight();
    if (!(sigma2 > 0.0)) throw FitError("variance MLE: all points are 0, no positive variance minimizes the NLL");
    return GaussianVarianceHypothesis{sigma2};
}

LookupHypothesis fit_memorize(const WeightedSample& sample, int default_label) {
    struct Tally {
        double signed_weight = 0.0;
        double total = 0.0;
    };
    std::map<std::vector<double>, Tally> tallies;
    for (const auto& it : sample.items()) {
        const auto& p = labeled(it, "memorize");
        auto& t = tallies[p.x];
        t.signed_weight += binary_label(p.y, "memorize") * it.weight;
        t.total += it.weight;
    }
    LookupHypothesis h;
    h.default_label = default_label;
    for (const auto& [x, t] : tallies) h.by_input.emplace(x, majority(t.signed_weight, t.total, default_label));
    return h;
}

LookupHypothesis fit_histogram(const WeightedSample& sample, std::vector<double> bin_edges, int default_label) {
    validate_spec(HistogramSpec{bin_edges, default_label});
    struct Tally {
        double signed_weight = 0.0;
        double total = 0.0;
    };
    std::map<std::size_t, Tally> tallies;
    for (const auto& it : sample.items()) {
        const auto& p = labeled(it, "histogram");
        if (p.x.size() != 1) throw ContractViolation("histogram rule requires 1-D inputs");
        auto& t = tallies[bin_index(bin_edges, p.x[0])];
        t.signed_weight += binary_label(p.y, "histogram") * it.weight;
        t.total += it.weight;
    }
    LookupHypothesis h;
    h.default_label = default_label;
    h.binned = true;
    h.bin_edges = std::move(bin_edges);
    for (const auto& [bin, t] : tallies) h.by_bin.emplace(bin, majority(t.signed_weight, t.total, default_label));
    return h;
}

// ---------------------------------------------------------------------------

Hypothesis fit(const LearnerSpec& spec, const WeightedSample& sample, double sample_size,
               const SolverOptions& opts) {
    validate_spec(spec);
    return std::visit(
        overloaded{
            [&](const LinearSquaredSpec& s) -> Hypothesis {
                const double lambda = s.ridge_lambda0 > 0.0 ? s.ridge_lambda0 / sample_size : 0.0;
                return fit_linear_squared(sample, s.intercept, lambda, opts);
            },
            [&](const LinearAbsoluteSpec&) -> Hypothesis { return fit_linear_absolute(sample); },
            [&](const LinearHingeSpec&) -> Hypothesis { return fit_linear_hinge(sample); },
            [&](const GaussianMeanMleSpec& s) -> Hypothesis {
                auto h = fit_gaussian_mean(sample);
                if (h.mu.size() != s.sigma.dim()) throw ContractViolation("covariance dimension does not match data");
                return h;
            },
            [&](const GaussianVarianceMleSpec&) -> Hypothesis { return fit_gaussian_variance(sample); },
            [&](const MemorizeSpec& s) -> Hypothesis { return fit_memorize(sample, s.default_label); },
            [&](const HistogramSpec& s) -> Hypothesis {
                return fit_histogram(sample, s.bin_edges, s.default_label);
            },
        },
        spec);
}

Hypothesis fit(const LearnerSpec& spec, const WeightedSample& sample, const SolverOptions& opts) {
    return fit(spec, sample, sample.total_weight(), opts);
}

Hypothesis population_erm(const LearnerSpec& spec, const DiscreteDistribution& dist, const SolverOptions& opts) {
    std::vector<WeightedItem> items;
    items.reserve(dist.size());
    for (std::size_t i = 0; i < dist.size(); ++i) items.push_back({dist.points()[i], dist.probs()[i]});
    WeightedSample sample(std::move(items));
    if (const auto* sq = std::get_if<LinearSquaredSpec>(&spec)) {
        return fit_linear_squared(sample, sq->intercept, 0.0, opts);
    }
    return fit(spec, sample, opts);
}

double empirical_risk(const WeightedSample& sample, const Hypothesis& h, const LossKind& loss) {
    CompensatedSum sum;
    for (const auto& it : sample.items()) sum.add(it.weight * loss_eval(loss, it.point, h));
    return sum.value() / sample.total_weight();
}

std::optional<LossKind> native_loss(const LearnerSpec& spec) {
    return std::visit(overloaded{
                          [](const LinearSquaredSpec&) -> std::optional<LossKind> { return SquaredLoss{}; },
                          [](const LinearAbsoluteSpec&) -> std::optional<LossKind> { return AbsoluteLoss{}; },
                          [](const LinearHingeSpec&) -> std::optional<LossKind> { return HingeLoss{}; },
                          [](const GaussianMeanMleSpec& s) -> std::optional<LossKind> {
                              return NllGaussianMeanLoss{s.sigma};
                          },
                          [](const GaussianVarianceMleSpec&) -> std::optional<LossKind> {
                              return NllGaussianVarianceLoss{};
                          },
                          [](const MemorizeSpec&) -> std::optional<LossKind> { return ZeroOneLoss{}; },
                          [](const HistogramSpec&) -> std::optional<LossKind> { return ZeroOneLoss{}; },
                      },
                      spec);
}

}  // namespace monotone_lab
