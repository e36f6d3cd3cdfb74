#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "monotone_lab/domain.h"

namespace monotone_lab {

struct WeightedItem {
    DataPoint point;
    double weight = 1.0;
};

/// Multiset of training points with positive multiplicities. Integer weights
/// are repeat counts; the weighted empirical risk is sum w_i l_i / sum w_i.
class WeightedSample {
public:
    explicit WeightedSample(std::vector<WeightedItem> items);

    const std::vector<WeightedItem>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }
    double total_weight() const { return total_weight_; }

private:
    std::vector<WeightedItem> items_;
    double total_weight_ = 0.0;
};

// ---------------------------------------------------------------------------

/// Least squares, optionally with an intercept and a ridge penalty that
/// decays as lambda0 / n.
struct LinearSquaredSpec {
    bool intercept = false;
    double ridge_lambda0 = 0.0;
    bool operator==(const LinearSquaredSpec&) const = default;
};
struct LinearAbsoluteSpec {
    bool operator==(const LinearAbsoluteSpec&) const = default;
};
struct LinearHingeSpec {
    bool operator==(const LinearHingeSpec&) const = default;
};
struct GaussianMeanMleSpec {
    SpdMatrix sigma = SpdMatrix::identity(1);
    bool operator==(const GaussianMeanMleSpec&) const = default;
};
struct GaussianVarianceMleSpec {
    bool operator==(const GaussianVarianceMleSpec&) const = default;
};
struct MemorizeSpec {
    int default_label = -1;
    bool operator==(const MemorizeSpec&) const = default;
};
struct HistogramSpec {
    std::vector<double> bin_edges;
    int default_label = -1;
    bool operator==(const HistogramSpec&) const = default;
};

using LearnerSpec = std::variant<LinearSquaredSpec, LinearAbsoluteSpec, LinearHingeSpec, GaussianMeanMleSpec,
                                 GaussianVarianceMleSpec, MemorizeSpec, HistogramSpec>;

std::string_view learner_name(const LearnerSpec& spec);

/// Throws ContractViolation for malformed specs (negative ridge, unsorted
/// bin edges, labels outside {-1,+1}).
void validate_spec(const LearnerSpec& spec);

// ---------------------------------------------------------------------------

struct SolverOptions {
    /// Singular values below pinv_rtol * sigma_max are treated as zero.
    double pinv_rtol = 1e-10;
};

/// Empirical risk minimizer for `spec`. The regularized least-squares learner
/// uses lambda = lambda0 / n with n the total sample weight.
Hypothesis fit(const LearnerSpec& spec, const WeightedSample& sample, const SolverOptions& opts = {});

/// Same as fit, with the effective sample size for the ridge decay given
/// explicitly.
Hypothesis fit(const LearnerSpec& spec, const WeightedSample& sample, double sample_size,
               const SolverOptions& opts);

/// Minimum-norm minimizer of sum w_i (x_i^T w + c - y_i)^2 / W +
/// lambda * ||(w, c)||^2. With lambda == 0 the weighted normal system is
/// solved through a truncated pseudo-inverse.
LinearHypothesis fit_linear_squared(const WeightedSample& sample, bool intercept, double lambda_effective,
                                    const SolverOptions& opts = {});

/// 1-D least absolute deviations through the origin: weighted median of the
/// ratios y_i / x_i with weights w_i |x_i|. Interval minimizers resolve to the
/// element of smallest magnitude.
LinearHypothesis fit_linear_absolute(const WeightedSample& sample);

struct AbsoluteFit {
    double h = 0.0;
    /// Set when the minimizer set is a nondegenerate interval [lo, hi].
    std::optional<std::pair<double, double>> tie_interval;

    /// True when the interval's lower end differs from the smallest-magnitude
    /// element, i.e. choosing min(lo, hi) would give another hypothesis.
    bool min_rule_disagrees() const { return tie_interval && tie_interval->first != h; }
};

AbsoluteFit solve_linear_absolute(const WeightedSample& sample);

/// 1-D hinge-loss ERM through the origin by breakpoint enumeration.
LinearHypothesis fit_linear_hinge(const WeightedSample& sample);

GaussianMeanHypothesis fit_gaussian_mean(const WeightedSample& sample);

/// Zero-mean variance MLE: sum w_i z_i^2 / W. Throws FitError if every z is 0.
GaussianVarianceHypothesis fit_gaussian_variance(const WeightedSample& sample);

/// Weight-majority label per distinct input; ties and unseen inputs give
/// default_label.
LookupHypothesis fit_memorize(const WeightedSample& sample, int default_label);

LookupHypothesis fit_histogram(const WeightedSample& sample, std::vector<double> bin_edges, int default_label);

/// Limit hypothesis for infinitely many samples: fit with weights equal to the
/// probabilities (ridge penalty vanishes).
Hypothesis population_erm(const LearnerSpec& spec, const DiscreteDistribution& dist,
                          const SolverOptions& opts = {});

/// Weighted empirical risk sum w_i l(z_i, h) / W.
double empirical_risk(const WeightedSample& sample, const Hypothesis& h, const LossKind& loss);

/// The loss each learner minimizes, when it is not ambiguous.
std::optional<LossKind> native_loss(const LearnerSpec& spec);

}  // namespace monotone_lab
