#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "monotone_lab/domain.h"
#include "monotone_lab/exact_curve.h"
#include "monotone_lab/learners.h"

namespace monotone_lab {

/// Default threshold on E R(n+1) - E R(n) above which a step counts as a
/// violation. The exact engine only carries rounding noise, far below this.
inline constexpr double kDefaultViolationTolerance = 1e-12;

struct DeltaEntry {
    int n = 0;
    double delta = 0.0;
};

enum class Verdict { MonotoneOnRange, ViolationsFound };

std::string_view verdict_code(Verdict v);
/// Human-readable verdict. Never claims more than the scanned range shows.
std::string_view verdict_text(Verdict v);

struct MonotonicityReport {
    int n_start = 1;
    int n_end = 1;
    double tolerance = kDefaultViolationTolerance;
    std::vector<DeltaEntry> deltas;
    std::vector<DeltaEntry> violations;
    Verdict verdict = Verdict::MonotoneOnRange;
    /// Expected risk for n in [n_start, n_end + 1].
    LearningCurve curve;
};

/// E R(n+1) - E R(n) under `dist`.
double local_delta(const LearnerSpec& spec, const DiscreteDistribution& dist, const LossKind& loss, int n,
                   const EngineOptions& opts = {});

/// Local monotonicity at every n in [n_start, n_end].
MonotonicityReport scan(const LearnerSpec& spec, const DiscreteDistribution& dist, const LossKind& loss,
                        int n_start, int n_end, double tolerance = kDefaultViolationTolerance,
                        const EngineOptions& opts = {});

// ---------------------------------------------------------------------------
// Two-point construction
// ---------------------------------------------------------------------------

/// Domain {a, b}; the probability of `a` is the free parameter q.
struct LemmaInstance {
    DataPoint a;
    DataPoint b;
    int n = 1;
    LearnerSpec spec;
    LossKind loss;
};

struct LemmaMargin {
    double margin = 0.0;
    /// Fitted on n+1 copies of b.
    Hypothesis h_b_only;
    /// Fitted on one a and n copies of b.
    Hypothesis h_one_a;
    /// Fitted on one a and n-1 copies of b.
    Hypothesis h_one_a_prev;
    double loss_b_only = 0.0;
    double loss_one_a = 0.0;
    double loss_one_a_prev = 0.0;
    /// (l(b, h_one_a) - l(b, h_b_only) / (n+1)) / l(b, h_one_a_prev); unset
    /// when the denominator is zero. Reported without a verdict.
    std::optional<double> rate_ratio;
    double rate_reference = 0.0;  // n / (n + 1)
};

/// -l(b, h_b_only) + (n+1) l(b, h_one_a) - n l(b, h_one_a_prev). This is the
/// derivative of E R(n+1) - E R(n) at q = 0 whenever l(., h) on pure-b samples
/// does not depend on their size; positive values imply a q > 0 with a
/// violation at n.
LemmaMargin lemma_margin(const LemmaInstance& inst, const SolverOptions& opts = {});

/// Two-point distribution {a w.p. q, b w.p. 1 - q}.
DiscreteDistribution two_point_distribution(const DataPoint& a, const DataPoint& b, double q);

struct CounterexampleSearch {
    int grid_depth = 40;
    /// A q qualifies when its exact delta exceeds this.
    double tolerance = kDefaultViolationTolerance;
    int refine_iterations = 40;
    EngineOptions engine;
};

struct Counterexample {
    double q = 0.0;
    double delta = 0.0;
    /// First grid point 2^-grid_index that produced a violation.
    int grid_index = 0;
    double grid_q = 0.0;
    double grid_delta = 0.0;
};

/// Scans q = 2^-1, ..., 2^-grid_depth and takes the first (largest) q with a
/// violation at n, then refines within the neighbouring grid cells to the q
/// with the largest delta. Empty when no grid point qualifies.
std::optional<Counterexample> find_counterexample_q(const LemmaInstance& inst,
                                                    const CounterexampleSearch& search = {});

/// Expected Gaussian-mean NLL after n samples:
/// d/2 ln 2pi + 1/2 ln|S| + 1/2 (1 + 1/n) E[(z - mu)^T S^-1 (z - mu)].
double gaussian_mean_closed_form(const DiscreteDistribution& dist, const SpdMatrix& sigma, int n);

/// E_D[(z - mu_D)^T S^-1 (z - mu_D)].
double mahalanobis_spread(const DiscreteDistribution& dist, const SpdMatrix& sigma);

}  // namespace monotone_lab
