#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "monotone_lab/domain.h"
#include "monotone_lab/learners.h"

namespace monotone_lab {

/// Count vector over the support points of a distribution; entries sum to n.
using Composition = std::vector<int>;

/// Walks all compositions of n into k parts in lexicographically decreasing
/// order: (n,0,...,0), (n-1,1,0,...), ..., (0,...,0,n).
class CompositionCursor {
public:
    CompositionCursor(int n, int k);

    const Composition& counts() const { return counts_; }
    /// Advances to the next composition; false once the last one was visited.
    bool next();

private:
    Composition counts_;
};

/// C(n + k - 1, k - 1), saturating at UINT64_MAX.
std::uint64_t composition_count(int n, int k);

/// All compositions in cursor order. Throws CapacityError above max_count.
std::vector<Composition> compositions(int n, int k, std::uint64_t max_count = 10'000'000);

/// ln[ n! / prod c_i! * prod p_i^{c_i} ], via lgamma.
double log_multinomial_weight(std::span<const int> counts, std::span<const double> probs);

/// Training multiset for a composition: one item per nonzero count, weighted
/// by the count.
WeightedSample composition_sample(const DiscreteDistribution& dist, std::span<const int> counts);

struct EngineOptions {
    std::uint64_t max_compositions = 10'000'000;
    /// 0 selects the hardware concurrency (capped by MONOTONE_LAB_THREADS).
    unsigned threads = 0;
    SolverOptions solver;

    bool operator==(const EngineOptions& o) const {
        return max_compositions == o.max_compositions && threads == o.threads &&
               solver.pinv_rtol == o.solver.pinv_rtol;
    }
};

/// E_{S ~ D^n} R_D(A(S)), summed exactly over all compositions of n.
/// Throws CapacityError if the composition count exceeds the cap, and
/// FitError (naming n and the composition) if any training set has no ERM.
double expected_risk(const LearnerSpec& spec, const DiscreteDistribution& dist, const LossKind& loss, int n,
                     const EngineOptions& opts = {});

struct CurveEntry {
    int n = 0;
    double risk = 0.0;
};

struct LearningCurve {
    std::vector<CurveEntry> entries;
    std::string learner;
    std::string loss;
    std::string distribution_digest;
    std::string arithmetic = "float64, log-space weights, compensated summation";

    double risk_at(int n) const;
};

/// Expected risk for every n in [n_start, n_end]; values of n are evaluated
/// concurrently.
LearningCurve learning_curve(const LearnerSpec& spec, const DiscreteDistribution& dist, const LossKind& loss,
                             int n_start, int n_end, const EngineOptions& opts = {});

struct MonteCarloEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
    std::uint64_t replicates = 0;
};

/// Sampling estimate of expected_risk from `replicates` i.i.d. training sets.
/// Replicates are drawn in fixed-size chunks with per-chunk seeds, so the
/// result depends only on (inputs, seed), not on the thread count.
MonteCarloEstimate mc_expected_risk(const LearnerSpec& spec, const DiscreteDistribution& dist,
                                    const LossKind& loss, int n, std::uint64_t replicates, std::uint64_t seed,
                                    const EngineOptions& opts = {});

}  // namespace monotone_lab
