#include "monotone_lab/exact_curve.h"

#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "monotone_lab/numeric.h"
#include "monotone_lab/parallel.h"

namespace monotone_lab {

namespace {

constexpr std::uint64_t kChunkSize = 8192;

std::string composition_str(std::span<const int> counts) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < counts.size(); ++i) os << (i ? "," : "") << counts[i];
    os << ')';
    return os.str();
}

void check_arguments(int n, int k) {
    if (n < 1) throw ContractViolation("training set size must be >= 1");
    if (k < 1) throw ContractViolation("support size must be >= 1");
}

void check_capacity(int n, int k, std::uint64_t max_count) {
    const auto count = composition_count(n, k);
    if (count > max_count) {
        throw CapacityError("n=" + std::to_string(n) + ", k=" + std::to_string(k) + " needs " +
                            (count == std::numeric_limits<std::uint64_t>::max() ? std::string("more than 2^64")
                                                                                 : std::to_string(count)) +
                            " compositions, above the cap of " + std::to_string(max_count));
    }
}

struct Moments {
    std::uint64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++count;
        const double d = x - mean;
        mean += d / static_cast<double>(count);
        m2 += d * (x - mean);
    }

    void merge(const Moments& o) {
        if (o.count == 0) return;
        const double na = static_cast<double>(count);
        const double nb = static_cast<double>(o.count);
        const double d = o.mean - mean;
        const double n = na + nb;
        mean += d * nb / n;
        m2 += o.m2 + d * d * na * nb / n;
        count += o.count;
    }
};

}  // namespace

// ---------------------------------------------------------------------------

CompositionCursor::CompositionCursor(int n, int k) {
    check_arguments(n, k);
    counts_.assign(static_cast<std::size_t>(k), 0);
    counts_[0] = n;
}

bool CompositionCursor::next() {
    const auto k = counts_.size();
    if (k < 2) return false;
    // Rightmost position before the last one that can give a unit away.
    std::size_t i = k - 1;
    while (i-- > 0) {
        if (counts_[i] > 0) break;
    }
    if (i >= k - 1 || counts_[i] == 0) return false;
    int tail = 0;
    for (std::size_t j = i + 1; j < k; ++j) {
        tail += counts_[j];
        counts_[j] = 0;
    }
    --counts_[i];
    counts_[i + 1] = tail + 1;
    return true;
}

__extension__ typedef unsigned __int128 u128;

std::uint64_t composition_count(int n, int k) {
    check_arguments(n, k);
    // C(n + k - 1, r) with r = min(k - 1, n), built as a running product that
    // stays an exact integer at every step.
    const auto top = static_cast<u128>(n) + static_cast<unsigned>(k) - 1;
    const auto r = static_cast<u128>(std::min(k - 1, n));
    u128 c = 1;
    for (u128 i = 1; i <= r; ++i) {
        c = c * (top - r + i) / i;
        if (c > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
    }
    return static_cast<std::uint64_t>(c);
}

std::vector<Composition> compositions(int n, int k, std::uint64_t max_count) {
    check_capacity(n, k, max_count);
    std::vector<Composition> out;
    out.reserve(static_cast<std::size_t>(composition_count(n, k)));
    CompositionCursor cursor(n, k);
    do {
        out.push_back(cursor.counts());
    } while (cursor.next());
    return out;
}

double log_multinomial_weight(std::span<const int> counts, std::span<const double> probs) {
    if (counts.size() != probs.size()) throw ContractViolation("composition and probabilities differ in length");
    int n = 0;
    double log_w = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] < 0) throw ContractViolation("negative count in composition");
        n += counts[i];
        if (counts[i] > 0) log_w += counts[i] * std::log(probs[i]) - std::lgamma(counts[i] + 1.0);
    }
    return log_w + std::lgamma(n + 1.0);
}

WeightedSample composition_sample(const DiscreteDistribution& dist, std::span<const int> counts) {
    std::vector<WeightedItem> items;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] > 0) items.push_back({dist.points()[i], static_cast<double>(counts[i])});
    }
    return WeightedSample(std::move(items));
}

// ---------------------------------------------------------------------------

double expected_risk(const LearnerSpec& spec, const DiscreteDistribution& dist, const LossKind& loss, int n,
                     const EngineOptions& opts) {
    const int k = static_cast<int>(dist.size());
    check_arguments(n, k);
    check_capacity(n, k, opts.max_compositions);

    CompensatedSum total;
    CompositionCursor cursor(n, k);
    do {
        const auto& counts = cursor.counts();
        Hypothesis h;
        try {
            h = fit(spec, composition_sample(dist, counts), static_cast<double>(n), opts.solver);
        } catch (const FitError& e) {
            throw FitError("expectation undefined at n=" + std::to_string(n) + ": composition " +
                           composition_str(counts) + " has no ERM (" + e.what() + ")");
        }
        const double weight = std::exp(log_multinomial_weight(counts, dist.probs()));
        if (weight > 0.0) total.add(weight * population_risk(dist, h, loss));
    } while (cursor.next());
    return total.value();
}

double LearningCurve::risk_at(int n) const {
    for (const auto& e : entries) {
        if (e.n == n) return e.risk;
    }
    throw ContractViolation("curve has no entry for n=" + std::to_string(n));
}

LearningCurve learning_curve(const LearnerSpec& spec, const DiscreteDistribution& dist, const LossKind& loss,
                             int n_start, int n_end, const EngineOptions& opts) {
    if (n_start < 1 || n_end < n_start) throw ContractViolation("n range must satisfy 1 <= start <= end");
    LearningCurve curve;
    curve.learner = std::string(learner_name(spec));
    curve.loss = std::string(loss_name(loss));
    curve.distribution_digest = dist.digest();
    const auto count = static_cast<std::size_t>(n_end - n_start + 1);
    curve.entries.resize(count);
    parallel_for(count, resolve_thread_count(opts.threads), [&](std::size_t i) {
        const int n = n_start + static_cast<int>(i);
        curve.entries[i] = {n, expected_risk(spec, dist, loss, n, opts)};
    });
    return curve;
}

// ---------------------------------------------------------------------------

MonteCarloEstimate mc_expected_risk(const LearnerSpec& spec, const DiscreteDistribution& dist,
                                    const LossKind& loss, int n, std::uint64_t replicates, std::uint64_t seed,
                                    const EngineOptions& opts) {
    if (replicates < 1) throw ContractViolation("Monte Carlo needs at least one replicate");
    check_arguments(n, static_cast<int>(dist.size()));

    const auto probs = dist.probs();
    const std::size_t k = dist.size();
    const std::uint64_t chunks = (replicates + kChunkSize - 1) / kChunkSize;
    std::vector<Moments> partial(static_cast<std::size_t>(chunks));

    parallel_for(partial.size(), resolve_thread_count(opts.threads), [&](std::size_t c) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
        std::mt19937_64 rng(seq);
        const std::uint64_t begin = c * kChunkSize;
        const std::uint64_t end = std::min(replicates, begin + kChunkSize);
        // Risk depends on the sample only through its composition.
        std::map<Composition, double> risk_cache;
        Composition counts(k);
        Moments m;
        for (std::uint64_t r = begin; r < end; ++r) {
            int remaining = n;
            double mass = 1.0;
            for (std::size_t i = 0; i + 1 < k; ++i) {
                const double p = mass > 0.0 ? std::clamp(probs[i] / mass, 0.0, 1.0) : 0.0;
                counts[i] = remaining > 0 ? std::binomial_distribution<int>(remaining, p)(rng) : 0;
                remaining -= counts[i];
                mass -= probs[i];
            }
            counts[k - 1] = remaining;
            auto it = risk_cache.find(counts);
            if (it == risk_cache.end()) {
                const auto h = fit(spec, composition_sample(dist, counts), static_cast<double>(n), opts.solver);
                it = risk_cache.emplace(counts, population_risk(dist, h, loss)).first;
            }
            m.add(it->second);
        }
        partial[c] = m;
    });

    Moments all;
    for (const auto& m : partial) all.merge(m);
    MonteCarloEstimate out;
    out.mean = all.mean;
    out.replicates = all.count;
    out.standard_error = all.count > 1 ? std::sqrt(all.m2 / static_cast<double>(all.count - 1) /
                                            static_cast<double>(all.count))
                                : 0.0;
    return out;
}

}  // namespace monotone_lab
