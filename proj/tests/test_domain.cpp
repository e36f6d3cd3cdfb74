#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"

#include "monotone_lab/domain.h"
#include "monotone_lab/errors.h"

using namespace monotone_lab;

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

LinearHypothesis linear(std::vector<double> w, std::optional<double> c = std::nullopt) {
    return LinearHypothesis{std::move(w), c};
}

DiscreteDistribution fig1a() {
    return DiscreteDistribution({labeled_point({1.0}, 1.0), labeled_point({0.1}, 1.0)}, {1e-5, 0.99999});
}

}  // namespace

TEST_CASE("points validate their coordinates") {
    CHECK_THROWS_AS(scalar_point(std::nan("")), ContractViolation);
    CHECK_THROWS_AS(vector_point({}), ContractViolation);
    CHECK_THROWS_AS(labeled_point({1.0, INFINITY}, 1.0), ContractViolation);
    CHECK(point_dimension(labeled_point({1.0, 2.0}, 0.0)) == 2);
    CHECK(point_dimension(scalar_point(3.0)) == 1);
    CHECK(identical_points(labeled_point({0.1}, 1.0), labeled_point({0.1}, 1.0)));
    CHECK_FALSE(identical_points(labeled_point({0.1}, 1.0), labeled_point({0.1}, -1.0)));
    // Bitwise: 0.0 and -0.0 are different support points.
    CHECK_FALSE(identical_points(scalar_point(0.0), scalar_point(-0.0)));
}

TEST_CASE("distribution validation and renormalization") {
    const auto a = scalar_point(0.0);
    const auto b = scalar_point(1.0);
    CHECK_THROWS_AS(DiscreteDistribution({}, {}), ContractViolation);
    CHECK_THROWS_AS(DiscreteDistribution({a, b}, {0.5}), ContractViolation);
    CHECK_THROWS_AS(DiscreteDistribution({a, b}, {0.5, 0.6}), ContractViolation);
    CHECK_THROWS_AS(DiscreteDistribution({a, b}, {1.0, 0.0}), ContractViolation);
    CHECK_THROWS_AS(DiscreteDistribution({a, a}, {0.5, 0.5}), ContractViolation);
    CHECK_THROWS_AS(DiscreteDistribution({a, labeled_point({1.0}, 1.0)}, {0.5, 0.5}), ContractViolation);
    CHECK_THROWS_AS(DiscreteDistribution({vector_point({0, 0}), vector_point({1})}, {0.5, 0.5}), ContractViolation);

    // Within 1e-12 of one is accepted and renormalized.
    const DiscreteDistribution d({a, b}, {0.3, 0.7 + 5e-13});
    double total = 0.0;
    for (double p : d.probs()) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(d.digest() == DiscreteDistribution({a, b}, {0.3, 0.7 + 5e-13}).digest());
    CHECK(d.digest() != DiscreteDistribution({a, b}, {0.4, 0.6}).digest());
}

TEST_CASE("loss_eval examples") {
    CHECK(loss_eval(SquaredLoss{}, labeled_point({1.0}, 1.0), linear({0.0})) == 1.0);
    CHECK(loss_eval(HingeLoss{}, labeled_point({1.0}, 1.0), linear({1.0})) == 0.0);
    CHECK(loss_eval(NllGaussianVarianceLoss{}, scalar_point(1.0), GaussianVarianceHypothesis{1.0}) ==
          doctest::Approx(1.4189385332046727).epsilon(1e-14));

    LookupHypothesis memo;
    memo.by_input[{1.0}] = 1;
    CHECK(loss_eval(ZeroOneLoss{}, labeled_point({1.0}, 1.0), memo) == 0.0);
    CHECK(loss_eval(ZeroOneLoss{}, labeled_point({2.0}, 1.0), memo) == 1.0);  // unseen -> default -1

    CHECK(loss_eval(AbsoluteLoss{}, labeled_point({2.0}, 1.0), linear({1.0}, 0.5)) == 1.5);
}

TEST_CASE("zero-one on a linear hypothesis breaks sign(0) towards +1") {
    CHECK(loss_eval(ZeroOneLoss{}, labeled_point({0.0}, 1.0), linear({3.0})) == 0.0);
    CHECK(loss_eval(ZeroOneLoss{}, labeled_point({0.0}, -1.0), linear({3.0})) == 1.0);
    CHECK(loss_eval(ZeroOneLoss{}, labeled_point({1.0}, -1.0), linear({1.0}, -1.0)) == 1.0);
}

TEST_CASE("loss_eval contract violations") {
    CHECK_THROWS_AS(loss_eval(SquaredLoss{}, scalar_point(1.0), linear({1.0})), ContractViolation);
    CHECK_THROWS_AS(loss_eval(SquaredLoss{}, labeled_point({1.0, 2.0}, 1.0), linear({1.0})), ContractViolation);
    CHECK_THROWS_AS(loss_eval(HingeLoss{}, labeled_point({1.0}, 0.5), linear({1.0})), ContractViolation);
    CHECK_THROWS_AS(loss_eval(NllGaussianVarianceLoss{}, scalar_point(1.0), GaussianVarianceHypothesis{0.0}),
                    ContractViolation);
    CHECK_THROWS_AS(loss_eval(NllGaussianVarianceLoss{}, scalar_point(1.0), GaussianVarianceHypothesis{-1.0}),
                    ContractViolation);
    CHECK_THROWS_AS(loss_eval(NllGaussianVarianceLoss{}, scalar_point(1.0), GaussianMeanHypothesis{{1.0}}),
                    ContractViolation);
}

TEST_CASE("Gaussian-mean NLL and Mahalanobis loss") {
    Eigen::MatrixXd s(2, 2);
    s << 2.0, 0.5, 0.5, 1.0;
    const SpdMatrix sigma(s);
    const auto z = vector_point({1.0, -1.0});
    const GaussianMeanHypothesis mu{{0.5, 0.5}};
    Eigen::Vector2d r(0.5, -1.5);
    const double expected = 2.0 * kHalfLog2Pi + 0.5 * std::log(s.determinant()) + 0.5 * r.dot(s.inverse() * r);
    CHECK(loss_eval(NllGaussianMeanLoss{sigma}, z, mu) == doctest::Approx(expected).epsilon(1e-13));
    CHECK(loss_eval(MahalanobisLoss{PsdMatrix(s)}, z, mu) == doctest::Approx(r.dot(s * r)).epsilon(1e-13));

    CHECK_THROWS_AS(SpdMatrix(Eigen::MatrixXd::Zero(2, 2)), ContractViolation);
    Eigen::MatrixXd asym(2, 2);
    asym << 1.0, 0.3, 0.0, 1.0;
    CHECK_THROWS_AS(SpdMatrix{asym}, ContractViolation);
    CHECK_NOTHROW(PsdMatrix(Eigen::MatrixXd::Zero(2, 2)));
    CHECK_THROWS_AS(PsdMatrix(-Eigen::MatrixXd::Identity(2, 2)), ContractViolation);
}

TEST_CASE("population_risk examples") {
    const auto z = labeled_point({1.0}, 1.0);
    CHECK(population_risk(DiscreteDistribution::point_mass(z), linear({1.0}), SquaredLoss{}) == 0.0);

    // Losses 1 and 3 under h = 0.
    const DiscreteDistribution two({labeled_point({1.0}, 1.0), labeled_point({1.0}, 3.0)}, {0.5, 0.5});
    CHECK(population_risk(two, linear({0.0}), AbsoluteLoss{}) == doctest::Approx(2.0).epsilon(1e-15));

    CHECK(population_risk(fig1a(), linear({10.0}), SquaredLoss{}) == doctest::Approx(8.1e-4).epsilon(1e-12));
}

TEST_CASE("population_risk is linear in the probability vector") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_real_distribution<double> pu(0.05, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        auto make = [&](int k) {
            std::vector<DataPoint> pts;
            std::vector<double> probs;
            double total = 0.0;
            for (int i = 0; i < k; ++i) {
                pts.push_back(labeled_point({u(rng)}, u(rng)));
                probs.push_back(pu(rng));
                total += probs.back();
            }
            for (auto& p : probs) p /= total;
            return DiscreteDistribution(std::move(pts), std::move(probs));
        };
        const auto d1 = make(3);
        const auto d2 = make(2);
        const LinearHypothesis h = linear({u(rng)}, u(rng));
        for (double alpha : {0.0, 0.25, 1.0}) {
            const auto mix = DiscreteDistribution::mixture(alpha, d1, d2);
            for (const LossKind& loss : std::vector<LossKind>{SquaredLoss{}, AbsoluteLoss{}}) {
                const double lhs = population_risk(mix, h, loss);
                const double rhs = alpha * population_risk(d1, h, loss) + (1.0 - alpha) * population_risk(d2, h, loss);
                CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
            }
        }
    }
}

TEST_CASE("loss ranges on random inputs") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < 1000; ++i) {
        const double y = coin(rng) ? 1.0 : -1.0;
        const auto z = labeled_point({u(rng), u(rng)}, y);
        const auto h = linear({u(rng), u(rng)}, coin(rng) ? std::optional<double>(u(rng)) : std::nullopt);
        const double zo = loss_eval(ZeroOneLoss{}, z, h);
        CHECK((zo == 0.0 || zo == 1.0));
        CHECK(loss_eval(HingeLoss{}, z, h) >= 0.0);
        CHECK(loss_eval(SquaredLoss{}, z, h) >= 0.0);
        CHECK(loss_eval(AbsoluteLoss{}, z, h) >= 0.0);

        const double zs = u(rng);
        const double mu = u(rng);
        const double nll = loss_eval(NllGaussianMeanLoss{SpdMatrix::identity(1)}, scalar_point(zs),
                                     GaussianMeanHypothesis{{mu}});
        CHECK(std::abs(nll - (kHalfLog2Pi + 0.5 * (zs - mu) * (zs - mu))) <= 1e-12);
    }
}

TEST_CASE("histogram bins are half-open on the left edge") {
    const std::vector<double> edges{0.0, 1.0};
    CHECK(bin_index(edges, -0.5) == 0);
    CHECK(bin_index(edges, 0.0) == 1);
    CHECK(bin_index(edges, 0.5) == 1);
    CHECK(bin_index(edges, 1.0) == 2);
}
