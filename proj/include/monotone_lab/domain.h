#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "monotone_lab/errors.h"

namespace monotone_lab {

// ---------------------------------------------------------------------------
// Data points
// ---------------------------------------------------------------------------

struct ScalarPoint {
    double z = 0.0;
};

/// Unlabeled point in R^d, used by the density-estimation learners for d > 1.
struct VectorPoint {
    std::vector<double> z;
};

struct LabeledPoint {
    std::vector<double> x;
    double y = 0.0;
};

using DataPoint = std::variant<ScalarPoint, VectorPoint, LabeledPoint>;

DataPoint scalar_point(double z);
DataPoint vector_point(std::vector<double> z);
DataPoint labeled_point(std::vector<double> x, double y);

/// Throws ContractViolation on non-finite coordinates or an empty vector.
void validate_point(const DataPoint& p);

/// Dimension of the input part: 1 for scalars, |z| or |x| otherwise.
std::size_t point_dimension(const DataPoint& p);

/// Coordinates of an unlabeled point (scalar promoted to a 1-vector).
std::vector<double> unlabeled_coordinates(const DataPoint& p);

/// Exact bitwise equality of every coordinate, including the variant tag.
bool identical_points(const DataPoint& a, const DataPoint& b);

std::string describe(const DataPoint& p);

// ---------------------------------------------------------------------------
// Distributions
// ---------------------------------------------------------------------------

/// Finite-support distribution. Probabilities must be positive and sum to one
/// within 1e-12; they are renormalized on construction.
class DiscreteDistribution {
public:
    DiscreteDistribution(std::vector<DataPoint> points, std::vector<double> probs);

    static DiscreteDistribution point_mass(DataPoint p);

    const std::vector<DataPoint>& points() const { return points_; }
    std::span<const double> probs() const { return probs_; }
    std::size_t size() const { return points_.size(); }
    std::size_t dimension() const { return point_dimension(points_.front()); }

    /// Stable 64-bit FNV-1a digest over the bit patterns of points and probs.
    std::string digest() const;

    /// Convex combination alpha * first + (1 - alpha) * second over the union
    /// of supports. Zero-weight points are dropped.
    static DiscreteDistribution mixture(double alpha, const DiscreteDistribution& first,
                                        const DiscreteDistribution& second);

    bool operator==(const DiscreteDistribution& other) const;

private:
    std::vector<DataPoint> points_;
    std::vector<double> probs_;
};

// ---------------------------------------------------------------------------
// Matrices carried by losses and learners
// ---------------------------------------------------------------------------

/// Symmetric positive definite matrix with its inverse and log-determinant.
class SpdMatrix {
public:
    explicit SpdMatrix(Eigen::MatrixXd m);
    static SpdMatrix identity(std::size_t d) { return SpdMatrix(Eigen::MatrixXd::Identity(d, d)); }

    const Eigen::MatrixXd& matrix() const { return m_; }
    const Eigen::MatrixXd& inverse() const { return inv_; }
    double log_det() const { return log_det_; }
    std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }

    bool operator==(const SpdMatrix& o) const { return m_ == o.m_; }

private:
    Eigen::MatrixXd m_;
    Eigen::MatrixXd inv_;
    double log_det_ = 0.0;
};

/// Symmetric positive semi-definite matrix.
class PsdMatrix {
public:
    explicit PsdMatrix(Eigen::MatrixXd m);

    const Eigen::MatrixXd& matrix() const { return m_; }
    std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }

    bool operator==(const PsdMatrix& o) const { return m_ == o.m_; }

private:
    Eigen::MatrixXd m_;
};

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

struct SquaredLoss {
    bool operator==(const SquaredLoss&) const = default;
};
struct AbsoluteLoss {
    bool operator==(const AbsoluteLoss&) const = default;
};
struct HingeLoss {
    bool operator==(const HingeLoss&) const = default;
};
struct ZeroOneLoss {
    bool operator==(const ZeroOneLoss&) const = default;
};
/// Negative log-likelihood of N(mu, sigma) with sigma fixed.
struct NllGaussianMeanLoss {
    SpdMatrix sigma;
    bool operator==(const NllGaussianMeanLoss&) const = default;
};
/// Negative log-likelihood of N(0, sigma2) in one dimension.
struct NllGaussianVarianceLoss {
    bool operator==(const NllGaussianVarianceLoss&) const = default;
};
/// (z - h)^T sigma (z - h).
struct MahalanobisLoss {
    PsdMatrix sigma;
    bool operator==(const MahalanobisLoss&) const = default;
};

using LossKind = std::variant<SquaredLoss, AbsoluteLoss, HingeLoss, ZeroOneLoss,
                              NllGaussianMeanLoss, NllGaussianVarianceLoss, MahalanobisLoss>;

std::string_view loss_name(const LossKind& loss);

// ---------------------------------------------------------------------------
// Hypotheses
// ---------------------------------------------------------------------------

struct LinearHypothesis {
    std::vector<double> w;
    std::optional<double> intercept;

    double predict(std::span<const double> x) const;
    bool operator==(const LinearHypothesis&) const = default;
};

struct GaussianMeanHypothesis {
    std::vector<double> mu;
    bool operator==(const GaussianMeanHypothesis&) const = default;
};

struct GaussianVarianceHypothesis {
    double sigma2 = 1.0;
    bool operator==(const GaussianVarianceHypothesis&) const = default;
};

/// Classifier backed by a table. Unbinned tables are keyed by exact input
/// vectors (memorize); binned ones map 1-D inputs to a bin index first
/// (histogram rule).
struct LookupHypothesis {
    bool binned = false;
    std::map<std::vector<double>, int> by_input;
    std::vector<double> bin_edges;
    std::map<std::size_t, int> by_bin;
    int default_label = -1;

    int classify(std::span<const double> x) const;
    bool operator==(const LookupHypothesis&) const = default;
};

/// Bin index of x for sorted edges e_0 < ... < e_m: 0 for x < e_0, i for
/// e_{i-1} <= x < e_i, m + 1 for x >= e_m.
std::size_t bin_index(std::span<const double> edges, double x);

using Hypothesis = std::variant<LinearHypothesis, GaussianMeanHypothesis,
                                GaussianVarianceHypothesis, LookupHypothesis>;

std::string describe(const Hypothesis& h);

// ---------------------------------------------------------------------------
// Risk
// ---------------------------------------------------------------------------

double loss_eval(const LossKind& loss, const DataPoint& z, const Hypothesis& h);

/// sum_i p_i * loss(z_i, h), accumulated with compensated summation.
double population_risk(const DiscreteDistribution& dist, const Hypothesis& h, const LossKind& loss);

}  // namespace monotone_lab
