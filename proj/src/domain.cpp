#include "monotone_lab/domain.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

#include "monotone_lab/numeric.h"

namespace monotone_lab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

constexpr double kProbSumTolerance = 1e-12;
const double kHalfLogTwoPi = 0.5 * std::log(2.0 * std::numbers::pi);

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double c) { return std::isfinite(c); });
}

bool bitwise_equal(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
    }
    return true;
}

std::string vec_str(std::span<const double> v) {
    std::ostringstream os;
    os.precision(17);
    os << '[';
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << ']';
    return os.str();
}

int sign_label(double score) { return score >= 0.0 ? +1 : -1; }

const LabeledPoint& require_labeled(const DataPoint& z, std::string_view what) {
    if (const auto* p = std::get_if<LabeledPoint>(&z)) return *p;
    throw ContractViolation(std::string(what) + " requires a labeled point");
}

int require_binary_label(double y, std::string_view what) {
    if (y == 1.0) return +1;
    if (y == -1.0) return -1;
    throw ContractViolation(std::string(what) + " requires labels in {-1,+1}");
}

const LinearHypothesis& require_linear(const Hypothesis& h, std::string_view what) {
    if (const auto* p = std::get_if<LinearHypothesis>(&h)) return *p;
    throw ContractViolation(std::string(what) + " requires a linear hypothesis");
}

double linear_score(const LinearHypothesis& h, const LabeledPoint& z) {
    if (h.w.size() != z.x.size()) throw ContractViolation("hypothesis dimension does not match data");
    return h.predict(z.x);
}

Eigen::VectorXd residual_vector(const DataPoint& z, const Hypothesis& h, std::size_t dim,
                                std::string_view what) {
    const auto* mean = std::get_if<GaussianMeanHypothesis>(&h);
    if (mean == nullptr) throw ContractViolation(std::string(what) + " requires a Gaussian-mean hypothesis");
    if (std::holds_alternative<LabeledPoint>(z)) {
        throw ContractViolation(std::string(what) + " requires an unlabeled point");
    }
    const auto coords = unlabeled_coordinates(z);
    if (coords.size() != dim || mean->mu.size() != dim) {
        throw ContractViolation(std::string(what) + ": dimension mismatch");
    }
    Eigen::VectorXd r(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) r(static_cast<Eigen::Index>(i)) = coords[i] - mean->mu[i];
    return r;
}

void check_symmetric(const Eigen::MatrixXd& m, std::string_view what) {
    if (m.rows() == 0 || m.rows() != m.cols()) throw ContractViolation(std::string(what) + " must be square");
    if (!m.allFinite()) throw ContractViolation(std::string(what) + " must be finite");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw ContractViolation(std::string(what) + " must be symmetric");
    }
}

}  // namespace

// ---------------------------------------------------------------------------

DataPoint scalar_point(double z) {
    DataPoint p = ScalarPoint{z};
    validate_point(p);
    return p;
}

DataPoint vector_point(std::vector<double> z) {
    DataPoint p = VectorPoint{std::move(z)};
    validate_point(p);
    return p;
}

DataPoint labeled_point(std::vector<double> x, double y) {
    DataPoint p = LabeledPoint{std::move(x), y};
    validate_point(p);
    return p;
}

void validate_point(const DataPoint& p) {
    std::visit(overloaded{
                   [](const ScalarPoint& s) {
                       if (!std::isfinite(s.z)) throw ContractViolation("non-finite scalar point");
                   },
                   [](const VectorPoint& v) {
                       if (v.z.empty()) throw ContractViolation("empty vector point");
                       if (!all_finite(v.z)) throw ContractViolation("non-finite vector point");
                   },
                   [](const LabeledPoint& l) {
                       if (l.x.empty()) throw ContractViolation("labeled point with empty input");
                       if (!all_finite(l.x) || !std::isfinite(l.y)) {
                           throw ContractViolation("non-finite labeled point");
                       }
                   },
               },
               p);
}

std::size_t point_dimension(const DataPoint& p) {
    return std::visit(overloaded{
                          [](const ScalarPoint&) -> std::size_t { return 1; },
                          [](const VectorPoint& v) { return v.z.size(); },
                          [](const LabeledPoint& l) { return l.x.size(); },
                      },
                      p);
}

std::vector<double> unlabeled_coordinates(const DataPoint& p) {
    if (const auto* s = std::get_if<ScalarPoint>(&p)) return {s->z};
    if (const auto* v = std::get_if<VectorPoint>(&p)) return v->z;
    throw ContractViolation("expected an unlabeled point");
}

bool identical_points(const DataPoint& a, const DataPoint& b) {
    if (a.index() != b.index()) return false;
    return std::visit(overloaded{
                          [&](const ScalarPoint& s) {
                              return std::bit_cast<std::uint64_t>(s.z) ==
                                     std::bit_cast<std::uint64_t>(std::get<ScalarPoint>(b).z);
                          },
                          [&](const VectorPoint& v) { return bitwise_equal(v.z, std::get<VectorPoint>(b).z); },
                          [&](const LabeledPoint& l) {
                              const auto& o = std::get<LabeledPoint>(b);
                              return bitwise_equal(l.x, o.x) &&
                                     std::bit_cast<std::uint64_t>(l.y) == std::bit_cast<std::uint64_t>(o.y);
                          },
                      },
                      a);
}

std::string describe(const DataPoint& p) {
    return std::visit(overloaded{
                          [](const ScalarPoint& s) { return vec_str(std::span<const double>(&s.z, 1)); },
                          [](const VectorPoint& v) { return vec_str(v.z); },
                          [](const LabeledPoint& l) {
                              std::ostringstream os;
                              os.precision(17);
                              os << "(x=" << vec_str(l.x) << ", y=" << l.y << ')';
                              return os.str();
                          },
                      },
                      p);
}

// ---------------------------------------------------------------------------

DiscreteDistribution::DiscreteDistribution(std::vector<DataPoint> points, std::vector<double> probs)
    : points_(std::move(points)), probs_(std::move(probs)) {
    if (points_.empty()) throw ContractViolation("distribution needs at least one support point");
    if (points_.size() != probs_.size()) throw ContractViolation("points and probs differ in length");

    const auto tag = points_.front().index();
    const auto dim = point_dimension(points_.front());
    for (const auto& p : points_) {
        validate_point(p);
        if (p.index() != tag || point_dimension(p) != dim) {
            throw ContractViolation("support points must share variant and dimension");
        }
    }
    for (std::size_t i = 0; i < points_.size(); ++i) {
        for (std::size_t j = i + 1; j < points_.size(); ++j) {
            if (identical_points(points_[i], points_[j])) {
                throw ContractViolation("duplicate support point " + describe(points_[i]));
            }
        }
    }

    CompensatedSum total;
    for (double p : probs_) {
        if (!(p > 0.0) || !std::isfinite(p)) throw ContractViolation("probabilities must be positive and finite");
        total.add(p);
    }
    if (std::abs(total.value() - 1.0) > kProbSumTolerance) {
        throw ContractViolation("probabilities must sum to 1 within 1e-12");
    }
    for (double& p : probs_) p /= total.value();
}

DiscreteDistribution DiscreteDistribution::point_mass(DataPoint p) {
    return DiscreteDistribution({std::move(p)}, {1.0});
}

std::string DiscreteDistribution::digest() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xffU;
            h *= 0x100000001b3ULL;
        }
    };
    auto mix_all = [&](std::span<const double> v) {
        for (double c : v) mix(std::bit_cast<std::uint64_t>(c));
    };
    for (std::size_t i = 0; i < points_.size(); ++i) {
        mix(points_[i].index());
        std::visit(overloaded{
                       [&](const ScalarPoint& s) { mix(std::bit_cast<std::uint64_t>(s.z)); },
                       [&](const VectorPoint& v) { mix_all(v.z); },
                       [&](const LabeledPoint& l) {
                           mix_all(l.x);
                           mix(std::bit_cast<std::uint64_t>(l.y));
                       },
                   },
                   points_[i]);
        mix(std::bit_cast<std::uint64_t>(probs_[i]));
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

DiscreteDistribution DiscreteDistribution::mixture(double alpha, const DiscreteDistribution& first,
                                                   const DiscreteDistribution& second) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ContractViolation("mixture weight must lie in [0,1]");
    std::vector<DataPoint> pts;
    std::vector<double> probs;
    auto absorb = [&](const DiscreteDistribution& d, double scale) {
        if (scale == 0.0) return;
        for (std::size_t i = 0; i < d.size(); ++i) {
            auto it = std::find_if(pts.begin(), pts.end(),
                                   [&](const DataPoint& p) { return identical_points(p, d.points_[i]); });
            if (it == pts.end()) {
                pts.push_back(d.points_[i]);
                probs.push_back(scale * d.probs_[i]);
            } else {
                probs[static_cast<std::size_t>(it - pts.begin())] += scale * d.probs_[i];
            }
        }
    };
    absorb(first, alpha);
    absorb(second, 1.0 - alpha);
    return DiscreteDistribution(std::move(pts), std::move(probs));
}

bool DiscreteDistribution::operator==(const DiscreteDistribution& other) const {
    if (size() != other.size() || probs_ != other.probs_) return false;
    for (std::size_t i = 0; i < size(); ++i) {
        if (!identical_points(points_[i], other.points_[i])) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------

SpdMatrix::SpdMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
    check_symmetric(m_, "covariance matrix");
    Eigen::LLT<Eigen::MatrixXd> llt(m_);
    if (llt.info() != Eigen::Success) throw ContractViolation("covariance matrix must be positive definite");
    const Eigen::MatrixXd l = llt.matrixL();
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
        if (!(l(i, i) > 0.0)) throw ContractViolation("covariance matrix must be positive definite");
        log_det_ += 2.0 * std::log(l(i, i));
    }
    inv_ = llt.solve(Eigen::MatrixXd::Identity(m_.rows(), m_.cols()));
}

PsdMatrix::PsdMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
    check_symmetric(m_, "weight matrix");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m_, Eigen::EigenvaluesOnly);
    const auto& ev = eig.eigenvalues();
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    if (ev.minCoeff() < -1e-12 * scale) throw ContractViolation("weight matrix must be positive semi-definite");
}

std::string_view loss_name(const LossKind& loss) {
    return std::visit(overloaded{
                          [](const SquaredLoss&) { return std::string_view("squared"); },
                          [](const AbsoluteLoss&) { return std::string_view("absolute"); },
                          [](const HingeLoss&) { return std::string_view("hinge"); },
                          [](const ZeroOneLoss&) { return std::string_view("zero_one"); },
                          [](const NllGaussianMeanLoss&) { return std::string_view("nll_gaussian_mean"); },
                          [](const NllGaussianVarianceLoss&) { return std::string_view("nll_gaussian_variance"); },
                          [](const MahalanobisLoss&) { return std::string_view("mahalanobis"); },
                      },
                      loss);
}

// ---------------------------------------------------------------------------

double LinearHypothesis::predict(std::span<const double> x) const {
    double s = intercept.value_or(0.0);
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
    return s;
}

std::size_t bin_index(std::span<const double> edges, double x) {
    return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin());
}

int LookupHypothesis::classify(std::span<const double> x) const {
    if (!binned) {
        auto it = by_input.find(std::vector<double>(x.begin(), x.end()));
        return it == by_input.end() ? default_label : it->second;
    }
    if (x.size() != 1) throw ContractViolation("histogram lookup requires 1-D inputs");
    auto it = by_bin.find(bin_index(bin_edges, x[0]));
    return it == by_bin.end() ? default_label : it->second;
}

std::string describe(const Hypothesis& h) {
    return std::visit(overloaded{
                          [](const LinearHypothesis& l) {
                              std::string s = "linear w=" + vec_str(l.w);
                              if (l.intercept) s += " c=" + vec_str(std::span<const double>(&*l.intercept, 1));
                              return s;
                          },
                          [](const GaussianMeanHypothesis& g) { return "gaussian_mean mu=" + vec_str(g.mu); },
                          [](const GaussianVarianceHypothesis& g) {
                              return "gaussian_variance sigma2=" + vec_str(std::span<const double>(&g.sigma2, 1));
                          },
                          [](const LookupHypothesis& l) {
                              std::ostringstream os;
                              os << "lookup entries=" << (l.binned ? l.by_bin.size() : l.by_input.size())
                                 << " default=" << l.default_label;
                              return os.str();
                          },
                      },
                      h);
}

// ---------------------------------------------------------------------------

double loss_eval(const LossKind& loss, const DataPoint& z, const Hypothesis& h) {
    return std::visit(
        overloaded{
            [&](const SquaredLoss&) {
                const auto& p = require_labeled(z, "squared loss");
                const double r = linear_score(require_linear(h, "squared loss"), p) - p.y;
                return r * r;
            },
            [&](const AbsoluteLoss&) {
                const auto& p = require_labeled(z, "absolute loss");
                return std::abs(linear_score(require_linear(h, "absolute loss"), p) - p.y);
            },
            [&](const HingeLoss&) {
                const auto& p = require_labeled(z, "hinge loss");
                const int y = require_binary_label(p.y, "hinge loss");
                return std::max(0.0, 1.0 - y * linear_score(require_linear(h, "hinge loss"), p));
            },
            [&](const ZeroOneLoss&) {
                const auto& p = require_labeled(z, "zero-one loss");
                const int y = require_binary_label(p.y, "zero-one loss");
                int predicted = 0;
                if (const auto* lin = std::get_if<LinearHypothesis>(&h)) {
                    predicted = sign_label(linear_score(*lin, p));
                } else if (const auto* lookup = std::get_if<LookupHypothesis>(&h)) {
                    predicted = lookup->classify(p.x);
                } else {
                    throw ContractViolation("zero-one loss requires a linear or lookup hypothesis");
                }
                return predicted == y ? 0.0 : 1.0;
            },
            [&](const NllGaussianMeanLoss& l) {
                const auto d = l.sigma.dim();
                const Eigen::VectorXd r = residual_vector(z, h, d, "Gaussian-mean NLL");
                return static_cast<double>(d) * kHalfLogTwoPi + 0.5 * l.sigma.log_det() +
                       0.5 * r.dot(l.sigma.inverse() * r);
            },
            [&](const NllGaussianVarianceLoss&) {
                const auto* s = std::get_if<ScalarPoint>(&z);
                if (s == nullptr) throw ContractViolation("Gaussian-variance NLL requires a scalar point");
                const auto* g = std::get_if<GaussianVarianceHypothesis>(&h);
                if (g == nullptr) throw ContractViolation("Gaussian-variance NLL requires a variance hypothesis");
                if (!(g->sigma2 > 0.0) || !std::isfinite(g->sigma2)) {
                    throw ContractViolation("variance hypothesis must be positive");
                }
                return 0.5 * std::log(g->sigma2) + s->z * s->z / (2.0 * g->sigma2) + kHalfLogTwoPi;
            },
            [&](const MahalanobisLoss& l) {
                const Eigen::VectorXd r = residual_vector(z, h, l.sigma.dim(), "Mahalanobis loss");
                return r.dot(l.sigma.matrix() * r);
            },
        },
        loss);
}

double population_risk(const DiscreteDistribution& dist, const Hypothesis& h, const LossKind& loss) {
    CompensatedSum sum;
    const auto probs = dist.probs();
    for (std::size_t i = 0; i < dist.size(); ++i) sum.add(probs[i] * loss_eval(loss, dist.points()[i], h));
    return sum.value();
}

}  // namespace monotone_lab
