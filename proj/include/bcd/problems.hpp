#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <bcd/errors.hpp>
#include <bcd/sparse_data.hpp>

namespace bcd {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

enum class ProblemKind { lasso, logistic_l1, ridge_dual };

// Whether the coordinates of F are features (primal) or datapoints (dual).
enum class Direction { primal, dual };

inline std::string_view to_string(ProblemKind kind)
{
    switch (kind) {
    case ProblemKind::lasso: return "lasso";
    case ProblemKind::logistic_l1: return "logistic_l1";
    case ProblemKind::ridge_dual: return "ridge_dual";
    }
    return "?";
}

struct Interval
{
    double lo;
    double hi;

    bool contains(double v) const { return lo <= v && v <= hi; }
    double clamp(double v) const { return std::clamp(v, lo, hi); }
};

namespace detail {

// log(1 + exp(z)) without overflow
inline double softplus(double z)
{
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline double sigmoid(double z)
{
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// p log p with 0 log 0 = 0
inline double xlogx(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

} // namespace detail

// ---------------------------------------------------------------------------
// Smooth parts. All three are sums of scalar functions of the entries of
// v = Ax, which lets the engine refresh w = grad f(Ax) only on touched rows.
// ---------------------------------------------------------------------------

// f(v) = ||Y - v||^2 / (2n)
class SquaredLoss
{
public:
    explicit SquaredLoss(std::vector<double> targets)
        : y_(std::move(targets)), n_(static_cast<double>(y_.size()))
    {}

    std::size_t size() const { return y_.size(); }
    double beta() const { return n_; }
    std::span<const double> targets() const { return y_; }

    double value_entry(std::size_t j, double v) const
    {
        const double r = y_[j] - v;
        return r * r / (2.0 * n_);
    }

    double gradient_entry(std::size_t j, double v) const { return (v - y_[j]) / n_; }

    // sup_v { w v - (y - v)^2 / (2n) } = w y + n w^2 / 2
    double conjugate_entry(std::size_t j, double w) const { return w * y_[j] + 0.5 * n_ * w * w; }

private:
    std::vector<double> y_;
    double n_;
};

// f(v) = (1/n) sum_j log(1 + exp(-y_j v_j))
class LogisticLoss
{
public:
    explicit LogisticLoss(std::vector<double> labels)
        : y_(std::move(labels)), n_(static_cast<double>(y_.size()))
    {}

    std::size_t size() const { return y_.size(); }
    // the logistic second derivative is at most 1/4
    double beta() const { return 4.0 * n_; }
    std::span<const double> labels() const { return y_; }

    double value_entry(std::size_t j, double v) const { return detail::softplus(-y_[j] * v) / n_; }

    double gradient_entry(std::size_t j, double v) const
    {
        return -y_[j] * detail::sigmoid(-y_[j] * v) / n_;
    }

    // finite only for w = -y p / n with p in [0, 1]
    double conjugate_entry(std::size_t j, double w) const
    {
        const double p = -n_ * w * y_[j];
        if (p < 0.0 || p > 1.0) return infinity;
        return (detail::xlogx(p) + detail::xlogx(1.0 - p)) / n_;
    }

private:
    std::vector<double> y_;
    double n_;
};

// f(v) = ||v||^2 / (2 lambda); the coupling term of the ridge dual.
class ScaledSquaredNorm
{
public:
    ScaledSquaredNorm(double lambda, std::size_t dim) : lambda_(lambda), dim_(dim) {}

    std::size_t size() const { return dim_; }
    double beta() const { return lambda_; }
    double lambda() const { return lambda_; }

    double value_entry(std::size_t, double v) const { return v * v / (2.0 * lambda_); }
    double gradient_entry(std::size_t, double v) const { return v / lambda_; }
    double conjugate_entry(std::size_t, double w) const { return 0.5 * lambda_ * w * w; }

private:
    double lambda_;
    std::size_t dim_;
};

template <class SmoothT>
double smooth_value(const SmoothT& f, std::span<const double> v)
{
    double s = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) s += f.value_entry(j, v[j]);
    return s;
}

template <class SmoothT>
std::vector<double> smooth_gradient(const SmoothT& f, std::span<const double> v)
{
    std::vector<double> g(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) g[j] = f.gradient_entry(j, v[j]);
    return g;
}

template <class SmoothT>
double smooth_conjugate(const SmoothT& f, std::span<const double> w)
{
    double s = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) s += f.conjugate_entry(j, w[j]);
    return s;
}

// ---------------------------------------------------------------------------
// Separable parts
// ---------------------------------------------------------------------------

// g_i(z) = lambda |z| on |z| <= B, +inf outside: the L1 penalty with the
// bounded support that makes its conjugate B max{|u| - lambda, 0} Lipschitz.
class BoxedL1
{
public:
    static constexpr bool differentiable = false;

    BoxedL1(double lambda, double bound, std::size_t dim)
        : lambda_(lambda), bound_(bound), dim_(dim)
    {}

    std::size_t size() const { return dim_; }
    double lambda() const { return lambda_; }
    double mu(std::size_t) const { return 0.0; }
    double support_bound(std::size_t) const { return bound_; }
    double clamp_to_support(std::size_t, double z) const { return std::clamp(z, -bound_, bound_); }

    double value(std::size_t, double z) const
    {
        return std::abs(z) <= bound_ ? lambda_ * std::abs(z) : infinity;
    }

    double conjugate(std::size_t, double u) const
    {
        return bound_ * std::max(std::abs(u) - lambda_, 0.0);
    }

    Interval conjugate_subdiff(std::size_t, double u) const
    {
        const double a = std::abs(u);
        if (a < lambda_) return {0.0, 0.0};
        if (a > lambda_) return u > 0.0 ? Interval{bound_, bound_} : Interval{-bound_, -bound_};
        return u > 0.0 ? Interval{0.0, bound_} : Interval{-bound_, 0.0};
    }

private:
    double lambda_;
    double bound_;
    std::size_t dim_;
};

// g_j(a) = l_j*(-a) for the ridge loss l_j(z) = (y_j - z)^2 / n, i.e.
// g_j(a) = -a y_j + n a^2 / 4, strongly convex with mu = n / 2.
class RidgeLossConjugate
{
public:
    static constexpr bool differentiable = true;

    explicit RidgeLossConjugate(std::vector<double> targets)
        : y_(std::move(targets)), n_(static_cast<double>(y_.size()))
    {}

    std::size_t size() const { return y_.size(); }
    std::span<const double> targets() const { return y_; }
    double mu(std::size_t) const { return 0.5 * n_; }
    double support_bound(std::size_t) const { return infinity; }
    double clamp_to_support(std::size_t, double z) const { return z; }

    double value(std::size_t i, double a) const { return -a * y_[i] + 0.25 * n_ * a * a; }
    double derivative(std::size_t i, double a) const { return -y_[i] + 0.5 * n_ * a; }
    double conjugate(std::size_t i, double z) const
    {
        const double t = z + y_[i];
        return t * t / n_;
    }

    Interval conjugate_subdiff(std::size_t i, double z) const
    {
        const double g = 2.0 * (z + y_[i]) / n_;
        return {g, g};
    }

private:
    std::vector<double> y_;
    double n_;
};

// ---------------------------------------------------------------------------
// Problem:  F(x) = f(Ax) + sum_i g_i(x_i)
// ---------------------------------------------------------------------------

template <ProblemKind Kind, class SmoothT, class SeparableT>
struct Problem
{
    using smooth_type = SmoothT;
    using separable_type = SeparableT;

    static constexpr ProblemKind kind = Kind;
    static constexpr Direction direction =
        Kind == ProblemKind::ridge_dual ? Direction::dual : Direction::primal;

    SparseColumnMatrix matrix;
    SmoothT smooth;
    SeparableT separable;

    std::size_t dim() const { return matrix.cols(); }
    std::size_t samples() const { return matrix.rows(); }
    double beta() const { return smooth.beta(); }
};

using LassoProblem = Problem<ProblemKind::lasso, SquaredLoss, BoxedL1>;
using LogisticProblem = Problem<ProblemKind::logistic_l1, LogisticLoss, BoxedL1>;
using RidgeDualProblem = Problem<ProblemKind::ridge_dual, ScaledSquaredNorm, RidgeLossConjugate>;

/// F(x) = f(Ax) + sum_i g_i(x_i); +inf as soon as some g_i is infinite.
template <class P>
double primal_value(const P& p, std::span<const double> x, std::span<const double> ax)
{
    if (x.size() != p.dim() || ax.size() != p.samples()) {
        throw argument_error("primal_value: dimension mismatch");
    }
    double g = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double gi = p.separable.value(i, x[i]);
        if (gi == infinity) return infinity;
        g += gi;
    }
    return smooth_value(p.smooth, ax) + g;
}

template <class P>
double primal_value(const P& p, std::span<const double> x)
{
    const auto ax = p.matrix.multiply(x);
    return primal_value(p, x, ax);
}

/// F_D(w) = f*(w) + sum_i g*_i(-a_i^T w)
template <class P>
double dual_value(const P& p, std::span<const double> w)
{
    if (w.size() != p.samples()) throw argument_error("dual_value: dimension mismatch");
    double s = smooth_conjugate(p.smooth, w);
    for (std::size_t i = 0; i < p.dim(); ++i) {
        s += p.separable.conjugate(i, -p.matrix.col_dot(i, w));
    }
    return s;
}

/// w = grad f(Ax)
template <class P>
std::vector<double> dual_point(const P& p, std::span<const double> ax)
{
    if (ax.size() != p.samples()) throw argument_error("dual_point: dimension mismatch");
    return smooth_gradient(p.smooth, ax);
}

struct DualResidue
{
    double kappa; // u_bar - x_i
    double u_bar; // subgradient of g*_i(-a_i^T w) closest to x_i
};

template <class P>
DualResidue dual_residue_from_dot(const P& p, std::size_t i, double x_i, double a_i_dot_w)
{
    const auto range = p.separable.conjugate_subdiff(i, -a_i_dot_w);
    const double u_bar = range.clamp(x_i);
    return {u_bar - x_i, u_bar};
}

template <class P>
DualResidue dual_residue(const P& p, std::size_t i, double x_i, std::span<const double> w)
{
    return dual_residue_from_dot(p, i, x_i, p.matrix.col_dot(i, w));
}

inline constexpr double gap_clamp_tolerance = 1e-12;

/// G_i = g*_i(-a_i^T w) + g_i(x_i) + x_i a_i^T w. Nonnegative by Young's
/// inequality; values in [-1e-12 * scale, 0) are rounding and clamp to 0.
template <class P>
double coordinate_gap(const P& p, std::size_t i, double x_i, double a_i_dot_w)
{
    const double conj = p.separable.conjugate(i, -a_i_dot_w);
    const double val = p.separable.value(i, x_i);
    const double cross = x_i * a_i_dot_w;
    const double gap = conj + val + cross;
    if (gap >= 0.0) return gap;
    const double scale =
        std::max({1.0, std::abs(conj), std::abs(val), std::abs(cross)});
    if (gap >= -gap_clamp_tolerance * scale) return 0.0;
    throw consistency_error("coordinate gap " + std::to_string(gap) + " at coordinate "
                            + std::to_string(i) + " is negative");
}

template <class P>
double coordinate_gap(const P& p, std::size_t i, double x_i, std::span<const double> w)
{
    return coordinate_gap(p, i, x_i, p.matrix.col_dot(i, w));
}

struct GapDecomposition
{
    double total = 0.0;
    std::vector<double> per_coordinate;
};

/// G(x) = sum_i G_i(x) at w = grad f(Ax).
template <class P>
GapDecomposition duality_gap(const P& p, std::span<const double> x, std::span<const double> ax)
{
    if (x.size() != p.dim() || ax.size() != p.samples()) {
        throw argument_error("duality_gap: dimension mismatch");
    }
    const auto w = dual_point(p, ax);
    GapDecomposition out;
    out.per_coordinate.resize(p.dim());
    for (std::size_t i = 0; i < p.dim(); ++i) {
        out.per_coordinate[i] = coordinate_gap(p, i, x[i], p.matrix.col_dot(i, w));
        out.total += out.per_coordinate[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Instantiations
// ---------------------------------------------------------------------------

/// F(x) = ||Y - Ax||^2 / (2n) + lambda ||x||_1, with the L1 term restricted to
/// |x_i| <= B = F(0) / lambda.
inline LassoProblem make_lasso(LabeledDataset data, double lambda)
{
    if (!(lambda > 0.0)) throw argument_error("lasso: lambda must be positive");
    if (data.labels.size() != data.matrix.rows()) throw argument_error("lasso: label count mismatch");
    const double n = static_cast<double>(data.labels.size());
    const double f0 = std::inner_product(data.labels.begin(), data.labels.end(),
                                         data.labels.begin(), 0.0) / (2.0 * n);
    if (!(f0 > 0.0)) throw argument_error("lasso: targets are identically zero");
    const auto d = data.matrix.cols();
    return {std::move(data.matrix), SquaredLoss(std::move(data.labels)),
            BoxedL1(lambda, f0 / lambda, d)};
}

/// F(x) = (1/n) sum_j log(1 + exp(-y_j a^j x)) + lambda ||x||_1 with
/// B = F(0) / lambda = log(2) / lambda.
inline LogisticProblem make_logistic_l1(LabeledDataset data, double lambda)
{
    if (!(lambda > 0.0)) throw argument_error("logistic: lambda must be positive");
    if (data.labels.size() != data.matrix.rows()) {
        throw argument_error("logistic: label count mismatch");
    }
    if (!has_binary_labels(data)) throw argument_error("logistic: labels must be +1 or -1");
    const auto d = data.matrix.cols();
    return {std::move(data.matrix), LogisticLoss(std::move(data.labels)),
            BoxedL1(lambda, std::log(2.0) / lambda, d)};
}

/// Ridge regression P(x) = ||Y - Ax||^2 / n + (lambda/2) ||x||^2 solved through
/// its dual over one variable per datapoint:
///
///   F(alpha) = ||A^T alpha||^2 / (2 lambda) + sum_j ( -alpha_j y_j + n alpha_j^2 / 4 )
///
/// The coordinate matrix is A^T (columns are datapoints). At w = grad f = A^T alpha / lambda
/// the conjugate objective F_D(w) equals P(w), so min F = -min P and the
/// primal iterate is recovered as x = w.
inline RidgeDualProblem make_ridge_dual(const LabeledDataset& data, double lambda)
{
    if (!(lambda > 0.0)) throw argument_error("ridge: lambda must be positive");
    if (data.labels.size() != data.matrix.rows()) throw argument_error("ridge: label count mismatch");
    auto coupling = data.matrix.transpose();
    const auto features = coupling.rows();
    return {std::move(coupling), ScaledSquaredNorm(lambda, features),
            RidgeLossConjugate(data.labels)};
}

// Primal ridge iterate x = A^T alpha / lambda for a dual vector alpha.
inline std::vector<double> ridge_primal_iterate(const RidgeDualProblem& p,
                                                std::span<const double> alpha)
{
    auto x = p.matrix.multiply(alpha);
    for (auto& v : x) v /= p.smooth.lambda();
    return x;
}

// Ridge primal objective ||Y - Ax||^2 / n + (lambda/2) ||x||^2.
inline double ridge_primal_value(const RidgeDualProblem& p, std::span<const double> x)
{
    return dual_value(p, x);
}

// Smallest lambda for which x = 0 solves the Lasso.
inline double lasso_lambda_max(const LabeledDataset& data)
{
    const auto c = data.matrix.transpose_multiply(data.labels);
    double m = 0.0;
    for (auto v : c) m = std::max(m, std::abs(v));
    return m / static_cast<double>(data.labels.size());
}

// Smallest lambda for which x = 0 solves the L1 logistic problem.
inline double logistic_lambda_max(const LabeledDataset& data)
{
    return 0.5 * lasso_lambda_max(data);
}

} // namespace bcd
