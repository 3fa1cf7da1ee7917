#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <bcd/errors.hpp>
#include <bcd/problems.hpp>
#include <bcd/random.hpp>

namespace bcd {

enum class UpdateRule {
    reference,       // x_i + s kappa_i with the safe step s
    lasso_prox,      // exact coordinate minimizer (soft threshold)
    logistic_shrink, // s_{4 lambda}(x_i - 4 df/dx_i)
    ridge_exact,     // exact minimizer of the 1-D dual quadratic
};

inline std::string_view to_string(UpdateRule rule)
{
    switch (rule) {
    case UpdateRule::reference: return "reference";
    case UpdateRule::lasso_prox: return "lasso_prox";
    case UpdateRule::logistic_shrink: return "logistic_shrink";
    case UpdateRule::ridge_exact: return "ridge_exact";
    }
    return "?";
}

inline UpdateRule parse_update_rule(std::string_view name)
{
    for (auto r : {UpdateRule::reference, UpdateRule::lasso_prox, UpdateRule::logistic_shrink,
                   UpdateRule::ridge_exact}) {
        if (name == to_string(r)) return r;
    }
    throw argument_error("unknown update rule '" + std::string(name) + "'");
}

inline UpdateRule default_rule(ProblemKind kind)
{
    switch (kind) {
    case ProblemKind::lasso: return UpdateRule::lasso_prox;
    case ProblemKind::logistic_l1: return UpdateRule::logistic_shrink;
    case ProblemKind::ridge_dual: return UpdateRule::ridge_exact;
    }
    return UpdateRule::reference;
}

inline bool is_compatible(UpdateRule rule, ProblemKind kind)
{
    switch (rule) {
    case UpdateRule::reference: return true;
    case UpdateRule::lasso_prox: return kind == ProblemKind::lasso;
    case UpdateRule::logistic_shrink: return kind == ProblemKind::logistic_l1;
    case UpdateRule::ridge_exact: return kind == ProblemKind::ridge_dual;
    }
    return false;
}

// Everything a single-coordinate rule reads from the solver state.
struct CoordinateView
{
    std::size_t i;
    double x_i;
    double a_i_dot_w; // a_i^T grad f(Ax)
};

struct UpdateProposal
{
    std::size_t coordinate = 0;
    double old_x = 0.0;
    double new_x = 0.0;
    double step = 1.0;  // s of the reference rule; meaningful when !exact
    bool exact = false; // produced by a rule other than the reference step
    double kappa = 0.0;
    double gap = 0.0;
    double marginal_decrease = 0.0;
    std::uint64_t state_version = 0; // stamped by the engine

    double delta() const { return new_x - old_x; }
};

namespace detail {

inline double checked_gap(double gap)
{
    if (gap >= 0.0) return gap;
    if (gap >= -gap_clamp_tolerance) return 0.0;
    throw consistency_error("negative coordinate gap " + std::to_string(gap));
}

inline double soft_threshold(double q, double tau)
{
    return std::copysign(std::max(std::abs(q) - tau, 0.0), q);
}

} // namespace detail

/// s = min{1, (G + mu kappa^2 / 2) / (kappa^2 (mu + ||a||^2 / beta))}; 1 when
/// kappa = 0, where any step leaves x_i where it is.
inline double step_size(double gap, double kappa, double mu, double col_sq_norm, double beta)
{
    gap = detail::checked_gap(gap);
    if (!(beta > 0.0) || col_sq_norm < 0.0 || mu < 0.0) {
        throw argument_error("step_size: need beta > 0, col_sq_norm >= 0, mu >= 0");
    }
    if (kappa == 0.0) return 1.0;
    const double k2 = kappa * kappa;
    const double curvature = mu + col_sq_norm / beta;
    if (!(curvature > 0.0)) return 1.0;
    return std::min(1.0, (gap + 0.5 * mu * k2) / (k2 * curvature));
}

/// Certified lower bound r on the decrease of F from one update in the class H.
inline double marginal_decrease(double gap, double kappa, double mu, double col_sq_norm,
                                double beta)
{
    const double s = step_size(gap, kappa, mu, col_sq_norm, beta);
    gap = detail::checked_gap(gap);
    const double k2 = kappa * kappa;
    const double r = s == 1.0 ? gap - col_sq_norm * k2 / (2.0 * beta)
                              : 0.5 * s * (gap + 0.5 * mu * k2);
    return std::max(r, 0.0);
}

template <class P>
double marginal_decrease_at(const P& p, std::size_t i, double x_i, double a_i_dot_w)
{
    const double gap = coordinate_gap(p, i, x_i, a_i_dot_w);
    const auto res = dual_residue_from_dot(p, i, x_i, a_i_dot_w);
    return marginal_decrease(gap, res.kappa, p.separable.mu(i), p.matrix.col_sq_norm(i), p.beta());
}

namespace detail {

// Fills gap, kappa, step and r for coordinate view.i; new_x is left at the
// reference step.
template <class P>
UpdateProposal annotate(const P& p, const CoordinateView& view)
{
    UpdateProposal out;
    out.coordinate = view.i;
    out.old_x = view.x_i;
    out.gap = coordinate_gap(p, view.i, view.x_i, view.a_i_dot_w);
    out.kappa = dual_residue_from_dot(p, view.i, view.x_i, view.a_i_dot_w).kappa;
    const double mu = p.separable.mu(view.i);
    const double a2 = p.matrix.col_sq_norm(view.i);
    out.step = step_size(out.gap, out.kappa, mu, a2, p.beta());
    out.marginal_decrease = marginal_decrease(out.gap, out.kappa, mu, a2, p.beta());
    out.new_x = p.separable.clamp_to_support(view.i, view.x_i + out.step * out.kappa);
    return out;
}

} // namespace detail

template <class P>
UpdateProposal reference_update(const P& p, const CoordinateView& view)
{
    return detail::annotate(p, view);
}

/// argmin_z ||Y - Ax + (x_i - z) a_i||^2 / (2n) + lambda |z|, clamped to [-B, B].
inline UpdateProposal lasso_prox_update(const LassoProblem& p, const CoordinateView& view)
{
    auto out = detail::annotate(p, view);
    out.exact = true;
    const double a2 = p.matrix.col_sq_norm(view.i);
    if (a2 == 0.0) {
        out.new_x = 0.0;
        return out;
    }
    const double n = static_cast<double>(p.samples());
    // a_i^T (Y - Ax + a_i x_i) = -n a_i^T w + ||a_i||^2 x_i
    const double q = view.x_i - n * view.a_i_dot_w / a2;
    const double z = detail::soft_threshold(q, n * p.separable.lambda() / a2);
    out.new_x = p.separable.clamp_to_support(view.i, z);
    return out;
}

/// Shrinkage step s_{4 lambda}(x_i - 4 df/dx_i), clamped to [-B, B].
inline UpdateProposal logistic_shrink_update(const LogisticProblem& p, const CoordinateView& view)
{
    auto out = detail::annotate(p, view);
    out.exact = true;
    const double lambda = p.separable.lambda();
    const double z = detail::soft_threshold(view.x_i - 4.0 * view.a_i_dot_w, 4.0 * lambda);
    out.new_x = p.separable.clamp_to_support(view.i, z);
    return out;
}

/// Exact minimization of the dual objective along alpha_i:
/// delta = (y_i - m_i^T w - n alpha_i / 2) / (||m_i||^2 / lambda + n / 2).
inline UpdateProposal ridge_dual_update(const RidgeDualProblem& p, const CoordinateView& view)
{
    auto out = detail::annotate(p, view);
    out.exact = true;
    const double n = static_cast<double>(p.dim());
    const double y = p.separable.targets()[view.i];
    const double a2 = p.matrix.col_sq_norm(view.i);
    const double delta =
        (y - view.a_i_dot_w - 0.5 * n * view.x_i) / (a2 / p.smooth.lambda() + 0.5 * n);
    out.new_x = view.x_i + delta;
    return out;
}

/// Runtime dispatch by rule name; incompatible (rule, problem) pairs are an
/// argument error.
template <class P>
UpdateProposal propose(UpdateRule rule, const P& p, const CoordinateView& view)
{
    switch (rule) {
    case UpdateRule::reference: return reference_update(p, view);
    case UpdateRule::lasso_prox:
        if constexpr (std::is_same_v<P, LassoProblem>) return lasso_prox_update(p, view);
        break;
    case UpdateRule::logistic_shrink:
        if constexpr (std::is_same_v<P, LogisticProblem>) return logistic_shrink_update(p, view);
        break;
    case UpdateRule::ridge_exact:
        if constexpr (std::is_same_v<P, RidgeDualProblem>) return ridge_dual_update(p, view);
        break;
    }
    throw argument_error("update rule '" + std::string(to_string(rule))
                         + "' does not apply to problem '" + std::string(to_string(P::kind))
                         + "'");
}

// ---------------------------------------------------------------------------
// Surrogate and class-H membership
// ---------------------------------------------------------------------------

/// F_hat_P(x, x') = sum_i (grad f(Ax)^T a_i)(x'_i - x_i) + ||a_i||^2 (x'_i - x_i)^2 / (2 beta)
///                  + g_i(x'_i) - g_i(x_i)
/// Coordinates with x'_i == x_i contribute nothing.
template <class P>
double surrogate_gap(const P& p, std::span<const double> x, std::span<const double> x_prime)
{
    if (x.size() != p.dim() || x_prime.size() != p.dim()) {
        throw argument_error("surrogate_gap: dimension mismatch");
    }
    const auto w = dual_point(p, p.matrix.multiply(x));
    double s = 0.0;
    for (std::size_t i = 0; i < p.dim(); ++i) {
        const double delta = x_prime[i] - x[i];
        if (delta == 0.0) continue;
        s += p.matrix.col_dot(i, w) * delta
             + p.matrix.col_sq_norm(i) * delta * delta / (2.0 * p.beta())
             + p.separable.value(i, x_prime[i]) - p.separable.value(i, x[i]);
    }
    return s;
}

// Single-coordinate term of F_hat_P for moving x_i to z.
template <class P>
double surrogate_gap_coordinate(const P& p, const CoordinateView& view, double z)
{
    const double delta = z - view.x_i;
    if (delta == 0.0) return 0.0;
    return view.a_i_dot_w * delta
           + p.matrix.col_sq_norm(view.i) * delta * delta / (2.0 * p.beta())
           + p.separable.value(view.i, z) - p.separable.value(view.i, view.x_i);
}

// F(x + (z - x_i) e_i) - F(x), touching only the rows of a_i.
template <class P>
double coordinate_move_change(const P& p, std::span<const double> ax, const CoordinateView& view,
                              double z)
{
    const double delta = z - view.x_i;
    if (delta == 0.0) return 0.0;
    const double g_new = p.separable.value(view.i, z);
    if (g_new == infinity) return infinity;
    const auto rows = p.matrix.col_rows(view.i);
    const auto vals = p.matrix.col_values(view.i);
    double change = g_new - p.separable.value(view.i, view.x_i);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const double v = ax[rows[k]];
        change += p.smooth.value_entry(rows[k], v + delta * vals[k])
                  - p.smooth.value_entry(rows[k], v);
    }
    return change;
}

/// Random iterate inside the domain of F: half the coordinates zero, the rest
/// Gaussian at a scale drawn per call so near- and far-from-optimal states
/// are both exercised.
template <class P>
std::vector<double> random_iterate(const P& p, Rng& rng)
{
    static constexpr double scales[] = {0.01, 0.1, 1.0};
    double base;
    if constexpr (P::kind == ProblemKind::ridge_dual) {
        const auto y = p.separable.targets();
        double ss = 0.0;
        for (auto v : y) ss += v * v;
        const double n = static_cast<double>(y.size());
        base = 2.0 * std::sqrt(ss / n) / n;
    } else {
        base = std::min(1.0, p.separable.support_bound(0));
    }
    const double sd = base * scales[rng.index(3)];
    std::vector<double> x(p.dim(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (rng.bernoulli(0.5)) x[i] = p.separable.clamp_to_support(i, rng.normal(0.0, sd));
    }
    return x;
}

struct ClassHReport
{
    std::size_t trials = 0;
    std::size_t violations = 0;
    // max over trials of min(F-criterion margin, surrogate-criterion margin);
    // positive beyond the slack means neither criterion held somewhere.
    double worst_margin = -infinity;
};

inline constexpr double class_h_slack = 1e-9;

/// Samples (x, i) pairs and checks that `rule` satisfies at least one of
/// F(h(x,i)) <= F(h_ref(x,i)) or F_hat_P(x, h(x,i)) <= F_hat_P(x, h_ref(x,i)),
/// where h_ref is the reference update. Violations are counted, not thrown.
template <class P, class Rule>
ClassHReport verify_class_h(Rule&& rule, const P& p, std::size_t trials, std::uint64_t seed)
{
    if (trials == 0) throw argument_error("verify_class_h: trials must be >= 1");
    Rng rng(seed);
    ClassHReport report;
    report.trials = trials;
    for (std::size_t t = 0; t < trials; ++t) {
        const auto x = random_iterate(p, rng);
        const auto ax = p.matrix.multiply(x);
        const auto w = dual_point(p, ax);
        const auto i = static_cast<std::size_t>(rng.index(p.dim()));
        const CoordinateView view{i, x[i], p.matrix.col_dot(i, w)};

        const double z = rule(p, view).new_x;
        const double z_ref = reference_update(p, view).new_x;

        const double by_value =
            coordinate_move_change(p, ax, view, z) - coordinate_move_change(p, ax, view, z_ref);
        const double by_surrogate =
            surrogate_gap_coordinate(p, view, z) - surrogate_gap_coordinate(p, view, z_ref);
        double margin = std::min(by_value, by_surrogate);
        if (std::isnan(margin)) margin = infinity;
        report.worst_margin = std::max(report.worst_margin, margin);
        if (margin > class_h_slack) ++report.violations;
    }
    return report;
}

template <class P>
ClassHReport verify_class_h(UpdateRule rule, const P& p, std::size_t trials, std::uint64_t seed)
{
    return verify_class_h(
        [rule](const P& prob, const CoordinateView& v) { return propose(rule, prob, v); }, p,
        trials, seed);
}

} // namespace bcd
