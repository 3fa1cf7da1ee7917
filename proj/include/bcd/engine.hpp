#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <bcd/errors.hpp>
#include <bcd/problems.hpp>
#include <bcd/selection.hpp>
#include <bcd/updates.hpp>

namespace bcd {

struct WorkCounters
{
    std::uint64_t gap_evals = 0;     // coordinate-gap evaluations
    std::uint64_t col_passes = 0;    // traversals of one column's nonzeros
    std::uint64_t nnz_touched = 0;   // stored entries read or written by those passes
    std::uint64_t full_scores = 0;   // d-sized score vector computations
    std::uint64_t cache_rebuilds = 0;
};

/// Iterate plus the caches the per-iteration work relies on:
/// ax = A x, w = grad f(ax) and objective = F(x).
template <class P>
struct SolverState
{
    std::vector<double> x;
    std::vector<double> ax;
    std::vector<double> w;
    double objective = 0.0;
    std::uint64_t t = 0; // iterations applied so far
    WorkCounters counters;

    SolverState() = default;

    explicit SolverState(const P& p) : SolverState(p, std::vector<double>(p.dim(), 0.0)) {}

    SolverState(const P& p, std::vector<double> x0) : x(std::move(x0))
    {
        if (x.size() != p.dim()) throw argument_error("SolverState: x has wrong length");
        rebuild(p);
        counters.cache_rebuilds = 0;
    }

    double epoch(std::size_t d) const { return static_cast<double>(t) / static_cast<double>(d); }

    // Recomputes every cache from x alone.
    void rebuild(const P& p)
    {
        ax = p.matrix.multiply(x);
        w = dual_point(p, ax);
        objective = primal_value(p, x, ax);
        ++counters.cache_rebuilds;
    }
};

// a_i^T w from the cache, accounted as one column pass.
template <class P>
CoordinateView coordinate_view(const P& p, SolverState<P>& st, std::size_t i)
{
    st.counters.col_passes += 1;
    st.counters.nnz_touched += p.matrix.col_nnz(i);
    return {i, st.x[i], p.matrix.col_dot(i, st.w)};
}

/// Builds a proposal for coordinate i stamped with the current state version.
template <class P>
UpdateProposal make_proposal(UpdateRule rule, const P& p, SolverState<P>& st, std::size_t i)
{
    const auto view = coordinate_view(p, st, i);
    auto out = propose(rule, p, view);
    st.counters.gap_evals += 1;
    out.state_version = st.t;
    return out;
}

template <class P>
double marginal_decrease_at(const P& p, SolverState<P>& st, std::size_t i)
{
    const auto view = coordinate_view(p, st, i);
    st.counters.gap_evals += 1;
    return marginal_decrease_at(p, i, view.x_i, view.a_i_dot_w);
}

/// Score of every coordinate for the requested kind:
/// marginal decrease r_i, coordinate gap G_i, or |grad_i F|.
template <class P>
std::vector<double> compute_all_scores(const P& p, SolverState<P>& st, ScoreKind kind)
{
    const auto d = p.dim();
    std::vector<double> out(d, 0.0);
    if (kind == ScoreKind::none) return out;
    for (std::size_t i = 0; i < d; ++i) {
        const double aw = p.matrix.col_dot(i, st.w);
        switch (kind) {
        case ScoreKind::marginal_decrease: out[i] = marginal_decrease_at(p, i, st.x[i], aw); break;
        case ScoreKind::gap: out[i] = coordinate_gap(p, i, st.x[i], aw); break;
        case ScoreKind::gradient:
            if constexpr (P::separable_type::differentiable) {
                out[i] = std::abs(aw + p.separable.derivative(i, st.x[i]));
            } else {
                throw argument_error("gradient scores need a differentiable objective");
            }
            break;
        case ScoreKind::none: break;
        }
    }
    st.counters.col_passes += d;
    st.counters.nnz_touched += p.matrix.nnz();
    if (kind != ScoreKind::gradient) st.counters.gap_evals += d;
    st.counters.full_scores += 1;
    return out;
}

template <class P>
std::vector<double> compute_all_marginal_decreases(const P& p, SolverState<P>& st)
{
    return compute_all_scores(p, st, ScoreKind::marginal_decrease);
}

/// Moves x_i to proposal.new_x and refreshes ax, w and objective on the rows
/// of a_i only.
template <class P>
void apply_coordinate_step(const P& p, SolverState<P>& st, const UpdateProposal& proposal)
{
    const auto i = proposal.coordinate;
    if (proposal.state_version != st.t || i >= st.x.size() || st.x[i] != proposal.old_x) {
        throw contract_violation("stale proposal for coordinate " + std::to_string(i));
    }
    const double delta = proposal.new_x - proposal.old_x;
    if (delta != 0.0) {
        const auto rows = p.matrix.col_rows(i);
        const auto vals = p.matrix.col_values(i);
        double change = p.separable.value(i, proposal.new_x) - p.separable.value(i, proposal.old_x);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const auto r = rows[k];
            const double before = p.smooth.value_entry(r, st.ax[r]);
            st.ax[r] += delta * vals[k];
            st.w[r] = p.smooth.gradient_entry(r, st.ax[r]);
            change += p.smooth.value_entry(r, st.ax[r]) - before;
        }
        st.x[i] = proposal.new_x;
        st.objective += change;
        st.counters.col_passes += 1;
        st.counters.nnz_touched += rows.size();
    }
    ++st.t;
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

struct TraceRecord
{
    std::uint64_t t = 0;
    double epoch = 0.0;
    double objective = 0.0;
    double gap = 0.0;
    // objective - f_star when a reference optimum was supplied, otherwise the
    // gap itself (a certified upper bound); see subopt_from_reference.
    double subopt = 0.0;
    bool subopt_from_reference = false;
    double eta = 0.0;             // G / max_i G_i at this checkpoint
    double eta_running_max = 0.0; // max of eta over checkpoints so far
    double elapsed_s = 0.0;
    WorkCounters counters;
    std::size_t distinct_selected = 0; // coordinates chosen at least once
    double top_share = 0.0;            // fraction of iterations spent on the most chosen one
};

struct StepEvent
{
    std::uint64_t t = 0; // 1-based index of the iteration just completed
    std::size_t coordinate = 0;
    double objective_before = 0.0;
    double objective_after = 0.0;
    double marginal_decrease = 0.0; // r_i before the step
    double delta = 0.0;
    const WorkCounters* counters = nullptr;
};

struct TargetHit
{
    std::uint64_t t = 0;
    double epoch = 0.0;
    double elapsed_s = 0.0;
};

struct AuditReport
{
    std::uint64_t steps = 0;
    std::uint64_t bound_violations = 0;    // F(x^t) - F(x^{t+1}) < r - 1e-9
    std::uint64_t monotone_violations = 0; // F increased beyond 1e-12 relative
    double worst_bound_margin = -infinity; // max of r - realized decrease
};

struct RunOptions
{
    StrategyConfig strategy;
    std::optional<UpdateRule> rule;     // default: the problem's own rule
    double epochs = 10.0;
    std::uint64_t seed = 0;
    std::size_t trace_every = 0;        // iterations; 0 = d (one record per epoch)
    std::optional<double> f_star;       // reference optimum value
    std::vector<double> targets;        // suboptimality levels whose first hit is recorded
    std::optional<double> target_gap;   // stop at the first checkpoint with G <= target
    bool audit = false;
    std::size_t cache_refresh_every = 0; // iterations; 0 = 10 d
    // Preflight for the logistic shrinkage rule: when more than
    // class_h_max_violations of the sampled states violate class-H membership
    // the run falls back to the reference rule.
    std::size_t class_h_preflight_trials = 200;
    std::size_t class_h_max_violations = 0;
    std::function<void(const StepEvent&)> on_step;
};

template <class P>
struct RunResult
{
    std::vector<TraceRecord> trace;
    UpdateRule rule_used = UpdateRule::reference;
    bool rule_fell_back = false;
    std::optional<ClassHReport> preflight;
    std::vector<std::optional<TargetHit>> hits; // parallel to RunOptions::targets
    AuditReport audit;
    SolverState<P> state;
    std::vector<std::uint64_t> selections; // per-coordinate selection counts
    bool stopped_early = false;
    double elapsed_s = 0.0;
};

namespace detail {

inline std::uint64_t iteration_budget(double epochs, std::size_t d)
{
    return static_cast<std::uint64_t>(std::ceil(epochs * static_cast<double>(d)));
}

template <class P>
TraceRecord make_record(const P& p, const SolverState<P>& st, const RunOptions& opt,
                        const std::vector<std::uint64_t>& selections, double eta_running_max,
                        double elapsed)
{
    TraceRecord rec;
    rec.t = st.t;
    rec.epoch = st.epoch(p.dim());
    rec.objective = st.objective;
    const auto gaps = duality_gap(p, st.x, st.ax);
    rec.gap = gaps.total;
    const double max_gap = *std::max_element(gaps.per_coordinate.begin(), gaps.per_coordinate.end());
    rec.eta = max_gap > 0.0 ? rec.gap / max_gap : std::numeric_limits<double>::quiet_NaN();
    rec.eta_running_max = std::isnan(rec.eta) ? eta_running_max : std::max(eta_running_max, rec.eta);
    if (opt.f_star) {
        rec.subopt = st.objective - *opt.f_star;
        rec.subopt_from_reference = true;
    } else {
        rec.subopt = rec.gap;
    }
    rec.elapsed_s = elapsed;
    rec.counters = st.counters;
    std::uint64_t total = 0, top = 0;
    for (auto c : selections) {
        total += c;
        top = std::max(top, c);
        if (c > 0) ++rec.distinct_selected;
    }
    rec.top_share = total > 0 ? static_cast<double>(top) / static_cast<double>(total) : 0.0;
    return rec;
}

} // namespace detail

/// Coordinate descent with the configured selection strategy. Each iteration:
/// bin refresh when due, select, propose, apply, and (b_max_r) feed back the
/// marginal decrease recomputed at the updated coordinate. Deterministic for
/// a fixed seed.
template <class P>
RunResult<P> run(const P& p, const RunOptions& opt)
{
    using clock = std::chrono::steady_clock;
    const auto started = clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - started).count(); };

    const auto d = p.dim();
    if (!(opt.epochs > 0.0)) throw argument_error("run: epochs must be positive");
    if (opt.strategy.kind == StrategyKind::gauss_southwell && !P::separable_type::differentiable) {
        throw argument_error("strategy 'gs' requires a differentiable objective; problem '"
                             + std::string(to_string(P::kind))
                             + "' has an L1 term (use max_r, its nonsmooth extension)");
    }

    RunResult<P> result;
    result.rule_used = opt.rule.value_or(default_rule(P::kind));
    if (!is_compatible(result.rule_used, P::kind)) {
        throw argument_error("update rule '" + std::string(to_string(result.rule_used))
                             + "' does not apply to problem '" + std::string(to_string(P::kind))
                             + "'");
    }
    if (result.rule_used == UpdateRule::logistic_shrink && opt.class_h_preflight_trials > 0) {
        result.preflight =
            verify_class_h(result.rule_used, p, opt.class_h_preflight_trials, opt.seed ^ 0x9e3779b97f4a7c15ULL);
        if (result.preflight->violations > opt.class_h_max_violations) {
            result.rule_used = UpdateRule::reference;
            result.rule_fell_back = true;
        }
    }

    Selector selector(opt.strategy, d, opt.seed);
    const auto rule = result.rule_used;
    const auto budget = detail::iteration_budget(opt.epochs, d);
    const std::size_t trace_every = opt.trace_every == 0 ? d : opt.trace_every;
    const std::size_t refresh_every = opt.cache_refresh_every == 0 ? 10 * d : opt.cache_refresh_every;

    auto& st = result.state;
    st = SolverState<P>(p);
    if (!std::isfinite(st.objective)) {
        throw numerical_error("objective at the starting point is " + std::to_string(st.objective));
    }
    result.selections.assign(d, 0);
    result.hits.assign(opt.targets.size(), std::nullopt);
    double eta_max = 0.0;

    auto check_targets = [&] {
        if (!opt.f_star) return;
        for (std::size_t k = 0; k < opt.targets.size(); ++k) {
            if (!result.hits[k] && st.objective - *opt.f_star <= opt.targets[k]) {
                result.hits[k] = TargetHit{st.t, st.epoch(d), elapsed()};
            }
        }
    };
    auto checkpoint = [&] {
        auto rec = detail::make_record(p, st, opt, result.selections, eta_max, elapsed());
        eta_max = rec.eta_running_max;
        result.trace.push_back(rec);
        return rec.gap;
    };

    if (selector.binned()) selector.refresh_bin(compute_all_scores(p, st, selector.score_kind()));
    check_targets();
    double gap = checkpoint();
    if (opt.target_gap && gap <= *opt.target_gap) {
        result.stopped_early = true;
        result.elapsed_s = elapsed();
        return result;
    }

    double exact_before = opt.audit ? primal_value(p, st.x) : 0.0;
    for (std::uint64_t t = 1; t <= budget; ++t) {
        if (selector.refresh_due(t)) {
            selector.refresh_bin(compute_all_scores(p, st, selector.score_kind()));
        }
        std::size_t i;
        if (selector.full_information()) {
            const auto scores = compute_all_scores(p, st, selector.score_kind());
            i = selector.select(scores);
        } else {
            i = selector.select();
        }
        ++result.selections[i];

        const auto proposal = make_proposal(rule, p, st, i);
        const double before = st.objective;
        apply_coordinate_step(p, st, proposal);

        if (!std::isfinite(st.objective)) {
            std::ostringstream msg;
            msg << "objective became " << st.objective << " at iteration " << t << " (coordinate "
                << i << ", x_i " << proposal.old_x << " -> " << proposal.new_x << ", F before "
                << before << ")";
            throw numerical_error(msg.str());
        }

        if (selector.wants_feedback()) selector.feedback(i, marginal_decrease_at(p, st, i));

        if (opt.audit) {
            const double exact_after = primal_value(p, st.x);
            const double margin = proposal.marginal_decrease - (exact_before - exact_after);
            ++result.audit.steps;
            result.audit.worst_bound_margin = std::max(result.audit.worst_bound_margin, margin);
            if (margin > 1e-9) ++result.audit.bound_violations;
            if (exact_after > exact_before + 1e-12 * std::max(1.0, std::abs(exact_before))) {
                ++result.audit.monotone_violations;
            }
            exact_before = exact_after;
        }

        if (opt.on_step) {
            opt.on_step(StepEvent{t, i, before, st.objective, proposal.marginal_decrease,
                                  proposal.delta(), &st.counters});
        }
        check_targets();

        const bool at_checkpoint = t % trace_every == 0 || t == budget;
        if (at_checkpoint || t % refresh_every == 0) {
            const auto saved = st.counters;
            st.rebuild(p);
            st.counters = saved;
            ++st.counters.cache_rebuilds;
        }
        if (at_checkpoint) {
            gap = checkpoint();
            if (opt.target_gap && gap <= *opt.target_gap) {
                result.stopped_early = t < budget;
                break;
            }
        }
    }
    result.elapsed_s = elapsed();
    return result;
}

// ---------------------------------------------------------------------------
// Reference optimum
// ---------------------------------------------------------------------------

struct ReferenceOptimum
{
    std::vector<double> x;
    double f_star = 0.0;      // F(x_bar), an upper bound on min F
    double gap = 0.0;         // G(x_bar)
    double lower_bound = 0.0; // F(x_bar) - G(x_bar) <= min F
};

class budget_exceeded : public std::runtime_error
{
public:
    budget_exceeded(const std::string& what, ReferenceOptimum best)
        : std::runtime_error(what), best_(std::move(best))
    {}
    const ReferenceOptimum& best() const { return best_; }

private:
    ReferenceOptimum best_;
};

/// Ridge: exact dense solve of (2/n A^T A + lambda I) x = 2/n A^T Y mapped to
/// the dual optimum alpha = 2 (Y - A x) / n.
inline ReferenceOptimum reference_optimum(const RidgeDualProblem& p, double tol)
{
    if (!(tol > 0.0)) throw argument_error("reference_optimum: tol must be positive");
    const auto features = p.samples();
    const auto n = p.dim();
    // dense copy of A (n x features): row j of A is column j of the coupling matrix
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                              static_cast<Eigen::Index>(features));
    for (std::size_t j = 0; j < n; ++j) {
        const auto rows = p.matrix.col_rows(j);
        const auto vals = p.matrix.col_values(j);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(rows[k])) = vals[k];
        }
    }
    const auto y_span = p.separable.targets();
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(y_span.data(),
                                                                static_cast<Eigen::Index>(n));
    const double scale = 2.0 / static_cast<double>(n);
    Eigen::MatrixXd lhs = scale * a.transpose() * a;
    lhs.diagonal().array() += p.smooth.lambda();
    const Eigen::VectorXd x = lhs.ldlt().solve(scale * a.transpose() * y);
    const Eigen::VectorXd alpha = scale * (y - a * x);

    ReferenceOptimum out;
    out.x.assign(alpha.data(), alpha.data() + alpha.size());
    const auto ax = p.matrix.multiply(out.x);
    out.f_star = primal_value(p, out.x, ax);
    out.gap = duality_gap(p, out.x, ax).total;
    out.lower_bound = out.f_star - out.gap;
    if (out.gap > tol) {
        throw budget_exceeded("ridge reference solve left gap " + std::to_string(out.gap), out);
    }
    return out;
}

/// L1 problems: a max_r run with the problem's own rule until G <= tol.
template <class P>
ReferenceOptimum reference_optimum(const P& p, double tol, double max_epochs = 2000.0)
{
    if (!(tol > 0.0)) throw argument_error("reference_optimum: tol must be positive");
    RunOptions opt;
    opt.strategy.kind = StrategyKind::max_r;
    opt.epochs = max_epochs;
    opt.target_gap = tol;
    opt.trace_every = std::max<std::size_t>(1, p.dim() / 10);
    auto res = run(p, opt);
    ReferenceOptimum out;
    out.x = res.state.x;
    out.f_star = res.state.objective;
    out.gap = res.trace.back().gap;
    out.lower_bound = out.f_star - out.gap;
    if (out.gap > tol) {
        throw budget_exceeded("reference run stopped at gap " + std::to_string(out.gap)
                                  + " > " + std::to_string(tol),
                              out);
    }
    return out;
}

} // namespace bcd
