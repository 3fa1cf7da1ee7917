#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include <bcd/errors.hpp>
#include <bcd/random.hpp>
#include <bcd/score_tree.hpp>

namespace bcd {

enum class StrategyKind { uniform, ada_gap, gap_per_epoch, gauss_southwell, max_r, b_max_r };

// The per-coordinate score a strategy consumes.
enum class ScoreKind { none, marginal_decrease, gap, gradient };

inline std::string_view to_string(StrategyKind kind)
{
    switch (kind) {
    case StrategyKind::uniform: return "uniform";
    case StrategyKind::ada_gap: return "ada_gap";
    case StrategyKind::gap_per_epoch: return "gap_per_epoch";
    case StrategyKind::gauss_southwell: return "gs";
    case StrategyKind::max_r: return "max_r";
    case StrategyKind::b_max_r: return "b_max_r";
    }
    return "?";
}

inline StrategyKind parse_strategy(std::string_view name)
{
    for (auto k : {StrategyKind::uniform, StrategyKind::ada_gap, StrategyKind::gap_per_epoch,
                   StrategyKind::gauss_southwell, StrategyKind::max_r, StrategyKind::b_max_r}) {
        if (name == to_string(k)) return k;
    }
    throw argument_error("unknown strategy '" + std::string(name)
                         + "' (expected uniform|ada_gap|gap_per_epoch|gs|max_r|b_max_r)");
}

struct StrategyConfig
{
    StrategyKind kind = StrategyKind::b_max_r;
    double epsilon = 0.5;      // exploration probability of b_max_r
    std::size_t bin_size = 0;  // E; 0 selects ceil(d / 2)
};

inline std::size_t default_bin_size(std::size_t d) { return (d + 1) / 2; }

inline constexpr double degenerate_score_total = 1e-15;

/// Stateful coordinate chooser.
///
/// Full-information strategies (ada_gap, gs, max_r) are handed a fresh score
/// vector on every select(). Binned strategies (gap_per_epoch, b_max_r) keep
/// stale estimates that the engine overwrites through refresh_bin() whenever
/// t mod E == 0; b_max_r additionally receives feedback() with the marginal
/// decrease observed at the coordinate it just updated.
class Selector
{
public:
    Selector(StrategyConfig config, std::size_t d, std::uint64_t seed)
        : config_(config), d_(d), tree_(d == 0 ? 1 : d), rng_(seed)
    {
        if (d == 0) throw argument_error("selector: problem has no coordinates");
        if (!(config_.epsilon >= 0.0 && config_.epsilon <= 1.0)) {
            throw argument_error("selector: epsilon must be in [0, 1]");
        }
        if (config_.bin_size == 0) config_.bin_size = default_bin_size(d);
    }

    StrategyKind kind() const { return config_.kind; }
    double epsilon() const { return config_.epsilon; }
    std::size_t bin_size() const { return config_.bin_size; }
    std::size_t dim() const { return d_; }

    ScoreKind score_kind() const
    {
        switch (config_.kind) {
        case StrategyKind::uniform: return ScoreKind::none;
        case StrategyKind::ada_gap:
        case StrategyKind::gap_per_epoch: return ScoreKind::gap;
        case StrategyKind::gauss_southwell: return ScoreKind::gradient;
        case StrategyKind::max_r:
        case StrategyKind::b_max_r: return ScoreKind::marginal_decrease;
        }
        return ScoreKind::none;
    }

    bool full_information() const
    {
        return config_.kind == StrategyKind::ada_gap || config_.kind == StrategyKind::max_r
               || config_.kind == StrategyKind::gauss_southwell;
    }

    bool binned() const
    {
        return config_.kind == StrategyKind::gap_per_epoch || config_.kind == StrategyKind::b_max_r;
    }

    bool wants_feedback() const { return config_.kind == StrategyKind::b_max_r; }

    // Bin boundary for the 1-based iteration t.
    bool refresh_due(std::uint64_t t) const { return binned() && t % config_.bin_size == 0; }

    std::size_t select(std::span<const double> fresh_scores = {})
    {
        ++iteration_;
        switch (config_.kind) {
        case StrategyKind::uniform: return uniform_pick();
        case StrategyKind::max_r:
        case StrategyKind::gauss_southwell:
            load(fresh_scores);
            return tree_.argmax();
        case StrategyKind::ada_gap:
            load(fresh_scores);
            return proportional_pick();
        case StrategyKind::gap_per_epoch: return proportional_pick();
        case StrategyKind::b_max_r:
            if (rng_.bernoulli(config_.epsilon)) return uniform_pick();
            return tree_.argmax();
        }
        return 0;
    }

    // Replaces the estimate of coordinate i; other strategies ignore it.
    void feedback(std::size_t i, double r_observed)
    {
        if (!wants_feedback()) return;
        if (i >= d_) throw argument_error("feedback: coordinate out of range");
        if (r_observed < 0.0) {
            if (r_observed < -1e-12) {
                throw consistency_error("feedback: negative marginal decrease "
                                        + std::to_string(r_observed));
            }
            r_observed = 0.0;
        }
        tree_.set(i, r_observed);
    }

    void refresh_bin(std::span<const double> all_scores)
    {
        if (all_scores.size() != d_) throw argument_error("refresh_bin: score vector length != d");
        tree_.assign(all_scores);
        ++refreshes_;
    }

    const ScoreTree& estimates() const { return tree_; }
    std::uint64_t iteration() const { return iteration_; }
    std::uint64_t refreshes() const { return refreshes_; }

private:
    void load(std::span<const double> scores)
    {
        if (scores.size() != d_) {
            throw argument_error("select: strategy '" + std::string(to_string(config_.kind))
                                 + "' needs a fresh score vector of length d");
        }
        tree_.assign(scores);
    }

    std::size_t uniform_pick() { return static_cast<std::size_t>(rng_.index(d_)); }

    std::size_t proportional_pick()
    {
        if (!(tree_.total() > degenerate_score_total)) return uniform_pick();
        return tree_.sample(rng_.uniform());
    }

    StrategyConfig config_;
    std::size_t d_;
    ScoreTree tree_;
    Rng rng_;
    std::uint64_t iteration_ = 0;
    std::uint64_t refreshes_ = 0;
};

} // namespace bcd
