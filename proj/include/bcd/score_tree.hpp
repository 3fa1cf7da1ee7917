#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <bcd/errors.hpp>

namespace bcd {

// Complete binary tree over d nonnegative leaf scores. Each node caches the
// subtree sum and the subtree maximum with its lowest leaf index, so point
// updates, proportional sampling and argmax all cost O(log d).
class ScoreTree
{
public:
    explicit ScoreTree(std::size_t size) : size_(size)
    {
        if (size == 0) throw argument_error("ScoreTree: size must be positive");
        capacity_ = 1;
        while (capacity_ < size) capacity_ <<= 1;
        sum_.assign(2 * capacity_, 0.0);
        max_.assign(2 * capacity_, -std::numeric_limits<double>::infinity());
        arg_.assign(2 * capacity_, 0);
        for (std::size_t i = 0; i < capacity_; ++i) {
            arg_[capacity_ + i] = i;
            if (i < size_) max_[capacity_ + i] = 0.0;
        }
        for (std::size_t node = capacity_ - 1; node >= 1; --node) pull(node);
    }

    std::size_t size() const { return size_; }

    double get(std::size_t i) const { return sum_[capacity_ + i]; }

    void set(std::size_t i, double value)
    {
        check_value(value);
        std::size_t node = capacity_ + i;
        sum_[node] = value;
        max_[node] = value;
        visits_ = 1;
        for (node >>= 1; node >= 1; node >>= 1) {
            pull(node);
            ++visits_;
        }
    }

    // Overwrites every leaf and rebuilds the aggregates in O(d).
    void assign(std::span<const double> values)
    {
        if (values.size() != size_) throw argument_error("ScoreTree: score vector length mismatch");
        for (std::size_t i = 0; i < size_; ++i) {
            check_value(values[i]);
            sum_[capacity_ + i] = values[i];
            max_[capacity_ + i] = values[i];
        }
        for (std::size_t node = capacity_ - 1; node >= 1; --node) pull(node);
        visits_ = 2 * capacity_ - 1;
    }

    double total() const { return sum_[1]; }
    double max_value() const { return max_[1]; }
    // ties resolve to the lowest index
    std::size_t argmax() const { return arg_[1]; }

    /// Leaf i with probability get(i) / total(), driven by u in [0, 1).
    /// Requires total() > 0. Never returns a zero-weight leaf.
    std::size_t sample(double u) const
    {
        double target = u * sum_[1];
        std::size_t node = 1;
        visits_ = 1;
        while (node < capacity_) {
            const std::size_t left = 2 * node;
            const std::size_t right = left + 1;
            bool go_left = target < sum_[left];
            if (go_left && sum_[left] <= 0.0) go_left = false;
            if (!go_left && sum_[right] <= 0.0) go_left = true;
            if (go_left) {
                node = left;
            } else {
                target -= sum_[left];
                node = right;
            }
            ++visits_;
        }
        return node - capacity_;
    }

    // Nodes touched by the most recent set/assign/sample.
    std::size_t last_visits() const { return visits_; }

private:
    static void check_value(double value)
    {
        if (!(value >= 0.0) || value == std::numeric_limits<double>::infinity()) {
            throw argument_error("ScoreTree: scores must be finite and nonnegative");
        }
    }

    void pull(std::size_t node)
    {
        const std::size_t l = 2 * node;
        const std::size_t r = l + 1;
        sum_[node] = sum_[l] + sum_[r];
        if (max_[r] > max_[l]) {
            max_[node] = max_[r];
            arg_[node] = arg_[r];
        } else {
            max_[node] = max_[l];
            arg_[node] = arg_[l];
        }
    }

    std::size_t size_;
    std::size_t capacity_;
    std::vector<double> sum_;
    std::vector<double> max_;
    std::vector<std::size_t> arg_;
    mutable std::size_t visits_ = 0;
};

} // namespace bcd
