#pragma once

// Seeded instances shared by the unit tests and the acceptance runner.

#include <cstdint>

#include <bcd/problems.hpp>
#include <bcd/sparse_data.hpp>

namespace bcd::fixtures {

inline LabeledDataset regression_data(std::size_t n, std::size_t d, std::uint64_t seed,
                                      double sparsity = 0.3, std::size_t signal = 5)
{
    SyntheticSpec spec;
    spec.n = n;
    spec.d = d;
    spec.sparsity = sparsity;
    spec.nnz_signal = signal;
    spec.noise_sd = 0.01;
    return generate_synthetic(spec, seed);
}

inline LassoProblem small_lasso(std::uint64_t seed, std::size_t n = 200, std::size_t d = 100,
                                double lambda = 0.05)
{
    return make_lasso(regression_data(n, d, seed), lambda);
}

// Columns scaled to squared norm n, the regime where the shrinkage rule is an
// exact surrogate minimizer.
inline LogisticProblem small_logistic(std::uint64_t seed, std::size_t n = 200, std::size_t d = 100,
                                      double lambda = 0.01)
{
    auto data = to_binary_labels(regression_data(n, d, seed));
    data.matrix = rescale_columns(data.matrix, static_cast<double>(n)).matrix;
    return make_logistic_l1(std::move(data), lambda);
}

// Primal data n x d; the dual problem has n coordinates.
inline RidgeDualProblem small_ridge(std::uint64_t seed, std::size_t n = 200, std::size_t d = 100,
                                   double lambda = 0.1)
{
    return make_ridge_dual(regression_data(n, d, seed), lambda);
}

} // namespace bcd::fixtures
