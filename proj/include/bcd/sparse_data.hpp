#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <bcd/errors.hpp>
#include <bcd/random.hpp>

namespace bcd {

struct Triplet
{
    std::size_t row;
    std::size_t col;
    double value;
};

// Compressed sparse column storage. Coordinate descent touches one column per
// iteration, so each column is a contiguous (row, value) run and its squared
// norm is cached at construction.
class SparseColumnMatrix
{
public:
    SparseColumnMatrix() = default;

    // Duplicate (row, col) pairs are rejected; explicit zeros are dropped.
    static SparseColumnMatrix from_triplets(
        std::size_t n_rows, std::size_t n_cols, std::vector<Triplet> triplets)
    {
        for (const auto& t : triplets) {
            if (t.row >= n_rows || t.col >= n_cols) {
                throw argument_error("triplet index out of range");
            }
        }
        std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
            return a.col != b.col ? a.col < b.col : a.row < b.row;
        });
        SparseColumnMatrix m;
        m.n_rows_ = n_rows;
        m.col_ptr_.assign(n_cols + 1, 0);
        for (std::size_t k = 0; k < triplets.size(); ++k) {
            const auto& t = triplets[k];
            if (k > 0 && triplets[k - 1].col == t.col && triplets[k - 1].row == t.row) {
                throw argument_error("duplicate entry in column " + std::to_string(t.col));
            }
            if (t.value == 0.0) continue;
            m.row_idx_.push_back(t.row);
            m.values_.push_back(t.value);
            ++m.col_ptr_[t.col + 1];
        }
        std::partial_sum(m.col_ptr_.begin(), m.col_ptr_.end(), m.col_ptr_.begin());
        m.compute_norms();
        return m;
    }

    // Each column is a list of (row, value) pairs with strictly increasing rows.
    static SparseColumnMatrix from_columns(
        std::size_t n_rows,
        const std::vector<std::vector<std::pair<std::size_t, double>>>& columns)
    {
        SparseColumnMatrix m;
        m.n_rows_ = n_rows;
        m.col_ptr_.assign(1, 0);
        m.col_ptr_.reserve(columns.size() + 1);
        for (std::size_t j = 0; j < columns.size(); ++j) {
            std::size_t prev = 0;
            bool first = true;
            for (const auto& [row, value] : columns[j]) {
                if (row >= n_rows) throw argument_error("row index out of range");
                if (!first && row <= prev) {
                    throw argument_error(
                        "rows not strictly increasing in column " + std::to_string(j));
                }
                first = false;
                prev = row;
                if (value == 0.0) continue;
                m.row_idx_.push_back(row);
                m.values_.push_back(value);
            }
            m.col_ptr_.push_back(m.row_idx_.size());
        }
        m.compute_norms();
        return m;
    }

    std::size_t rows() const noexcept { return n_rows_; }
    std::size_t cols() const noexcept { return col_ptr_.empty() ? 0 : col_ptr_.size() - 1; }
    std::size_t nnz() const noexcept { return values_.size(); }

    std::size_t col_nnz(std::size_t j) const { return col_ptr_[j + 1] - col_ptr_[j]; }

    std::span<const std::size_t> col_rows(std::size_t j) const
    {
        return {row_idx_.data() + col_ptr_[j], col_nnz(j)};
    }

    std::span<const double> col_values(std::size_t j) const
    {
        return {values_.data() + col_ptr_[j], col_nnz(j)};
    }

    double col_sq_norm(std::size_t j) const { return col_sq_norm_[j]; }
    std::span<const double> col_sq_norms() const { return col_sq_norm_; }

    double col_dot(std::size_t j, std::span<const double> v) const
    {
        double s = 0.0;
        for (std::size_t k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) {
            s += values_[k] * v[row_idx_[k]];
        }
        return s;
    }

    // y += alpha * a_j
    void col_axpy(std::size_t j, double alpha, std::span<double> y) const
    {
        for (std::size_t k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) {
            y[row_idx_[k]] += alpha * values_[k];
        }
    }

    std::vector<double> multiply(std::span<const double> x) const
    {
        if (x.size() != cols()) throw argument_error("multiply: dimension mismatch");
        std::vector<double> y(n_rows_, 0.0);
        for (std::size_t j = 0; j < cols(); ++j) {
            if (x[j] != 0.0) col_axpy(j, x[j], y);
        }
        return y;
    }

    std::vector<double> transpose_multiply(std::span<const double> w) const
    {
        if (w.size() != n_rows_) throw argument_error("transpose_multiply: dimension mismatch");
        std::vector<double> out(cols());
        for (std::size_t j = 0; j < cols(); ++j) out[j] = col_dot(j, w);
        return out;
    }

    SparseColumnMatrix transpose() const
    {
        SparseColumnMatrix t;
        t.n_rows_ = cols();
        t.col_ptr_.assign(n_rows_ + 1, 0);
        for (auto r : row_idx_) ++t.col_ptr_[r + 1];
        std::partial_sum(t.col_ptr_.begin(), t.col_ptr_.end(), t.col_ptr_.begin());
        t.row_idx_.resize(nnz());
        t.values_.resize(nnz());
        std::vector<std::size_t> next(t.col_ptr_.begin(), t.col_ptr_.end() - 1);
        // columns are visited in order, so rows of the transpose come out sorted
        for (std::size_t j = 0; j < cols(); ++j) {
            for (std::size_t k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) {
                const auto dst = next[row_idx_[k]]++;
                t.row_idx_[dst] = j;
                t.values_[dst] = values_[k];
            }
        }
        t.compute_norms();
        return t;
    }

    // Column j scaled by factor; used by the column rescaling helpers.
    SparseColumnMatrix with_column_scales(std::span<const double> factors) const
    {
        if (factors.size() != cols()) throw argument_error("scale vector length mismatch");
        SparseColumnMatrix m = *this;
        for (std::size_t j = 0; j < cols(); ++j) {
            for (std::size_t k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) {
                m.values_[k] *= factors[j];
            }
        }
        m.compute_norms();
        return m;
    }

    // Keeps the listed columns, in the listed order.
    SparseColumnMatrix select_columns(std::span<const std::size_t> keep) const
    {
        std::vector<std::vector<std::pair<std::size_t, double>>> columns(keep.size());
        for (std::size_t c = 0; c < keep.size(); ++c) {
            const auto rows = col_rows(keep[c]);
            const auto vals = col_values(keep[c]);
            for (std::size_t k = 0; k < rows.size(); ++k) columns[c].emplace_back(rows[k], vals[k]);
        }
        return from_columns(n_rows_, columns);
    }

    friend bool operator==(const SparseColumnMatrix&, const SparseColumnMatrix&) = default;

private:
    void compute_norms()
    {
        col_sq_norm_.assign(cols(), 0.0);
        for (std::size_t j = 0; j < cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) s += values_[k] * values_[k];
            col_sq_norm_[j] = s;
        }
    }

    std::size_t n_rows_ = 0;
    std::vector<std::size_t> col_ptr_{0};
    std::vector<std::size_t> row_idx_;
    std::vector<double> values_;
    std::vector<double> col_sq_norm_;
};

struct LabeledDataset
{
    SparseColumnMatrix matrix;
    std::vector<double> labels;

    friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

inline bool has_binary_labels(const LabeledDataset& data)
{
    return std::all_of(data.labels.begin(), data.labels.end(),
                       [](double y) { return y == 1.0 || y == -1.0; });
}

namespace detail {

inline bool parse_double(std::string_view token, double& out)
{
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

inline bool parse_index(std::string_view token, std::size_t& out)
{
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, out);
    return ec == std::errc() && ptr == end;
}

inline std::string format_double(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

} // namespace detail

/// Reads LIBSVM text (`<label> <idx>:<val> ...`, 1-based strictly increasing
/// indices). Lines become rows and features become columns.
///
/// With `expect_binary_labels`, label sets {0,1} and {1,2} are remapped to
/// {-1,+1}; any other set outside {-1,+1} is a parse error. `n_cols` forces
/// the column count (must cover every index seen); 0 infers it from the data.
inline LabeledDataset parse_libsvm(
    std::istream& in, bool expect_binary_labels, std::size_t n_cols = 0)
{
    std::vector<Triplet> triplets;
    std::vector<double> labels;
    std::size_t max_col = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream tokens(line);
        std::string token;
        if (!(tokens >> token)) continue;
        double label;
        if (!detail::parse_double(token, label)) {
            throw parse_error(line_no, "malformed label '" + token + "'");
        }
        const std::size_t row = labels.size();
        labels.push_back(label);
        std::size_t prev = 0;
        while (tokens >> token) {
            const auto colon = token.find(':');
            std::size_t idx;
            double value;
            if (colon == std::string::npos
                || !detail::parse_index(std::string_view(token).substr(0, colon), idx)
                || !detail::parse_double(std::string_view(token).substr(colon + 1), value)) {
                throw parse_error(line_no, "malformed feature '" + token + "'");
            }
            if (idx == 0) throw parse_error(line_no, "feature indices are 1-based");
            if (idx <= prev) {
                throw parse_error(line_no, "feature indices must be strictly increasing");
            }
            prev = idx;
            max_col = std::max(max_col, idx);
            triplets.push_back({row, idx - 1, value});
        }
    }
    if (labels.empty()) throw parse_error(0, "empty input");
    if (n_cols != 0 && n_cols < max_col) {
        throw parse_error(0, "feature index " + std::to_string(max_col)
                                 + " exceeds declared column count " + std::to_string(n_cols));
    }

    if (expect_binary_labels) {
        auto all_in = [&](double a, double b) {
            return std::all_of(labels.begin(), labels.end(),
                               [&](double y) { return y == a || y == b; });
        };
        if (all_in(-1.0, 1.0)) {
        } else if (all_in(0.0, 1.0)) {
            for (auto& y : labels) y = y == 0.0 ? -1.0 : 1.0;
        } else if (all_in(1.0, 2.0)) {
            for (auto& y : labels) y = y == 1.0 ? -1.0 : 1.0;
        } else {
            throw parse_error(0, "labels are not binary");
        }
    }

    const auto cols = n_cols != 0 ? n_cols : max_col;
    return {SparseColumnMatrix::from_triplets(labels.size(), cols, std::move(triplets)),
            std::move(labels)};
}

inline LabeledDataset parse_libsvm(std::string_view text, bool expect_binary_labels)
{
    std::istringstream in{std::string(text)};
    return parse_libsvm(in, expect_binary_labels);
}

inline LabeledDataset load_libsvm(const std::string& path, bool expect_binary_labels,
                                  std::size_t n_cols = 0)
{
    std::ifstream in(path);
    if (!in) throw argument_error("cannot open '" + path + "'");
    return parse_libsvm(in, expect_binary_labels, n_cols);
}

inline void write_libsvm(std::ostream& out, const LabeledDataset& data)
{
    const auto rows = data.matrix.transpose();
    for (std::size_t i = 0; i < data.labels.size(); ++i) {
        out << detail::format_double(data.labels[i]);
        const auto idx = rows.col_rows(i);
        const auto vals = rows.col_values(i);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            out << ' ' << idx[k] + 1 << ':' << detail::format_double(vals[k]);
        }
        out << '\n';
    }
}

struct RescaledMatrix
{
    SparseColumnMatrix matrix;
    // new column c = original column kept[c] / scales[c]; map solutions back
    // with x_original[kept[c]] = x_new[c] / scales[c].
    std::vector<double> scales;
    std::vector<std::size_t> kept;
    std::vector<std::size_t> dropped;
};

/// Scales every column to squared norm `target_sq_norm`, dropping all-zero
/// columns (their original indices are listed in `dropped`).
inline RescaledMatrix rescale_columns(const SparseColumnMatrix& m, double target_sq_norm)
{
    if (!(target_sq_norm > 0.0)) throw argument_error("target squared norm must be positive");
    RescaledMatrix out;
    for (std::size_t j = 0; j < m.cols(); ++j) {
        if (m.col_sq_norm(j) > 0.0) {
            out.kept.push_back(j);
        } else {
            out.dropped.push_back(j);
        }
    }
    auto kept = m.select_columns(out.kept);
    std::vector<double> factors(kept.cols());
    out.scales.resize(kept.cols());
    for (std::size_t c = 0; c < kept.cols(); ++c) {
        out.scales[c] = std::sqrt(kept.col_sq_norm(c) / target_sq_norm);
        factors[c] = 1.0 / out.scales[c];
    }
    out.matrix = kept.with_column_scales(factors);
    return out;
}

inline RescaledMatrix normalize_columns(const SparseColumnMatrix& m)
{
    return rescale_columns(m, 1.0);
}

struct SyntheticSpec
{
    std::size_t n = 0;
    std::size_t d = 0;
    double sparsity = 1.0;      // expected fraction of stored entries
    std::size_t nnz_signal = 0; // nonzeros in the planted x*
    double noise_sd = 0.0;
    double signal_decay = 0.7;  // |x*_k| = decay^k for the k-th planted coordinate
};

/// Planted sparse regression problem Y = A x* + noise. Entries of A are
/// standard normal at Bernoulli(sparsity) positions; a column left empty by
/// the draw receives one entry at a random row so every column is usable.
inline LabeledDataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed)
{
    if (spec.n == 0 || spec.d == 0) throw argument_error("synthetic: n and d must be positive");
    if (!(spec.sparsity > 0.0 && spec.sparsity <= 1.0)) {
        throw argument_error("synthetic: sparsity must be in (0, 1]");
    }
    if (spec.nnz_signal > spec.d) throw argument_error("synthetic: nnz_signal exceeds d");
    if (!(spec.noise_sd >= 0.0)) throw argument_error("synthetic: noise_sd must be >= 0");
    if (!(spec.signal_decay > 0.0 && spec.signal_decay <= 1.0)) {
        throw argument_error("synthetic: signal_decay must be in (0, 1]");
    }

    Rng rng(seed);
    std::vector<std::vector<std::pair<std::size_t, double>>> columns(spec.d);
    for (std::size_t j = 0; j < spec.d; ++j) {
        for (std::size_t i = 0; i < spec.n; ++i) {
            if (rng.uniform() < spec.sparsity) columns[j].emplace_back(i, rng.normal());
        }
        if (columns[j].empty()) columns[j].emplace_back(rng.index(spec.n), rng.normal());
    }
    auto matrix = SparseColumnMatrix::from_columns(spec.n, columns);

    // partial Fisher-Yates picks the planted support
    std::vector<std::size_t> perm(spec.d);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<double> x_star(spec.d, 0.0);
    double magnitude = 1.0;
    for (std::size_t k = 0; k < spec.nnz_signal; ++k) {
        const auto pick = k + rng.index(spec.d - k);
        std::swap(perm[k], perm[pick]);
        x_star[perm[k]] = rng.bernoulli(0.5) ? magnitude : -magnitude;
        magnitude *= spec.signal_decay;
    }

    auto labels = matrix.multiply(x_star);
    if (spec.noise_sd > 0.0) {
        for (auto& y : labels) y += rng.normal(0.0, spec.noise_sd);
    }
    return {std::move(matrix), std::move(labels)};
}

// Sign of each regression target as a +-1 class label (0 maps to +1).
inline LabeledDataset to_binary_labels(LabeledDataset data)
{
    for (auto& y : data.labels) y = y < 0.0 ? -1.0 : 1.0;
    return data;
}

} // namespace bcd
