#include <cmath>
#include <sstream>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <bcd/random.hpp>
#include <bcd/sparse_data.hpp>

using namespace bcd;

namespace {

Eigen::MatrixXd dense(const SparseColumnMatrix& m)
{
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m.rows()),
                                              static_cast<Eigen::Index>(m.cols()));
    for (std::size_t j = 0; j < m.cols(); ++j) {
        const auto rows = m.col_rows(j);
        const auto vals = m.col_values(j);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            a(static_cast<Eigen::Index>(rows[k]), static_cast<Eigen::Index>(j)) = vals[k];
        }
    }
    return a;
}

SparseColumnMatrix random_matrix(Rng& rng, std::size_t n, std::size_t d, double density)
{
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            if (rng.bernoulli(density)) t.push_back({i, j, rng.normal()});
        }
    }
    return SparseColumnMatrix::from_triplets(n, d, t);
}

} // namespace

TEST(ParseLibsvm, TwoRowExample)
{
    const auto data = parse_libsvm("1 1:2.0 3:1.0\n-1 2:4.0", false);
    ASSERT_EQ(data.matrix.rows(), 2u);
    ASSERT_EQ(data.matrix.cols(), 3u);
    const Eigen::MatrixXd a = dense(data.matrix);
    Eigen::MatrixXd expected(2, 3);
    expected << 2, 0, 1, 0, 4, 0;
    EXPECT_EQ(a, expected);
    EXPECT_EQ(data.labels, (std::vector<double>{1.0, -1.0}));
}

TEST(ParseLibsvm, EmptyInputIsAnError)
{
    try {
        parse_libsvm("", false);
        FAIL() << "expected parse_error";
    } catch (const parse_error& e) {
        EXPECT_STREQ(e.what(), "empty input");
    }
    EXPECT_THROW(parse_libsvm("\n  \n", false), parse_error);
}

TEST(ParseLibsvm, ZeroOneLabelsRemapToPlusMinusOne)
{
    const auto data = parse_libsvm("0 5:1 12:1\n1 1:1", true);
    EXPECT_EQ(data.labels[0], -1.0);
    EXPECT_EQ(data.labels[1], 1.0);
    EXPECT_EQ(data.matrix.col_nnz(4), 1u);
    EXPECT_EQ(data.matrix.col_nnz(11), 1u);
    EXPECT_EQ(data.matrix.col_values(4)[0], 1.0);
    EXPECT_EQ(data.matrix.col_values(11)[0], 1.0);
    EXPECT_EQ(data.matrix.nnz(), 3u);
}

TEST(ParseLibsvm, OneTwoLabelsRemap)
{
    const auto data = parse_libsvm("1 1:1\n2 1:1", true);
    EXPECT_EQ(data.labels, (std::vector<double>{-1.0, 1.0}));
}

TEST(ParseLibsvm, NonBinaryLabelsRejectedWhenBinaryExpected)
{
    EXPECT_THROW(parse_libsvm("0.5 1:1\n1 1:1", true), parse_error);
    EXPECT_NO_THROW(parse_libsvm("0.5 1:1\n1 1:1", false));
}

TEST(ParseLibsvm, MalformedTokenReportsLine)
{
    try {
        parse_libsvm("1 1:2\n1 2:x\n", false);
        FAIL() << "expected parse_error";
    } catch (const parse_error& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    EXPECT_THROW(parse_libsvm("abc 1:2", false), parse_error);
    EXPECT_THROW(parse_libsvm("1 12", false), parse_error);
    EXPECT_THROW(parse_libsvm("1 0:1", false), parse_error);
}

TEST(ParseLibsvm, NonIncreasingIndicesRejected)
{
    try {
        parse_libsvm("1 1:1\n\n1 3:1 2:1", false);
        FAIL() << "expected parse_error";
    } catch (const parse_error& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(parse_libsvm("1 2:1 2:1", false), parse_error);
}

TEST(ParseLibsvm, DeclaredColumnCount)
{
    std::istringstream in("1 2:1");
    EXPECT_EQ(parse_libsvm(in, false, 5).matrix.cols(), 5u);
    std::istringstream too_small("1 7:1");
    EXPECT_THROW(parse_libsvm(too_small, false, 5), parse_error);
}

TEST(ParseLibsvm, RoundTripProperty)
{
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = 1 + rng.index(8);
        const auto d = 1 + rng.index(8);
        auto m = random_matrix(rng, n, d, 0.4);
        std::vector<double> labels(n);
        for (auto& y : labels) y = rng.normal();
        const LabeledDataset data{m, labels};
        std::ostringstream out;
        write_libsvm(out, data);
        std::istringstream in(out.str());
        const auto back = parse_libsvm(in, false, d);
        EXPECT_EQ(back, data);
    }
}

TEST(SparseColumnMatrix, TripletsRejectDuplicatesAndDropZeros)
{
    EXPECT_THROW(SparseColumnMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 0, 2.0}}), argument_error);
    EXPECT_THROW(SparseColumnMatrix::from_triplets(2, 2, {{2, 0, 1.0}}), argument_error);
    const auto m = SparseColumnMatrix::from_triplets(2, 2, {{0, 0, 0.0}, {1, 1, 3.0}});
    EXPECT_EQ(m.nnz(), 1u);
    EXPECT_EQ(m.col_sq_norm(1), 9.0);
}

TEST(SparseColumnMatrix, ProductsMatchDenseProperty)
{
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const auto n = 1 + rng.index(12);
        const auto d = 1 + rng.index(12);
        const auto m = random_matrix(rng, n, d, 0.5);
        const Eigen::MatrixXd a = dense(m);
        std::vector<double> x(d), w(n);
        for (auto& v : x) v = rng.normal();
        for (auto& v : w) v = rng.normal();
        const auto ax = m.multiply(x);
        const auto atw = m.transpose_multiply(w);
        const Eigen::VectorXd ax_ref = a * Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
        const Eigen::VectorXd atw_ref =
            a.transpose() * Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(ax[i], ax_ref(static_cast<Eigen::Index>(i)), 1e-12);
        for (std::size_t j = 0; j < d; ++j) {
            EXPECT_NEAR(atw[j], atw_ref(static_cast<Eigen::Index>(j)), 1e-12);
            EXPECT_NEAR(m.col_sq_norm(j), a.col(static_cast<Eigen::Index>(j)).squaredNorm(), 1e-12);
        }
        EXPECT_EQ(dense(m.transpose()), a.transpose());
        EXPECT_EQ(m.transpose().transpose(), m);
    }
}

TEST(SparseColumnMatrix, DimensionMismatchThrows)
{
    const auto m = SparseColumnMatrix::from_triplets(2, 3, {{0, 0, 1.0}});
    EXPECT_THROW(m.multiply(std::vector<double>(2)), argument_error);
    EXPECT_THROW(m.transpose_multiply(std::vector<double>(3)), argument_error);
}

TEST(NormalizeColumns, ThreeFourFive)
{
    const auto m = SparseColumnMatrix::from_triplets(2, 1, {{0, 0, 3.0}, {1, 0, 4.0}});
    const auto r = normalize_columns(m);
    EXPECT_DOUBLE_EQ(r.matrix.col_values(0)[0], 0.6);
    EXPECT_DOUBLE_EQ(r.matrix.col_values(0)[1], 0.8);
    EXPECT_DOUBLE_EQ(r.scales[0], 5.0);
}

TEST(NormalizeColumns, UnitColumnUnchanged)
{
    const auto m = SparseColumnMatrix::from_triplets(2, 1, {{0, 0, 0.6}, {1, 0, 0.8}});
    const auto r = normalize_columns(m);
    EXPECT_DOUBLE_EQ(r.scales[0], 1.0);
    EXPECT_DOUBLE_EQ(r.matrix.col_values(0)[0], 0.6);
    EXPECT_DOUBLE_EQ(r.matrix.col_values(0)[1], 0.8);
}

TEST(NormalizeColumns, ZeroColumnDropped)
{
    const auto m = SparseColumnMatrix::from_triplets(2, 3, {{0, 0, 2.0}, {1, 2, -1.0}});
    const auto r = normalize_columns(m);
    EXPECT_EQ(r.matrix.cols(), 2u);
    EXPECT_EQ(r.dropped, (std::vector<std::size_t>{1}));
    EXPECT_EQ(r.kept, (std::vector<std::size_t>{0, 2}));
}

TEST(NormalizeColumns, NormsAreOneProperty)
{
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = random_matrix(rng, 1 + rng.index(10), 1 + rng.index(10), 0.5);
        const auto r = normalize_columns(m);
        for (std::size_t c = 0; c < r.matrix.cols(); ++c) {
            EXPECT_NEAR(r.matrix.col_sq_norm(c), 1.0, 1e-12);
            EXPECT_NEAR(r.scales[c] * r.scales[c], m.col_sq_norm(r.kept[c]), 1e-12);
        }
        const auto rms = rescale_columns(m, 7.0);
        for (std::size_t c = 0; c < rms.matrix.cols(); ++c) EXPECT_NEAR(rms.matrix.col_sq_norm(c), 7.0, 1e-11);
    }
}

TEST(GenerateSynthetic, Deterministic)
{
    const SyntheticSpec spec{4, 3, 1.0, 1, 0.0};
    EXPECT_EQ(generate_synthetic(spec, 7), generate_synthetic(spec, 7));
    EXPECT_NE(generate_synthetic(spec, 7), generate_synthetic(spec, 8));
}

TEST(GenerateSynthetic, NoiselessTargetsLieInColumnSpace)
{
    const SyntheticSpec spec{4, 3, 1.0, 3, 0.0};
    const auto data = generate_synthetic(spec, 7);
    const Eigen::MatrixXd a = dense(data.matrix);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(data.labels.data(), 4);
    const Eigen::VectorXd x = a.colPivHouseholderQr().solve(y);
    EXPECT_LE((a * x - y).norm(), 1e-9);
}

TEST(GenerateSynthetic, InvalidArguments)
{
    EXPECT_THROW(generate_synthetic({4, 3, 1.0, 4, 0.0}, 1), argument_error);
    EXPECT_THROW(generate_synthetic({0, 3, 1.0, 1, 0.0}, 1), argument_error);
    EXPECT_THROW(generate_synthetic({4, 3, 0.0, 1, 0.0}, 1), argument_error);
    EXPECT_THROW(generate_synthetic({4, 3, 1.5, 1, 0.0}, 1), argument_error);
    EXPECT_THROW(generate_synthetic({4, 3, 0.5, 1, -1.0}, 1), argument_error);
}

TEST(GenerateSynthetic, EveryColumnHasAnEntry)
{
    const auto data = generate_synthetic({30, 40, 0.02, 3, 0.1}, 2);
    for (std::size_t j = 0; j < data.matrix.cols(); ++j) EXPECT_GE(data.matrix.col_nnz(j), 1u);
}

TEST(Rng, UniformInUnitIntervalAndIndexInRange)
{
    Rng rng(1);
    for (int k = 0; k < 10000; ++k) {
        const double u = rng.uniform();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
        EXPECT_LT(rng.index(7), 7u);
    }
}
