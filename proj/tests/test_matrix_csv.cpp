#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "pdoa/matrix_csv.hpp"

namespace pdoa {
namespace {

TEST(MatrixCsv, WritesHeaderAndRowMajorEntries) {
    ComplexMatrix m(2, 2);
    m << Complex(1, 0), Complex(0.5, -0.25), Complex(-1, 2), Complex(0, 1e-300);
    EXPECT_EQ(matrix_to_csv(m), "p,k,re,im\n1,1,1,0\n1,2,0.5,-0.25\n2,1,-1,2\n2,2,0,1e-300\n");
}

// Property: write -> read reproduces every entry bit for bit.
TEST(MatrixCsvProperty, RoundTripIsExact) {
    std::mt19937_64 gen(3);
    std::uniform_int_distribution<int> dim(1, 9);
    std::normal_distribution<double> val(0.0, 1.0);
    std::uniform_int_distribution<int> exp(-300, 300);
    for (int trial = 0; trial < 100; ++trial) {
        ComplexMatrix m(dim(gen), dim(gen));
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            m(i) = Complex(std::ldexp(val(gen), exp(gen) / 10), val(gen));
        }
        if (trial == 0) m(0) = Complex(std::numeric_limits<double>::denorm_min(), -0.0);
        const ComplexMatrix back = matrix_from_csv(matrix_to_csv(m));
        ASSERT_EQ(back.rows(), m.rows());
        ASSERT_EQ(back.cols(), m.cols());
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            ASSERT_EQ(back(i).real(), m(i).real());
            ASSERT_EQ(back(i).imag(), m(i).imag());
        }
    }
}

TEST(MatrixCsv, AcceptsAnyOrderAndWhitespace) {
    const ComplexMatrix m = matrix_from_csv("p,k,re,im\r\n2,1, 3,4\r\n1,1,1,2\n\n");
    ASSERT_EQ(m.rows(), 2);
    ASSERT_EQ(m.cols(), 1);
    EXPECT_EQ(m(0, 0), Complex(1, 2));
    EXPECT_EQ(m(1, 0), Complex(3, 4));
}

int error_line(const std::string& text) {
    try {
        matrix_from_csv(text);
    } catch (const CsvFormatError& e) {
        EXPECT_EQ(std::string(e.what()).rfind("line " + std::to_string(e.line()) + ": ", 0), 0u) << e.what();
        return e.line();
    }
    return -1;
}

TEST(MatrixCsv, MissingFieldReportsLine) {
    EXPECT_EQ(error_line("p,k,re,im\n1,1,1,0\n1,2,0.5\n"), 3);
}

TEST(MatrixCsv, UnparsableFieldReportsLine) {
    EXPECT_EQ(error_line("p,k,re,im\n1,1,1,0\n1,2,abc,0\n"), 3);
    EXPECT_EQ(error_line("p,k,re,im\n1.5,1,1,0\n"), 2);
    EXPECT_EQ(error_line("p,k,re,im\n1,1,1,0,7\n"), 2);
}

TEST(MatrixCsv, BadHeader) {
    EXPECT_EQ(error_line("k,p,re,im\n1,1,1,0\n"), 1);
    EXPECT_EQ(error_line(""), 1);
}

TEST(MatrixCsv, DuplicateAndZeroIndex) {
    EXPECT_EQ(error_line("p,k,re,im\n1,1,1,0\n1,1,1,0\n"), 3);
    EXPECT_EQ(error_line("p,k,re,im\n0,1,1,0\n"), 2);
}

TEST(MatrixCsv, IncompleteGridRejected) {
    EXPECT_THROW(matrix_from_csv("p,k,re,im\n1,1,1,0\n2,2,1,0\n"), InvalidArgument);
    EXPECT_THROW(matrix_from_csv("p,k,re,im\n"), InvalidArgument);
}

}  // namespace
}  // namespace pdoa
