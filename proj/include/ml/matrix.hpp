#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace ml {

using Vector = std::vector<double>;

/// Throws std::invalid_argument if any entry is NaN or infinite.
void check_finite(std::span<const double> values, const char* what);

/// Dense row-major matrix of doubles. Constructors reject non-finite data.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols);
    Matrix(std::size_t rows, std::size_t cols, Vector data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    Vector& data() { return data_; }
    const Vector& data() const { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vector data_;
};

// Serial reference kernels. Kept alongside the OpenMP versions so tests and
// the benchmark can compare the two; results are required to be bitwise equal.
namespace serial {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix pairwise_sq_dist(const Matrix& x);
}  // namespace serial

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& m, double s);

/// m (r x c) times v (length c).
Vector matvec(const Matrix& m, const Vector& v);
/// v (length r) times m (r x c), i.e. m^T v.
Vector vecmat(const Vector& v, const Matrix& m);

/// Squared Euclidean distances between all row pairs of x, (n x n).
Matrix pairwise_sq_dist(const Matrix& x);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
double sq_dist(std::span<const double> a, std::span<const double> b);

double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace ml
