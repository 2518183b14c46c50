#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ulra/errors.hpp"

namespace ulra {

// Dense row-major matrix of doubles. Entries are validated to be finite on
// construction from user data; a default-constructed Matrix is the empty 0x0
// sentinel. Values are treated as immutable once built and are safe to share
// across threads.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * cols_, cols_};
    }
    std::span<const double> flat() const { return {data_.data(), data_.size()}; }

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix transpose(const Matrix& a);
Matrix multiply(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);

// max|a_ij|; empty matrix is a dimension error
double uniform_norm(const Matrix& a);

double frobenius_norm(const Matrix& a);

// Largest singular value to relative accuracy tol, by power iteration on A^T A.
// The iteration cap is 10*min(rows, cols) + 100; hitting it raises
// IterationLimitError carrying the best estimate.
double spectral_norm(const Matrix& a, double tol = 1e-10);

// Text format: first line "rows cols", then `rows` lines of `cols`
// whitespace-separated decimal reals. '#'-prefixed lines are comments.
// Writes use LF endings and 17 significant digits, so read(write(a)) == a.
Matrix read_matrix(std::istream& in);
Matrix read_matrix(const std::string& path);
void write_matrix(const Matrix& a, std::ostream& out);
void write_matrix(const Matrix& a, const std::string& path);

}  // namespace ulra
