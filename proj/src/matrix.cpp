#include "ulra/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace ulra {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (rows == 0 || cols == 0) throw DimensionError("matrix dimensions must be positive");
    if (!std::isfinite(fill)) throw ValidationError("matrix entries must be finite");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (rows == 0 || cols == 0) throw DimensionError("matrix dimensions must be positive");
    if (data_.size() != rows * cols)
        throw DimensionError("entry count does not match rows*cols");
    for (double v : data_)
        if (!std::isfinite(v)) throw ValidationError("matrix entries must be finite");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw DimensionError("inner dimensions do not match");
    Matrix c(a.rows(), b.cols(), 0.0);
    // ikj order keeps the inner loop contiguous in b and c
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* ci = c.data() + i * c.cols();
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* bk = b.data() + k * b.cols();
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError("shape mismatch in add");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] += b.data()[i];
    return c;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError("shape mismatch in subtract");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] -= b.data()[i];
    return c;
}

Matrix scale(const Matrix& a, double s) {
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] *= s;
    return c;
}

double uniform_norm(const Matrix& a) {
    if (a.empty()) throw DimensionError("uniform_norm of empty matrix");
    double m = 0.0;
    for (double v : a.flat()) m = std::max(m, std::fabs(v));
    return m;
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.flat()) s += v * v;
    return std::sqrt(s);
}

namespace {

// One multiplication by A^T A without forming it.
void apply_gram(const Matrix& a, const std::vector<double>& x, std::vector<double>& ax,
                std::vector<double>& y) {
    const std::size_t m = a.rows(), n = a.cols();
    ax.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a.data() + i * n;
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += ai[j] * x[j];
        ax[i] = s;
    }
    y.assign(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a.data() + i * n;
        const double s = ax[i];
        for (std::size_t j = 0; j < n; ++j) y[j] += ai[j] * s;
    }
}

}  // namespace

double spectral_norm(const Matrix& a, double tol) {
    if (a.empty()) throw DimensionError("spectral_norm of empty matrix");
    if (tol <= 0.0) throw ValidationError("tol must be positive");
    const std::size_t n = a.cols();
    const std::size_t cap = 10 * std::min(a.rows(), a.cols()) + 100;

    std::vector<double> x(n), ax, y;
    for (std::size_t j = 0; j < n; ++j) x[j] = 1.0 + 0.5 * ((j * 2654435761u) % 97) / 97.0;
    double nx = 0.0;
    for (double v : x) nx += v * v;
    nx = std::sqrt(nx);
    for (double& v : x) v /= nx;

    double lambda = 0.0;
    for (std::size_t it = 0; it < cap; ++it) {
        apply_gram(a, x, ax, y);
        double ynorm = 0.0;
        for (double v : y) ynorm += v * v;
        ynorm = std::sqrt(ynorm);
        if (ynorm == 0.0) return 0.0;  // x orthogonal to range; A^T A x = 0
        // Rayleigh quotient with unit x equals x^T A^T A x = y . x
        double rq = 0.0;
        for (std::size_t j = 0; j < n; ++j) rq += y[j] * x[j];
        for (std::size_t j = 0; j < n; ++j) x[j] = y[j] / ynorm;
        if (it > 0 && std::fabs(rq - lambda) <= tol * std::max(rq, 1e-300)) {
            return std::sqrt(std::max(rq, 0.0));
        }
        lambda = rq;
    }
    throw IterationLimitError("power iteration did not converge",
                              std::sqrt(std::max(lambda, 0.0)));
}

namespace {

bool is_blank_or_comment(const std::string& line) {
    for (char c : line) {
        if (c == '#') return true;
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

}  // namespace

Matrix read_matrix(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    std::size_t rows = 0, cols = 0;
    bool have_header = false;

    while (std::getline(in, line)) {
        ++lineno;
        if (is_blank_or_comment(line)) continue;
        std::istringstream hs(line);
        long long r = 0, c = 0;
        if (!(hs >> r >> c) || r <= 0 || c <= 0)
            throw ParseError("malformed header, expected \"rows cols\"", lineno);
        std::string extra;
        if (hs >> extra) throw ParseError("trailing tokens after header", lineno);
        rows = static_cast<std::size_t>(r);
        cols = static_cast<std::size_t>(c);
        have_header = true;
        break;
    }
    if (!have_header) throw ParseError("missing header", lineno);

    std::vector<double> entries;
    entries.reserve(rows * cols);
    while (entries.size() < rows * cols && std::getline(in, line)) {
        ++lineno;
        if (is_blank_or_comment(line)) continue;
        const char* p = line.c_str();
        char* end = nullptr;
        while (*p != '\0') {
            while (std::isspace(static_cast<unsigned char>(*p))) ++p;
            if (*p == '\0') break;
            const double v = std::strtod(p, &end);
            if (end == p) throw ParseError("non-numeric token", lineno);
            if (!std::isfinite(v)) throw ParseError("non-finite entry", lineno);
            if (entries.size() == rows * cols)
                throw ParseError("more entries than rows*cols", lineno);
            entries.push_back(v);
            p = end;
        }
    }
    if (entries.size() != rows * cols)
        throw ParseError("entry count mismatch: expected " + std::to_string(rows * cols) +
                             ", got " + std::to_string(entries.size()),
                         lineno);
    return Matrix(rows, cols, std::move(entries));
}

Matrix read_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path, 0);
    return read_matrix(in);
}

void write_matrix(const Matrix& a, std::ostream& out) {
    if (a.empty()) throw DimensionError("cannot write empty matrix");
    out << a.rows() << ' ' << a.cols() << '\n';
    char buf[32];
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", a(i, j));
            out << (j ? " " : "") << buf;
        }
        out << '\n';
    }
}

void write_matrix(const Matrix& a, const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
    if (!out) throw Error("cannot open " + path + " for writing");
    write_matrix(a, out);
    if (!out) throw Error("write failed for " + path);
}

}  // namespace ulra
