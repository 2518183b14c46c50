#include "ulra/norm_bounds.hpp"

#include <algorithm>
#include <cmath>

#include "ulra/errors.hpp"

namespace ulra {

namespace {

bool is_symmetric(const Matrix& A) {
    if (A.rows() != A.cols()) return false;
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = i + 1; j < A.cols(); ++j)
            if (A(i, j) != A(j, i)) return false;
    return true;
}

// Smallest-eigenvalue estimate of a symmetric A by power iteration on the
// shifted operator cI - A, c a Gershgorin upper bound on the spectrum.
double min_eig_estimate(const Matrix& A) {
    const std::size_t n = A.rows();
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += std::fabs(A(i, j));
        c = std::max(c, row);
    }
    if (c == 0.0) return 0.0;

    std::vector<double> x(n), y(n);
    for (std::size_t j = 0; j < n; ++j) x[j] = 1.0 + 0.5 * ((j * 2654435761u) % 89) / 89.0;
    double nx = 0.0;
    for (double v : x) nx += v * v;
    nx = std::sqrt(nx);
    for (double& v : x) v /= nx;

    const std::size_t cap = 10 * n + 100;
    double lambda = 0.0;
    for (std::size_t it = 0; it < cap; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = c * x[i];
            for (std::size_t j = 0; j < n; ++j) s -= A(i, j) * x[j];
            y[i] = s;
        }
        double rq = 0.0, ny = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            rq += y[i] * x[i];
            ny += y[i] * y[i];
        }
        ny = std::sqrt(ny);
        if (ny == 0.0) break;
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / ny;
        if (it > 0 && std::fabs(rq - lambda) <= 1e-9 * std::max(std::fabs(rq), 1.0)) {
            lambda = rq;
            break;
        }
        lambda = rq;
    }
    return c - lambda;
}

}  // namespace

NormBounds norm_bounds(const Matrix& A, double tol) {
    if (A.empty()) throw DimensionError("norm bounds of empty matrix");
    NormBounds nb;
    nb.lower = uniform_norm(A);
    if (nb.lower == 0.0) {
        nb.upper = 0.0;
        nb.upper_source = UpperSource::rows;
        return nb;
    }

    double max_row = 0.0, max_col = 0.0;
    std::vector<double> col(A.cols(), 0.0);
    for (std::size_t i = 0; i < A.rows(); ++i) {
        double r = 0.0;
        for (std::size_t j = 0; j < A.cols(); ++j) {
            const double v = A(i, j);
            r += v * v;
            col[j] += v * v;
        }
        max_row = std::max(max_row, r);
    }
    for (double v : col) max_col = std::max(max_col, v);
    max_row = std::sqrt(max_row);
    max_col = std::sqrt(max_col);

    nb.upper = max_row;
    nb.upper_source = UpperSource::rows;
    if (max_col < nb.upper) {
        nb.upper = max_col;
        nb.upper_source = UpperSource::cols;
    }

    try {
        // power iteration returns a Rayleigh-quotient underestimate; the
        // inflation covers its residual error at this stopping tolerance,
        // and an estimate still below the entrywise max is dropped as
        // underconverged noise
        const double sigma = spectral_norm(A, 1e-10) * (1.0 + 1e-5);
        if (sigma >= nb.lower && sigma < nb.upper) {
            nb.upper = sigma;
            nb.upper_source = UpperSource::spectral;
        }
    } catch (const IterationLimitError&) {
        // row/column bounds stand on their own
    }

    if (is_symmetric(A) && min_eig_estimate(A) >= -tol * nb.lower) {
        nb.upper = nb.lower;
        nb.upper_source = UpperSource::psd;
    }
    return nb;
}

double norm_upper_from_factor(const FactorPair& f) {
    if (f.P.empty() || f.Q.empty()) throw DimensionError("empty factor");
    double d = 0.0;
    for (std::size_t i = 0; i < f.P.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < f.P.cols(); ++j) s += f.P(i, j) * f.P(i, j);
        d = std::max(d, s);
    }
    for (std::size_t i = 0; i < f.Q.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < f.Q.cols(); ++j) s += f.Q(i, j) * f.Q(i, j);
        d = std::max(d, s);
    }
    return d;
}

double identity_rank_lb(std::size_t n, std::size_t k) {
    if (k == 0) throw ValidationError("k must be positive");
    if (n < 2 * k) throw ValidationError("the bound requires n >= 2k");
    return 0.5 / std::sqrt(static_cast<double>(k));
}

double hadamard_rank_lb(std::size_t n, std::size_t k) {
    if (n == 0 || (n & (n - 1)) != 0) throw ValidationError("n must be a power of two");
    if (k >= n) throw ValidationError("the bound requires k < n");
    return std::sqrt(1.0 - static_cast<double>(k) / static_cast<double>(n));
}

const char* to_string(UpperSource s) {
    switch (s) {
        case UpperSource::spectral: return "spectral";
        case UpperSource::rows: return "rows";
        case UpperSource::cols: return "cols";
        case UpperSource::factor: return "factor";
        case UpperSource::psd: return "psd";
    }
    return "unknown";
}

}  // namespace ulra
