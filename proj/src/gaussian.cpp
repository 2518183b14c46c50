#include "ulra/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ulra/errors.hpp"

namespace ulra {

Matrix materialize(const RankKFactor& f) {
    if (f.left.rows() != f.right.rows())
        throw DimensionError("factor row counts do not match");
    return scale(multiply(transpose(f.left), f.right), f.scale);
}

SvdResult jacobi_svd(const Matrix& A, double tol) {
    if (A.empty()) throw DimensionError("SVD of empty matrix");
    if (tol <= 0.0) throw ValidationError("tol must be positive");

    const bool transposed = A.rows() < A.cols();
    Matrix G = transposed ? transpose(A) : A;  // m >= n
    const std::size_t m = G.rows(), n = G.cols();
    Matrix V = Matrix::identity(n);

    const std::size_t max_sweeps = 60;
    std::size_t sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    const double gp = G(i, p), gq = G(i, q);
                    app += gp * gp;
                    aqq += gq * gq;
                    apq += gp * gq;
                }
                if (std::fabs(apq) <= tol * std::sqrt(app * aqq) || apq == 0.0) continue;
                rotated = true;
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = std::copysign(1.0, tau) /
                                 (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double gp = G(i, p), gq = G(i, q);
                    G(i, p) = c * gp - s * gq;
                    G(i, q) = s * gp + c * gq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vp = V(i, p), vq = V(i, q);
                    V(i, p) = c * vp - s * vq;
                    V(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }
    if (sweep == max_sweeps) {
        double best = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) s += G(i, j) * G(i, j);
            best = std::max(best, std::sqrt(s));
        }
        throw IterationLimitError("jacobi sweeps did not converge", best);
    }

    std::vector<double> sigma(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += G(i, j) * G(i, j);
        sigma[j] = std::sqrt(s);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

    SvdResult r;
    r.U = Matrix(m, n, 0.0);
    r.V = Matrix(n, n, 0.0);
    r.sigma.resize(n);
    for (std::size_t jj = 0; jj < n; ++jj) {
        const std::size_t j = order[jj];
        r.sigma[jj] = sigma[j];
        if (sigma[j] > 0.0)
            for (std::size_t i = 0; i < m; ++i) r.U(i, jj) = G(i, j) / sigma[j];
        for (std::size_t i = 0; i < n; ++i) r.V(i, jj) = V(i, j);
    }
    if (transposed) std::swap(r.U, r.V);
    return r;
}

FactorPair factor_via_svd(const Matrix& A, double tol) {
    const SvdResult svd = jacobi_svd(A, tol);
    const std::size_t m = svd.U.rows(), n = svd.V.rows(), r = svd.sigma.size();
    FactorPair f;
    f.P = Matrix(m, r, 0.0);
    f.Q = Matrix(n, r, 0.0);
    for (std::size_t j = 0; j < r; ++j) {
        const double root = std::sqrt(svd.sigma[j]);
        for (std::size_t i = 0; i < m; ++i) f.P(i, j) = svd.U(i, j) * root;
        for (std::size_t i = 0; i < n; ++i) f.Q(i, j) = svd.V(i, j) * root;
    }
    double d = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < r; ++j) s += f.P(i, j) * f.P(i, j);
        d = std::max(d, s);
    }
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < r; ++j) s += f.Q(i, j) * f.Q(i, j);
        d = std::max(d, s);
    }
    f.D = d;
    return f;
}

RankKFactor gaussian_rank_k(const FactorPair& f, std::size_t k, RandomSource& rng) {
    if (k == 0) throw ValidationError("k must be at least 1");
    if (f.P.cols() != f.Q.cols()) throw DimensionError("P and Q inner dimensions differ");
    const std::size_t d = f.P.cols(), m = f.P.rows(), n = f.Q.rows();

    RankKFactor r;
    r.k = k;
    r.scale = 1.0 / static_cast<double>(k);
    r.left = Matrix(k, m, 0.0);
    r.right = Matrix(k, n, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        const std::vector<double> xi = gaussian_vector(rng, d);
        for (std::size_t row = 0; row < m; ++row) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += f.P(row, j) * xi[j];
            r.left(i, row) = s;
        }
        for (std::size_t row = 0; row < n; ++row) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += f.Q(row, j) * xi[j];
            r.right(i, row) = s;
        }
    }
    return r;
}

double approx_error(const RankKFactor& f, const Matrix& A) {
    if (f.left.cols() != A.rows() || f.right.cols() != A.cols())
        throw DimensionError("factor shape incompatible with A");
    if (A.rows() * A.cols() > (std::size_t{1} << 26))
        throw CapacityError("refusing to materialize more than 2^26 entries");
    return uniform_norm(subtract(materialize(f), A));
}

}  // namespace ulra
