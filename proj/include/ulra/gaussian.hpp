#pragma once

#include <cstddef>
#include <vector>

#include "ulra/matrix.hpp"
#include "ulra/random.hpp"
#include "ulra/rank_k_factor.hpp"

namespace ulra {

// Balanced factorization A = P Q^T with every row of P and Q of Euclidean
// norm at most sqrt(D).
struct FactorPair {
    Matrix P;  // m x d
    Matrix Q;  // n x d
    double D = 0.0;
};

struct SvdResult {
    Matrix U;
    std::vector<double> sigma;  // descending
    Matrix V;
};

// One-sided Jacobi SVD (Hestenes column orthogonalization), tolerance on the
// normalized off-diagonal mass; the sweep cap raises IterationLimitError.
SvdResult jacobi_svd(const Matrix& A, double tol = 1e-10);

// P = U sqrt(S), Q = V sqrt(S); D is the largest squared row norm of P and Q
// and never exceeds the largest singular value (plus roundoff).
FactorPair factor_via_svd(const Matrix& A, double tol = 1e-10);

// Draws xi_1..xi_k i.i.d. standard normal in R^d and returns the rank-<=k
// factor with rows (P xi_i)^T and (Q xi_i)^T, scale 1/k.
RankKFactor gaussian_rank_k(const FactorPair& f, std::size_t k, RandomSource& rng);

// ||A_k - A||_inf of the materialized approximation. Guards against
// materializing more than 2^26 entries.
double approx_error(const RankKFactor& f, const Matrix& A);

}  // namespace ulra
