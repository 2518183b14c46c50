#pragma once

#include <cstddef>

#include "ulra/gaussian.hpp"
#include "ulra/matrix.hpp"

namespace ulra {

enum class UpperSource { spectral, rows, cols, factor, psd };

// Certified bounds on the factorization norm ||A|| (the smallest t admitting
// a PSD completion [[M, A], [A^T, N]] with diagonals <= t). The exact value
// is a semidefinite program and is not computed; lower = ||A||_inf and upper
// is the best of the spectral norm, the max row/column Euclidean norm, or
// exact equality for symmetric PSD inputs. lower <= upper <=
// sqrt(min(m,n)) * lower always holds.
struct NormBounds {
    double lower = 0.0;
    double upper = 0.0;
    UpperSource upper_source = UpperSource::rows;
};

NormBounds norm_bounds(const Matrix& A, double tol = 1e-8);

// D = (max Euclidean row norm over P and Q)^2, an upper bound on ||P Q^T||.
double norm_upper_from_factor(const FactorPair& f);

// No rank-k matrix approximates I_n better than 1/(2 sqrt(k)) in uniform
// norm when n >= 2k; smaller n is a precondition error.
double identity_rank_lb(std::size_t n, std::size_t k);

// No rank-k matrix approximates the order-n Hadamard matrix better than
// sqrt(1 - k/n); requires k < n and n a power of two.
double hadamard_rank_lb(std::size_t n, std::size_t k);

const char* to_string(UpperSource s);

}  // namespace ulra
