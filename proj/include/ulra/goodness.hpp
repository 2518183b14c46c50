#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ulra/matrix.hpp"

namespace ulra {

// Sparsity level certified by a witness: the largest integer s with
// mu < 1/(2s) under strict inequality. mu = 0 certifies every s.
struct CertifiedS {
    std::size_t s = 0;
    bool unbounded = false;
};

CertifiedS certified_s(double mu);

// Witness certificate for s-goodness of an m x n sensing matrix A_m: a matrix
// Y_m with mu = ||I_n - Y_m^T A_m||_inf. Any witness is valid; solver
// suboptimality only makes the certified s conservative.
struct GoodnessCertificate {
    Matrix witness;           // m x n
    double mu = 0.0;
    std::size_t s_max = 0;    // meaningful when !s_unbounded
    bool s_unbounded = false;
    bool exact = false;       // true when every stage of the solver converged
};

struct LinfRegressionResult {
    std::vector<double> y;
    double value = 0.0;   // exact ||c - B y||_inf at the returned y
    bool converged = true;
};

// min_y ||c - B y||_inf for B (n x m), by accelerated gradient on the
// smoothed surrogate V_beta(c - By) over halving beta stages
// beta_j = estimate / (2^j ln(2n)), each warm-started, until the sandwich gap
// beta ln(2n) drops below tol. The returned value is the exact norm at the
// returned y, so it is a valid upper bound on the minimum regardless of
// convergence; `converged` is false if a stage hit its iteration cap.
LinfRegressionResult linf_regression(const Matrix& B, std::span<const double> c, double tol,
                                     std::span<const double> warm = {});

// Opt(A_m) = min_Y ||I_n - Y^T A_m||_inf, assembled column-by-column from the
// n regression problems min_y ||e_i - A_m^T y||_inf. With hadamard_shortcut
// (rows of a Sylvester Hadamard matrix in natural column order,
// caller-asserted; entries are validated to be +-1) only problem i = 1 is
// solved and the remaining witness columns follow by the character shift
// y_r -> y_r * A_m[r][g], under which all n problems share one optimal value.
GoodnessCertificate opt_certificate(const Matrix& Am, double tol, bool hadamard_shortcut,
                                    std::span<const double> warm = {});

// Alias of opt_certificate used inside synthesis loops.
GoodnessCertificate reoptimize(const Matrix& Am, double tol, bool hadamard_shortcut,
                               std::span<const double> warm = {});

// ||I_n - witness^T A_m||_inf recomputed from scratch; certificates are
// self-verifying through this regardless of how the witness was produced.
double witness_mu(const Matrix& Am, const Matrix& witness);

struct IncoherenceResult {
    double mu_b = 0.0;
    std::size_t s_max = 0;
    bool s_unbounded = false;
};

// Mutual incoherence of the columns of B: max_{i != j} |b_i^T b_j| / b_i^T b_i,
// certifying every s < (1 + mu)/(2 mu); unbounded when mu = 0.
IncoherenceResult mutual_incoherence(const Matrix& B);

}  // namespace ulra
