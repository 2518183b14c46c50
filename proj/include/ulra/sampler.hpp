#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ulra/goodness.hpp"
#include "ulra/matrix.hpp"
#include "ulra/random.hpp"

namespace ulra {

// Weighted row system built from equally shaped Y and A (both M x n):
// theta_i = ||y_i||_inf ||a_i||_inf, L = sum theta_i, pi_i = theta_i / L,
// z_i = (L/theta_i) y_i. Every scaled atom z_i a_i^T has uniform norm exactly
// L, and sum_i pi_i z_i a_i^T = W = Y^T A. Rows with theta_i = 0 are excluded
// from the active set and get pi_i = 0.
struct RowEnsemble {
    std::size_t M = 0;
    std::size_t n = 0;
    std::vector<double> theta;
    double L = 0.0;
    std::vector<double> pi;
    Matrix zrows;   // M x n; zero rows for inactive indices
    Matrix arows;   // M x n copy of A
    std::vector<std::size_t> active;
    std::vector<double> cum;  // cumulative pi over active, for inverse-CDF draws
    Matrix W;                 // n x n, formed explicitly (refused for n > 4096)

    // Per-row fast-path data: a row is flat when all its entries share one
    // magnitude (e.g. Hadamard rows), which lets line searches against its
    // atoms collapse to closed forms.
    std::vector<std::uint8_t> z_flat, a_flat;
    std::vector<double> z_mag, a_mag;
};

RowEnsemble build_ensemble(const Matrix& Y, const Matrix& A);

// Index of the atom drawn by inverse-CDF at u in [0,1); boundary ties resolve
// toward the lower active index.
std::size_t draw_index(const RowEnsemble& e, double u);

// k i.i.d. draws from pi assembled into W_k = (1/k) sum z_{i_l} a_{i_l}^T,
// which factors as Yk^T Ak over the distinct drawn rows.
struct SketchResult {
    std::vector<std::size_t> selected;  // the k draws, in order
    std::vector<std::size_t> distinct;  // distinct drawn indices, ascending
    std::vector<double> coeff;          // per distinct index: (draw count)/k
    Matrix Yk;                          // mk x n, rows (c_i/k) z_i
    Matrix Ak;                          // mk x n, rows a_i
    Matrix Wk;                          // n x n
    double err = 0.0;                   // ||W_k - W||_inf
    std::size_t mk = 0;                 // number of distinct rows, <= k
};

SketchResult sample_sketch(const RowEnsemble& e, std::size_t k, RandomSource& rng);

// Certificate for the sketch. mu states the assumption ||I - W||_inf <= mu on
// the ensemble the sketch came from; the certificate itself reports the
// achieved ||I_n - W_k||_inf computed directly from the assembled W_k (not
// the probabilistic bound), with witness Yk.
GoodnessCertificate sketch_certificate(const SketchResult& s, double mu);

}  // namespace ulra
