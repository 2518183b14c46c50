#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace ulra {

struct PotentialParams {
    double beta;    // smoothing parameter, > 0
    std::size_t d;  // ambient dimension (n^2 for an n x n matrix flattened)
};

// V_beta(z) = beta * ln(sum_i cosh(z_i/beta)) - beta * ln d.
//
// Computed with the max|z_i|/beta term factored out before exponentiating, so
// arguments up to |z_i|/beta ~ 1e308 are safe; the shifted log argument stays
// in [1/2, d].
double v_beta(std::span<const double> z, const PotentialParams& p);

// Gradient of V_beta: component i is sinh(z_i/beta) / sum_j cosh(z_j/beta).
// Always has l1 norm <= 1. Same shift as v_beta; the denominator cannot
// underflow because the max term contributes at least 1/2.
std::vector<double> v_beta_grad(std::span<const double> z, const PotentialParams& p);

// Fused value-and-gradient pass used by iterative solvers; grad_out must have
// length p.d. Returns V_beta(z).
double v_beta_value_grad(std::span<const double> z, const PotentialParams& p,
                         std::span<double> grad_out);

enum class ScheduleKind { fixed, recursive, closed, joint };

// Gain sequence for the derandomized engine. `fixed` needs the step horizon;
// `recursive` and `closed` are nondecreasing and horizon-free. `joint`
// reuses the closed rule as the starting point for per-step minimization
// over beta.
struct BetaSchedule {
    ScheduleKind kind = ScheduleKind::closed;
    double L = 1.0;
    std::size_t d = 1;
    std::optional<std::size_t> horizon;
};

double beta_at(const BetaSchedule& s, std::size_t ell);

}  // namespace ulra
