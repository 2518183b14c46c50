#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ulra/goodness.hpp"
#include "ulra/matrix.hpp"
#include "ulra/potential.hpp"
#include "ulra/random.hpp"
#include "ulra/rank_k_factor.hpp"
#include "ulra/sampler.hpp"

namespace ulra {

// Running state of the derandomized selection: S_k = sum_j (v_j a_{l_j}^T - W),
// the current gain beta_k, V_{beta_k}(S_k) carried forward, and the
// accumulated step slacks delta_l (which telescope to the carried V value).
struct GreedyState {
    Matrix S;
    std::size_t k = 0;
    double beta = 0.0;
    double v_current = 0.0;
    double deltasum = 0.0;
    double last_delta = 0.0;
    std::vector<std::pair<std::size_t, std::vector<double>>> picks;
    BetaSchedule schedule;
};

GreedyState initial_state(const RowEnsemble& e, BetaSchedule schedule);

enum class AVariant { first_hit, best_of_all };

// Policy A: accept the first (or the V-minimizing) index i with
// <grad V_beta(S_k), z_i a_i^T - W> <= 0; the step appends (i, z_i). Such an
// i always exists because the atoms average to W under pi.
GreedyState step_policy_a(GreedyState state, const RowEnsemble& e, AVariant variant);

// Policy A': candidates drawn from pi until one passes the same test;
// falls back to the deterministic scan after max_draws.
GreedyState step_policy_a_prime(GreedyState state, const RowEnsemble& e, RandomSource& rng,
                                std::size_t max_draws);

struct LineSearchResult {
    double t_star = 0.0;
    double value = 0.0;
};

// min_{t >= 0} V_{beta_k}(S_k + t z_i a_i^T - W) by derivative bisection with
// bracket doubling (closed form when the atom has a flat magnitude profile).
LineSearchResult linesearch_rank1(const GreedyState& state, const RowEnsemble& e,
                                  std::size_t i, double tol);

// Policy B: line-search every active atom, keep the smallest V, append
// (i*, t* z_{i*}). Ties break toward the lower index.
GreedyState step_policy_b(GreedyState state, const RowEnsemble& e, double tol);

// Coordinate solve for policy C: u_j is the root of
// sum_l gamma_l sinh(alpha_{jl} + gamma_l u_j) = 0 with
// alpha_{jl} = (S_k - W)_{jl}/beta_k and gamma_l = (a_i)_l / beta_k (the l-th
// entry of the i-th row; the equations are independent across j). Rows where
// every gamma_l vanishes return u_j = 0. Safeguarded Newton with bisection
// fallback, residual tolerance tol.
std::vector<double> solve_policy_c_row(const GreedyState& state, const RowEnsemble& e,
                                       std::span<const double> a_row, double tol);

// Policy C: full coordinate minimization per active row, smallest V wins.
GreedyState step_policy_c(GreedyState state, const RowEnsemble& e, double tol);

// Joint (t, beta) variant: per candidate, alternating scalar minimization of
// beta ln(2d) + V_beta(S_k + t z_i a_i^T - W) over t >= 0 and beta > 0 until
// the objective decrease drops below tol; beta_k is replaced by the winning
// beta*. The step-condition bookkeeping is recorded but not enforced here
// (the minimizing beta* may fall below beta_k).
GreedyState step_joint_beta(GreedyState state, const RowEnsemble& e, double tol);

enum class Policy { blind, a, aprime, b, c, joint };

struct RunOptions {
    Policy policy = Policy::a;
    ScheduleKind schedule = ScheduleKind::closed;
    std::size_t k_max = 1;
    std::optional<std::size_t> target_s;
    double tol = 1e-8;           // scalar solves inside steps
    double cert_tol = 1e-6;      // re-certification solves
    std::size_t refine_every = 0;  // 0 disables re-certification
    bool hadamard_shortcut = false;
    std::size_t aprime_max_draws = 64;
};

struct StepRecord {
    std::size_t k = 0;      // step (or draw) count so far
    std::size_t mk = 0;     // distinct selected rows so far
    double mu = 0.0;        // certifying mu at this step
    bool refined = false;   // mu came from re-optimization rather than the incumbent
    double beta = 0.0;
    double delta = 0.0;
    std::size_t pick = 0;
};

struct SynthesisResult {
    RankKFactor factor;
    std::vector<std::size_t> rows;  // distinct selected rows, first-pick order
    double mu = 0.0;                // final certifying mu
    CertifiedS s;
    bool certified = false;
    std::vector<StepRecord> history;
};

// Derandomized synthesis: iterate the selected policy, after each step
// assemble U_k = k^{-1} S_k + W = Y_k^T A_k and its distance to I_n, with
// optional re-optimization of the witness every refine_every steps. Stops
// when target_s certifies (mu < 1/(2s)) or at k_max with certified = false.
// rng is only consulted by policy A'.
SynthesisResult run_derandomized(const Matrix& Y, const Matrix& A, const RunOptions& opts,
                                 RandomSource* rng = nullptr);

// Blind synthesis: rows drawn i.i.d. from pi; with refinement the witness is
// re-optimized over the distinct selected rows every refine_every new rows,
// otherwise the i.i.d.-weighted sketch supplies the incumbent mu.
SynthesisResult run_blind(const Matrix& Y, const Matrix& A, const RunOptions& opts,
                          RandomSource& rng);

}  // namespace ulra
