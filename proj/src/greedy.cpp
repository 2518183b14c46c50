#include "ulra/greedy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ulra/errors.hpp"

namespace ulra {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double lse2(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    const double hi = std::max(a, b), lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

// z^T M a over the rows of M
double bilinear(const Matrix& M, std::span<const double> z, std::span<const double> a) {
    const std::size_t n = M.cols();
    double acc = 0.0;
    for (std::size_t j = 0; j < M.rows(); ++j) {
        const double zj = z[j];
        if (zj == 0.0) continue;
        const double* mj = M.data() + j * n;
        double dot = 0.0;
        for (std::size_t l = 0; l < n; ++l) dot += mj[l] * a[l];
        acc += zj * dot;
    }
    return acc;
}

double frob_inner(const Matrix& a, const Matrix& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
    return s;
}

void matvec(const Matrix& M, std::span<const double> a, std::vector<double>& w) {
    const std::size_t n = M.cols();
    w.assign(M.rows(), 0.0);
    for (std::size_t j = 0; j < M.rows(); ++j) {
        const double* mj = M.data() + j * n;
        double dot = 0.0;
        for (std::size_t l = 0; l < n; ++l) dot += mj[l] * a[l];
        w[j] = dot;
    }
}

// Scaled hyperbolic caches of a base matrix at a given beta: sh holds
// sinh(B/beta) e^{-shift}, rowcosh the per-row sums of cosh(B/beta) e^{-shift}.
struct HypCaches {
    double beta = 0.0;
    double shift = 0.0;
    Matrix sh;
    std::vector<double> rowcosh;
    double coshsum = 0.0;
};

HypCaches build_hyp(const Matrix& base, double beta) {
    HypCaches h;
    h.beta = beta;
    const std::size_t rows = base.rows(), cols = base.cols();
    double m = 0.0;
    for (double v : base.flat()) m = std::max(m, std::fabs(v));
    h.shift = m / beta;
    h.sh = Matrix(rows, cols, 0.0);
    h.rowcosh.assign(rows, 0.0);
    const double inv_beta = 1.0 / beta;
    for (std::size_t j = 0; j < rows; ++j) {
        double rc = 0.0;
        for (std::size_t l = 0; l < cols; ++l) {
            const double w = std::fabs(base(j, l)) * inv_beta;
            const double e = std::exp(w - h.shift);
            const double down = std::exp(-2.0 * w);
            rc += e * (1.0 + down) * 0.5;
            h.sh(j, l) = std::copysign(e * (1.0 - down) * 0.5, base(j, l));
        }
        h.rowcosh[j] = rc;
        h.coshsum += rc;
    }
    return h;
}

// ln of sum_l exp(sign(a_l) * X_{jl} / beta) * e^{-shift} recomputed directly
// for one row; used when the bilinear shortcut cancels catastrophically.
double ln_p_row_direct(const Matrix& X, std::size_t j, std::span<const double> a, double sgn,
                       double beta, double shift) {
    const std::size_t n = X.cols();
    double hi = -kInf;
    for (std::size_t l = 0; l < n; ++l) {
        const double s = (a[l] > 0.0) == (sgn > 0.0) ? 1.0 : -1.0;
        hi = std::max(hi, s * X(j, l) / beta);
    }
    double sum = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        const double s = (a[l] > 0.0) == (sgn > 0.0) ? 1.0 : -1.0;
        sum += std::exp(s * X(j, l) / beta - hi);
    }
    return hi - shift + std::log(sum);
}

// For a flat atom c * s (s the sign pattern of z a^T) against base X:
// P = sum exp(+s.X/beta), N = sum exp(-s.X/beta), both scaled by e^{-shift}.
// ln P and ln N determine the line-search optimum in closed form.
struct LnPN {
    double ln_p = 0.0, ln_n = 0.0;
};

// One-row version for policy C: P_j over the j-th row only, s = sign(a).
LnPN ln_pn_row(const HypCaches& h, const Matrix& X, std::size_t j, std::span<const double> a,
               double w_over_ca) {
    LnPN r;
    const double p = h.rowcosh[j] + w_over_ca;
    const double nn = h.rowcosh[j] - w_over_ca;
    const double floor = 1e-10 * h.rowcosh[j];
    r.ln_p = (p > floor) ? std::log(p) : ln_p_row_direct(X, j, a, +1.0, h.beta, h.shift);
    r.ln_n = (nn > floor) ? std::log(nn) : ln_p_row_direct(X, j, a, -1.0, h.beta, h.shift);
    return r;
}

// Whole-matrix version for policies A/B: c1 = z^T sh a / c.
LnPN ln_pn_full(const HypCaches& h, const Matrix& X, std::span<const double> z,
                std::span<const double> a, double c1) {
    const double p = h.coshsum + c1;
    const double nn = h.coshsum - c1;
    const double floor = 1e-10 * h.coshsum;
    LnPN r;
    if (p > floor && nn > floor) {
        r.ln_p = std::log(p);
        r.ln_n = std::log(nn);
        return r;
    }
    // direct per-entry log-sum-exp over the full matrix, each side
    for (double sgn : {+1.0, -1.0}) {
        double hi = -kInf;
        for (std::size_t j = 0; j < X.rows(); ++j)
            for (std::size_t l = 0; l < X.cols(); ++l) {
                const double s = ((z[j] > 0.0) == (a[l] > 0.0)) ? sgn : -sgn;
                hi = std::max(hi, s * X(j, l) / h.beta);
            }
        double sum = 0.0;
        for (std::size_t j = 0; j < X.rows(); ++j)
            for (std::size_t l = 0; l < X.cols(); ++l) {
                const double s = ((z[j] > 0.0) == (a[l] > 0.0)) ? sgn : -sgn;
                sum += std::exp(s * X(j, l) / h.beta - hi);
            }
        const double v = hi - h.shift + std::log(sum);
        if (sgn > 0.0)
            r.ln_p = v;
        else
            r.ln_n = v;
    }
    return r;
}

double value_from_ln_total(const HypCaches& h, double ln_total, std::size_t d) {
    return h.beta * (h.shift + ln_total - std::log(static_cast<double>(d)));
}

// Closed-form line search for a flat atom of magnitude c against X at beta:
// cosh-sum along t is (P e^{tc/beta} + N e^{-tc/beta})/2.
struct FlatLine {
    double t_star = 0.0;
    double ln_total = 0.0;  // scaled cosh-sum at t_star
};

FlatLine flat_linesearch(const HypCaches& h, const LnPN& pn, double c) {
    FlatLine f;
    const double t_unc = 0.5 * h.beta / c * (pn.ln_n - pn.ln_p);
    if (t_unc <= 0.0) {
        f.t_star = 0.0;
        f.ln_total = lse2(pn.ln_p, pn.ln_n) - std::log(2.0);
    } else {
        f.t_star = t_unc;
        f.ln_total = 0.5 * (pn.ln_p + pn.ln_n);
    }
    return f;
}

// cosh-sum of a flat atom at a fixed step t (used by best-of-all A and the
// joint policy): (P e^{tc/beta} + N e^{-tc/beta})/2 in log space.
double flat_ln_total_at(const HypCaches& h, const LnPN& pn, double c, double t) {
    const double s = t * c / h.beta;
    return lse2(pn.ln_p + s, pn.ln_n - s) - std::log(2.0);
}

// Generic scalar line search: minimize the cosh-sum of X + t * (z a^T) over
// t >= 0 via the sign of g(t) = sum xi sinh((X + t xi)/beta), with
// safeguarded Newton inside a doubling bracket.
struct GenericEval {
    double g = 0.0;   // scaled derivative sign carrier
    double gp = 0.0;  // scaled second derivative (positive)
};

GenericEval eval_generic_line(const Matrix& X, std::span<const double> z,
                              std::span<const double> a, double beta, double t) {
    const std::size_t rows = X.rows(), cols = X.cols();
    double hi = 0.0;
    for (std::size_t j = 0; j < rows; ++j)
        for (std::size_t l = 0; l < cols; ++l)
            hi = std::max(hi, std::fabs(X(j, l) + t * z[j] * a[l]) / beta);
    GenericEval ev;
    for (std::size_t j = 0; j < rows; ++j) {
        const double zj = z[j];
        for (std::size_t l = 0; l < cols; ++l) {
            const double xi = zj * a[l];
            if (xi == 0.0) continue;
            const double w = (X(j, l) + t * xi) / beta;
            const double ep = std::exp(std::fabs(w) - hi);
            const double down = std::exp(-2.0 * std::fabs(w));
            const double sh = std::copysign(ep * (1.0 - down) * 0.5, w);
            const double ch = ep * (1.0 + down) * 0.5;
            ev.g += xi * sh;
            ev.gp += xi * xi * ch / beta;
        }
    }
    return ev;
}

double generic_linesearch_t(const Matrix& X, std::span<const double> z,
                            std::span<const double> a, double beta, double tol) {
    GenericEval at0 = eval_generic_line(X, z, a, beta, 0.0);
    if (at0.g >= 0.0) return 0.0;
    double lo = 0.0, hi = 1.0;
    GenericEval ev = eval_generic_line(X, z, a, beta, hi);
    std::size_t grow = 0;
    while (ev.g < 0.0 && grow < 60) {
        lo = hi;
        hi *= 2.0;
        ev = eval_generic_line(X, z, a, beta, hi);
        ++grow;
    }
    if (ev.g < 0.0) return hi;  // unbounded descent cannot happen for nonzero atoms
    double t = 0.5 * (lo + hi);
    for (std::size_t it = 0; it < 200; ++it) {
        ev = eval_generic_line(X, z, a, beta, t);
        if (ev.g > 0.0)
            hi = t;
        else
            lo = t;
        double next = t - ev.g / std::max(ev.gp, 1e-300);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (hi - lo <= tol * std::max(1.0, t)) return 0.5 * (lo + hi);
        t = next;
    }
    return 0.5 * (lo + hi);
}

// V_{beta}(X + v a^T) without materializing the trial matrix.
double v_of_trial(const Matrix& X, std::span<const double> v, std::span<const double> a,
                  double beta, std::size_t d) {
    const std::size_t rows = X.rows(), cols = X.cols();
    double m = 0.0;
    for (std::size_t j = 0; j < rows; ++j)
        for (std::size_t l = 0; l < cols; ++l)
            m = std::max(m, std::fabs(X(j, l) + v[j] * a[l]));
    if (m == 0.0) return 0.0;
    const double shift = m / beta;
    double total = 0.0;
    for (std::size_t j = 0; j < rows; ++j)
        for (std::size_t l = 0; l < cols; ++l) {
            const double w = std::fabs(X(j, l) + v[j] * a[l]) / beta;
            total += std::exp(w - shift) * (1.0 + std::exp(-2.0 * w)) * 0.5;
        }
    return beta * (shift + std::log(total) - std::log(static_cast<double>(d)));
}

// Root of h(u) = sum_l g_l sinh(al_l + g_l u) for one coordinate row.
double solve_row_root(std::span<const double> alpha, std::span<const double> gamma,
                      double tol) {
    bool any = false;
    for (double g : gamma)
        if (g != 0.0) {
            any = true;
            break;
        }
    if (!any) return 0.0;

    auto eval = [&](double u) {
        double hi = 0.0;
        for (std::size_t l = 0; l < alpha.size(); ++l)
            if (gamma[l] != 0.0) hi = std::max(hi, std::fabs(alpha[l] + gamma[l] * u));
        double g = 0.0, gp = 0.0;
        for (std::size_t l = 0; l < alpha.size(); ++l) {
            const double gl = gamma[l];
            if (gl == 0.0) continue;
            const double w = alpha[l] + gl * u;
            const double ep = std::exp(std::fabs(w) - hi);
            const double down = std::exp(-2.0 * std::fabs(w));
            g += gl * std::copysign(ep * (1.0 - down) * 0.5, w);
            gp += gl * gl * ep * (1.0 + down) * 0.5;
        }
        return std::pair<double, double>(g, gp);
    };

    auto [g0, gp0] = eval(0.0);
    if (g0 == 0.0) return 0.0;
    double lo, hi;
    if (g0 < 0.0) {
        lo = 0.0;
        hi = 1.0;
        while (eval(hi).first < 0.0 && hi < 1e18) {
            lo = hi;
            hi *= 2.0;
        }
    } else {
        hi = 0.0;
        lo = -1.0;
        while (eval(lo).first > 0.0 && lo > -1e18) {
            hi = lo;
            lo *= 2.0;
        }
    }
    double u = 0.5 * (lo + hi);
    for (std::size_t it = 0; it < 200; ++it) {
        auto [g, gp] = eval(u);
        if (g > 0.0)
            hi = u;
        else
            lo = u;
        double next = u - g / std::max(gp, 1e-300);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (hi - lo <= tol * std::max(1.0, std::fabs(u))) return 0.5 * (lo + hi);
        u = next;
    }
    return 0.5 * (lo + hi);
}

// S <- S + v a^T - W, advance k and beta, and account the step slack
// delta_k = V_{beta_{k+1}}(S_{k+1}) - V_{beta_k}(S_k) against 2 L^2 / beta_k.
void apply_pick(GreedyState& st, const RowEnsemble& e, std::size_t i, std::vector<double> v,
                std::optional<double> override_beta, bool enforce_condition) {
    const std::size_t n = e.n;
    const auto a = e.arows.row(i);
    for (std::size_t j = 0; j < n; ++j) {
        double* sj = st.S.data() + j * n;
        const double* wj = e.W.data() + j * n;
        const double vj = v[j];
        for (std::size_t l = 0; l < n; ++l) sj[l] += vj * a[l] - wj[l];
    }
    const double beta_prev = st.beta;
    st.k += 1;
    const double beta_next = override_beta ? *override_beta : beta_at(st.schedule, st.k);
    const double vnew = v_beta(st.S.flat(), PotentialParams{beta_next, n * n});
    const double delta = vnew - st.v_current;
    if (enforce_condition && delta > 2.0 * e.L * e.L / beta_prev + 1e-9)
        throw Error("greedy step violated its potential-increase budget");
    st.last_delta = delta;
    st.deltasum += delta;
    st.v_current = vnew;
    st.beta = beta_next;
    st.picks.emplace_back(i, std::move(v));
}

std::vector<double> row_copy(const Matrix& m, std::size_t i) {
    const auto r = m.row(i);
    return std::vector<double>(r.begin(), r.end());
}

}  // namespace

GreedyState initial_state(const RowEnsemble& e, BetaSchedule schedule) {
    GreedyState st;
    st.S = Matrix(e.n, e.n, 0.0);
    st.k = 0;
    st.schedule = schedule;
    st.beta = beta_at(schedule, 0);
    st.v_current = 0.0;
    return st;
}

GreedyState step_policy_a(GreedyState state, const RowEnsemble& e, AVariant variant) {
    if (variant == AVariant::first_hit) {
        const HypCaches gc = build_hyp(state.S, state.beta);
        const double c0 = frob_inner(gc.sh, e.W);
        std::size_t chosen = e.active.front();
        double best_inner = kInf;
        for (std::size_t i : e.active) {
            const double inner = bilinear(gc.sh, e.zrows.row(i), e.arows.row(i)) - c0;
            if (inner <= 0.0) {
                chosen = i;
                best_inner = inner;
                break;
            }
            if (inner < best_inner) {
                best_inner = inner;
                chosen = i;
            }
        }
        apply_pick(state, e, chosen, row_copy(e.zrows, chosen), std::nullopt, true);
        return state;
    }

    // best-of-all: minimize V at the next beta over all single-atom steps
    const double beta_next = beta_at(state.schedule, state.k + 1);
    const Matrix X = subtract(state.S, e.W);
    const HypCaches tc = build_hyp(X, beta_next);
    const std::size_t d = e.n * e.n;
    double best_val = kInf;
    std::size_t best_i = e.active.front();
    for (std::size_t i : e.active) {
        const auto z = e.zrows.row(i);
        const auto a = e.arows.row(i);
        double val;
        if (e.z_flat[i] && e.a_flat[i]) {
            const double c = e.z_mag[i] * e.a_mag[i];
            const double c1 = bilinear(tc.sh, z, a) / c;
            const LnPN pn = ln_pn_full(tc, X, z, a, c1);
            val = value_from_ln_total(tc, flat_ln_total_at(tc, pn, c, 1.0), d);
        } else {
            val = v_of_trial(X, z, a, beta_next, d);
        }
        if (val < best_val) {
            best_val = val;
            best_i = i;
        }
    }
    apply_pick(state, e, best_i, row_copy(e.zrows, best_i), std::nullopt, true);
    return state;
}

GreedyState step_policy_a_prime(GreedyState state, const RowEnsemble& e, RandomSource& rng,
                                std::size_t max_draws) {
    const HypCaches gc = build_hyp(state.S, state.beta);
    const double c0 = frob_inner(gc.sh, e.W);
    for (std::size_t draw = 0; draw < max_draws; ++draw) {
        const std::size_t i = draw_index(e, rng.next_unit());
        const double inner = bilinear(gc.sh, e.zrows.row(i), e.arows.row(i)) - c0;
        if (inner <= 0.0) {
            apply_pick(state, e, i, row_copy(e.zrows, i), std::nullopt, true);
            return state;
        }
    }
    return step_policy_a(std::move(state), e, AVariant::first_hit);
}

LineSearchResult linesearch_rank1(const GreedyState& state, const RowEnsemble& e,
                                  std::size_t i, double tol) {
    if (e.theta[i] <= 0.0) throw ValidationError("row is not active");
    if (tol <= 0.0) throw ValidationError("tol must be positive");
    const Matrix X = subtract(state.S, e.W);
    const std::size_t d = e.n * e.n;
    const auto z = e.zrows.row(i);
    const auto a = e.arows.row(i);
    LineSearchResult res;
    if (e.z_flat[i] && e.a_flat[i]) {
        const HypCaches tc = build_hyp(X, state.beta);
        const double c = e.z_mag[i] * e.a_mag[i];
        const double c1 = bilinear(tc.sh, z, a) / c;
        const LnPN pn = ln_pn_full(tc, X, z, a, c1);
        const FlatLine f = flat_linesearch(tc, pn, c);
        res.t_star = f.t_star;
        res.value = value_from_ln_total(tc, f.ln_total, d);
    } else {
        res.t_star = generic_linesearch_t(X, z, a, state.beta, tol);
        std::vector<double> v(e.n);
        for (std::size_t j = 0; j < e.n; ++j) v[j] = res.t_star * z[j];
        res.value = v_of_trial(X, v, a, state.beta, d);
    }
    return res;
}

GreedyState step_policy_b(GreedyState state, const RowEnsemble& e, double tol) {
    const Matrix X = subtract(state.S, e.W);
    const HypCaches tc = build_hyp(X, state.beta);
    const std::size_t d = e.n * e.n;
    double best_val = kInf, best_t = 0.0;
    std::size_t best_i = e.active.front();
    for (std::size_t i : e.active) {
        const auto z = e.zrows.row(i);
        const auto a = e.arows.row(i);
        double val, t;
        if (e.z_flat[i] && e.a_flat[i]) {
            const double c = e.z_mag[i] * e.a_mag[i];
            const double c1 = bilinear(tc.sh, z, a) / c;
            const LnPN pn = ln_pn_full(tc, X, z, a, c1);
            const FlatLine f = flat_linesearch(tc, pn, c);
            t = f.t_star;
            val = value_from_ln_total(tc, f.ln_total, d);
        } else {
            t = generic_linesearch_t(X, z, a, state.beta, tol);
            std::vector<double> v(e.n);
            for (std::size_t j = 0; j < e.n; ++j) v[j] = t * z[j];
            val = v_of_trial(X, v, a, state.beta, d);
        }
        if (val < best_val) {
            best_val = val;
            best_t = t;
            best_i = i;
        }
    }
    std::vector<double> v(e.n);
    const auto zb = e.zrows.row(best_i);
    for (std::size_t j = 0; j < e.n; ++j) v[j] = best_t * zb[j];
    apply_pick(state, e, best_i, std::move(v), std::nullopt, true);
    return state;
}

std::vector<double> solve_policy_c_row(const GreedyState& state, const RowEnsemble& e,
                                       std::span<const double> a_row, double tol) {
    if (tol <= 0.0) throw ValidationError("tol must be positive");
    if (a_row.size() != e.n) throw DimensionError("row length must equal n");
    bool nonzero = false;
    for (double v : a_row) nonzero = nonzero || v != 0.0;
    if (!nonzero) throw ValidationError("row must not be identically zero");

    const Matrix X = subtract(state.S, e.W);
    const std::size_t n = e.n;
    std::vector<double> gamma(n), alpha(n), u(n, 0.0);
    for (std::size_t l = 0; l < n; ++l) gamma[l] = a_row[l] / state.beta;
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t l = 0; l < n; ++l) alpha[l] = X(j, l) / state.beta;
        u[j] = solve_row_root(alpha, gamma, tol);
    }
    return u;
}

GreedyState step_policy_c(GreedyState state, const RowEnsemble& e, double tol) {
    const Matrix X = subtract(state.S, e.W);
    const HypCaches tc = build_hyp(X, state.beta);
    const std::size_t n = e.n, d = n * n;
    double best_val = kInf;
    std::size_t best_i = e.active.front();
    std::vector<double> w;
    for (std::size_t i : e.active) {
        const auto a = e.arows.row(i);
        double val;
        if (e.a_flat[i]) {
            const double ca = e.a_mag[i];
            matvec(tc.sh, a, w);
            double ln_total = -kInf;
            for (std::size_t j = 0; j < n; ++j) {
                const LnPN pn = ln_pn_row(tc, X, j, a, w[j] / ca);
                ln_total = lse2(ln_total, 0.5 * (pn.ln_p + pn.ln_n));
            }
            val = value_from_ln_total(tc, ln_total, d);
        } else {
            const std::vector<double> u = solve_policy_c_row(state, e, a, tol);
            val = v_of_trial(X, u, a, state.beta, d);
        }
        if (val < best_val) {
            best_val = val;
            best_i = i;
        }
    }

    // rebuild the winning coefficient vector
    const auto ab = e.arows.row(best_i);
    std::vector<double> u(n, 0.0);
    if (e.a_flat[best_i]) {
        const double ca = e.a_mag[best_i];
        matvec(tc.sh, ab, w);
        for (std::size_t j = 0; j < n; ++j) {
            const LnPN pn = ln_pn_row(tc, X, j, ab, w[j] / ca);
            u[j] = 0.5 * state.beta / ca * (pn.ln_n - pn.ln_p);
        }
    } else {
        u = solve_policy_c_row(state, e, ab, tol);
    }
    apply_pick(state, e, best_i, std::move(u), std::nullopt, true);
    return state;
}

namespace {

// d/dbeta of [beta ln(2d) + V_beta(z)] = ln(2d) + V/beta - <z, grad V>/beta.
double joint_beta_derivative(std::span<const double> z, double beta, std::size_t d) {
    double m = 0.0;
    for (double v : z) m = std::max(m, std::fabs(v));
    const double ln2d = std::log(2.0 * static_cast<double>(d));
    if (m == 0.0) return ln2d;
    const double shift = m / beta;
    double t = 0.0, s1 = 0.0;
    for (double v : z) {
        const double w = std::fabs(v) / beta;
        const double e = std::exp(w - shift);
        const double down = std::exp(-2.0 * w);
        t += e * (1.0 + down) * 0.5;
        s1 += std::fabs(v) * e * (1.0 - down) * 0.5;  // v * sinh(v/beta) is even in v
    }
    const double v_over_beta = shift + std::log(t) - std::log(static_cast<double>(d));
    return ln2d + v_over_beta - s1 / (t * beta);
}

double minimize_beta(std::span<const double> z, double beta0, std::size_t d) {
    double lo = beta0, hi = beta0;
    if (joint_beta_derivative(z, beta0, d) > 0.0) {
        // descend toward smaller beta
        for (std::size_t it = 0; it < 120 && joint_beta_derivative(z, lo, d) > 0.0; ++it) {
            hi = lo;
            lo *= 0.5;
            if (lo < 1e-12) return 1e-12;
        }
    } else {
        for (std::size_t it = 0; it < 120 && joint_beta_derivative(z, hi, d) < 0.0; ++it) {
            lo = hi;
            hi *= 2.0;
        }
    }
    for (std::size_t it = 0; it < 100 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (joint_beta_derivative(z, mid, d) > 0.0)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

GreedyState step_joint_beta(GreedyState state, const RowEnsemble& e, double tol) {
    if (tol <= 0.0) throw ValidationError("tol must be positive");
    const Matrix X = subtract(state.S, e.W);
    const std::size_t n = e.n, d = n * n;
    const double ln2d = std::log(2.0 * static_cast<double>(d));

    double best_obj = kInf, best_t = 0.0, best_beta = state.beta;
    std::size_t best_i = e.active.front();
    std::vector<double> trial(d);
    for (std::size_t i : e.active) {
        const auto z = e.zrows.row(i);
        const auto a = e.arows.row(i);
        double beta = state.beta;
        double t = 0.0, val = 0.0;

        auto line_at = [&](double b) {
            if (e.z_flat[i] && e.a_flat[i]) {
                const HypCaches tc = build_hyp(X, b);
                const double c = e.z_mag[i] * e.a_mag[i];
                const double c1 = bilinear(tc.sh, z, a) / c;
                const LnPN pn = ln_pn_full(tc, X, z, a, c1);
                const FlatLine f = flat_linesearch(tc, pn, c);
                t = f.t_star;
                val = value_from_ln_total(tc, f.ln_total, d);
            } else {
                t = generic_linesearch_t(X, z, a, b, tol);
                std::vector<double> v(n);
                for (std::size_t j = 0; j < n; ++j) v[j] = t * z[j];
                val = v_of_trial(X, v, a, b, d);
            }
        };

        line_at(beta);
        double obj = beta * ln2d + val;
        for (std::size_t round = 0; round < 60; ++round) {
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t l = 0; l < n; ++l)
                    trial[j * n + l] = X(j, l) + t * z[j] * a[l];
            beta = minimize_beta(trial, beta, d);
            line_at(beta);
            const double new_obj = beta * ln2d + val;
            if (obj - new_obj < tol) {
                obj = std::min(obj, new_obj);
                break;
            }
            obj = new_obj;
        }
        if (obj < best_obj) {
            best_obj = obj;
            best_t = t;
            best_beta = beta;
            best_i = i;
        }
    }

    std::vector<double> v(n);
    const auto zb = e.zrows.row(best_i);
    for (std::size_t j = 0; j < n; ++j) v[j] = best_t * zb[j];
    apply_pick(state, e, best_i, std::move(v), best_beta, false);
    return state;
}

namespace {

double incumbent_mu(const GreedyState& st, const RowEnsemble& e) {
    // ||I - (S/k + W)||_inf
    const std::size_t n = e.n;
    const double inv_k = 1.0 / static_cast<double>(st.k);
    double mu = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double u = st.S(i, j) * inv_k + e.W(i, j);
            mu = std::max(mu, std::fabs((i == j ? 1.0 : 0.0) - u));
        }
    return mu;
}

Matrix rows_submatrix(const Matrix& A, const std::vector<std::size_t>& order) {
    Matrix m(order.size(), A.cols(), 0.0);
    for (std::size_t r = 0; r < order.size(); ++r)
        for (std::size_t j = 0; j < A.cols(); ++j) m(r, j) = A(order[r], j);
    return m;
}

// y0 of the shortcut witness recovered from its first column (entries of A_m
// are +-1 there, so multiplying undoes the scaling).
std::vector<double> shortcut_warm(const GoodnessCertificate& cert, const Matrix& Am) {
    std::vector<double> y0(Am.rows());
    for (std::size_t r = 0; r < Am.rows(); ++r) y0[r] = cert.witness(r, 0) * Am(r, 0);
    return y0;
}

RankKFactor assemble_factor(const GreedyState& st, const RowEnsemble& e,
                            const std::vector<std::size_t>& order) {
    RankKFactor f;
    f.k = st.k;
    f.scale = st.k ? 1.0 / static_cast<double>(st.k) : 1.0;
    f.left = Matrix(order.size(), e.n, 0.0);
    f.right = rows_submatrix(e.arows, order);
    std::vector<std::size_t> slot(e.M, 0);
    for (std::size_t r = 0; r < order.size(); ++r) slot[order[r]] = r;
    for (const auto& [i, v] : st.picks) {
        const std::size_t r = slot[i];
        for (std::size_t j = 0; j < e.n; ++j) f.left(r, j) += v[j];
    }
    return f;
}

bool certifies(double mu, std::size_t s) { return mu < 1.0 / (2.0 * static_cast<double>(s)); }

}  // namespace

SynthesisResult run_derandomized(const Matrix& Y, const Matrix& A, const RunOptions& opts,
                                 RandomSource* rng) {
    if (opts.k_max < 1) throw ValidationError("k_max must be at least 1");
    if (opts.policy == Policy::blind)
        throw ValidationError("blind policy runs through run_blind");
    if (opts.policy == Policy::aprime && rng == nullptr)
        throw ValidationError("policy A' needs a random source");

    const RowEnsemble e = build_ensemble(Y, A);
    BetaSchedule sched{opts.schedule, e.L, e.n * e.n, std::nullopt};
    if (opts.schedule == ScheduleKind::fixed) sched.horizon = opts.k_max;
    GreedyState st = initial_state(e, sched);

    SynthesisResult out;
    std::vector<char> seen(e.M, 0);
    std::vector<double> warm;
    double best_refined = kInf;

    for (std::size_t step = 1; step <= opts.k_max; ++step) {
        const double beta_used = st.beta;
        switch (opts.policy) {
            case Policy::a:
                st = step_policy_a(std::move(st), e, AVariant::first_hit);
                break;
            case Policy::aprime:
                st = step_policy_a_prime(std::move(st), e, *rng, opts.aprime_max_draws);
                break;
            case Policy::b:
                st = step_policy_b(std::move(st), e, opts.tol);
                break;
            case Policy::c:
                st = step_policy_c(std::move(st), e, opts.tol);
                break;
            case Policy::joint:
                st = step_joint_beta(std::move(st), e, opts.tol);
                break;
            case Policy::blind:
                break;
        }
        const std::size_t pick = st.picks.back().first;
        if (!seen[pick]) {
            seen[pick] = 1;
            out.rows.push_back(pick);
        }

        const double mu_inc = incumbent_mu(st, e);
        bool refreshed = false;
        if (opts.refine_every > 0 && step % opts.refine_every == 0) {
            const Matrix Am = rows_submatrix(A, out.rows);
            if (opts.hadamard_shortcut && warm.size() < Am.rows())
                warm.resize(Am.rows(), 0.0);
            const GoodnessCertificate cert =
                reoptimize(Am, opts.cert_tol, opts.hadamard_shortcut, warm);
            if (opts.hadamard_shortcut) warm = shortcut_warm(cert, Am);
            best_refined = std::min(best_refined, cert.mu);
            refreshed = true;
        }
        const double mu_term = std::min(mu_inc, best_refined);

        out.history.push_back(
            {step, out.rows.size(), mu_term, refreshed, beta_used, st.last_delta, pick});
        out.mu = mu_term;
        if (opts.target_s && certifies(mu_term, *opts.target_s)) {
            out.certified = true;
            break;
        }
    }

    out.factor = assemble_factor(st, e, out.rows);
    out.s = certified_s(out.mu);
    return out;
}

SynthesisResult run_blind(const Matrix& Y, const Matrix& A, const RunOptions& opts,
                          RandomSource& rng) {
    if (opts.k_max < 1) throw ValidationError("k_max must be at least 1");
    const RowEnsemble e = build_ensemble(Y, A);
    const std::size_t n = e.n;

    SynthesisResult out;
    std::vector<char> seen(e.M, 0);
    std::vector<std::size_t> counts(e.M, 0);
    Matrix running(n, n, 0.0);  // sum of drawn atoms
    std::vector<double> warm;
    double best_refined = kInf;
    std::size_t fresh_rows = 0;

    for (std::size_t draw = 1; draw <= opts.k_max; ++draw) {
        const std::size_t i = draw_index(e, rng.next_unit());
        ++counts[i];
        if (!seen[i]) {
            seen[i] = 1;
            out.rows.push_back(i);
            ++fresh_rows;
        }
        const auto z = e.zrows.row(i);
        const auto a = e.arows.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            double* rj = running.data() + j * n;
            const double zj = z[j];
            for (std::size_t l = 0; l < n; ++l) rj[l] += zj * a[l];
        }

        double mu_sketch = 0.0;
        const double inv_k = 1.0 / static_cast<double>(draw);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c)
                mu_sketch = std::max(
                    mu_sketch, std::fabs((r == c ? 1.0 : 0.0) - running(r, c) * inv_k));

        bool refreshed = false;
        if (opts.refine_every > 0 && fresh_rows >= opts.refine_every) {
            fresh_rows = 0;
            const Matrix Am = rows_submatrix(A, out.rows);
            if (opts.hadamard_shortcut && warm.size() < Am.rows())
                warm.resize(Am.rows(), 0.0);
            const GoodnessCertificate cert =
                reoptimize(Am, opts.cert_tol, opts.hadamard_shortcut, warm);
            if (opts.hadamard_shortcut) warm = shortcut_warm(cert, Am);
            best_refined = std::min(best_refined, cert.mu);
            refreshed = true;
        }
        const double mu_term = std::min(mu_sketch, best_refined);

        out.history.push_back({draw, out.rows.size(), mu_term, refreshed, 0.0, 0.0, i});
        out.mu = mu_term;
        if (opts.target_s && certifies(mu_term, *opts.target_s)) {
            out.certified = true;
            break;
        }
    }

    const std::size_t k = out.history.empty() ? 1 : out.history.back().k;
    RankKFactor f;
    f.k = k;
    f.scale = 1.0 / static_cast<double>(k);
    f.left = Matrix(out.rows.size(), n, 0.0);
    f.right = rows_submatrix(e.arows, out.rows);
    for (std::size_t r = 0; r < out.rows.size(); ++r) {
        const std::size_t i = out.rows[r];
        const auto z = e.zrows.row(i);
        for (std::size_t j = 0; j < n; ++j)
            f.left(r, j) = static_cast<double>(counts[i]) * z[j];
    }
    out.factor = std::move(f);
    out.s = certified_s(out.mu);
    return out;
}

}  // namespace ulra
