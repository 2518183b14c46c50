#include "ulra/goodness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ulra/errors.hpp"
#include "ulra/potential.hpp"

namespace ulra {

CertifiedS certified_s(double mu) {
    if (mu < 0.0) throw ValidationError("mu must be nonnegative");
    if (mu == 0.0) return {0, true};
    if (mu >= 0.5) return {0, false};
    long long cand = static_cast<long long>(std::floor(1.0 / (2.0 * mu)));
    while (cand > 0 && !(mu < 1.0 / (2.0 * static_cast<double>(cand)))) --cand;
    while (mu < 1.0 / (2.0 * static_cast<double>(cand + 1))) ++cand;
    return {static_cast<std::size_t>(cand), false};
}

namespace {

double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

// r = c - B y
void residual(const Matrix& B, std::span<const double> c, std::span<const double> y,
              std::vector<double>& r) {
    const std::size_t n = B.rows(), m = B.cols();
    r.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* bi = B.data() + i * m;
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) s += bi[j] * y[j];
        r[i] = c[i] - s;
    }
}

// out += step * B^T g
void add_bt_grad(const Matrix& B, std::span<const double> g, double step,
                 std::vector<double>& out) {
    const std::size_t n = B.rows(), m = B.cols();
    for (std::size_t i = 0; i < n; ++i) {
        const double* bi = B.data() + i * m;
        const double gi = step * g[i];
        if (gi == 0.0) continue;
        for (std::size_t j = 0; j < m; ++j) out[j] += gi * bi[j];
    }
}

struct StageOutcome {
    bool converged;
};

// One smoothing stage: FISTA with gradient restarts on f(y) = V_beta(c - By).
StageOutcome run_stage(const Matrix& B, std::span<const double> c, double beta, double bnorm2,
                       std::size_t cap, double eps_improve, std::vector<double>& y,
                       std::vector<double>& best_y, double& best_value) {
    const std::size_t n = B.rows(), m = B.cols();
    const PotentialParams pp{beta, n};
    const double step = beta / (bnorm2 * bnorm2);

    std::vector<double> v = y, y_prev = y, r(n), g(n), grad_y(m);
    double t = 1.0;
    double f_best = std::numeric_limits<double>::infinity();
    std::size_t stall = 0;

    for (std::size_t it = 0; it < cap; ++it) {
        residual(B, c, v, r);
        const double fv = v_beta_value_grad(r, pp, g);
        const double exact = inf_norm(r);
        if (exact < best_value) {
            best_value = exact;
            best_y = v;
        }

        // y_next = v + step * B^T g   (gradient of f is -B^T g)
        std::vector<double> y_next = v;
        add_bt_grad(B, g, step, y_next);

        // gradient restart: momentum fighting the descent direction
        double cross = 0.0;
        for (std::size_t j = 0; j < m; ++j)
            cross += (v[j] - y_next[j]) * (y_next[j] - y_prev[j]);
        if (cross > 0.0) {
            t = 1.0;
            v = y_next;
        } else {
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            const double mom = (t - 1.0) / t_next;
            for (std::size_t j = 0; j < m; ++j)
                v[j] = y_next[j] + mom * (y_next[j] - y_prev[j]);
            t = t_next;
        }
        y_prev = y_next;
        y = y_next;

        if (fv < f_best - eps_improve) {
            f_best = fv;
            stall = 0;
        } else if (++stall > 40) {
            return {true};
        }
    }
    return {false};
}

}  // namespace

LinfRegressionResult linf_regression(const Matrix& B, std::span<const double> c, double tol,
                                     std::span<const double> warm) {
    if (B.empty()) throw DimensionError("B must be nonempty");
    if (c.size() != B.rows()) throw DimensionError("c length must equal rows of B");
    if (tol <= 0.0) throw ValidationError("tol must be positive");
    const std::size_t n = B.rows(), m = B.cols();

    LinfRegressionResult res;
    res.y.assign(m, 0.0);
    if (warm.size() == m) res.y.assign(warm.begin(), warm.end());

    std::vector<double> r;
    residual(B, c, res.y, r);
    res.value = inf_norm(r);
    if (res.value <= 0.0) return res;

    double bnorm2;
    try {
        bnorm2 = spectral_norm(B, 1e-8);
    } catch (const IterationLimitError& e) {
        bnorm2 = e.best_estimate() * 1.25;
    }
    if (bnorm2 <= 0.0) return res;  // B = 0: value is ||c||_inf at any y
    bnorm2 *= 1.0 + 1e-6;

    const double ln2n = std::log(2.0 * static_cast<double>(n));
    const std::size_t cap = (n * m <= 16384) ? 4000 : 1500;
    std::vector<double> y = res.y, best_y = res.y;
    double best_value = res.value;

    double beta = res.value / ln2n;
    bool all_converged = true;
    for (std::size_t stage = 0; stage < 200; ++stage) {
        const double eps = std::max(1e-16, 1e-5 * beta);
        const StageOutcome out =
            run_stage(B, c, beta, bnorm2, cap, eps, y, best_y, best_value);
        all_converged = all_converged && out.converged;
        if (beta * ln2n < tol) break;
        if (stage == 199) all_converged = false;
        beta = std::min(beta * 0.5, std::max(best_value, tol * 0.1) / ln2n);
    }

    residual(B, c, best_y, r);
    res.y = std::move(best_y);
    res.value = inf_norm(r);
    res.converged = all_converged;
    return res;
}

namespace {

bool all_pm_one(const Matrix& a) {
    for (double v : a.flat())
        if (v != 1.0 && v != -1.0) return false;
    return true;
}

// Solve the square system M x = b by Gaussian elimination with partial
// pivoting; returns false when a pivot is negligible.
bool solve_square(Matrix M, std::vector<double> b, std::vector<double>& x) {
    const std::size_t n = M.rows();
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        double best = std::fabs(M(col, col));
        for (std::size_t i = col + 1; i < n; ++i) {
            const double v = std::fabs(M(i, col));
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (best < 1e-12) return false;
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(M(col, j), M(piv, j));
            std::swap(b[col], b[piv]);
        }
        const double d = M(col, col);
        for (std::size_t i = col + 1; i < n; ++i) {
            const double f = M(i, col) / d;
            if (f == 0.0) continue;
            M(i, col) = 0.0;
            for (std::size_t j = col + 1; j < n; ++j) M(i, j) -= f * M(col, j);
            b[i] -= f * b[col];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= M(i, j) * x[j];
        x[i] = s / M(i, i);
    }
    return true;
}

}  // namespace

double witness_mu(const Matrix& Am, const Matrix& witness) {
    if (witness.rows() != Am.rows() || witness.cols() != Am.cols())
        throw DimensionError("witness shape must match A_m");
    // ||I - Y^T A||_inf row i equals ||e_i - A^T y_(i)||_inf, y_(i) = column i
    const std::size_t m = Am.rows(), n = Am.cols();
    double mu = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t h = 0; h < n; ++h) {
            double s = 0.0;
            for (std::size_t r = 0; r < m; ++r) s += witness(r, i) * Am(r, h);
            const double e = std::fabs((i == h ? 1.0 : 0.0) - s);
            mu = std::max(mu, e);
        }
    }
    return mu;
}

GoodnessCertificate opt_certificate(const Matrix& Am, double tol, bool hadamard_shortcut,
                                    std::span<const double> warm) {
    if (Am.empty()) throw DimensionError("A_m must be nonempty");
    const std::size_t m = Am.rows(), n = Am.cols();
    if (m > n) throw DimensionError("A_m must have at most as many rows as columns");
    const Matrix B = transpose(Am);  // n x m

    GoodnessCertificate cert;

    if (hadamard_shortcut) {
        if (!all_pm_one(Am))
            throw ValidationError("hadamard shortcut requires entries exactly +-1");

        std::vector<double> y0;
        bool exact = true;
        if (m == n) {
            // Full +-1 row set: A^T A = n I makes y0 = (1/n) * column 0 of A
            // the exact solution of A^T y = e_0; verified before use.
            y0.resize(n);
            for (std::size_t r = 0; r < n; ++r) y0[r] = Am(r, 0) / static_cast<double>(n);
            std::vector<double> r;
            std::vector<double> e0(n, 0.0);
            e0[0] = 1.0;
            residual(B, e0, y0, r);
            if (inf_norm(r) > 1e-9) y0.clear();
        }
        if (y0.empty()) {
            std::vector<double> e0(n, 0.0);
            e0[0] = 1.0;
            const LinfRegressionResult sol = linf_regression(B, e0, tol, warm);
            y0 = sol.y;
            exact = sol.converged;
        }

        // Character shift: column g of the witness is y0 scaled entrywise by
        // column g of A_m, under which every problem attains the same value.
        cert.witness = Matrix(m, n, 0.0);
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t g = 0; g < n; ++g) cert.witness(r, g) = y0[r] * Am(r, g);

        std::vector<double> r;
        std::vector<double> e0(n, 0.0);
        e0[0] = 1.0;
        residual(B, e0, y0, r);
        cert.mu = inf_norm(r);
        cert.exact = exact;
    } else {
        cert.witness = Matrix(m, n, 0.0);
        bool exact = true;
        std::vector<double> per(n, 0.0);

        // Square nonsingular A_m: direct solve gives the zero-residual optimum.
        bool direct = false;
        if (m == n) {
            Matrix W(m, n, 0.0);
            direct = true;
            std::vector<double> ei(n, 0.0), yi;
            for (std::size_t i = 0; i < n && direct; ++i) {
                std::fill(ei.begin(), ei.end(), 0.0);
                ei[i] = 1.0;
                direct = solve_square(B, ei, yi);
                if (direct)
                    for (std::size_t r = 0; r < m; ++r) W(r, i) = yi[r];
            }
            if (direct) {
                cert.witness = std::move(W);
                std::vector<double> r;
                for (std::size_t i = 0; i < n; ++i) {
                    std::fill(ei.begin(), ei.end(), 0.0);
                    ei[i] = 1.0;
                    std::vector<double> yi2(m);
                    for (std::size_t rr = 0; rr < m; ++rr) yi2[rr] = cert.witness(rr, i);
                    residual(B, ei, yi2, r);
                    per[i] = inf_norm(r);
                }
            }
        }
        if (!direct) {
            std::vector<double> ei(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                std::fill(ei.begin(), ei.end(), 0.0);
                ei[i] = 1.0;
                const LinfRegressionResult sol = linf_regression(B, ei, tol);
                for (std::size_t r = 0; r < m; ++r) cert.witness(r, i) = sol.y[r];
                per[i] = sol.value;
                exact = exact && sol.converged;
            }
        }
        cert.mu = *std::max_element(per.begin(), per.end());
        cert.exact = exact;
    }

    const CertifiedS cs = certified_s(cert.mu);
    cert.s_max = cs.s;
    cert.s_unbounded = cs.unbounded;
    return cert;
}

GoodnessCertificate reoptimize(const Matrix& Am, double tol, bool hadamard_shortcut,
                               std::span<const double> warm) {
    return opt_certificate(Am, tol, hadamard_shortcut, warm);
}

IncoherenceResult mutual_incoherence(const Matrix& B) {
    if (B.empty()) throw DimensionError("B must be nonempty");
    const std::size_t k = B.rows(), n = B.cols();
    std::vector<double> self(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t r = 0; r < k; ++r) s += B(r, j) * B(r, j);
        if (s <= 0.0) throw ValidationError("column " + std::to_string(j) + " is zero");
        self[j] = s;
    }
    double mu = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t r = 0; r < k; ++r) dot += B(r, i) * B(r, j);
            const double d = std::fabs(dot);
            mu = std::max(mu, d / self[i]);
            mu = std::max(mu, d / self[j]);
        }
    }
    IncoherenceResult res;
    res.mu_b = mu;
    if (mu == 0.0) {
        res.s_unbounded = true;
        return res;
    }
    const double thr = (1.0 + mu) / (2.0 * mu);
    long long cand = static_cast<long long>(std::floor(thr));
    while (cand > 0 && !(static_cast<double>(cand) < thr)) --cand;
    while (static_cast<double>(cand + 1) < thr) ++cand;
    res.s_max = static_cast<std::size_t>(std::max<long long>(cand, 0));
    return res;
}

}  // namespace ulra
