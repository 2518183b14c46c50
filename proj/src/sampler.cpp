#include "ulra/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "ulra/errors.hpp"

namespace ulra {

namespace {

// max and min absolute entry of a row
std::pair<double, double> abs_range(std::span<const double> row) {
    double hi = 0.0, lo = std::numeric_limits<double>::infinity();
    for (double v : row) {
        const double a = std::fabs(v);
        hi = std::max(hi, a);
        lo = std::min(lo, a);
    }
    return {hi, lo};
}

}  // namespace

RowEnsemble build_ensemble(const Matrix& Y, const Matrix& A) {
    if (Y.rows() != A.rows() || Y.cols() != A.cols())
        throw DimensionError("Y and A must have identical shapes");
    if (Y.empty()) throw DimensionError("empty ensemble input");
    if (A.cols() > 4096) throw CapacityError("ensemble refuses n > 4096");

    RowEnsemble e;
    e.M = Y.rows();
    e.n = Y.cols();
    e.theta.resize(e.M);
    e.pi.assign(e.M, 0.0);
    e.zrows = Matrix(e.M, e.n, 0.0);
    e.arows = A;
    e.z_flat.assign(e.M, 0);
    e.a_flat.assign(e.M, 0);
    e.z_mag.assign(e.M, 0.0);
    e.a_mag.assign(e.M, 0.0);

    double L = 0.0;
    for (std::size_t i = 0; i < e.M; ++i) {
        const auto [ymax, ymin] = abs_range(Y.row(i));
        const auto [amax, amin] = abs_range(A.row(i));
        e.theta[i] = ymax * amax;
        L += e.theta[i];
        if (e.theta[i] > 0.0) {
            e.active.push_back(i);
            e.z_flat[i] = (ymax == ymin);
            e.a_flat[i] = (amax == amin);
            e.a_mag[i] = amax;
        }
    }
    if (L <= 0.0) throw DegenerateInputError("all rows have zero weight (L = 0)");
    e.L = L;

    double c = 0.0;
    for (std::size_t i : e.active) {
        e.pi[i] = e.theta[i] / L;
        c += e.pi[i];
        e.cum.push_back(c);
        const double f = L / e.theta[i];
        for (std::size_t j = 0; j < e.n; ++j) e.zrows(i, j) = f * Y(i, j);
        e.z_mag[i] = abs_range(e.zrows.row(i)).first;
    }
    if (!e.cum.empty()) e.cum.back() = 1.0;  // guard against rounding drift

    e.W = multiply(transpose(Y), A);
    return e;
}

std::size_t draw_index(const RowEnsemble& e, double u) {
    const auto it = std::lower_bound(e.cum.begin(), e.cum.end(), u);
    const std::size_t pos = std::min<std::size_t>(it - e.cum.begin(), e.active.size() - 1);
    return e.active[pos];
}

SketchResult sample_sketch(const RowEnsemble& e, std::size_t k, RandomSource& rng) {
    if (k == 0) throw ValidationError("sample_sketch needs k >= 1");
    if (e.active.empty()) throw DegenerateInputError("degenerate ensemble");

    SketchResult s;
    s.selected.reserve(k);
    std::map<std::size_t, std::size_t> counts;
    for (std::size_t l = 0; l < k; ++l) {
        const std::size_t i = draw_index(e, rng.next_unit());
        s.selected.push_back(i);
        ++counts[i];
    }
    s.mk = counts.size();
    s.Yk = Matrix(s.mk, e.n, 0.0);
    s.Ak = Matrix(s.mk, e.n, 0.0);
    std::size_t r = 0;
    for (const auto& [i, c] : counts) {
        s.distinct.push_back(i);
        const double w = static_cast<double>(c) / static_cast<double>(k);
        s.coeff.push_back(w);
        for (std::size_t j = 0; j < e.n; ++j) {
            s.Yk(r, j) = w * e.zrows(i, j);
            s.Ak(r, j) = e.arows(i, j);
        }
        ++r;
    }
    s.Wk = multiply(transpose(s.Yk), s.Ak);
    s.err = uniform_norm(subtract(s.Wk, e.W));
    return s;
}

GoodnessCertificate sketch_certificate(const SketchResult& s, double mu) {
    if (mu < 0.0) throw ValidationError("mu must be nonnegative");
    if (s.Wk.rows() != s.Wk.cols()) throw DimensionError("sketch W_k is not square");
    GoodnessCertificate cert;
    cert.witness = s.Yk;
    cert.mu = uniform_norm(subtract(Matrix::identity(s.Wk.rows()), s.Wk));
    const CertifiedS cs = certified_s(cert.mu);
    cert.s_max = cs.s;
    cert.s_unbounded = cs.unbounded;
    cert.exact = false;
    return cert;
}

}  // namespace ulra
