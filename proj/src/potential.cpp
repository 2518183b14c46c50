#include "ulra/potential.hpp"

#include <algorithm>
#include <cmath>

#include "ulra/errors.hpp"

namespace ulra {

namespace {

void check(std::span<const double> z, const PotentialParams& p) {
    if (p.beta <= 0.0) throw ValidationError("beta must be positive");
    if (p.d == 0) throw ValidationError("dimension must be positive");
    if (z.size() != p.d) throw DimensionError("argument length does not match d");
}

}  // namespace

double v_beta(std::span<const double> z, const PotentialParams& p) {
    check(z, p);
    double m = 0.0;
    for (double v : z) m = std::max(m, std::fabs(v));
    if (m == 0.0) return 0.0;
    const double inv_beta = 1.0 / p.beta;
    const double shift = m * inv_beta;
    double t = 0.0;
    for (double v : z) {
        const double w = std::fabs(v) * inv_beta;
        t += std::exp(w - shift) * (1.0 + std::exp(-2.0 * w)) * 0.5;
    }
    return p.beta * (shift + std::log(t) - std::log(static_cast<double>(p.d)));
}

std::vector<double> v_beta_grad(std::span<const double> z, const PotentialParams& p) {
    check(z, p);
    std::vector<double> g(p.d, 0.0);
    double m = 0.0;
    for (double v : z) m = std::max(m, std::fabs(v));
    if (m == 0.0) return g;
    const double inv_beta = 1.0 / p.beta;
    const double shift = m * inv_beta;
    double t = 0.0;
    for (std::size_t i = 0; i < p.d; ++i) {
        const double w = std::fabs(z[i]) * inv_beta;
        const double e = std::exp(w - shift);
        const double down = std::exp(-2.0 * w);
        t += e * (1.0 + down) * 0.5;
        g[i] = std::copysign(e * (1.0 - down) * 0.5, z[i]);
    }
    for (double& v : g) v /= t;
    return g;
}

double v_beta_value_grad(std::span<const double> z, const PotentialParams& p,
                         std::span<double> grad_out) {
    check(z, p);
    if (grad_out.size() != p.d) throw DimensionError("grad_out length does not match d");
    double m = 0.0;
    for (double v : z) m = std::max(m, std::fabs(v));
    if (m == 0.0) {
        std::fill(grad_out.begin(), grad_out.end(), 0.0);
        return 0.0;
    }
    const double inv_beta = 1.0 / p.beta;
    const double shift = m * inv_beta;
    double t = 0.0;
    for (std::size_t i = 0; i < p.d; ++i) {
        const double w = std::fabs(z[i]) * inv_beta;
        const double e = std::exp(w - shift);
        const double down = std::exp(-2.0 * w);
        t += e * (1.0 + down) * 0.5;
        grad_out[i] = std::copysign(e * (1.0 - down) * 0.5, z[i]);
    }
    for (double& v : grad_out) v /= t;
    return p.beta * (shift + std::log(t) - std::log(static_cast<double>(p.d)));
}

double beta_at(const BetaSchedule& s, std::size_t ell) {
    if (s.L <= 0.0) throw ValidationError("schedule L must be positive");
    if (s.d == 0) throw ValidationError("schedule d must be positive");
    const double ln2d = std::log(2.0 * static_cast<double>(s.d));
    switch (s.kind) {
        case ScheduleKind::fixed: {
            if (!s.horizon || *s.horizon == 0)
                throw ValidationError("fixed schedule requires a positive horizon");
            return s.L * std::sqrt(2.0 * static_cast<double>(*s.horizon) / ln2d);
        }
        case ScheduleKind::recursive: {
            double b = 2.0 * s.L * s.L / ln2d;
            for (std::size_t i = 0; i < ell; ++i) b += 2.0 * s.L * s.L / (ln2d * b);
            return b;
        }
        case ScheduleKind::closed:
        case ScheduleKind::joint:
            return 2.0 * s.L * std::sqrt(static_cast<double>(ell + 1) / ln2d);
    }
    throw ValidationError("unknown schedule kind");
}

}  // namespace ulra
