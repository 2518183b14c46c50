#include "ulra/hadamard.hpp"

#include <cmath>

#include "ulra/errors.hpp"

namespace ulra {

HadamardMatrix build_hadamard(std::size_t nu) {
    if (nu > 14) throw CapacityError("hadamard order exponent capped at 14");
    const std::size_t n = std::size_t{1} << nu;
    Matrix h(n, n, 0.0);
    h(0, 0) = 1.0;
    for (std::size_t s = 1; s <= n / 2; s *= 2) {
        // grow the top-left s x s block to 2s x 2s
        for (std::size_t i = 0; i < s; ++i) {
            for (std::size_t j = 0; j < s; ++j) {
                const double v = h(i, j);
                h(i, j + s) = v;
                h(i + s, j) = v;
                h(i + s, j + s) = -v;
            }
        }
    }
    return HadamardMatrix{nu, std::move(h)};
}

Matrix hadamard_certificate(const HadamardMatrix& h) {
    const double inv = std::ldexp(1.0, -static_cast<int>(h.nu));  // exact 2^{-nu}
    return scale(h.matrix, inv);
}

}  // namespace ulra
