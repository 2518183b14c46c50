#pragma once

#include <cstddef>

#include "ulra/matrix.hpp"

namespace ulra {

// Sylvester Hadamard matrix of order 2^nu: symmetric, entries +-1,
// H^T H = 2^nu I.
struct HadamardMatrix {
    std::size_t nu = 0;
    Matrix matrix;
};

// Doubling recurrence H_0 = [1], H_{s+1} = [[H_s, H_s], [H_s, -H_s]].
// nu is capped at 14 (a 2^14-square double matrix is ~2 GB).
HadamardMatrix build_hadamard(std::size_t nu);

// Closed-form certificate Y = 2^{-nu} H with I - Y^T H = 0 exactly.
Matrix hadamard_certificate(const HadamardMatrix& h);

}  // namespace ulra
