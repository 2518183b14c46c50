#pragma once

#include <cstddef>

#include "ulra/matrix.hpp"

namespace ulra {

// Rank-bounded approximation stored as paired factor rows: the implied matrix
// is scale * left^T right (so rank <= number of factor rows <= k). Used both
// for Gaussian sketches (rows P xi_i / Q xi_i, scale 1/k) and for synthesized
// certificates (aggregated coefficient rows against selected sensing rows).
struct RankKFactor {
    Matrix left;
    Matrix right;
    std::size_t k = 0;  // rank bound
    double scale = 1.0;
};

Matrix materialize(const RankKFactor& f);

}  // namespace ulra
