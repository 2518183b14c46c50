#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_util.hpp"
#include "ulra/errors.hpp"
#include "ulra/hadamard.hpp"
#include "ulra/matrix.hpp"
#include "ulra/sampler.hpp"

using namespace ulra;

TEST_CASE("small orders match the recurrence") {
    const HadamardMatrix h0 = build_hadamard(0);
    CHECK(h0.matrix == Matrix(1, 1, {1.0}));

    const HadamardMatrix h1 = build_hadamard(1);
    CHECK(h1.matrix == Matrix(2, 2, {1, 1, 1, -1}));

    const HadamardMatrix h3 = build_hadamard(3);
    const Matrix gram = multiply(transpose(h3.matrix), h3.matrix);
    CHECK(testutil::max_abs_diff(gram, scale(Matrix::identity(8), 8.0)) == 0.0);
}

TEST_CASE("structure holds for all tested orders") {
    for (std::size_t nu = 0; nu <= 10; ++nu) {
        const HadamardMatrix h = build_hadamard(nu);
        const std::size_t n = std::size_t{1} << nu;
        REQUIRE(h.matrix.rows() == n);
        for (double v : h.matrix.flat()) CHECK((v == 1.0 || v == -1.0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                CHECK(h.matrix(i, j) == h.matrix(j, i));
        // gram check on a sample of column pairs to keep nu=10 cheap
        for (std::size_t t = 0; t < std::min<std::size_t>(64, n * n); ++t) {
            const std::size_t a = (t * 37) % n, b = (t * 61 + 1) % n;
            double dot = 0.0;
            for (std::size_t r = 0; r < n; ++r) dot += h.matrix(r, a) * h.matrix(r, b);
            CHECK(dot == (a == b ? double(n) : 0.0));
        }
    }
}

TEST_CASE("capacity guard") { CHECK_THROWS_AS(build_hadamard(15), CapacityError); }

TEST_CASE("closed-form certificate is exact") {
    const HadamardMatrix h1 = build_hadamard(1);
    const Matrix y1 = hadamard_certificate(h1);
    CHECK(y1 == Matrix(2, 2, {0.5, 0.5, 0.5, -0.5}));
    CHECK(testutil::max_abs_diff(multiply(transpose(y1), h1.matrix), Matrix::identity(2)) ==
          0.0);

    const HadamardMatrix h3 = build_hadamard(3);
    const Matrix y3 = hadamard_certificate(h3);
    const Matrix residual = subtract(Matrix::identity(8), multiply(transpose(y3), h3.matrix));
    CHECK(uniform_norm(residual) == 0.0);
}

TEST_CASE("certificate ensemble has unit weight") {
    const HadamardMatrix h = build_hadamard(4);
    const RowEnsemble e = build_ensemble(hadamard_certificate(h), h.matrix);
    CHECK(e.L == doctest::Approx(1.0).epsilon(1e-15));
    for (std::size_t i = 0; i < e.M; ++i) {
        CHECK(e.pi[i] == doctest::Approx(1.0 / 16).epsilon(1e-15));
        CHECK(testutil::max_abs_diff(Matrix(1, 16, std::vector<double>(
                                                       e.zrows.row(i).begin(),
                                                       e.zrows.row(i).end())),
                                     Matrix(1, 16, std::vector<double>(
                                                       h.matrix.row(i).begin(),
                                                       h.matrix.row(i).end()))) == 0.0);
    }
}
