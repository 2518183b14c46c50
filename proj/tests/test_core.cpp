#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "test_util.hpp"
#include "ulra/errors.hpp"
#include "ulra/hadamard.hpp"
#include "ulra/matrix.hpp"
#include "ulra/random.hpp"

using namespace ulra;

TEST_CASE("uniform norm basics") {
    CHECK(uniform_norm(Matrix(2, 2, {1, -3, 2, 0})) == doctest::Approx(3.0));
    CHECK(uniform_norm(Matrix::identity(5)) == doctest::Approx(1.0));
    CHECK(uniform_norm(build_hadamard(2).matrix) == doctest::Approx(1.0));
    CHECK_THROWS_AS(uniform_norm(Matrix{}), DimensionError);
}

TEST_CASE("uniform norm is a norm on random triples") {
    RandomSource rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const Matrix a = testutil::random_matrix(rng, 5, 7);
        const Matrix b = testutil::random_matrix(rng, 5, 7);
        const double alpha = 3.0 * (rng.next_unit() - 0.5);
        CHECK(uniform_norm(scale(a, alpha)) ==
              doctest::Approx(std::fabs(alpha) * uniform_norm(a)));
        CHECK(uniform_norm(add(a, b)) <= uniform_norm(a) + uniform_norm(b) + 1e-12);
    }
}

TEST_CASE("spectral norm") {
    CHECK(spectral_norm(Matrix::identity(3), 1e-12) == doctest::Approx(1.0));
    CHECK(spectral_norm(Matrix(2, 2, {3, 0, 0, 4}), 1e-12) == doctest::Approx(4.0));
    for (std::size_t nu = 1; nu <= 5; ++nu) {
        const Matrix h = build_hadamard(nu).matrix;
        CHECK(spectral_norm(h, 1e-12) ==
              doctest::Approx(std::pow(2.0, nu / 2.0)).epsilon(1e-9));
    }
}

TEST_CASE("norm sandwich between uniform and spectral") {
    RandomSource rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t m = 2 + rng.next_u64() % 10, n = 2 + rng.next_u64() % 10;
        const Matrix a = testutil::random_matrix(rng, m, n);
        const double u = uniform_norm(a), s = spectral_norm(a, 1e-6);
        CHECK(u <= s * (1 + 1e-5));
        CHECK(s <= std::sqrt(double(m * n)) * u * (1 + 1e-9));
    }
}

TEST_CASE("iteration limit carries the running estimate") {
    // two nearly equal singular values force the cap at an extreme tolerance
    Matrix a(2, 2, {1.0, 0.0, 0.0, 1.0 - 1e-13});
    try {
        const double s = spectral_norm(a, 1e-18);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-6));  // may converge on fast hardware
    } catch (const IterationLimitError& e) {
        CHECK(e.best_estimate() == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("matrix io round trip is bit exact") {
    RandomSource rng(13);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t m = 1 + rng.next_u64() % 6, n = 1 + rng.next_u64() % 6;
        const Matrix a = testutil::random_matrix(rng, m, n, std::pow(10.0, trial % 7 - 3));
        std::stringstream ss;
        write_matrix(a, ss);
        CHECK(read_matrix(ss) == a);
    }
}

TEST_CASE("matrix io format") {
    std::stringstream ss("2 2\n1 1\n1 -1\n");
    const Matrix h1 = read_matrix(ss);
    CHECK(h1 == build_hadamard(1).matrix);

    std::stringstream comments("# order two\n2 2\n1 1\n# middle\n1 -1\n");
    CHECK(read_matrix(comments) == h1);

    std::stringstream missing("2 3\n1 2\n");
    CHECK_THROWS_AS(read_matrix(missing), ParseError);

    std::stringstream bad_token("2 2\n1 x\n1 1\n");
    CHECK_THROWS_AS(read_matrix(bad_token), ParseError);

    std::stringstream bad_header("two two\n");
    CHECK_THROWS_AS(read_matrix(bad_header), ParseError);

    std::stringstream excess("1 1\n1 2\n");
    CHECK_THROWS_AS(read_matrix(excess), ParseError);
}

TEST_CASE("parse error carries the line number") {
    std::stringstream bad("2 2\n1 1\nnope 1\n");
    try {
        read_matrix(bad);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("matrix construction validates") {
    CHECK_THROWS_AS(Matrix(2, 2, {1.0, 2.0, 3.0}), DimensionError);
    CHECK_THROWS_AS(Matrix(1, 2, {1.0, std::nan("")}), ValidationError);
    CHECK_THROWS_AS(Matrix(0, 2), DimensionError);
}

TEST_CASE("gaussian vector determinism") {
    RandomSource a(42, 7), b(42, 7);
    CHECK(gaussian_vector(a, 4) == gaussian_vector(b, 4));

    RandomSource c(42, 7);
    const auto first = gaussian_vector(c, 4);
    RandomSource d(42, 7);
    CHECK(gaussian_vector(d, 4) == first);

    CHECK_THROWS_AS(gaussian_vector(a, 0), ValidationError);
}

TEST_CASE("gaussian vector moments") {
    RandomSource rng(2024);
    const auto v = gaussian_vector(rng, 100000);
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= v.size();
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= v.size() - 1;
    CHECK(std::fabs(mean) < 0.02);
    CHECK(std::fabs(var - 1.0) < 0.05);
}

TEST_CASE("distinct streams decorrelate") {
    RandomSource rng(5);
    RandomSource s1 = rng.stream(1), s2 = rng.stream(2);
    const auto a = gaussian_vector(s1, 10000);
    const auto b = gaussian_vector(s2, 10000);
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    CHECK(std::fabs(dot / std::sqrt(na * nb)) < 0.05);
}

TEST_CASE("uniform unit draws stay in range") {
    RandomSource rng(99);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.next_unit();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double o = rng.next_open_unit();
        CHECK(o > 0.0);
        CHECK(o <= 1.0);
    }
}
