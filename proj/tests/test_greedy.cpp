#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "ulra/errors.hpp"
#include "ulra/goodness.hpp"
#include "ulra/greedy.hpp"
#include "ulra/hadamard.hpp"
#include "ulra/potential.hpp"

using namespace ulra;

namespace {

RowEnsemble hadamard_ensemble(std::size_t nu) {
    const HadamardMatrix h = build_hadamard(nu);
    return build_ensemble(hadamard_certificate(h), h.matrix);
}

BetaSchedule fixed_schedule(const RowEnsemble& e, std::size_t horizon) {
    return BetaSchedule{ScheduleKind::fixed, e.L, e.n * e.n, horizon};
}

Matrix with_atom(const Matrix& base, std::span<const double> v, std::span<const double> a) {
    Matrix out = base;
    for (std::size_t j = 0; j < out.rows(); ++j)
        for (std::size_t l = 0; l < out.cols(); ++l) out(j, l) += v[j] * a[l];
    return out;
}

double v_at(const Matrix& m, double beta) {
    return v_beta(m.flat(), PotentialParams{beta, m.size()});
}

}  // namespace

TEST_CASE("zero gradient accepts the lowest active index") {
    const RowEnsemble e = hadamard_ensemble(2);
    GreedyState st = initial_state(e, fixed_schedule(e, 8));
    st = step_policy_a(std::move(st), e, AVariant::first_hit);
    CHECK(st.picks.front().first == 0);
    CHECK(st.k == 1);

    GreedyState st2 = initial_state(e, fixed_schedule(e, 8));
    RandomSource rng(5);
    st2 = step_policy_a_prime(std::move(st2), e, rng, 16);
    CHECK(st2.k == 1);  // very first draw is acceptable at S = 0
}

TEST_CASE("fixed-schedule guarantee at the horizon for every policy") {
    const RowEnsemble e = hadamard_ensemble(3);
    const std::size_t horizon = 32;
    const double target = 1.1013662270016746;  // 2 sqrt(2 ln 128 / 32)
    RandomSource rng(9);

    for (int which = 0; which < 4; ++which) {
        GreedyState st = initial_state(e, fixed_schedule(e, horizon));
        for (std::size_t k = 0; k < horizon; ++k) {
            const double beta_before = st.beta;
            const double v_before = st.v_current;
            switch (which) {
                case 0: st = step_policy_a(std::move(st), e, AVariant::first_hit); break;
                case 1: st = step_policy_a(std::move(st), e, AVariant::best_of_all); break;
                case 2: st = step_policy_b(std::move(st), e, 1e-10); break;
                case 3: st = step_policy_c(std::move(st), e, 1e-10); break;
            }
            // the accepted step respects its potential budget
            REQUIRE(st.v_current - v_before <= 2.0 * e.L * e.L / beta_before + 1e-9);
        }
        // mu at the horizon: ||I - (S/k + W)||_inf
        Matrix u = add(scale(st.S, 1.0 / horizon), e.W);
        CHECK(uniform_norm(subtract(Matrix::identity(8), u)) <= target + 1e-9);

        // deterministic certificate of the telescoped potential
        CHECK(uniform_norm(st.S) <=
              st.beta * std::log(2.0 * 64.0) + st.deltasum + 1e-9);
        CHECK(st.v_current == doctest::Approx(st.deltasum).epsilon(1e-9));
    }
}

TEST_CASE("policy a-prime is reproducible and meets the same bound") {
    const RowEnsemble e = hadamard_ensemble(3);
    const std::size_t horizon = 32;

    auto run = [&](std::uint64_t seed) {
        RandomSource rng(seed);
        GreedyState st = initial_state(e, fixed_schedule(e, horizon));
        std::vector<std::size_t> picks;
        for (std::size_t k = 0; k < horizon; ++k) {
            st = step_policy_a_prime(std::move(st), e, rng, 64);
            picks.push_back(st.picks.back().first);
        }
        Matrix u = add(scale(st.S, 1.0 / horizon), e.W);
        return std::pair(picks, uniform_norm(subtract(Matrix::identity(8), u)));
    };

    const auto [p1, mu1] = run(123);
    const auto [p2, mu2] = run(123);
    CHECK(p1 == p2);
    CHECK(mu1 == mu2);
    CHECK(mu1 <= 1.1013662270016746 + 1e-9);
}

TEST_CASE("line search recovers exact cancellation") {
    const RowEnsemble e = hadamard_ensemble(2);
    GreedyState st = initial_state(e, fixed_schedule(e, 8));

    // S - W = -(z_1 a_1^T): the optimum is t = 1 with value 0
    std::vector<double> neg_z(e.n), a1(e.arows.row(1).begin(), e.arows.row(1).end());
    for (std::size_t j = 0; j < e.n; ++j) neg_z[j] = -e.zrows(1, j);
    st.S = with_atom(e.W, neg_z, a1);
    const LineSearchResult r = linesearch_rank1(st, e, 1, 1e-12);
    CHECK(r.t_star == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.value <= 1e-10);

    // S = W: the argument is t z a^T, minimized at t = 0 with value 0
    st.S = e.W;
    const LineSearchResult r0 = linesearch_rank1(st, e, 1, 1e-12);
    CHECK(r0.t_star == 0.0);
    CHECK(r0.value == 0.0);
}

TEST_CASE("line search beats a grid oracle on random instances") {
    RandomSource rng(61);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix y = testutil::random_matrix(rng, 4, 3);
        const Matrix a = testutil::random_matrix(rng, 4, 3);
        const RowEnsemble e = build_ensemble(y, a);
        GreedyState st = initial_state(e, fixed_schedule(e, 8));
        st.S = testutil::random_matrix(rng, 3, 3);
        const std::size_t i = e.active[rng.next_u64() % e.active.size()];
        const LineSearchResult r = linesearch_rank1(st, e, i, 1e-10);

        const Matrix x = subtract(st.S, e.W);
        std::vector<double> v(e.n);
        for (double t = 0.0; t <= 4.0 + 1e-12; t += 0.2) {
            for (std::size_t j = 0; j < e.n; ++j) v[j] = t * e.zrows(i, j);
            CHECK(r.value <= v_at(with_atom(x, v, e.arows.row(i)), st.beta) + 1e-8);
        }
    }
}

TEST_CASE("coordinate solve roots") {
    // S = W: odd symmetry puts every root at zero
    {
        const RowEnsemble e = hadamard_ensemble(2);
        GreedyState st = initial_state(e, fixed_schedule(e, 8));
        st.S = e.W;
        const auto u = solve_policy_c_row(st, e, e.arows.row(0), 1e-12);
        for (double x : u) CHECK(std::fabs(x) <= 1e-12);
    }
    // single term with gamma = 1, alpha = 1: sinh(1 + u) = 0 at u = -1
    {
        const RowEnsemble e = build_ensemble(Matrix(1, 1, {1.0}), Matrix(1, 1, {1.0}));
        GreedyState st = initial_state(e, fixed_schedule(e, 4));
        st.beta = 1.0;
        st.S = Matrix(1, 1, {2.0});  // X = S - W = 1
        const std::vector<double> row{1.0};
        const auto u = solve_policy_c_row(st, e, row, 1e-12);
        CHECK(u[0] == doctest::Approx(-1.0).epsilon(1e-10));
    }
}

TEST_CASE("coordinate solve reaches first-order optimality") {
    RandomSource rng(62);
    const Matrix y = testutil::random_matrix(rng, 5, 4);
    const Matrix a = testutil::random_matrix(rng, 5, 4);
    const RowEnsemble e = build_ensemble(y, a);
    GreedyState st = initial_state(e, fixed_schedule(e, 8));
    st.S = testutil::random_matrix(rng, 4, 4);

    const double tol = 1e-9;
    for (std::size_t i : e.active) {
        const auto u = solve_policy_c_row(st, e, e.arows.row(i), tol);
        const Matrix x = subtract(st.S, e.W);
        const Matrix trial = with_atom(x, u, e.arows.row(i));
        const auto g = v_beta_grad(trial.flat(), {st.beta, trial.size()});
        for (std::size_t j = 0; j < e.n; ++j) {
            double contraction = 0.0;
            for (std::size_t l = 0; l < e.n; ++l)
                contraction += g[j * e.n + l] * e.arows(i, l);
            CHECK(std::fabs(contraction) <= 1e-6);
        }
    }
}

TEST_CASE("policy values nest: C <= B <= A at a common state") {
    RandomSource rng(63);
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix y = testutil::random_matrix(rng, 5, 4);
        const Matrix a = testutil::random_matrix(rng, 5, 4);
        const RowEnsemble e = build_ensemble(y, a);
        GreedyState st = initial_state(e, fixed_schedule(e, 8));
        st.S = testutil::random_matrix(rng, 4, 4, 0.5);
        const Matrix x = subtract(st.S, e.W);

        double best_a = 1e300, best_b = 1e300, best_c = 1e300;
        std::vector<double> v(e.n);
        for (std::size_t i : e.active) {
            for (std::size_t j = 0; j < e.n; ++j) v[j] = e.zrows(i, j);
            best_a = std::min(best_a, v_at(with_atom(x, v, e.arows.row(i)), st.beta));
            best_b = std::min(best_b, linesearch_rank1(st, e, i, 1e-10).value);
            const auto u = solve_policy_c_row(st, e, e.arows.row(i), 1e-10);
            best_c = std::min(best_c, v_at(with_atom(x, u, e.arows.row(i)), st.beta));
        }
        CHECK(best_b <= best_a + 1e-9);
        CHECK(best_c <= best_b + 1e-9);
    }
}

TEST_CASE("policy b at the zero state dominates the unit step") {
    const RowEnsemble e = hadamard_ensemble(3);
    GreedyState st = initial_state(e, fixed_schedule(e, 32));
    const Matrix x = subtract(st.S, e.W);
    GreedyState stepped = step_policy_b(st, e, 1e-10);
    const std::size_t i = stepped.picks.back().first;
    std::vector<double> unit(e.n);
    for (std::size_t j = 0; j < e.n; ++j) unit[j] = e.zrows(i, j);
    const double value_unit = v_at(with_atom(x, unit, e.arows.row(i)), st.beta);
    const double value_b =
        v_at(with_atom(x, stepped.picks.back().second, e.arows.row(i)), st.beta);
    CHECK(value_b <= value_unit + 1e-9);

    GreedyState again = step_policy_b(st, e, 1e-10);
    CHECK(again.picks.back().first == i);  // rerun identical
}

TEST_CASE("joint step dominates the scheduled point and is deterministic") {
    const RowEnsemble e = hadamard_ensemble(2);
    BetaSchedule sched{ScheduleKind::joint, e.L, e.n * e.n, {}};
    GreedyState st = initial_state(e, sched);
    const double ln2d = std::log(2.0 * double(e.n * e.n));
    const Matrix x = subtract(st.S, e.W);

    GreedyState j1 = step_joint_beta(st, e, 1e-10);
    GreedyState j2 = step_joint_beta(st, e, 1e-10);
    CHECK(j1.picks.back().first == j2.picks.back().first);
    CHECK(j1.beta == j2.beta);

    const double achieved = j1.beta * ln2d + j1.v_current;
    std::vector<double> unit(e.n);
    for (std::size_t i : e.active) {
        for (std::size_t j = 0; j < e.n; ++j) unit[j] = e.zrows(i, j);
        const double at_schedule = st.beta * ln2d + v_at(with_atom(x, unit, e.arows.row(i)), st.beta);
        CHECK(achieved <= at_schedule + 1e-8);
    }
}

TEST_CASE("state reconstructs from its picks") {
    const RowEnsemble e = hadamard_ensemble(3);
    RandomSource rng(64);
    GreedyState st = initial_state(e, fixed_schedule(e, 16));
    for (int k = 0; k < 16; ++k) st = step_policy_a_prime(std::move(st), e, rng, 32);

    Matrix rebuilt(e.n, e.n, 0.0);
    for (const auto& [i, v] : st.picks)
        rebuilt = add(rebuilt, subtract(with_atom(Matrix(e.n, e.n, 0.0), v, e.arows.row(i)),
                                        e.W));
    CHECK(testutil::max_abs_diff(rebuilt, st.S) <= 1e-8);
    CHECK(st.deltasum <= [&] {
        double cap = 0.0;
        BetaSchedule s = fixed_schedule(e, 16);
        for (std::size_t l = 0; l < 16; ++l) cap += 2.0 * e.L * e.L / beta_at(s, l);
        return cap + 1e-9;
    }());
}

TEST_CASE("run_derandomized honors the per-step bound and termination") {
    const HadamardMatrix h = build_hadamard(3);
    const Matrix y = hadamard_certificate(h);

    RunOptions opts;
    opts.policy = Policy::a;
    opts.schedule = ScheduleKind::fixed;
    opts.k_max = 32;
    const SynthesisResult res = run_derandomized(y, h.matrix, opts);
    REQUIRE(res.history.size() == 32);
    for (const auto& rec : res.history) {
        const double bound = 2.0 * std::sqrt(2.0 * std::log(128.0) / double(rec.k));
        CHECK(rec.mu <= bound + 1e-9);
    }
    CHECK(res.history.back().mu <= 1.1013662270016746 + 1e-9);

    RunOptions t1;
    t1.policy = Policy::a;
    t1.schedule = ScheduleKind::closed;
    t1.k_max = 64;
    t1.target_s = 1;
    const SynthesisResult r1 = run_derandomized(y, h.matrix, t1);
    CHECK(r1.certified);
    CHECK(r1.mu < 0.5);
    CHECK(r1.history.back().mu == r1.mu);
    CHECK(materialize(r1.factor).rows() == 8);

    // the assembled factor reproduces the incumbent approximation
    const Matrix u = materialize(r1.factor);
    double mu_factor = 0.0;
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 8; ++j)
            mu_factor = std::max(mu_factor, std::fabs((i == j ? 1.0 : 0.0) - u(i, j)));
    CHECK(mu_factor == doctest::Approx(r1.history.back().mu).epsilon(1e-9));
}

TEST_CASE("refinement certifies no later than the incumbent") {
    const HadamardMatrix h = build_hadamard(4);
    const Matrix y = hadamard_certificate(h);
    RandomSource rng(77);

    RunOptions plain;
    plain.policy = Policy::aprime;
    plain.schedule = ScheduleKind::closed;
    plain.k_max = 200;
    plain.target_s = 2;
    const SynthesisResult no_ref = run_derandomized(y, h.matrix, plain, &rng);

    RunOptions refined = plain;
    refined.refine_every = 1;
    refined.hadamard_shortcut = true;
    RandomSource rng2(77);
    const SynthesisResult with_ref = run_derandomized(y, h.matrix, refined, &rng2);

    CHECK(no_ref.certified);
    CHECK(with_ref.certified);
    CHECK(with_ref.rows.size() <= no_ref.rows.size());
    CHECK(with_ref.mu < 0.25);
}

TEST_CASE("blind run is reproducible and certifies") {
    const HadamardMatrix h = build_hadamard(3);
    const Matrix y = hadamard_certificate(h);
    RunOptions opts;
    opts.policy = Policy::blind;
    opts.k_max = 200;
    opts.target_s = 1;
    opts.refine_every = 1;
    opts.hadamard_shortcut = true;

    RandomSource r1(31), r2(31);
    const SynthesisResult a = run_blind(y, h.matrix, opts, r1);
    const SynthesisResult b = run_blind(y, h.matrix, opts, r2);
    CHECK(a.certified);
    CHECK(a.rows == b.rows);
    CHECK(a.mu == b.mu);
    CHECK(a.mu < 0.5);
    CHECK(a.rows.size() < 8);
}

TEST_CASE("exhausted budget reports uncertified") {
    const HadamardMatrix h = build_hadamard(3);
    const Matrix y = hadamard_certificate(h);
    RunOptions opts;
    opts.policy = Policy::a;
    opts.k_max = 2;
    opts.target_s = 40;  // unreachable in two steps
    const SynthesisResult res = run_derandomized(y, h.matrix, opts);
    CHECK_FALSE(res.certified);
    CHECK(res.history.size() == 2);
}
