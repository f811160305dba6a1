#include <doctest.h>

#include "hdsys/builtins.hpp"
#include "hdsys/operators.hpp"
#include "hdsys/probes.hpp"

using namespace hdsys;

namespace {

Mat id1() { return Mat::Identity(1, 1); }

} // namespace

TEST_CASE("history_eval: identity kernel integrates exactly on dividing grids") {
    auto s = DiscreteSpace::euclidean(1, "V");
    TimeGrid grid(1.0, 8);
    Trajectory one = Trajectory::constant(s, grid, Vec::Ones(1));
    auto op = HistoryOperator::volterra(s, [](double, double) { return id1(); }, 1.0);
    CHECK(op.eval(one, 8)[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(op.eval(one, 0)[0] == 0.0);

    Trajectory zero = Trajectory::zero(s, grid);
    CHECK(op.eval(zero, 5)[0] == 0.0);

    CHECK_THROWS_AS(op.eval(one, 9), Error);
    CHECK_THROWS_AS(op.eval(one, -1), Error);
}

TEST_CASE("history_eval: exponential kernel matches the analytic integral") {
    auto s = DiscreteSpace::euclidean(1, "V");
    TimeGrid grid(1.0, 1024);
    Trajectory one = Trajectory::constant(s, grid, Vec::Ones(1));
    auto op = HistoryOperator::volterra(
        s, [](double t, double u) { return Mat(std::exp(-(t - u)) * id1()); }, 1.0);
    const double exact = 1.0 - std::exp(-1.0); // int_0^1 e^{-(1-s)} ds
    CHECK(std::abs(op.eval(one, 1024)[0] - exact) <= 2.0 * grid.dt());
}

TEST_CASE("history kinds: accumulate and integral-of-map offsets") {
    auto s = DiscreteSpace::euclidean(2, "V");
    TimeGrid grid(1.0, 4);
    Vec off(2);
    off << 3.0, -1.0;
    auto acc = builtins::accumulate_linear(s, 2.0 * Mat::Identity(2, 2), off);
    Trajectory traj = Trajectory::constant(s, grid, Vec::Ones(2));
    CHECK(acc.eval(traj, 0)[0] == 3.0); // k = 0 returns the offset
    CHECK(acc.eval(traj, 0)[1] == -1.0);
    CHECK(acc.eval(traj, 4)[0] == doctest::Approx(2.0 * 1.0 + 3.0).epsilon(1e-14));

    auto iom = HistoryOperator::integral_of_map(
        s, [](const Vec& v) { return Vec(v.cwiseProduct(v)); }, 1.0);
    CHECK(iom.eval(traj, 4)[0] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("history causality is bit-exact") {
    auto s = DiscreteSpace::euclidean(2, "V");
    TimeGrid grid(1.0, 16);
    NormalStream rng(41);
    Trajectory a(s, grid), b(s, grid);
    const int k = 9;
    for (int j = 0; j <= grid.steps(); ++j) {
        a.values[j] = rng.vector(2);
        b.values[j] = (j < k) ? a.values[j] : Vec(rng.vector(2));
    }
    auto kernel = [](double t, double u) { return Mat(std::cos(t - u) * Mat::Identity(2, 2)); };
    for (const auto& op :
         {HistoryOperator::volterra(s, kernel, 1.0),
          builtins::accumulate_linear(s, Mat::Identity(2, 2)),
          HistoryOperator::integral_of_map(s, [](const Vec& v) { return Vec(v * 2.0); }, 2.0)}) {
        const Vec va = op.eval(a, k);
        const Vec vb = op.eval(b, k);
        CHECK(va[0] == vb[0]);
        CHECK(va[1] == vb[1]);
    }
}

TEST_CASE("history Volterra-Lipschitz property on sampled pairs") {
    auto s = DiscreteSpace::euclidean(2, "V");
    TimeGrid grid(1.0, 12);
    NormalStream rng(17);
    auto op = builtins::volterra_exp(s, 1.7 * Mat::Identity(2, 2), 0.8);
    for (int trial = 0; trial < 32; ++trial) {
        Trajectory a(s, grid), b(s, grid);
        for (int j = 0; j <= grid.steps(); ++j) {
            a.values[j] = rng.vector(2);
            b.values[j] = rng.vector(2);
        }
        for (int k = 1; k <= grid.steps(); ++k) {
            double bound = 0.0;
            for (int j = 0; j < k; ++j)
                bound += grid.dt() * s->norm_strong(a.values[j] - b.values[j]);
            const double lhs = s->norm_strong(op.eval(a, k) - op.eval(b, k));
            CHECK(lhs <= op.lipschitz_const() * bound + 1e-12);
        }
    }
}

TEST_CASE("growth_bound examples") {
    const double slopes1[] = {0.0, 2.0};
    const double norms1[] = {0.0, 3.0};
    CHECK(growth_bound(TimeFn(1.0), 0.3, slopes1, norms1) == doctest::Approx(7.0));
    const double z[] = {0.0};
    CHECK(growth_bound(TimeFn(0.0), 0.1, z, z) == 0.0);
    const double slopes2[] = {1.0, 0.0};
    const double norms2[] = {2.0, 5.0};
    CHECK(growth_bound(TimeFn(0.5), 0.9, slopes2, norms2) == doctest::Approx(2.5));
}

TEST_CASE("declared growth envelopes hold on samples") {
    NormalStream rng(77);
    Mat Av(3, 3), At(3, 2);
    Av << 1.4, 0.2, -0.1, 0.0, 2.0, 0.3, 0.1, -0.2, 1.1;
    At << 0.3, 0.0, 0.1, 0.2, -0.1, 0.4;
    auto A = builtins::linear_A(Av, At);
    auto J = builtins::linear_relaxed_J(0.7, Mat(0.2 * Mat::Identity(3, 2)), Mat());
    for (int i = 0; i < 64; ++i) {
        const double t = rng.uniform();
        const Vec th = 2.0 * rng.vector(2), v = 2.0 * rng.vector(3);
        const double slopes_a[] = {A.a1, A.a2};
        const double norms[] = {th.norm(), v.norm()};
        CHECK(A.eval(t, th, v).norm() <= growth_bound(A.a0, t, slopes_a, norms) + 1e-12);
        const Vec z = Vec::Zero(1);
        const double slopes_j[] = {J.c1, J.c3};
        CHECK(J.subgrad(t, th, z, v).norm() <= growth_bound(J.c0, t, slopes_j, norms) + 1e-12);
    }
}

TEST_CASE("prox consistency of supplied subgradient selections") {
    NormalStream rng(23);

    // smooth quadratic: the identity holds exactly everywhere
    auto quad = builtins::quadratic_phi(0.7);
    for (int i = 0; i < 32; ++i) {
        const Vec x = rng.vector(3);
        const double rho = 0.1 + rng.uniform();
        const Vec p = quad.prox(0.0, Vec(), Vec(), rho, x);
        const Vec res = x - p - rho * quad.subgrad(0.0, Vec(), Vec(), p);
        CHECK(res.norm() <= 1e-8);
    }

    // weighted l1: holds wherever the prox output stays off the kink
    auto l1 = builtins::weighted_l1_phi(0.3, 0.0, 0.0, 3);
    for (int i = 0; i < 64; ++i) {
        const Vec x = 3.0 * rng.vector(3);
        const double rho = 0.05 + 0.2 * rng.uniform();
        const Vec p = l1.prox(0.0, Vec(), Vec(), rho, x);
        const Vec res = x - p - rho * l1.subgrad(0.0, Vec(), Vec(), p);
        for (int c = 0; c < 3; ++c)
            if (p[c] != 0.0) CHECK(std::abs(res[c]) <= 1e-8);
    }
}
