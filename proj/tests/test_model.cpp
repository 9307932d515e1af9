#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "lureobs/model.hpp"
#include "test_helpers.hpp"

using namespace lureobs;

namespace {

// the relay example: three states, scalar relay feedback, trig nonlinearity
LureSystem relay_system() {
    LureSystem sys;
    sys.A = Matrix{{-6, 4, 0}, {7, -8, 0}, {0, 0, -7}};
    sys.B = Matrix{{4}, {6}, {-3}};
    sys.C = Matrix{{8, 6, -3}};
    sys.F = Matrix{{1, 0, 0}};
    sys.op = DiagonalMonotoneOp(relay_affine(3.0, 6.0));
    sys.f = [](const Vector& x, const Vector& u, double) {
        return Vector{u[0] + 2 * std::sin(x[1]), 2 * u[0] + 3 * std::cos(x[0]),
                      -u[0] + 4 * std::sin(x[2])};
    };
    sys.xi = [](double t, const Vector& x) {
        return Vector{2.0, 5 * std::cos(x[0]), 4 * std::sin(t)};
    };
    sys.u = [](double t) { return Vector{5 * std::sin(t)}; };
    sys.lipschitz_f = 4.0;
    return sys;
}

ObserverConfig relay_observer(double kappa3 = 13.7015758) {
    ObserverConfig obs;
    obs.P = Matrix::identity(3);
    obs.L = Matrix{{0}, {11}, {0}};
    obs.K = Matrix{{4}};
    obs.eps = 2.0;
    obs.kappa1 = [](double) { return 2.0; };
    obs.kappa2 = [](double) { return std::sqrt(41.0); };
    obs.kappa3 = [kappa3](double) { return kappa3; };
    obs.delta = 1e-3;
    obs.sigma_obs = 1e-3;
    return obs;
}

} // namespace

TEST_CASE("plant_rhs") {
    SECTION("pure linear scalar") {
        LureSystem sys;
        sys.A = Matrix{{-1}};
        sys.B = Matrix{{0}};
        sys.C = Matrix{{1}};
        sys.F = Matrix{{1}};
        sys.op = DiagonalMonotoneOp(relay_affine(0.0, 0.0));
        sys.f = [](const Vector&, const Vector&, double) { return Vector{0.0}; };
        sys.xi = [](double, const Vector&) { return Vector{0.0}; };
        sys.u = [](double) { return Vector{0.0}; };
        const auto r = plant_rhs(sys, {2.0}, 0.0);
        CHECK(r.dx[0] == -2.0);
    }
    SECTION("relay example at the origin") {
        const auto sys = relay_system();
        const auto r = plant_rhs(sys, {0, 0, 0}, 0.0);
        // f = (0, 3, 0), xi = (2, 5, 0), relay jump absorbs Cx = 0
        CHECK(r.omega[0] == 0.0);
        CHECK(r.dx[0] == Catch::Approx(2.0));
        CHECK(r.dx[1] == Catch::Approx(8.0));
        CHECK(r.dx[2] == Catch::Approx(0.0));
    }
    SECTION("equilibrium") {
        auto sys = relay_system();
        sys.xi = [](double, const Vector&) { return Vector{0.0, 0.0, 0.0}; };
        sys.f = [](const Vector&, const Vector&, double) { return Vector{0.0, 0.0, 0.0}; };
        const auto r = plant_rhs(sys, {0, 0, 0}, 0.3);
        CHECK(norm(r.dx) == 0.0);
    }
    SECTION("dimension mismatch") {
        CHECK_THROWS_AS(plant_rhs(relay_system(), {1.0, 2.0}, 0.0), DimensionError);
    }
}

TEST_CASE("observer_rhs") {
    SECTION("zero output error reduces to the open model") {
        const auto sys = relay_system();
        const auto obs = relay_observer();
        const Vector x{0.4, -0.2, 1.1};
        const Vector y = sys.F * x;
        const auto r = observer_rhs(sys, obs, x, y, 0.7);
        // with e_y = 0 the injection vanishes; compare against A x + B w + f
        const Vector omega = scaled(sys.op.min_norm(sys.C * x), -1.0);
        Vector expect = sys.A * x;
        expect = add(expect, sys.B * omega);
        expect = add(expect, sys.f(x, sys.u(0.7), 0.7));
        CHECK(norm(sub(r.dx, expect)) <= 1e-14);
    }
    SECTION("zero-error consistency: observer - plant = -xi") {
        const auto sys = relay_system();
        const auto obs = relay_observer();
        const Vector x{1.2, 0.3, -0.8};
        const double t = 1.9;
        const auto po = plant_rhs(sys, x, t);
        const auto oo = observer_rhs(sys, obs, x, sys.F * x, t);
        const Vector diff = sub(oo.dx, po.dx);
        const Vector xi = sys.xi(t, x);
        CHECK(norm(add(diff, xi)) <= 1e-12);
    }
    SECTION("scalar toy: pure output-error feedback") {
        LureSystem sys;
        sys.A = Matrix{{0}};
        sys.B = Matrix{{0}};
        sys.C = Matrix{{0}};
        sys.F = Matrix{{1}};
        sys.op = DiagonalMonotoneOp(relay_affine(0.0, 0.0));
        sys.f = [](const Vector&, const Vector&, double) { return Vector{0.0}; };
        sys.xi = [](double, const Vector&) { return Vector{0.0}; };
        sys.u = [](double) { return Vector{0.0}; };
        ObserverConfig obs;
        obs.P = Matrix{{1}};
        obs.L = Matrix{{1}};
        obs.K = Matrix{{0}};
        obs.kappa1 = [](double) { return 0.0; };
        obs.kappa2 = [](double) { return 0.0; };
        obs.kappa3 = [](double) { return 0.0; };
        const auto r = observer_rhs(sys, obs, {3.0}, {1.0}, 0.0);
        CHECK(r.dx[0] == Catch::Approx(-2.0)); // e_y = 2, xhat_dot = -e_y
    }
    SECTION("relay example injection at unit output error") {
        const auto sys = relay_system();
        const auto obs = relay_observer(7.0);
        const Vector x{0, 0, 0};
        const Vector xhat{1, 0, 0}; // e_y = 1
        const auto r = observer_rhs(sys, obs, xhat, sys.F * x, 0.0);
        Vector base = sys.A * xhat;
        base = add(base, sys.B * scaled(sys.op.min_norm(sub(sys.C * xhat, obs.K * Vector{1.0})), -1.0));
        base = sub(base, obs.L * Vector{1.0});
        base = add(base, sys.f(xhat, sys.u(0.0), 0.0));
        const Vector inj = sub(base, r.dx);
        // kappa1 * Sign(1) + kappa3 * 1 / (1 + delta), aligned with P^{-1}F^T = e1
        CHECK(inj[0] == Catch::Approx(2.0 + 7.0 / (1.0 + obs.delta)).margin(1e-12));
        CHECK(std::abs(inj[1]) <= 1e-14);
        CHECK(std::abs(inj[2]) <= 1e-14);
    }
}

TEST_CASE("decompose_uncertainty") {
    SECTION("axis projection") {
        const auto split = decompose_uncertainty(Matrix::identity(3), Matrix{{1, 0, 0}}, {2, 3, 4});
        REQUIRE(split.xi1.size() == 1);
        CHECK(split.xi1[0] == Catch::Approx(2.0).margin(1e-12));
        CHECK(split.xi2[0] == Catch::Approx(0.0).margin(1e-12));
        CHECK(split.xi2[1] == Catch::Approx(3.0).margin(1e-12));
        CHECK(split.xi2[2] == Catch::Approx(4.0).margin(1e-12));
    }
    SECTION("already in the observation subspace") {
        const Matrix P{{2, 0.3, 0}, {0.3, 1, 0}, {0, 0, 1.5}};
        const Matrix F{{1, 0, 0}};
        const Vector in_range = injection_basis(P, F) * Vector{1.7};
        const auto split = decompose_uncertainty(P, F, in_range);
        CHECK(norm(split.xi2) <= 1e-12);
    }
    SECTION("published constant lies in the rotor observation subspace") {
        const Matrix P{{0.2958, 0.0417, 0.0600}, {0.0417, 0.0286, 0.0}, {0.0600, 0.0, 0.0326}};
        const Matrix F{{1, 0, 0}};
        const Vector xi{16.0552, -23.4092, -29.5495};
        const auto split = decompose_uncertainty(P, F, xi);
        CHECK(norm(split.xi2) / norm(xi) <= 1e-2);
        CHECK(split.xi1[0] == Catch::Approx(2.0).margin(1e-4));
    }
    SECTION("reassembly and kernel property", "[property]") {
        std::mt19937_64 gen(9);
        std::uniform_real_distribution<double> u(-3.0, 3.0);
        for (int rep = 0; rep < 1000; ++rep) {
            const std::size_t n = 3 + rep % 3;
            const std::size_t p = 1 + rep % 2;
            const Matrix P = test_oracle::random_spd(gen, n);
            Matrix F(p, n);
            for (std::size_t i = 0; i < p; ++i)
                for (std::size_t j = 0; j < n; ++j) F(i, j) = u(gen);
            Vector xi(n);
            for (double& v : xi) v = u(gen);

            UncertaintySplit split;
            try {
                split = decompose_uncertainty(P, F, xi);
            } catch (const SingularMatrixError&) {
                continue;
            }
            const Vector rebuilt = add(split.basis * split.xi1, split.xi2);
            REQUIRE(norm(sub(rebuilt, xi)) <= 1e-8 * std::max(1.0, norm(xi)));
            const Vector kernel = (F * solve(P, Matrix::identity(n))) * split.xi2;
            REQUIRE(norm(kernel) <= 1e-8 * std::max(1.0, norm(xi)));
        }
    }
    SECTION("singular P") {
        CHECK_THROWS_AS(decompose_uncertainty(Matrix(2, 2), Matrix{{1, 0}}, {1, 1}),
                        SingularMatrixError);
    }
}

TEST_CASE("kappa3_rule") {
    const Matrix I3 = Matrix::identity(3);
    const auto k3a = kappa3_rule(1.0, 0.5, I3, [](double) { return 0.0; });
    CHECK(k3a(0.0) == Catch::Approx(1.0).epsilon(1e-5));

    const auto k3b = kappa3_rule(1e-9, 0.5, I3, [](double) { return 0.0; });
    CHECK(k3b(0.0) <= 1e-12);

    const auto k3c = kappa3_rule(1.0, 2.0, I3, [](double) { return std::sqrt(41.0); });
    CHECK(k3c(0.0) == Catch::Approx(13.7015758).margin(1e-6));

    CHECK_THROWS_AS(kappa3_rule(0.0, 1.0, I3, [](double) { return 0.0; }), ParameterError);
    CHECK_THROWS_AS(kappa3_rule(1.0, 0.0, I3, [](double) { return 0.0; }), ParameterError);
}

TEST_CASE("declared Lipschitz constant is honored empirically", "[property]") {
    const auto sys = relay_system();
    std::mt19937_64 gen(123);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    const Vector input{1.7};
    double worst = 0.0;
    for (int rep = 0; rep < 10000; ++rep) {
        Vector a(3), b(3);
        for (double& v : a) v = u(gen);
        for (double& v : b) v = u(gen);
        const double dx = norm(sub(a, b));
        if (dx < 1e-9) continue;
        const double df = norm(sub(sys.f(a, input, 0.0), sys.f(b, input, 0.0)));
        worst = std::max(worst, df / dx);
    }
    CHECK(worst <= sys.lipschitz_f * (1.0 + 1e-6));
}

TEST_CASE("system validation") {
    auto sys = relay_system();
    validate(sys); // the fixture is consistent

    auto bad = relay_system();
    bad.B = Matrix{{4}, {6}};
    CHECK_THROWS_AS(validate(bad), DimensionError);

    auto flat = relay_system();
    flat.F = Matrix{{0, 0, 0}};
    CHECK_THROWS_AS(validate(flat), SingularMatrixError);
}
