#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <random>

#include "doctest.h"
#include "vex/grid.hpp"

using namespace vex;
using namespace vex::gridlab;

namespace {

GridPtr unit_grid_2d(int res) { return build_grid(2, {-1.0, -1.0}, {2.0, 2.0}, {res, res}); }

ScalarField sample(const GridPtr& grid, const std::function<double(double, double)>& fn) {
    std::vector<double> values(grid->node_count());
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = fn(grid->node_coord(i, 0), grid->node_coord(i, 1));
    return ScalarField(grid, values);
}

}  // namespace

TEST_CASE("grid indexing round-trips and places nodes at cell centers") {
    GridPtr grid = build_grid(2, {0.0, -1.0}, {2.0, 4.0}, {4, 8});
    CHECK(grid->node_count() == 32);
    CHECK(grid->spacing(0) == doctest::Approx(0.5));
    CHECK(grid->spacing(1) == doctest::Approx(0.5));
    for (std::size_t i = 0; i < grid->node_count(); ++i) {
        auto multi = grid->multi_index(i);
        CHECK(grid->index(multi) == i);
    }
    // first node: half a cell in from the origin corner
    CHECK(grid->node_coord(0, 0) == doctest::Approx(0.25));
    CHECK(grid->node_coord(0, 1) == doctest::Approx(-0.75));
    // last axis fastest
    CHECK(grid->node_coord(1, 1) == doctest::Approx(-0.25));
    CHECK(grid->node_coord(1, 0) == doctest::Approx(0.25));
}

TEST_CASE("grid construction rejects bad input") {
    CHECK_THROWS_AS(build_grid(4, {0, 0, 0, 0}, {1, 1, 1, 1}, {4, 4, 4, 4}), Error);
    CHECK_THROWS_AS(build_grid(2, {0.0}, {1.0, 1.0}, {4, 4}), Error);
    CHECK_THROWS_AS(build_grid(2, {0.0, 0.0}, {-1.0, 1.0}, {4, 4}), Error);
    CHECK_THROWS_AS(build_grid(2, {0.0, 0.0}, {1.0, 1.0}, {0, 4}), Error);
    // half-space face must sit at coordinate 0
    CHECK_THROWS_AS(build_grid(2, {1.0, 0.0}, {1.0, 1.0}, {4, 4}, 0), Error);
    CHECK_NOTHROW(build_grid(2, {0.0, -1.0}, {1.0, 2.0}, {4, 4}, 0));
}

TEST_CASE("midpoint quadrature integrates exactly what it should") {
    GridPtr grid = unit_grid_2d(16);
    CHECK(integrate(constant_field(grid, 3.0)) == doctest::Approx(12.0).epsilon(1e-14));
    // midpoint rule is exact for linear integrands
    ScalarField linear = sample(grid, [](double x, double y) { return 2.0 * x - y + 1.0; });
    CHECK(integrate(linear) == doctest::Approx(4.0).epsilon(1e-13));
}

TEST_CASE("finite-difference gradient is exact on affine fields") {
    GridPtr grid = unit_grid_2d(8);
    ScalarField f = sample(grid, [](double x, double y) { return 3.0 * x - 2.0 * y + 0.5; });
    VectorField g = gradient_fd(f);
    for (std::size_t i = 0; i < grid->node_count(); ++i) {
        CHECK(g.component(i, 0) == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(g.component(i, 1) == doctest::Approx(-2.0).epsilon(1e-12));
    }
}

TEST_CASE("finite-difference gradient converges at second order") {
    auto max_err = [](int res) {
        GridPtr grid = unit_grid_2d(res);
        ScalarField f = sample(grid, [](double x, double y) { return std::sin(2 * x) * std::cos(y); });
        VectorField g = gradient_fd(f);
        double err = 0.0;
        for (std::size_t i = 0; i < grid->node_count(); ++i) {
            double x = grid->node_coord(i, 0), y = grid->node_coord(i, 1);
            err = std::max(err, std::abs(g.component(i, 0) - 2 * std::cos(2 * x) * std::cos(y)));
            err = std::max(err, std::abs(g.component(i, 1) + std::sin(2 * x) * std::sin(y)));
        }
        return err;
    };
    double e32 = max_err(32), e64 = max_err(64);
    CHECK(e64 < e32 / 3.0);  // ~4x for a second-order scheme
}

TEST_CASE("integration by parts holds up to discretization error") {
    // both fields compactly supported inside the box, so no boundary terms
    auto residual = [](int res) {
        GridPtr grid = build_grid(2, {-2.0, -2.0}, {4.0, 4.0}, {res, res});
        ScalarField f = bump_field(grid, {-0.3, 0.2}, 1.0, 1.0).field;
        ScalarField g = bump_field(grid, {0.4, -0.1}, 1.1, 1.0).field;
        VectorField df = gradient_fd(f), dg = gradient_fd(g);
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t i = 0; i < grid->node_count(); ++i) {
            lhs += df.component(i, 0) * g[i];
            rhs -= f[i] * dg.component(i, 0);
        }
        return std::abs(lhs - rhs) * grid->cell_volume();
    };
    // central differences are skew-adjoint on compactly supported data, so
    // the discrete identity holds to rounding error
    CHECK(residual(64) < 1e-12);
    CHECK(residual(128) < 1e-12);
}

TEST_CASE("gradient requires at least 3 nodes per axis") {
    GridPtr grid = build_grid(1, {0.0}, {1.0}, {3});
    CHECK_NOTHROW(gradient_fd(constant_field(grid, 1.0)));
    // grid itself allows tiny resolutions, the stencil does not
    GridPtr tiny = build_grid(2, {0.0, 0.0}, {1.0, 1.0}, {4, 3});
    CHECK_NOTHROW(gradient_fd(constant_field(tiny, 1.0)));
}

TEST_CASE("bump field is supported in the prescribed ball") {
    GridPtr grid = build_grid(2, {-2.0, -2.0}, {4.0, 4.0}, {64, 64});
    BumpField bump = bump_field(grid, {0.5, -0.25}, 0.8, 1.0);
    for (std::size_t i = 0; i < grid->node_count(); ++i) {
        double dx = grid->node_coord(i, 0) - 0.5, dy = grid->node_coord(i, 1) + 0.25;
        double r = std::sqrt(dx * dx + dy * dy);
        if (r >= 0.8) CHECK(bump.field[i] == 0.0);
        if (r < 0.7) CHECK(bump.field[i] > 0.0);
    }
    CHECK(bump.support.diameter <= 1.6 + 1e-12);
    CHECK(bump.support.diameter > 1.4);
    CHECK(bump.support.radius_R >= std::sqrt(0.5 * 0.5 + 0.25 * 0.25) + 0.8 - 0.2);
}

TEST_CASE("support_info diameter is the max pairwise node distance") {
    GridPtr grid = build_grid(1, {0.0}, {1.0}, {10});
    std::vector<double> v(10, 0.0);
    v[2] = 1.0;
    v[7] = 0.5;
    SupportInfo info = support_info(ScalarField(grid, v));
    CHECK(info.diameter == doctest::Approx(0.5));
    CHECK(integrate(info.indicator) == doctest::Approx(0.2));
}

TEST_CASE("boundary restriction reproduces polynomial traces") {
    GridPtr grid = build_grid(2, {0.0, -1.0}, {2.0, 2.0}, {32, 16}, 0);
    // quadratic in x: the one-sided stencil is exact for it
    ScalarField f = sample(grid, [](double x, double y) { return (1.0 + x) * (1.0 + x) + y; });
    ScalarField trace = boundary_restrict(f);
    CHECK(trace.grid().dim() == 1);
    CHECK(trace.size() == 16);
    for (std::size_t i = 0; i < trace.size(); ++i) {
        double y = trace.grid().node_coord(i, 0);
        CHECK(trace[i] == doctest::Approx(1.0 + y).epsilon(1e-10));
    }
}

TEST_CASE("boundary restriction demands a half-space grid") {
    GridPtr grid = unit_grid_2d(8);
    CHECK_THROWS_AS(boundary_restrict(constant_field(grid, 1.0)), Error);
    try {
        boundary_restrict(constant_field(grid, 1.0));
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotAHalfSpace);
    }
}

TEST_CASE("field serialization round-trips bit-for-bit") {
    GridPtr grid = build_grid(2, {-1.0, 0.5}, {2.0, 1.5}, {6, 5}, std::nullopt);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-1e3, 1e3);
    std::vector<double> values(grid->node_count());
    for (double& v : values) v = dist(rng);
    ScalarField f(grid, values);

    save_field_csv(f, "roundtrip.csv");
    ScalarField back = load_field_csv("roundtrip.csv");
    REQUIRE(back.size() == f.size());
    CHECK(back.grid().same_layout(f.grid()));
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(back[i] == f[i]);

    save_field_binary(f, "roundtrip.bin");
    ScalarField bin = load_field_binary("roundtrip.bin");
    REQUIRE(bin.size() == f.size());
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(bin[i] == f[i]);
    std::remove("roundtrip.csv");
    std::remove("roundtrip.bin");
}
