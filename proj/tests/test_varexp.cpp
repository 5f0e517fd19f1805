#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "vex/varexp.hpp"

using namespace vex;
using namespace vex::gridlab;
using namespace vex::varexp;

namespace {

GridPtr box_2d(int res) { return build_grid(2, {-2.0, -2.0}, {4.0, 4.0}, {res, res}); }

ExponentField constant_p(const GridPtr& grid, double value, int n = 3) {
    return make_exponent(constant_field(grid, value), n);
}

// smooth variable exponent with range [base, base + amp]
ExponentField wavy_p(const GridPtr& grid, double base, double amp, int n = 3) {
    std::vector<double> v(grid->node_count());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double x = grid->node_coord(i, 0), y = grid->node_coord(i, 1);
        v[i] = base + amp * 0.5 * (1.0 + std::sin(x) * std::cos(y));
    }
    return make_exponent(ScalarField(grid, v), n);
}

ScalarField random_field(const GridPtr& grid, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    std::vector<double> v(grid->node_count());
    for (double& x : v) x = dist(rng);
    return ScalarField(grid, v);
}

}  // namespace

TEST_CASE("exponent bounds are validated") {
    GridPtr grid = box_2d(8);
    CHECK_THROWS_AS(make_exponent(constant_field(grid, 0.9), 3), Error);
    CHECK_THROWS_AS(make_exponent(constant_field(grid, 3.0), 3), Error);
    try {
        make_exponent(constant_field(grid, 3.2), 3);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ExponentReachesDimension);
    }
    ExponentField p = wavy_p(grid, 1.3, 0.4);
    CHECK(p.p_minus() >= 1.3);
    CHECK(p.p_plus() <= 1.7 + 1e-12);
}

TEST_CASE("constant-exponent Luxemburg norm matches the classical norm") {
    std::mt19937_64 rng(11);
    for (double q : {1.2, 1.5, 2.0, 2.5}) {
        GridPtr grid = box_2d(32);
        ScalarField f = random_field(grid, rng, 2.0);
        ExponentField p = constant_p(grid, q);
        double lux = luxemburg_norm(f, p).value;
        double classical = classical_norm(f, q);
        CHECK(std::abs(lux - classical) <= 1e-10 * classical);
    }
}

TEST_CASE("Luxemburg norm: homogeneity, unit ball, sandwich, monotonicity") {
    std::mt19937_64 rng(23);
    GridPtr grid = box_2d(24);
    for (int trial = 0; trial < 25; ++trial) {
        ExponentField p = wavy_p(grid, 1.1 + 0.02 * trial, 0.5);
        ScalarField f = random_field(grid, rng, 3.0);
        NormResult norm = luxemburg_norm(f, p);
        REQUIRE(norm.value > 0.0);

        // homogeneity
        double c = 0.1 + 3.0 * (trial % 7);
        double scaled = luxemburg_norm(scale_field(f, -c), p).value;
        CHECK(scaled == doctest::Approx(c * norm.value).epsilon(1e-10));

        // unit ball: modular at the norm is 1
        CHECK(norm.modular_at_value == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(modular_scaled(f, p, norm.value) == doctest::Approx(1.0).epsilon(1e-9));

        // modular-norm sandwich
        double rho = modular(f, p);
        double lo = std::min(std::pow(rho, 1.0 / p.p_minus()), std::pow(rho, 1.0 / p.p_plus()));
        double hi = std::max(std::pow(rho, 1.0 / p.p_minus()), std::pow(rho, 1.0 / p.p_plus()));
        CHECK(norm.value >= lo * (1.0 - 1e-10));
        CHECK(norm.value <= hi * (1.0 + 1e-10));

        // monotonicity: |g| <= |f| pointwise
        ScalarField g = map_field(f, [](double v) { return 0.5 * v; });
        CHECK(luxemburg_norm(g, p).value <= norm.value * (1.0 + 1e-10));
    }
}

TEST_CASE("zero field has zero norm and modular") {
    GridPtr grid = box_2d(8);
    ExponentField p = wavy_p(grid, 1.4, 0.2);
    ScalarField zero = constant_field(grid, 0.0);
    CHECK(modular(zero, p) == 0.0);
    CHECK(luxemburg_norm(zero, p).value == 0.0);
}

TEST_CASE("conjugate exponent is an involution with swapped extrema") {
    GridPtr grid = box_2d(16);
    ExponentField p = wavy_p(grid, 1.25, 0.5);
    ExponentField q = conjugate_exponent(p);
    // (p')_- = (p_+)' and (p')_+ = (p_-)'
    CHECK(q.p_minus() == doctest::Approx(p.p_plus() / (p.p_plus() - 1.0)).epsilon(1e-12));
    CHECK(q.p_plus() == doctest::Approx(p.p_minus() / (p.p_minus() - 1.0)).epsilon(1e-12));
    ExponentField back = conjugate_exponent(q);
    for (std::size_t i = 0; i < grid->node_count(); ++i)
        CHECK(back[i] == doctest::Approx(p[i]).epsilon(1e-12));

    ExponentField one = constant_p(grid, 1.0, 3);
    CHECK_THROWS_AS(conjugate_exponent(one), Error);
}

TEST_CASE("Sobolev exponents obey p_* = (1 - 1/n) p*") {
    GridPtr grid = box_2d(16);
    ExponentField p = wavy_p(grid, 1.3, 0.4, 2);
    SobolevExponents exps = sobolev_exponents(p);
    const double n = 2.0;
    for (std::size_t i = 0; i < grid->node_count(); ++i) {
        double pstar = n * p[i] / (n - p[i]);
        CHECK(exps.p_star[i] == doctest::Approx(pstar).epsilon(1e-13));
        CHECK(exps.p_lower_star[i] == doctest::Approx((1.0 - 1.0 / n) * pstar).epsilon(1e-13));
    }
    CHECK(exps.p_star_minus == doctest::Approx(n * p.p_minus() / (n - p.p_minus())));
    CHECK(exps.p_star_plus == doctest::Approx(n * p.p_plus() / (n - p.p_plus())));
}

TEST_CASE("exponent stats report the |grad p| integrability norm") {
    GridPtr grid = box_2d(32);
    ExponentField p = constant_p(grid, 1.5, 2);
    ExponentStats stats = exponent_stats(p, 4.0);
    CHECK(stats.grad_p_norm_s == doctest::Approx(0.0));
    CHECK(stats.p_minus == 1.5);
    CHECK(stats.conj_minus == doctest::Approx(3.0));
    CHECK(stats.conj_plus == doctest::Approx(3.0));

    ExponentField pv = wavy_p(grid, 1.3, 0.3, 2);
    ExponentStats sv = exponent_stats(pv, 4.0);
    CHECK(sv.grad_p_norm_s > 0.0);
}

TEST_CASE("variable-exponent Hoelder inequality holds on random triples") {
    std::mt19937_64 rng(37);
    GridPtr grid = box_2d(24);
    for (int trial = 0; trial < 30; ++trial) {
        ExponentField p = wavy_p(grid, 1.2 + 0.01 * trial, 0.4);
        ScalarField f = random_field(grid, rng, 2.0);
        ScalarField g = random_field(grid, rng, 2.0);
        auto report = holder_verify(f, g, p);
        CHECK(report.pass());
        CHECK(report.lhs >= 0.0);
    }
}

TEST_CASE("Hoelder with p = 2 self-conjugate has factor-2 slack") {
    std::mt19937_64 rng(41);
    GridPtr grid = box_2d(24);
    ExponentField p = constant_p(grid, 2.0, 3);
    ScalarField f = random_field(grid, rng);
    auto report = holder_verify(f, f, p);
    // Cauchy-Schwarz is tight, so lhs = ||f||^2 = rhs/2
    CHECK(report.rhs == doctest::Approx(2.0 * report.lhs).epsilon(1e-9));
}

TEST_CASE("log-weight norm handles 0 log 0 and rejects negative input") {
    GridPtr grid = box_2d(16);
    ExponentField p = wavy_p(grid, 1.3, 0.3);
    // f == 1: log weight vanishes identically
    CHECK(log_weight_norm(constant_field(grid, 1.0), p).value == 0.0);
    CHECK(log_weight_norm(constant_field(grid, 0.0), p).value == 0.0);
    CHECK_THROWS_AS(log_weight_norm(constant_field(grid, -0.5), p), Error);

    // constant p: the |grad p| factor kills the weight
    ExponentField pc = constant_p(grid, 1.5);
    CHECK(log_weight_norm(constant_field(grid, 2.0), pc).value == 0.0);
}

TEST_CASE("norms of mismatched grids are rejected") {
    GridPtr a = box_2d(8), b = box_2d(16);
    ExponentField p = constant_p(a, 1.5);
    CHECK_THROWS_AS(luxemburg_norm(constant_field(b, 1.0), p), Error);
}
