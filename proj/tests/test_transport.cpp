#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "doctest.h"
#include "vex/transport.hpp"

using namespace vex;
using namespace vex::gridlab;
using namespace vex::transport;

namespace {

DiscreteMeasure measure_1d(std::vector<double> points, std::vector<double> weights) {
    DiscreteMeasure m;
    m.dim = 1;
    m.points = std::move(points);
    m.weights = std::move(weights);
    return m;
}

DiscreteMeasure random_measure(std::mt19937_64& rng, int atoms, int dim) {
    std::uniform_real_distribution<double> coord(-1.0, 1.0), mass(0.2, 1.0);
    DiscreteMeasure m;
    m.dim = dim;
    double total = 0.0;
    std::vector<double> w(atoms);
    for (double& x : w) total += (x = mass(rng));
    for (int i = 0; i < atoms; ++i) {
        for (int d = 0; d < dim; ++d) m.points.push_back(coord(rng));
        m.weights.push_back(w[i] / total);
    }
    return m;
}

// Exact minimum over the whole transportation polytope: every vertex is the
// unique flow on some spanning tree of the bipartite graph, so enumerating
// all (m*n choose m+n-1) arc subsets and keeping the feasible trees visits
// every vertex of the polytope.
double brute_force_cost(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    const int m = static_cast<int>(mu.atoms()), n = static_cast<int>(nu.atoms());
    const int arcs = m * n, basis = m + n - 1;
    std::vector<int> pick(basis);
    std::iota(pick.begin(), pick.end(), 0);
    double best = std::numeric_limits<double>::infinity();

    auto try_basis = [&](const std::vector<int>& chosen) {
        // solve the tree flow by repeatedly peeling degree-1 nodes
        std::vector<double> s = mu.weights, d = nu.weights;
        std::vector<bool> used(chosen.size(), false);
        std::vector<int> deg(m + n, 0);
        for (int a : chosen) {
            ++deg[a / n];
            ++deg[m + a % n];
        }
        double cost = 0.0;
        for (int step = 0; step < basis; ++step) {
            int leaf_idx = -1;
            for (std::size_t c = 0; c < chosen.size(); ++c) {
                if (used[c]) continue;
                int i = chosen[c] / n, j = chosen[c] % n;
                if (deg[i] == 1 || deg[m + j] == 1) {
                    leaf_idx = static_cast<int>(c);
                    break;
                }
            }
            if (leaf_idx < 0) return;  // contains a cycle: not a tree
            int i = chosen[leaf_idx] / n, j = chosen[leaf_idx] % n;
            double flow = deg[i] == 1 ? s[i] : d[j];
            if (flow < -1e-12) return;  // infeasible vertex
            s[i] -= flow;
            d[j] -= flow;
            cost += flow * quadratic_cost(mu, i, nu, j);
            used[leaf_idx] = true;
            --deg[i];
            --deg[m + j];
        }
        for (double v : s)
            if (std::abs(v) > 1e-9) return;
        best = std::min(best, cost);
    };

    // enumerate combinations of `basis` arcs out of `arcs`
    for (;;) {
        try_basis(pick);
        int pos = basis - 1;
        while (pos >= 0 && pick[pos] == arcs - basis + pos) --pos;
        if (pos < 0) break;
        ++pick[pos];
        for (int q = pos + 1; q < basis; ++q) pick[q] = pick[q - 1] + 1;
    }
    return best;
}

}  // namespace

TEST_CASE("the crossing 2x2 example costs 2, not 2.5") {
    DiscreteMeasure mu = measure_1d({0.0, 1.0}, {0.5, 0.5});
    DiscreteMeasure nu = measure_1d({2.0, 3.0}, {0.5, 0.5});
    TransportPlan plan = solve_ot(mu, nu);
    CHECK(plan.total_cost == doctest::Approx(2.0).epsilon(1e-12));
    // the optimal coupling is the order-preserving one
    for (const PlanEntry& e : plan.coupling) {
        if (e.weight > 0) CHECK(e.i == e.j);
    }
}

TEST_CASE("exact solver matches brute force on small random instances") {
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<int> size(2, 5);
    for (int trial = 0; trial < 12; ++trial) {
        int dim = 1 + trial % 2;
        DiscreteMeasure mu = random_measure(rng, size(rng), dim);
        DiscreteMeasure nu = random_measure(rng, size(rng), dim);
        TransportPlan plan = solve_ot(mu, nu);
        double oracle = brute_force_cost(mu, nu);
        CHECK(plan.total_cost == doctest::Approx(oracle).epsilon(1e-10));
        CHECK(plan.duality_gap <= 1e-10 * std::max(1.0, std::abs(plan.total_cost)));
        CHECK(plan.marginal_residual <= 1e-12);
    }
}

TEST_CASE("1D uniform-weight transport is the sorted assignment") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coord(-5.0, 5.0);
    const int n = 8;
    std::vector<double> xs(n), ys(n);
    for (double& v : xs) v = coord(rng);
    for (double& v : ys) v = coord(rng);
    DiscreteMeasure mu = measure_1d(xs, std::vector<double>(n, 1.0 / n));
    DiscreteMeasure nu = measure_1d(ys, std::vector<double>(n, 1.0 / n));
    TransportPlan plan = solve_ot(mu, nu);

    std::vector<int> rank_x(n), rank_y(n);
    std::iota(rank_x.begin(), rank_x.end(), 0);
    std::iota(rank_y.begin(), rank_y.end(), 0);
    std::sort(rank_x.begin(), rank_x.end(), [&](int a, int b) { return xs[a] < xs[b]; });
    std::sort(rank_y.begin(), rank_y.end(), [&](int a, int b) { return ys[a] < ys[b]; });
    std::vector<int> match(n);
    for (int r = 0; r < n; ++r) match[rank_x[r]] = rank_y[r];
    for (const PlanEntry& e : plan.coupling) {
        if (e.weight > 1e-12) CHECK(static_cast<int>(e.j) == match[e.i]);
    }
}

TEST_CASE("Kantorovich duals certify feasibility and optimality") {
    std::mt19937_64 rng(55);
    DiscreteMeasure mu = random_measure(rng, 7, 2);
    DiscreteMeasure nu = random_measure(rng, 9, 2);
    TransportPlan plan = solve_ot(mu, nu);
    for (std::size_t i = 0; i < mu.atoms(); ++i)
        for (std::size_t j = 0; j < nu.atoms(); ++j)
            CHECK(plan.dual_source[i] + plan.dual_target[j] <=
                  quadratic_cost(mu, i, nu, j) + 1e-9);
    CHECK(plan.dual_value == doctest::Approx(plan.total_cost).epsilon(1e-10));
}

TEST_CASE("plans satisfy two-point cyclical monotonicity") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 8; ++trial) {
        DiscreteMeasure mu = random_measure(rng, 10, 2);
        DiscreteMeasure nu = random_measure(rng, 10, 2);
        TransportPlan plan = solve_ot(mu, nu);
        PlanDiagnostics diag = plan_diagnostics(plan);
        CHECK(diag.monotonicity_min >= -1e-8);
    }
}

TEST_CASE("barycentric map pushes mass to the coupled-target mean") {
    DiscreteMeasure mu = measure_1d({0.0, 1.0}, {0.5, 0.5});
    DiscreteMeasure nu = measure_1d({2.0, 3.0}, {0.25, 0.75});
    TransportPlan plan = solve_ot(mu, nu);
    BrenierApprox map = barycentric_map(plan);
    REQUIRE(map.atoms() == 2);
    // order preservation: first atom takes all of y=2 and half of y=3
    CHECK(map.image(0, 0) == doctest::Approx(0.5 * 2.0 + 0.5 * 3.0).epsilon(1e-12));
    CHECK(map.image(1, 0) == doctest::Approx(3.0).epsilon(1e-12));
    // potential phi = |x|^2/2 - u is convex along the line: T = grad phi increasing
    CHECK(map.image(0, 0) < map.image(1, 0));
}

TEST_CASE("transport identity: psi == 1 is exact, quadratic psi converges") {
    auto run = [](int res) {
        GridPtr grid = build_grid(1, {-2.0}, {4.0}, {res});
        BumpField f = bump_field(grid, {-0.5}, 1.0, 1.0);
        BumpField g = bump_field(grid, {0.6}, 0.9, 1.0);
        auto to_measure = [&](const ScalarField& field) {
            DiscreteMeasure m;
            m.dim = 1;
            double total = 0.0;
            for (std::size_t i = 0; i < field.size(); ++i) total += std::max(field[i], 0.0);
            for (std::size_t i = 0; i < field.size(); ++i) {
                if (field[i] <= 0.0) continue;
                m.points.push_back(grid->node_coord(i, 0));
                m.weights.push_back(field[i] / total);
                m.node_index.push_back(i);
            }
            return m;
        };
        TransportPlan plan = solve_ot(to_measure(f.field), to_measure(g.field));
        IdentityResidual one = transport_identity_residual(
            plan, [](const std::vector<double>&) { return 1.0; });
        CHECK(one.plan_level == 0.0);
        CHECK(one.map_level == 0.0);
        IdentityResidual quad = transport_identity_residual(
            plan, [](const std::vector<double>& y) { return y[0] * y[0]; });
        // plan-level pushforward is exact by the marginal constraints
        CHECK(quad.plan_level <= 1e-12);
        return quad.map_level;
    };
    double r64 = run(64), r256 = run(256);
    CHECK(r256 <= r64 / 2.0);
}

TEST_CASE("CDF inversion map is monotone and matches the exact plan") {
    GridPtr grid = build_grid(1, {-2.0}, {4.0}, {128});
    ScalarField f = map_field(bump_field(grid, {-0.4}, 1.2, 1.0).field,
                              [](double v) { return v + 0.2; });
    ScalarField g = map_field(bump_field(grid, {0.5}, 1.0, 1.0).field,
                              [](double v) { return v + 0.2; });
    std::vector<double> map = cdf_inversion_map_1d(f, g);
    REQUIRE(map.size() == grid->node_count());
    for (std::size_t i = 1; i < map.size(); ++i) CHECK(map[i] >= map[i - 1] - 1e-12);

    PlanDiagnostics diag;
    {
        DiscreteMeasure mu, nu;
        mu.dim = nu.dim = 1;
        double tf = 0.0, tg = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            tf += f[i];
            tg += g[i];
        }
        for (std::size_t i = 0; i < f.size(); ++i) {
            mu.points.push_back(grid->node_coord(i, 0));
            mu.weights.push_back(f[i] / tf);
            mu.node_index.push_back(i);
            nu.points.push_back(grid->node_coord(i, 0));
            nu.weights.push_back(g[i] / tg);
            nu.node_index.push_back(i);
        }
        TransportPlan plan = solve_ot(mu, nu);
        BrenierApprox exact = barycentric_map(plan);
        double dev = 0.0;
        for (std::size_t i = 0; i < exact.atoms(); ++i)
            if (exact.defined[i]) dev = std::max(dev, std::abs(exact.image(i, 0) - map[i]));
        CHECK(dev <= 0.1);  // both discretize the same monotone map
        diag = plan_diagnostics(plan, &f, &g);
    }
    REQUIRE(diag.ma_residual_max.has_value());
}

TEST_CASE("1D Monge-Ampere residual is small and decreases under refinement") {
    auto residual = [](int res) {
        GridPtr grid = build_grid(1, {-2.0}, {4.0}, {res});
        ScalarField f = map_field(bump_field(grid, {-0.4}, 1.2, 1.0).field,
                                  [](double v) { return v + 0.2; });
        ScalarField g = map_field(bump_field(grid, {0.5}, 1.0, 1.0).field,
                                  [](double v) { return v + 0.2; });
        return ma_residual_1d(f, g);
    };
    double r64 = residual(64), r256 = residual(256);
    CHECK(r256 <= 1e-2);
    CHECK(r256 < r64);
}

TEST_CASE("entropic fallback approximates marginals and cost") {
    std::mt19937_64 rng(13);
    DiscreteMeasure mu = random_measure(rng, 12, 2);
    DiscreteMeasure nu = random_measure(rng, 12, 2);
    TransportPlan exact = solve_ot(mu, nu);
    OtOptions opts;
    opts.method = OtMethod::Entropic;
    opts.epsilon = 1e-3;
    TransportPlan entropic = solve_ot(mu, nu, opts);
    CHECK(entropic.method == OtMethod::Entropic);
    CHECK(entropic.marginal_residual <= 1e-8);
    // entropic cost approaches the exact cost from above as eps -> 0
    CHECK(entropic.total_cost >= exact.total_cost - 1e-9);
    CHECK(entropic.total_cost <= exact.total_cost + 0.05);
}

TEST_CASE("measure validation rejects malformed input") {
    DiscreteMeasure bad_weights = measure_1d({0.0, 1.0}, {0.7, 0.7});
    CHECK_THROWS_AS(bad_weights.validate(), Error);
    DiscreteMeasure negative = measure_1d({0.0, 1.0}, {1.5, -0.5});
    CHECK_THROWS_AS(negative.validate(), Error);
    DiscreteMeasure dup = measure_1d({1.0, 1.0}, {0.5, 0.5});
    CHECK_THROWS_AS(dup.validate(), Error);
    DiscreteMeasure empty;
    empty.dim = 1;
    CHECK_THROWS_AS(empty.validate(), Error);
}

TEST_CASE("exact solver enforces the problem-size cap") {
    std::mt19937_64 rng(3);
    DiscreteMeasure mu = random_measure(rng, 5, 1);
    DiscreteMeasure nu = random_measure(rng, 5, 1);
    OtOptions opts;
    opts.max_entries = 16;
    try {
        solve_ot(mu, nu, opts);
        FAIL("expected ProblemTooLarge");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ProblemTooLarge);
    }
}

TEST_CASE("plan serialization writes the triplets and sidecar") {
    DiscreteMeasure mu = measure_1d({0.0, 1.0}, {0.5, 0.5});
    DiscreteMeasure nu = measure_1d({2.0, 3.0}, {0.5, 0.5});
    TransportPlan plan = solve_ot(mu, nu);
    save_plan(plan, "plan.csv", "plan.json");
    std::FILE* csv = std::fopen("plan.csv", "r");
    REQUIRE(csv != nullptr);
    std::fclose(csv);
    std::FILE* js = std::fopen("plan.json", "r");
    REQUIRE(js != nullptr);
    std::fclose(js);
    std::remove("plan.csv");
    std::remove("plan.json");
}
