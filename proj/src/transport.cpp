#include "vex/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <random>

#include "json.hpp"

namespace vex::transport {

using varexp::sobolev_exponents;

void DiscreteMeasure::validate() const {
    if (weights.empty()) fail(ErrorCode::EmptyMeasure, "measure has no atoms");
    if (points.size() != weights.size() * static_cast<std::size_t>(dim))
        fail(ErrorCode::InvalidArgument, "point/weight size mismatch");
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0) fail(ErrorCode::InvalidArgument, "negative weight");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        fail(ErrorCode::InvalidArgument, "weights must sum to 1 within 1e-12");
    // pairwise distinct points, checked via lexicographic sort
    std::vector<std::size_t> order(atoms());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        for (int d = 0; d < dim; ++d) {
            if (point(a, d) != point(b, d)) return point(a, d) < point(b, d);
        }
        return false;
    });
    for (std::size_t k = 1; k < order.size(); ++k) {
        bool equal = true;
        for (int d = 0; d < dim; ++d)
            if (point(order[k - 1], d) != point(order[k], d)) equal = false;
        if (equal) fail(ErrorCode::InvalidArgument, "measure points must be pairwise distinct");
    }
}

double quadratic_cost(const DiscreteMeasure& mu, std::size_t i, const DiscreteMeasure& nu,
                      std::size_t j) {
    double s = 0.0;
    for (int a = 0; a < mu.dim; ++a) {
        double d = mu.point(i, a) - nu.point(j, a);
        s += d * d;
    }
    return 0.5 * s;
}

DiscreteMeasure density_from_function(const ScalarField& f, const ExponentField& p,
                                      bool half_space) {
    if (half_space && !f.grid().half_space_axis())
        fail(ErrorCode::NotAHalfSpace, "half-space density requires a half-space grid");
    for (double v : f.values())
        if (v < 0.0) fail(ErrorCode::NonnegativityViolation, "density source must be nonnegative");

    const gridlab::Grid& g = f.grid();
    auto exps = sobolev_exponents(p);
    const double vol = g.cell_volume();

    DiscreteMeasure mu;
    mu.dim = g.dim();
    double total = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] == 0.0) continue;
        double w = std::pow(f[i], exps.p_star[i]) * vol;
        if (w == 0.0) continue;
        auto x = g.node(i);
        mu.points.insert(mu.points.end(), x.begin(), x.end());
        mu.weights.push_back(w);
        mu.node_index.push_back(i);
        total += w;
    }
    if (mu.weights.empty()) fail(ErrorCode::EmptyMeasure, "density has no positive mass");
    for (double& w : mu.weights) w /= total;
    // re-sum once so the probability invariant holds to full precision
    double sum = std::accumulate(mu.weights.begin(), mu.weights.end(), 0.0);
    for (double& w : mu.weights) w /= sum;
    return mu;
}

namespace {

// Dense Hitchcock transportation simplex (MODI pivoting) for the quadratic
// cost. Exactness matters here: entropic bias would contaminate the
// inequality margins downstream.
class TransportSimplex {
public:
    TransportSimplex(const DiscreteMeasure& mu, const DiscreteMeasure& nu)
        : m_(mu.atoms()), n_(nu.atoms()), cost_(m_ * n_), row_arcs_(m_), col_arcs_(n_) {
        for (std::size_t i = 0; i < m_; ++i)
            for (std::size_t j = 0; j < n_; ++j) cost_[i * n_ + j] = quadratic_cost(mu, i, nu, j);
        supply_ = mu.weights;
        demand_ = nu.weights;
        double cmax = 0.0;
        for (double c : cost_) cmax = std::max(cmax, std::abs(c));
        tol_ = 1e-11 * std::max(1.0, cmax);
    }

    void solve() {
        northwest_corner();
        const std::size_t max_pivots = 200 * (m_ + n_) + 20000;
        for (std::size_t pivot = 0;; ++pivot) {
            if (pivot > max_pivots)
                fail(ErrorCode::NoConvergence, "transportation simplex exceeded pivot budget");
            compute_duals();
            auto entering = find_entering();
            if (!entering) break;
            pivot_on(*entering);
        }
    }

    std::vector<PlanEntry> plan() const {
        std::vector<PlanEntry> out;
        for (const Arc& a : arcs_)
            if (a.active && a.flow > 0.0) out.push_back({a.i, a.j, a.flow});
        std::sort(out.begin(), out.end(), [](const PlanEntry& a, const PlanEntry& b) {
            return a.i != b.i ? a.i < b.i : a.j < b.j;
        });
        return out;
    }

    const std::vector<double>& duals_u() const { return u_; }
    const std::vector<double>& duals_v() const { return v_; }

private:
    struct Arc {
        std::size_t i, j;
        double flow;
        bool active;
    };

    void northwest_corner() {
        std::vector<double> s = supply_, d = demand_;
        std::size_t i = 0, j = 0;
        while (i < m_ && j < n_) {
            double q = std::min(s[i], d[j]);
            add_arc(i, j, q);
            s[i] -= q;
            d[j] -= q;
            if (i == m_ - 1 && j == n_ - 1) break;
            // advance exactly one index per step so the basis stays a tree
            if (i == m_ - 1)
                ++j;
            else if (j == n_ - 1)
                ++i;
            else if (s[i] == 0.0)
                ++i;
            else
                ++j;
        }
    }

    void add_arc(std::size_t i, std::size_t j, double flow) {
        arcs_.push_back({i, j, flow, true});
        row_arcs_[i].push_back(arcs_.size() - 1);
        col_arcs_[j].push_back(arcs_.size() - 1);
    }

    void compute_duals() {
        u_.assign(m_, std::numeric_limits<double>::quiet_NaN());
        v_.assign(n_, std::numeric_limits<double>::quiet_NaN());
        u_[0] = 0.0;
        // BFS over the basis tree; nodes 0..m-1 are sources, m..m+n-1 targets
        std::queue<std::size_t> queue;
        queue.push(0);
        while (!queue.empty()) {
            std::size_t node = queue.front();
            queue.pop();
            if (node < m_) {
                for (std::size_t ai : row_arcs_[node]) {
                    const Arc& a = arcs_[ai];
                    if (!a.active || !std::isnan(v_[a.j])) continue;
                    v_[a.j] = cost_[a.i * n_ + a.j] - u_[a.i];
                    queue.push(m_ + a.j);
                }
            } else {
                std::size_t j = node - m_;
                for (std::size_t ai : col_arcs_[j]) {
                    const Arc& a = arcs_[ai];
                    if (!a.active || !std::isnan(u_[a.i])) continue;
                    u_[a.i] = cost_[a.i * n_ + a.j] - v_[a.j];
                    queue.push(a.i);
                }
            }
        }
        for (double x : u_)
            if (std::isnan(x)) fail(ErrorCode::NoConvergence, "basis is not a spanning tree");
        for (double x : v_)
            if (std::isnan(x)) fail(ErrorCode::NoConvergence, "basis is not a spanning tree");
    }

    std::optional<std::pair<std::size_t, std::size_t>> find_entering() const {
        double best = -tol_;
        std::optional<std::pair<std::size_t, std::size_t>> arg;
        for (std::size_t i = 0; i < m_; ++i) {
            const double* row = &cost_[i * n_];
            for (std::size_t j = 0; j < n_; ++j) {
                double r = row[j] - u_[i] - v_[j];
                if (r < best) {
                    best = r;
                    arg = {i, j};
                }
            }
        }
        return arg;
    }

    // Path in the basis tree from source node `si` to target node `tj`.
    std::vector<std::size_t> tree_path(std::size_t si, std::size_t tj) const {
        std::size_t total = m_ + n_;
        std::vector<std::size_t> parent_arc(total, SIZE_MAX);
        std::vector<std::size_t> parent(total, SIZE_MAX);
        std::vector<bool> seen(total, false);
        std::queue<std::size_t> queue;
        queue.push(si);
        seen[si] = true;
        while (!queue.empty()) {
            std::size_t node = queue.front();
            queue.pop();
            if (node == m_ + tj) break;
            const auto& adj = node < m_ ? row_arcs_[node] : col_arcs_[node - m_];
            for (std::size_t ai : adj) {
                const Arc& a = arcs_[ai];
                if (!a.active) continue;
                std::size_t other = node < m_ ? m_ + a.j : a.i;
                if (seen[other]) continue;
                seen[other] = true;
                parent[other] = node;
                parent_arc[other] = ai;
                queue.push(other);
            }
        }
        std::vector<std::size_t> path;
        std::size_t cur = m_ + tj;
        while (cur != si) {
            if (parent_arc[cur] == SIZE_MAX)
                fail(ErrorCode::NoConvergence, "basis tree is disconnected");
            path.push_back(parent_arc[cur]);
            cur = parent[cur];
        }
        std::reverse(path.begin(), path.end());
        return path;
    }

    void pivot_on(std::pair<std::size_t, std::size_t> entering) {
        auto [ei, ej] = entering;
        std::vector<std::size_t> path = tree_path(ei, ej);
        // Cycle = entering arc (+) then path arcs with alternating signs,
        // starting at the arc adjacent to the entering source.
        double theta = std::numeric_limits<double>::infinity();
        std::size_t leaving = SIZE_MAX;
        for (std::size_t k = 0; k < path.size(); ++k) {
            if (k % 2 == 0) {  // minus arc
                const Arc& a = arcs_[path[k]];
                if (a.flow <= theta) {
                    theta = a.flow;
                    leaving = path[k];
                }
            }
        }
        if (leaving == SIZE_MAX) fail(ErrorCode::NoConvergence, "degenerate pivot cycle");
        for (std::size_t k = 0; k < path.size(); ++k) {
            arcs_[path[k]].flow += (k % 2 == 0) ? -theta : theta;
        }
        arcs_[leaving].active = false;
        add_arc(ei, ej, theta);
    }

    std::size_t m_, n_;
    std::vector<double> cost_;
    std::vector<double> supply_, demand_;
    std::vector<Arc> arcs_;
    std::vector<std::vector<std::size_t>> row_arcs_, col_arcs_;
    std::vector<double> u_, v_;
    double tol_ = 0.0;
};

TransportPlan solve_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                          const OtOptions& options) {
    if (mu.atoms() * nu.atoms() > options.max_entries)
        fail(ErrorCode::ProblemTooLarge, "exact solver size cap exceeded");
    TransportSimplex simplex(mu, nu);
    simplex.solve();

    TransportPlan plan;
    plan.source = mu;
    plan.target = nu;
    plan.coupling = simplex.plan();
    plan.dual_source = simplex.duals_u();
    plan.dual_target = simplex.duals_v();
    plan.method = OtMethod::Exact;
    return plan;
}

TransportPlan solve_entropic(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                             const OtOptions& options) {
    const std::size_t m = mu.atoms(), n = nu.atoms();
    const double eps = options.epsilon;
    std::vector<double> kernel(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            kernel[i * n + j] = std::exp(-quadratic_cost(mu, i, nu, j) / eps);

    std::vector<double> a(m, 1.0), b(n, 1.0);
    double err = std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < options.max_iterations && err > 1e-12; ++it) {
        for (std::size_t i = 0; i < m; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += kernel[i * n + j] * b[j];
            if (s <= 0.0) fail(ErrorCode::NoConvergence, "Sinkhorn kernel underflow");
            a[i] = mu.weights[i] / s;
        }
        err = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) s += kernel[i * n + j] * a[i];
            if (s <= 0.0) fail(ErrorCode::NoConvergence, "Sinkhorn kernel underflow");
            b[j] = nu.weights[j] / s;
        }
        for (std::size_t i = 0; i < m; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += kernel[i * n + j] * b[j];
            err = std::max(err, std::abs(s * a[i] - mu.weights[i]));
        }
    }
    if (err > 1e-9) fail(ErrorCode::NoConvergence, "Sinkhorn did not converge");

    TransportPlan plan;
    plan.source = mu;
    plan.target = nu;
    plan.method = OtMethod::Entropic;
    plan.epsilon = eps;
    plan.dual_source.resize(m);
    plan.dual_target.resize(n);
    for (std::size_t i = 0; i < m; ++i) plan.dual_source[i] = eps * std::log(a[i]);
    for (std::size_t j = 0; j < n; ++j) plan.dual_target[j] = eps * std::log(b[j]);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double w = a[i] * kernel[i * n + j] * b[j];
            if (w > 0.0) plan.coupling.push_back({i, j, w});
        }
    return plan;
}

void finalize_plan(TransportPlan& plan) {
    double cost = 0.0;
    std::vector<double> row(plan.source.atoms(), 0.0), col(plan.target.atoms(), 0.0);
    for (const PlanEntry& e : plan.coupling) {
        cost += e.weight * quadratic_cost(plan.source, e.i, plan.target, e.j);
        row[e.i] += e.weight;
        col[e.j] += e.weight;
    }
    plan.total_cost = cost;
    double residual = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i)
        residual = std::max(residual, std::abs(row[i] - plan.source.weights[i]));
    for (std::size_t j = 0; j < col.size(); ++j)
        residual = std::max(residual, std::abs(col[j] - plan.target.weights[j]));
    plan.marginal_residual = residual;

    double dual = 0.0;
    for (std::size_t i = 0; i < plan.dual_source.size(); ++i)
        dual += plan.dual_source[i] * plan.source.weights[i];
    for (std::size_t j = 0; j < plan.dual_target.size(); ++j)
        dual += plan.dual_target[j] * plan.target.weights[j];
    plan.dual_value = dual;
    plan.duality_gap = std::abs(plan.total_cost - dual);
}

}  // namespace

TransportPlan solve_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                       const OtOptions& options) {
    mu.validate();
    nu.validate();
    if (mu.dim != nu.dim) fail(ErrorCode::InvalidArgument, "measure dimension mismatch");
    TransportPlan plan = options.method == OtMethod::Exact ? solve_exact(mu, nu, options)
                                                           : solve_entropic(mu, nu, options);
    finalize_plan(plan);
    return plan;
}

BrenierApprox barycentric_map(const TransportPlan& plan) {
    const DiscreteMeasure& mu = plan.source;
    BrenierApprox out;
    out.dim = mu.dim;
    out.source_points = mu.points;
    out.map_T.assign(mu.atoms() * mu.dim, 0.0);
    out.potential_phi.resize(mu.atoms());
    out.defined.assign(mu.atoms(), false);

    std::vector<double> row(mu.atoms(), 0.0);
    for (const PlanEntry& e : plan.coupling) {
        row[e.i] += e.weight;
        for (int a = 0; a < mu.dim; ++a)
            out.map_T[e.i * mu.dim + a] += e.weight * plan.target.point(e.j, a);
    }
    for (std::size_t i = 0; i < mu.atoms(); ++i) {
        if (row[i] > 0.0) {
            out.defined[i] = true;
            for (int a = 0; a < mu.dim; ++a) out.map_T[i * mu.dim + a] /= row[i];
        }
        double x2 = 0.0;
        for (int a = 0; a < mu.dim; ++a) x2 += mu.point(i, a) * mu.point(i, a);
        out.potential_phi[i] = 0.5 * x2 - plan.dual_source[i];
    }
    return out;
}

IdentityResidual transport_identity_residual(
    const TransportPlan& plan, const std::function<double(const std::vector<double>&)>& psi) {
    BrenierApprox brenier = barycentric_map(plan);
    if (plan.target.atoms() == 0) fail(ErrorCode::EmptyMeasure, "plan has no target atoms");
    // recenter psi at the first target point: both measures have unit mass, so
    // this leaves the residual unchanged while making the constant mode exact
    std::vector<double> y(plan.target.dim);
    for (int a = 0; a < plan.target.dim; ++a) y[a] = plan.target.point(0, a);
    const double shift = psi(y);

    double target_side = 0.0;
    for (std::size_t j = 0; j < plan.target.atoms(); ++j) {
        for (int a = 0; a < plan.target.dim; ++a) y[a] = plan.target.point(j, a);
        target_side += plan.target.weights[j] * (psi(y) - shift);
    }
    double map_side = 0.0;
    std::vector<double> t(plan.source.dim);
    for (std::size_t i = 0; i < plan.source.atoms(); ++i) {
        if (!brenier.defined[i]) continue;
        for (int a = 0; a < plan.source.dim; ++a) t[a] = brenier.image(i, a);
        map_side += plan.source.weights[i] * (psi(t) - shift);
    }
    double plan_side = 0.0;
    for (const PlanEntry& e : plan.coupling) {
        for (int a = 0; a < plan.target.dim; ++a) y[a] = plan.target.point(e.j, a);
        plan_side += e.weight * (psi(y) - shift);
    }
    return {std::abs(map_side - target_side), std::abs(plan_side - target_side)};
}

std::vector<double> cdf_inversion_map_1d(const ScalarField& density_f,
                                         const ScalarField& density_g) {
    const gridlab::Grid& gf = density_f.grid();
    const gridlab::Grid& gg = density_g.grid();
    if (gf.dim() != 1 || gg.dim() != 1)
        fail(ErrorCode::UnsupportedDimension, "cdf_inversion_map_1d requires 1D grids");

    const double hf = gf.spacing(0), hg = gg.spacing(0);
    double mass_f = gridlab::integrate(density_f);
    double mass_g = gridlab::integrate(density_g);
    if (mass_f <= 0.0 || mass_g <= 0.0) fail(ErrorCode::EmptyMeasure, "zero-mass density");

    const std::size_t nf = density_f.size(), ng = density_g.size();
    // cell-edge CDF of the target
    std::vector<double> edge_g(ng + 1, 0.0);
    for (std::size_t k = 0; k < ng; ++k) edge_g[k + 1] = edge_g[k] + density_g[k] * hg / mass_g;
    edge_g[ng] = 1.0;

    std::vector<double> map(nf);
    double cum = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < nf; ++i) {
        double t = (cum + 0.5 * density_f[i] * hf) / mass_f;  // CDF at the node
        cum += density_f[i] * hf;
        t = std::clamp(t, 0.0, 1.0);
        while (k + 1 < ng && edge_g[k + 1] < t) ++k;
        while (k > 0 && edge_g[k] > t) --k;
        double cell_mass = edge_g[k + 1] - edge_g[k];
        double left = gg.origin()[0] + k * hg;
        double frac = cell_mass > 0.0 ? (t - edge_g[k]) / cell_mass : 0.5;
        map[i] = left + std::clamp(frac, 0.0, 1.0) * hg;
    }
    return map;
}

double ma_residual_1d(const ScalarField& density_f, const ScalarField& density_g) {
    const gridlab::Grid& gf = density_f.grid();
    const gridlab::Grid& gg = density_g.grid();
    std::vector<double> map = cdf_inversion_map_1d(density_f, density_g);
    double mass_f = gridlab::integrate(density_f);
    double mass_g = gridlab::integrate(density_g);

    const double hf = gf.spacing(0), hg = gg.spacing(0);
    auto g_at = [&](double y) {
        // linear interpolation between target nodes
        double u = (y - gg.origin()[0]) / hg - 0.5;
        if (u <= 0.0) return density_g[0] / mass_g;
        if (u >= static_cast<double>(density_g.size() - 1))
            return density_g[density_g.size() - 1] / mass_g;
        std::size_t k = static_cast<std::size_t>(u);
        double w = u - k;
        return ((1.0 - w) * density_g[k] + w * density_g[k + 1]) / mass_g;
    };

    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < density_f.size(); ++i) {
        double tprime = (map[i + 1] - map[i - 1]) / (2.0 * hf);
        double res = std::abs(density_f[i] / mass_f - g_at(map[i]) * tprime);
        worst = std::max(worst, res);
    }
    return worst;
}

PlanDiagnostics plan_diagnostics(const TransportPlan& plan, const ScalarField* density_f,
                                 const ScalarField* density_g) {
    PlanDiagnostics diag;
    diag.duality_gap = plan.duality_gap;

    BrenierApprox brenier = barycentric_map(plan);
    const std::size_t m = plan.source.atoms();
    const int dim = plan.source.dim;
    std::vector<std::size_t> sample;
    if (m <= 512) {
        sample.resize(m);
        std::iota(sample.begin(), sample.end(), 0);
    } else {
        std::mt19937_64 rng(12345);
        std::uniform_int_distribution<std::size_t> dist(0, m - 1);
        for (int k = 0; k < 512; ++k) sample.push_back(dist(rng));
    }
    double worst = std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t a = 0; a < sample.size(); ++a) {
        std::size_t i = sample[a];
        if (!brenier.defined[i]) continue;
        for (std::size_t b = a + 1; b < sample.size(); ++b) {
            std::size_t j = sample[b];
            if (!brenier.defined[j] || i == j) continue;
            double dot = 0.0;
            for (int d = 0; d < dim; ++d) {
                double dt = brenier.image(i, d) - brenier.image(j, d);
                double dx = plan.source.point(i, d) - plan.source.point(j, d);
                dot += dt * dx;
            }
            worst = std::min(worst, dot);
            any = true;
        }
    }
    diag.monotonicity_min = any ? worst : 0.0;

    if (density_f && density_g && density_f->grid().dim() == 1)
        diag.ma_residual_max = ma_residual_1d(*density_f, *density_g);
    return diag;
}

void save_plan(const TransportPlan& plan, const std::string& csv_path,
               const std::string& json_path) {
    std::ofstream csv(csv_path);
    if (!csv) fail(ErrorCode::IoError, "cannot open " + csv_path);
    csv << "i,j,weight\n";
    char buf[40];
    for (const PlanEntry& e : plan.coupling) {
        std::snprintf(buf, sizeof(buf), "%.17g", e.weight);
        csv << e.i << "," << e.j << "," << buf << "\n";
    }

    nlohmann::json side;
    side["method"] = plan.method == OtMethod::Exact ? "exact" : "entropic";
    side["epsilon"] = plan.epsilon;
    side["total_cost"] = plan.total_cost;
    side["dual_value"] = plan.dual_value;
    side["duality_gap"] = plan.duality_gap;
    side["marginal_residual"] = plan.marginal_residual;
    side["dual_source"] = plan.dual_source;
    side["dual_target"] = plan.dual_target;
    std::ofstream js(json_path);
    if (!js) fail(ErrorCode::IoError, "cannot open " + json_path);
    js << side.dump(2) << "\n";
}

}  // namespace vex::transport
