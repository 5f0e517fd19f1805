#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vex/grid.hpp"
#include "vex/varexp.hpp"

namespace vex::transport {

using gridlab::GridPtr;
using gridlab::ScalarField;
using varexp::ExponentField;

// Weighted point cloud representing a probability measure F dx or G dx.
// Weights are nonnegative and sum to 1; points are pairwise distinct.
struct DiscreteMeasure {
    int dim = 0;
    std::vector<double> points;   // size() == atoms * dim, interleaved
    std::vector<double> weights;  // size() == atoms
    std::vector<std::size_t> node_index;  // grid node per atom, when grid-born

    std::size_t atoms() const { return weights.size(); }
    double point(std::size_t i, int a) const { return points[i * dim + a]; }

    void validate() const;
};

struct PlanEntry {
    std::size_t i, j;
    double weight;
};

enum class OtMethod { Exact, Entropic };

struct TransportPlan {
    DiscreteMeasure source;
    DiscreteMeasure target;
    std::vector<PlanEntry> coupling;
    std::vector<double> dual_source;  // u_i
    std::vector<double> dual_target;  // v_j
    double total_cost = 0.0;
    double dual_value = 0.0;
    double duality_gap = 0.0;
    double marginal_residual = 0.0;   // max row/col sum deviation
    OtMethod method = OtMethod::Exact;
    double epsilon = 0.0;             // entropic regularization, 0 for exact
};

struct BrenierApprox {
    int dim = 0;
    std::vector<double> source_points;   // atoms * dim
    std::vector<double> map_T;           // barycentric image per source atom
    std::vector<double> potential_phi;   // |x|^2/2 - u(x) per source atom
    std::vector<bool> defined;           // false where the source weight vanished

    std::size_t atoms() const { return potential_phi.size(); }
    double image(std::size_t i, int a) const { return map_T[i * dim + a]; }
};

struct OtOptions {
    OtMethod method = OtMethod::Exact;
    double epsilon = 1e-2;             // entropic only
    int max_iterations = 20000;        // entropic sweep cap
    std::size_t max_entries = 4'000'000;  // exact-method size cap on |mu| * |nu|
};

// Quadratic cost c(x, y) = |x - y|^2 / 2.
double quadratic_cost(const DiscreteMeasure& mu, std::size_t i, const DiscreteMeasure& nu,
                      std::size_t j);

// Weights proportional to f(x)^{p*(x)} times cell volume, normalized to total
// mass 1; zero-weight nodes dropped. With half_space set, atoms are restricted
// to the half-space nodes of the grid.
DiscreteMeasure density_from_function(const ScalarField& f, const ExponentField& p,
                                      bool half_space = false);

TransportPlan solve_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                       const OtOptions& options = {});

BrenierApprox barycentric_map(const TransportPlan& plan);

struct IdentityResidual {
    double map_level = 0.0;   // |sum mu_i psi(T(x_i)) - sum nu_j psi(y_j)|
    double plan_level = 0.0;  // |sum_ij pi_ij psi(y_j) - sum nu_j psi(y_j)|
};

IdentityResidual transport_identity_residual(
    const TransportPlan& plan, const std::function<double(const std::vector<double>&)>& psi);

struct PlanDiagnostics {
    double monotonicity_min = 0.0;    // min over sampled pairs of (T(x)-T(x')) . (x-x')
    double duality_gap = 0.0;
    std::optional<double> ma_residual_max;  // 1D only, CDF-inversion oracle
};

// Monotonicity and duality diagnostics; when 1D density fields are supplied
// the Monge-Ampere residual |F - G(T) T'| is evaluated against the
// CDF-inversion map.
PlanDiagnostics plan_diagnostics(const TransportPlan& plan,
                                 const ScalarField* density_f = nullptr,
                                 const ScalarField* density_g = nullptr);

// 1D CDF-inversion transport map T = G_cdf^{-1} o F_cdf sampled at the nodes
// of the source grid. Oracle for the 1D reduction of quadratic-cost OT.
std::vector<double> cdf_inversion_map_1d(const ScalarField& density_f,
                                         const ScalarField& density_g);

// Max-norm Monge-Ampere residual |F - G(T) T'| at interior source nodes,
// using the CDF-inversion map.
double ma_residual_1d(const ScalarField& density_f, const ScalarField& density_g);

// Sparse triplet CSV (i, j, weight) plus a JSON sidecar with duals, cost,
// method, epsilon and residuals.
void save_plan(const TransportPlan& plan, const std::string& csv_path,
               const std::string& json_path);

}  // namespace vex::transport
