#pragma once

#include <optional>
#include <vector>

#include "vex/grid.hpp"
#include "vex/report.hpp"
#include "vex/transport.hpp"
#include "vex/varexp.hpp"

namespace vex::ineq {

using gridlab::GridPtr;
using gridlab::ScalarField;
using varexp::ExponentField;

// Dilation used by the scaling lemma and the constant chains: same value
// array on a k-dilated grid (origin and extent scaled by k, resolution kept),
// so f_k-nodes map bijectively onto f-nodes and the change-of-variables
// identities hold to solver precision.
GridPtr dilate_grid(const gridlab::Grid& grid, double k);
ScalarField dilate_field(const ScalarField& field, double k);

// Exponent field without the ambient p_+ < n restriction (p*, p_* and
// conjugates routinely exceed the dimension).
ExponentField lift_exponent(ScalarField values);

// eta(x) = max{ |x - shift|^{(p')_+}, |x - shift|^{(p')_-} } per point.
std::vector<double> eta_weight(const std::vector<double>& points, int dim,
                               const ExponentField& p,
                               const std::vector<double>* shift = nullptr);

enum class Modulus { Alpha, Beta };

// Family lower bound for the supremum-defined alpha(n,p) (or the half-space
// beta). Every g must be normalized to ||g||_{p*} = 1.
ModulusEstimate alpha_beta_estimate(const std::vector<ScalarField>& g_family,
                                    const ExponentField& p, Modulus which);

struct KeyEstimateResult {
    InequalityReport end_to_end;   // alpha ratio vs log/gradient norms
    InequalityReport midpoint;     // int g^{p_*} <= -(1/n) int grad(F^{1-1/n}).T
    InequalityReport holder_split; // midpoint RHS vs Hoelder/eta bound
    double duality_gap = 0.0;

    bool pass() const { return end_to_end.pass() && midpoint.pass() && holder_split.pass(); }
};

KeyEstimateResult key_estimate_verify(const ScalarField& f, const ScalarField& g,
                                      const ExponentField& p,
                                      const transport::OtOptions& ot = {},
                                      double tolerance = 1e-8);

struct LogLemmaResult {
    InequalityReport main;       // full inequality against (C1 + C2) max{...}
    InequalityReport split_le1;  // region f <= 1 against C1 max{...}
    InequalityReport split_gt1;  // region f  > 1 against C2 max{...}

    bool pass() const { return main.pass() && split_le1.pass() && split_gt1.pass(); }
};

LogLemmaResult log_lemma_verify(const ScalarField& f, const ExponentField& p, double s,
                                double tolerance = 1e-9);

ScalingReport scaling_verify(const ScalarField& f, const ExponentField& p, double k, double r,
                             double tolerance = 1e-6);

struct ChainOptions {
    double tolerance = 1e-8;
    int max_k_doublings = 60;
    transport::OtOptions ot;
    bool with_transport = false;  // trace only: run the half-space plan checks
};

struct SobolevResult {
    InequalityReport final_report;  // ||f||_{p*} vs the assembled two-term RHS
    InequalityReport scaled_chain;  // almost-Sobolev check at the working scale k
    double k_formula = 1.0;         // k from the max{1, M_p/delta} formula
    double k_effective = 1.0;       // k actually used (escalated until the smallness condition holds)
    double delta = 0.0;

    bool pass() const { return final_report.pass() && scaled_chain.pass(); }
};

SobolevResult sobolev_verify(const ScalarField& f, const ExponentField& p, double s,
                             const std::vector<ScalarField>& g_family,
                             const ChainOptions& options = {});

struct TraceResult {
    InequalityReport final_report;   // boundary norm vs C ||grad f||
    InequalityReport casi_traza;     // boundary modular vs c1 t^a + c2 t - B
    std::optional<InequalityReport> boundary_sign;   // max(-T.axis) <= tol
    std::optional<InequalityReport> key_estimate;    // shifted-eta estimate
    std::optional<InequalityReport> midpoint;        // boundary-term transport identity
    double k_effective = 1.0;
    double h_supremum = 0.0;

    bool pass() const {
        bool ok = final_report.pass() && casi_traza.pass();
        if (boundary_sign) ok = ok && boundary_sign->pass();
        if (key_estimate) ok = ok && key_estimate->pass();
        if (midpoint) ok = ok && midpoint->pass();
        return ok;
    }
};

TraceResult trace_verify(const ScalarField& f, const ExponentField& p, double s,
                         const std::vector<ScalarField>& g_family,
                         const ChainOptions& options = {});

// sup_{t>0} (C1 t^alpha + C2 t - B) t^{-q}, by log-grid search refined with
// golden section. Finite whenever B > 0, q > 1 and (q > alpha > 0 or C1 = 0).
double h_bound(double c1, double c2, double b, double alpha_exp, double q);

}  // namespace vex::ineq
