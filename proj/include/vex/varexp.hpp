#pragma once

#include <utility>

#include "vex/grid.hpp"
#include "vex/report.hpp"

namespace vex::varexp {

using gridlab::GridPtr;
using gridlab::ScalarField;

// Exponent function p(x) with validated bounds 1 <= p_- <= p_+ < n.
class ExponentField {
public:
    ExponentField(ScalarField field, int ambient_dim);

    const ScalarField& field() const { return field_; }
    double p_minus() const { return p_minus_; }
    double p_plus() const { return p_plus_; }
    int ambient_dim() const { return ambient_dim_; }
    double operator[](std::size_t i) const { return field_[i]; }

private:
    ScalarField field_;
    double p_minus_;
    double p_plus_;
    int ambient_dim_;
};

struct ExponentStats {
    double p_minus = 0.0;
    double p_plus = 0.0;
    double conj_plus = 0.0;    // (p')_+ = (p_-)' ; infinity flagged when p_- = 1
    double conj_minus = 0.0;   // (p')_- = (p_+)'
    bool conj_plus_infinite = false;
    double grad_p_norm_s = 0.0;
    double s = 0.0;
};

struct NormResult {
    double value = 0.0;
    double modular_at_value = 0.0;
    int iterations = 0;
    std::pair<double, double> bracket{0.0, 0.0};
};

// Solver tolerances for the Luxemburg bisection.
inline constexpr double kLuxemburgRelTol = 1e-12;
inline constexpr int kLuxemburgMaxIters = 200;

ExponentField make_exponent(ScalarField field, int ambient_dim);

// Modular rho_p(f) = integral of |f(x)|^{p(x)}.
double modular(const ScalarField& f, const ExponentField& p);

// Modular of f / lambda; the map lambda -> modular is strictly decreasing.
double modular_scaled(const ScalarField& f, const ExponentField& p, double lambda);

// Luxemburg norm: the unique lambda > 0 with modular(f/lambda) = 1, by
// bracketed bisection seeded with the modular-norm sandwich.
NormResult luxemburg_norm(const ScalarField& f, const ExponentField& p);

// Classical constant-exponent norm (integral |f|^q)^{1/q}; oracle for tests.
double classical_norm(const ScalarField& f, double q);

ExponentField conjugate_exponent(const ExponentField& p);

struct SobolevExponents {
    ScalarField p_star;        // np/(n-p)
    ScalarField p_lower_star;  // (n-1)p/(n-p) = (1 - 1/n) p*
    double p_star_minus, p_star_plus;
    double p_lower_star_minus, p_lower_star_plus;
};

SobolevExponents sobolev_exponents(const ExponentField& p);

ExponentStats exponent_stats(const ExponentField& p, double s);

// Variable-exponent Hoelder: integral |fg| <= 2 ||f||_p ||g||_{p'}.
ineq::InequalityReport holder_verify(const ScalarField& f, const ScalarField& g,
                                     const ExponentField& p, double tolerance = 1e-9);

// Luxemburg norm of x -> f(x) |log f(x)| |grad p(x)|, with 0 log 0 := 0.
NormResult log_weight_norm(const ScalarField& f, const ExponentField& p);

}  // namespace vex::varexp
