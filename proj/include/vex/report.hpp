#pragma once

#include <map>
#include <string>
#include <vector>

namespace vex::ineq {

// Outcome record for one verified inequality. `constants` carries every
// effective constant of the chain under a descriptive name.
struct InequalityReport {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    std::map<std::string, double> constants;
    double tolerance = 0.0;
    std::string inputs_digest;

    double margin() const { return rhs - lhs; }
    bool pass() const { return margin() >= -tolerance; }
};

struct SandwichCheck {
    std::string name;
    double lower = 0.0;
    double measured = 0.0;
    double upper = 0.0;
    double tolerance = 0.0;

    bool pass() const {
        return measured >= lower * (1.0 - tolerance) - tolerance &&
               measured <= upper * (1.0 + tolerance) + tolerance;
    }
};

// Scaling-lemma record: three sandwiches for the dilated function norm,
// gradient norm and exponent-gradient norm at one dilation factor k.
struct ScalingReport {
    double k = 1.0;
    SandwichCheck f_star;     // k^{n/p*_+} ||f|| <= ||f_k|| <= k^{n/p*_-} ||f||
    SandwichCheck grad_f;     // k^{n/p_+ - 1} <= ... <= k^{n/p_-  - 1}
    SandwichCheck grad_p;     // k^{-p_+ + n/r} <= ... <= k^{-p_- + n/r}
    double coarse_f_star = 0.0;   // k^{n-1} bound
    double coarse_grad_f = 0.0;   // k^{n-1} bound
    double coarse_grad_p = 0.0;   // k^{-1+n/s} bound

    bool pass() const { return f_star.pass() && grad_f.pass() && grad_p.pass(); }
};

// Certified lower bound for a supremum-defined modulus (alpha or beta),
// taken over a finite family of normalized test functions.
struct ModulusEstimate {
    double value = 0.0;
    int family_size = 0;
    std::string which;              // "alpha" or "beta"
    std::vector<double> per_member; // ratio per family member
    int best_member = -1;
};

}  // namespace vex::ineq
