#include "vex/varexp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace vex::varexp {

using gridlab::integrate;
using gridlab::gradient_fd;

ExponentField::ExponentField(ScalarField field, int ambient_dim)
    : field_(std::move(field)), ambient_dim_(ambient_dim) {
    if (ambient_dim_ < 1) fail(ErrorCode::InvalidArgument, "ambient dimension must be >= 1");
    auto [lo, hi] = std::minmax_element(field_.values().begin(), field_.values().end());
    p_minus_ = *lo;
    p_plus_ = *hi;
    if (p_minus_ < 1.0) fail(ErrorCode::ExponentBelowOne, "exponent has values below 1");
    if (p_plus_ >= ambient_dim_)
        fail(ErrorCode::ExponentReachesDimension, "exponent reaches the ambient dimension");
}

ExponentField make_exponent(ScalarField field, int ambient_dim) {
    return ExponentField(std::move(field), ambient_dim);
}

double modular(const ScalarField& f, const ExponentField& p) {
    return modular_scaled(f, p, 1.0);
}

double modular_scaled(const ScalarField& f, const ExponentField& p, double lambda) {
    if (!f.grid().same_layout(p.field().grid()))
        fail(ErrorCode::IncompatibleGrids, "field and exponent live on different grids");
    double sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        double v = std::abs(f[i]) / lambda;
        if (v != 0.0) sum += std::pow(v, p[i]);
    }
    return sum * f.grid().cell_volume();
}

NormResult luxemburg_norm(const ScalarField& f, const ExponentField& p) {
    NormResult result;
    double rho = modular(f, p);
    if (rho == 0.0) return result;  // f vanishes on the nodes
    if (!std::isfinite(rho)) fail(ErrorCode::NormOverflow, "modular overflow at lambda = 1");

    const double pm = p.p_minus();
    const double pp = p.p_plus();
    double a = std::pow(rho, 1.0 / pm);
    double b = std::pow(rho, 1.0 / pp);
    double lo = std::min(a, b);
    double hi = std::max(a, b);
    result.bracket = {lo, hi};

    // The sandwich gives modular(f/lo) >= 1 >= modular(f/hi); a short
    // expansion guards against round-off at the endpoints.
    int expansions = 0;
    while (modular_scaled(f, p, lo) < 1.0 && expansions++ < 64) lo *= 0.5;
    expansions = 0;
    while (modular_scaled(f, p, hi) > 1.0 && expansions++ < 64) hi *= 2.0;
    if (!std::isfinite(hi) || !std::isfinite(lo) || lo <= 0.0)
        fail(ErrorCode::NormOverflow, "Luxemburg bracket expansion failed");

    double mid = 0.5 * (lo + hi);
    int it = 0;
    while (it < kLuxemburgMaxIters && (hi - lo) > kLuxemburgRelTol * mid) {
        mid = 0.5 * (lo + hi);
        double m = modular_scaled(f, p, mid);
        if (m > 1.0)
            lo = mid;
        else
            hi = mid;
        ++it;
    }
    mid = 0.5 * (lo + hi);
    result.value = mid;
    result.modular_at_value = modular_scaled(f, p, mid);
    result.iterations = it;
    return result;
}

double classical_norm(const ScalarField& f, double q) {
    double sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        double v = std::abs(f[i]);
        if (v != 0.0) sum += std::pow(v, q);
    }
    return std::pow(sum * f.grid().cell_volume(), 1.0 / q);
}

ExponentField conjugate_exponent(const ExponentField& p) {
    if (p.p_minus() <= 1.0)
        fail(ErrorCode::ConjugateUnbounded, "conjugate exponent unbounded when p_- = 1");
    ScalarField conj = gridlab::map_field(p.field(), [](double v) { return v / (v - 1.0); });
    // p' ranges in (1, (p_-)'] and (p_-)' < infinity here; the ambient bound
    // does not apply to a conjugate, so validate against a loose dimension.
    double cmax = p.p_minus() / (p.p_minus() - 1.0);
    int ambient = static_cast<int>(std::ceil(cmax)) + 1;
    return ExponentField(std::move(conj), std::max(ambient, p.ambient_dim()));
}

SobolevExponents sobolev_exponents(const ExponentField& p) {
    const double n = p.ambient_dim();
    ScalarField p_star = gridlab::map_field(p.field(), [n](double v) { return n * v / (n - v); });
    ScalarField p_lower =
        gridlab::map_field(p.field(), [n](double v) { return (n - 1.0) * v / (n - v); });
    auto [s_lo, s_hi] = std::minmax_element(p_star.values().begin(), p_star.values().end());
    auto [l_lo, l_hi] = std::minmax_element(p_lower.values().begin(), p_lower.values().end());
    SobolevExponents out{std::move(p_star), std::move(p_lower), 0, 0, 0, 0};
    out.p_star_minus = *s_lo;
    out.p_star_plus = *s_hi;
    out.p_lower_star_minus = *l_lo;
    out.p_lower_star_plus = *l_hi;
    return out;
}

ExponentStats exponent_stats(const ExponentField& p, double s) {
    if (s <= p.ambient_dim())
        fail(ErrorCode::InvalidIntegrabilityExponent, "exponent_stats requires s > n");
    ExponentStats stats;
    stats.p_minus = p.p_minus();
    stats.p_plus = p.p_plus();
    stats.s = s;
    stats.conj_minus = p.p_plus() / (p.p_plus() - 1.0);
    if (p.p_minus() > 1.0) {
        stats.conj_plus = p.p_minus() / (p.p_minus() - 1.0);
    } else {
        stats.conj_plus = std::numeric_limits<double>::infinity();
        stats.conj_plus_infinite = true;
    }
    ScalarField mag = gradient_fd(p.field()).magnitude_field();
    ScalarField mag_s = gridlab::map_field(mag, [s](double v) { return std::pow(v, s); });
    stats.grad_p_norm_s = std::pow(integrate(mag_s), 1.0 / s);
    return stats;
}

ineq::InequalityReport holder_verify(const ScalarField& f, const ScalarField& g,
                                     const ExponentField& p, double tolerance) {
    if (!f.grid().same_layout(g.grid()))
        fail(ErrorCode::IncompatibleGrids, "holder_verify fields live on different grids");
    ExponentField q = conjugate_exponent(p);
    ScalarField prod = gridlab::combine_fields(f, g, [](double a, double b) { return std::abs(a * b); });

    ineq::InequalityReport report;
    report.name = "holder";
    report.lhs = integrate(prod);
    double nf = luxemburg_norm(f, p).value;
    double ng = luxemburg_norm(g, q).value;
    report.rhs = 2.0 * nf * ng;
    report.constants["holder_factor"] = 2.0;
    report.constants["norm_f_p"] = nf;
    report.constants["norm_g_pconj"] = ng;
    report.tolerance = tolerance;
    return report;
}

NormResult log_weight_norm(const ScalarField& f, const ExponentField& p) {
    for (double v : f.values())
        if (v < 0.0) fail(ErrorCode::NonnegativityViolation, "log_weight_norm requires f >= 0");
    ScalarField grad_p_mag = gradient_fd(p.field()).magnitude_field();
    ScalarField weighted = gridlab::combine_fields(
        f, grad_p_mag, [](double fv, double gv) {
            if (fv == 0.0) return 0.0;  // 0 log 0 := 0
            return fv * std::abs(std::log(fv)) * gv;
        });
    return luxemburg_norm(weighted, p);
}

}  // namespace vex::varexp
