#include "vex/ineq.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <numeric>
#include <sstream>

namespace vex::ineq {

using gridlab::combine_fields;
using gridlab::gradient_fd;
using gridlab::integrate;
using gridlab::map_field;
using varexp::conjugate_exponent;
using varexp::exponent_stats;
using varexp::log_weight_norm;
using varexp::luxemburg_norm;
using varexp::modular;
using varexp::sobolev_exponents;

namespace {

constexpr double kEulerE = 2.718281828459045235360287471352662498;

ScalarField pow_field(const ScalarField& base, const ScalarField& exponent) {
    return combine_fields(base, exponent, [](double b, double e) {
        if (b == 0.0) return 0.0;
        return std::pow(std::abs(b), e);
    });
}

std::string digest(std::initializer_list<double> values) {
    // cheap order-sensitive content digest identifying the report inputs
    std::uint64_t h = 1469598103934665603ull;
    for (double v : values) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xff;
            h *= 1099511628211ull;
        }
    }
    std::ostringstream out;
    out << std::hex << h;
    return out.str();
}

double grad_norm(const ScalarField& f, const ExponentField& p) {
    return luxemburg_norm(gradient_fd(f).magnitude_field(), p).value;
}

// Sandwich bound exponents of the log-lemma constants.
struct LogChain {
    double tau_minus, tau_plus;   // (s/(s-p))_- and _+
    double r_minus;               // (sp/(s-p))_-
    double c_ns;                  // 4 (r_-/(e(r_- - 1)))^{r_-}
    double c2;                    // 2s(n-1)/(e(s-n))
};

LogChain log_chain_constants(const ExponentField& p, double s) {
    const double n = p.ambient_dim();
    if (s <= n) fail(ErrorCode::InvalidIntegrabilityExponent, "requires s > n");
    LogChain c{};
    c.tau_minus = s / (s - p.p_minus());
    c.tau_plus = s / (s - p.p_plus());
    c.r_minus = s * p.p_minus() / (s - p.p_minus());
    c.c_ns = 4.0 * std::pow(c.r_minus / (kEulerE * (c.r_minus - 1.0)), c.r_minus);
    c.c2 = 2.0 * s * (n - 1.0) / (kEulerE * (s - n));
    return c;
}

double branch_max(double base, double inv_a, double inv_b) {
    return std::max(std::pow(base, inv_a), std::pow(base, inv_b));
}

// C1 of the log lemma from its measured ingredients.
double log_c1(const LogChain& c, double diam, double ind_norm, double grad_norm_value) {
    double base = c.c_ns * diam * ind_norm * grad_norm_value;
    return 2.0 * branch_max(base, 1.0 / c.tau_minus, 1.0 / c.tau_plus);
}

struct EtaMoment {
    double moment = 0.0;  // integral of eta g^{p*}
    double bound = 0.0;   // max{moment^{1/(p')_-}, moment^{1/(p')_+}}
};

EtaMoment eta_moment(const ScalarField& g, const ExponentField& p,
                     const std::vector<double>* shift) {
    const gridlab::Grid& grid = g.grid();
    const double conj_minus = p.p_plus() / (p.p_plus() - 1.0);
    const double conj_plus = p.p_minus() / (p.p_minus() - 1.0);
    auto exps = sobolev_exponents(p);
    ScalarField gstar = pow_field(g, exps.p_star);
    double sum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (gstar[i] == 0.0) continue;
        double d2 = 0.0;
        for (int a = 0; a < grid.dim(); ++a) {
            double c = grid.node_coord(i, a) - (shift ? (*shift)[a] : 0.0);
            d2 += c * c;
        }
        double dist = std::sqrt(d2);
        sum += std::max(std::pow(dist, conj_minus), std::pow(dist, conj_plus)) * gstar[i];
    }
    EtaMoment out;
    out.moment = sum * grid.cell_volume();
    out.bound = branch_max(out.moment, 1.0 / conj_minus, 1.0 / conj_plus);
    return out;
}

ScalarField normalized_by_pstar(const ScalarField& f, const ExponentField& p, double* norm_out) {
    auto exps = sobolev_exponents(p);
    ExponentField pstar = lift_exponent(exps.p_star);
    double norm = luxemburg_norm(f, pstar).value;
    if (norm <= 0.0) fail(ErrorCode::EmptyMeasure, "cannot normalize an identically zero field");
    if (norm_out) *norm_out = norm;
    return gridlab::scale_field(f, 1.0 / norm);
}

std::vector<double> half_space_shift(const gridlab::Grid& grid) {
    if (!grid.half_space_axis()) fail(ErrorCode::NotAHalfSpace, "half-space grid required");
    std::vector<double> e(grid.dim(), 0.0);
    e[*grid.half_space_axis()] = -1.0;
    return e;
}

}  // namespace

GridPtr dilate_grid(const gridlab::Grid& grid, double k) {
    std::vector<double> origin = grid.origin(), extent = grid.extent();
    for (double& v : origin) v *= k;
    for (double& v : extent) v *= k;
    return gridlab::build_grid(grid.dim(), origin, extent, grid.resolution(),
                               grid.half_space_axis());
}

ScalarField dilate_field(const ScalarField& field, double k) {
    return ScalarField(dilate_grid(field.grid(), k), field.values());
}

ExponentField lift_exponent(ScalarField values) {
    double vmax = *std::max_element(values.values().begin(), values.values().end());
    int ambient = static_cast<int>(std::ceil(vmax)) + 1;
    return ExponentField(std::move(values), ambient);
}

std::vector<double> eta_weight(const std::vector<double>& points, int dim,
                               const ExponentField& p, const std::vector<double>* shift) {
    if (p.p_minus() <= 1.0)
        fail(ErrorCode::ConjugateUnbounded, "eta weight needs p_- > 1");
    const double conj_minus = p.p_plus() / (p.p_plus() - 1.0);
    const double conj_plus = p.p_minus() / (p.p_minus() - 1.0);
    std::vector<double> out(points.size() / dim);
    for (std::size_t i = 0; i < out.size(); ++i) {
        double d2 = 0.0;
        for (int a = 0; a < dim; ++a) {
            double c = points[i * dim + a] - (shift ? (*shift)[a] : 0.0);
            d2 += c * c;
        }
        double dist = std::sqrt(d2);
        out[i] = std::max(std::pow(dist, conj_minus), std::pow(dist, conj_plus));
    }
    return out;
}

ModulusEstimate alpha_beta_estimate(const std::vector<ScalarField>& g_family,
                                    const ExponentField& p, Modulus which) {
    if (g_family.empty()) fail(ErrorCode::EmptyFamily, "alpha/beta family is empty");
    if (p.p_minus() <= 1.0) fail(ErrorCode::ConjugateUnbounded, "modulus estimate needs p_- > 1");
    const double n = p.ambient_dim();
    auto exps = sobolev_exponents(p);
    ExponentField pstar = lift_exponent(exps.p_star);

    std::optional<std::vector<double>> shift;
    double prefactor;
    if (which == Modulus::Alpha) {
        prefactor = (n - p.p_plus()) / (2.0 * (n - 1.0));
    } else {
        shift = half_space_shift(p.field().grid());
        prefactor = n;
    }

    ModulusEstimate est;
    est.which = which == Modulus::Alpha ? "alpha" : "beta";
    est.family_size = static_cast<int>(g_family.size());
    for (const ScalarField& g : g_family) {
        if (!g.grid().same_layout(p.field().grid()))
            fail(ErrorCode::IncompatibleGrids, "family member on a different grid");
        for (double v : g.values())
            if (v < 0.0) fail(ErrorCode::NonnegativityViolation, "family member must be nonnegative");
        double norm = luxemburg_norm(g, pstar).value;
        if (std::abs(norm - 1.0) > 1e-6)
            fail(ErrorCode::NormalizationViolation, "family member is not p*-normalized");
        double num = integrate(pow_field(g, exps.p_lower_star));
        EtaMoment eta = eta_moment(g, p, shift ? &*shift : nullptr);
        double ratio = prefactor * num / eta.bound;
        est.per_member.push_back(ratio);
        if (ratio > est.value) {
            est.value = ratio;
            est.best_member = static_cast<int>(est.per_member.size()) - 1;
        }
    }
    return est;
}

KeyEstimateResult key_estimate_verify(const ScalarField& f, const ScalarField& g,
                                      const ExponentField& p, const transport::OtOptions& ot,
                                      double tolerance) {
    const double n = p.ambient_dim();
    const double pp = p.p_plus();
    if (p.p_minus() <= 1.0)
        fail(ErrorCode::ConjugateUnbounded, "key estimate needs p_- > 1");
    if (!f.grid().same_layout(g.grid()) || !f.grid().same_layout(p.field().grid()))
        fail(ErrorCode::IncompatibleGrids, "key estimate inputs on different grids");

    ScalarField f1 = normalized_by_pstar(f, p, nullptr);
    ScalarField g1 = normalized_by_pstar(g, p, nullptr);
    auto exps = sobolev_exponents(p);

    // densities F = f^{p*}, G = g^{p*} and the exact plan between them
    transport::DiscreteMeasure mu = transport::density_from_function(f1, p);
    transport::DiscreteMeasure nu = transport::density_from_function(g1, p);
    transport::TransportPlan plan = transport::solve_ot(mu, nu, ot);
    transport::BrenierApprox brenier = transport::barycentric_map(plan);

    // F^{1-1/n} = f^{p_*}
    ScalarField w = pow_field(f1, exps.p_lower_star);
    gridlab::VectorField grad_w = gradient_fd(w);

    double lhs_mid = integrate(pow_field(g1, exps.p_lower_star));
    double rhs_mid = 0.0;
    const double vol = f1.grid().cell_volume();
    for (std::size_t a = 0; a < mu.atoms(); ++a) {
        if (!brenier.defined[a]) continue;
        std::size_t node = mu.node_index[a];
        double dot = 0.0;
        for (int d = 0; d < f1.grid().dim(); ++d)
            dot += grad_w.component(node, d) * brenier.image(a, d);
        rhs_mid += dot;
    }
    rhs_mid *= -vol / n;

    EtaMoment eta = eta_moment(g1, p, nullptr);
    double norm_log = log_weight_norm(f1, p).value;
    double norm_grad = grad_norm(f1, p);
    double rhs_split = ((n - 1.0) / (n - pp)) *
                       ((2.0 / (n - pp)) * norm_log + (2.0 * pp / n) * norm_grad) * eta.bound;
    double alpha_g = (n - pp) / (2.0 * (n - 1.0)) * lhs_mid / eta.bound;
    double rhs_end = (1.0 / (n - pp)) * norm_log + (pp / n) * norm_grad;

    std::string dig = digest({lhs_mid, rhs_mid, eta.moment, norm_log, norm_grad});
    double tol = tolerance + plan.duality_gap;
    // the AM-GM step behind the midpoint inequality is an equality for
    // conformal maps (bump-to-bump is close to one), so its continuum margin
    // can vanish; budget the O(h) quadrature and barycentric-map error
    double h_max = 0.0;
    for (int a = 0; a < f1.grid().dim(); ++a) h_max = std::max(h_max, f1.grid().spacing(a));
    double disc_budget = h_max * std::max(lhs_mid, std::abs(rhs_mid));

    KeyEstimateResult result;
    result.duality_gap = plan.duality_gap;

    result.end_to_end.name = "key-estimate/end-to-end";
    result.end_to_end.lhs = alpha_g;
    result.end_to_end.rhs = rhs_end;
    result.end_to_end.tolerance = tol;
    result.end_to_end.inputs_digest = dig;
    result.end_to_end.constants = {{"eta_moment", eta.moment},
                                   {"eta_bound", eta.bound},
                                   {"norm_log_weight", norm_log},
                                   {"norm_grad_f", norm_grad},
                                   {"duality_gap", plan.duality_gap}};

    result.midpoint.name = "key-estimate/midpoint";
    result.midpoint.lhs = lhs_mid;
    result.midpoint.rhs = rhs_mid;
    result.midpoint.tolerance = tol + disc_budget;
    result.midpoint.inputs_digest = dig;
    result.midpoint.constants = {{"duality_gap", plan.duality_gap},
                                 {"discretization_budget", disc_budget}};

    result.holder_split.name = "key-estimate/holder-split";
    result.holder_split.lhs = rhs_mid;
    result.holder_split.rhs = rhs_split;
    result.holder_split.tolerance = tol;
    result.holder_split.inputs_digest = dig;
    result.holder_split.constants = {{"eta_bound", eta.bound},
                                     {"norm_log_weight", norm_log},
                                     {"norm_grad_f", norm_grad}};
    return result;
}

LogLemmaResult log_lemma_verify(const ScalarField& f, const ExponentField& p, double s,
                                double tolerance) {
    const double n = p.ambient_dim();
    LogChain chain = log_chain_constants(p, s);
    ScalarField f1 = normalized_by_pstar(f, p, nullptr);

    auto stats = exponent_stats(p, s);
    double m_p = std::max(std::pow(stats.grad_p_norm_s, p.p_minus()),
                          std::pow(stats.grad_p_norm_s, p.p_plus()));

    ScalarField grad_p_mag = gradient_fd(p.field()).magnitude_field();
    ScalarField weighted = combine_fields(f1, grad_p_mag, [](double fv, double gv) {
        if (fv == 0.0) return 0.0;
        return fv * std::abs(std::log(fv)) * gv;
    });
    // LHS split into the regions f <= 1 and f > 1 (their sum is the modular)
    double vol = f1.grid().cell_volume();
    double lhs_le1 = 0.0, lhs_gt1 = 0.0;
    for (std::size_t i = 0; i < f1.size(); ++i) {
        if (weighted[i] == 0.0) continue;
        double term = std::pow(weighted[i], p[i]) * vol;
        (f1[i] <= 1.0 ? lhs_le1 : lhs_gt1) += term;
    }
    double lhs = lhs_le1 + lhs_gt1;

    gridlab::SupportInfo supp = gridlab::support_info(f1);
    ExponentField conj = conjugate_exponent(p);
    double ind_norm = luxemburg_norm(supp.indicator, conj).value;
    double gradf = grad_norm(f1, p);
    double c1 = log_c1(chain, supp.diameter, ind_norm, gradf);

    std::string dig = digest({lhs, c1, chain.c2, m_p, supp.diameter, ind_norm, gradf});

    LogLemmaResult result;
    result.main.name = "log-lemma/full";
    result.main.lhs = lhs;
    result.main.rhs = (c1 + chain.c2) * m_p;
    result.main.tolerance = tolerance;
    result.main.inputs_digest = dig;
    result.main.constants = {{"C1", c1},
                             {"C2", chain.c2},
                             {"C_ns", chain.c_ns},
                             {"r_minus", chain.r_minus},
                             {"tau_minus", chain.tau_minus},
                             {"tau_plus", chain.tau_plus},
                             {"grad_p_norm_s", stats.grad_p_norm_s},
                             {"max_grad_p_power", m_p},
                             {"diam_supp", supp.diameter},
                             {"indicator_norm", ind_norm},
                             {"norm_grad_f", gradf}};

    result.split_le1.name = "log-lemma/region-f<=1";
    result.split_le1.lhs = lhs_le1;
    result.split_le1.rhs = c1 * m_p;
    result.split_le1.tolerance = tolerance;
    result.split_le1.inputs_digest = dig;
    result.split_le1.constants = {{"C1", c1}, {"max_grad_p_power", m_p}};

    result.split_gt1.name = "log-lemma/region-f>1";
    result.split_gt1.lhs = lhs_gt1;
    result.split_gt1.rhs = chain.c2 * m_p;
    result.split_gt1.tolerance = tolerance;
    result.split_gt1.inputs_digest = dig;
    result.split_gt1.constants = {{"C2", chain.c2}, {"max_grad_p_power", m_p}};
    return result;
}

ScalingReport scaling_verify(const ScalarField& f, const ExponentField& p, double k, double r,
                             double tolerance) {
    if (k < 1.0) fail(ErrorCode::InvalidArgument, "scaling requires k >= 1");
    if (r < 1.0) fail(ErrorCode::InvalidArgument, "scaling requires r >= 1");
    const double n = p.ambient_dim();
    const double pm = p.p_minus(), pp = p.p_plus();

    auto exps = sobolev_exponents(p);
    ExponentField pstar = lift_exponent(exps.p_star);
    double norm_f = luxemburg_norm(f, pstar).value;
    double norm_grad_f = grad_norm(f, p);
    ScalarField grad_p_pow = pow_field(gradient_fd(p.field()).magnitude_field(), p.field());
    double norm_grad_p = varexp::classical_norm(grad_p_pow, r);

    // dilated objects: same value arrays on the k-scaled grid
    ScalarField f_k = dilate_field(f, k);
    ExponentField p_k(dilate_field(p.field(), k), p.ambient_dim());
    ExponentField pstar_k = lift_exponent(dilate_field(exps.p_star, k));
    double norm_f_k = luxemburg_norm(f_k, pstar_k).value;
    double norm_grad_f_k = grad_norm(f_k, p_k);
    ScalarField grad_pk_pow = pow_field(gradient_fd(p_k.field()).magnitude_field(), p_k.field());
    double norm_grad_p_k = varexp::classical_norm(grad_pk_pow, r);

    const double ps_minus = n * pm / (n - pm);
    const double ps_plus = n * pp / (n - pp);

    ScalingReport report;
    report.k = k;
    report.f_star = {"scaling/f-pstar", std::pow(k, n / ps_plus) * norm_f, norm_f_k,
                     std::pow(k, n / ps_minus) * norm_f, tolerance};
    report.grad_f = {"scaling/grad-f", std::pow(k, n / pp - 1.0) * norm_grad_f, norm_grad_f_k,
                     std::pow(k, n / pm - 1.0) * norm_grad_f, tolerance};
    report.grad_p = {"scaling/grad-p", std::pow(k, -pp + n / r) * norm_grad_p, norm_grad_p_k,
                     std::pow(k, -pm + n / r) * norm_grad_p, tolerance};
    report.coarse_f_star = std::pow(k, n - 1.0) * norm_f;
    report.coarse_grad_f = std::pow(k, n - 1.0) * norm_grad_f;
    report.coarse_grad_p = std::pow(k, -1.0 + n / r) * norm_grad_p;
    return report;
}

namespace {

struct ScaledSobolevPieces {
    double alpha_est_k = 0.0;
    double c1k = 0.0;
    double grad_ratio = 0.0;   // ||grad f_k||_{p_k} / ||f_k||_{p_k*}
    double norm_f_k = 1.0;
    double m_k = 0.0;          // ||grad p_k||_s (exact dilation identity)
    double diam_k = 0.0;
    double ind_k = 0.0;
};

std::vector<ScalarField> dilate_family(const std::vector<ScalarField>& family,
                                       const ExponentField& p_k, double k) {
    auto exps = sobolev_exponents(p_k);
    ExponentField pstar_k = lift_exponent(exps.p_star);
    std::vector<ScalarField> out;
    out.reserve(family.size());
    for (const ScalarField& g : family) {
        ScalarField g_k = dilate_field(g, k);
        double norm = luxemburg_norm(g_k, pstar_k).value;
        out.push_back(gridlab::scale_field(g_k, 1.0 / norm));
    }
    return out;
}

}  // namespace

SobolevResult sobolev_verify(const ScalarField& f, const ExponentField& p, double s,
                             const std::vector<ScalarField>& g_family,
                             const ChainOptions& options) {
    const double n = p.ambient_dim();
    const double pm = p.p_minus(), pp = p.p_plus();
    LogChain chain = log_chain_constants(p, s);
    ScalarField f1 = normalized_by_pstar(f, p, nullptr);

    auto stats = exponent_stats(p, s);
    const double m = stats.grad_p_norm_s;
    const double m_p = std::max(std::pow(m, pm), std::pow(m, pp));

    double alpha_est = alpha_beta_estimate(g_family, p, Modulus::Alpha).value;
    if (!(alpha_est > 0.0))
        fail(ErrorCode::ConstantChainFailure, "alpha estimate is not positive");

    // largest grid-searched delta with the C2-term below alpha/2
    double delta = 0.0;
    for (int i = 720; i >= 0; --i) {
        double cand = std::pow(10.0, -12.0 + 18.0 * i / 720.0);
        if ((1.0 / (n - pp)) * std::pow(chain.c2 * cand, 1.0 / pp) <= alpha_est / 2.0) {
            delta = cand;
            break;
        }
    }
    if (delta <= 0.0)
        fail(ErrorCode::ConstantChainFailure, "no admissible delta: alpha estimate too small");

    double k_formula = std::max(1.0, m_p / delta);
    double k_eff = k_formula;
    auto smallness = [&](double k) {
        double mk = std::pow(k, n / s - 1.0) * m;
        return std::max(std::pow(mk, pm), std::pow(mk, pp)) <= delta;
    };
    int doublings = 0;
    while (!smallness(k_eff)) {
        if (++doublings > options.max_k_doublings)
            fail(ErrorCode::ConstantChainFailure, "smallness condition unreachable by rescaling");
        k_eff *= 2.0;
    }

    // scale-k objects (exact dilation identities)
    ScalarField f_k = dilate_field(f1, k_eff);
    ExponentField p_k(dilate_field(p.field(), k_eff), p.ambient_dim());
    ExponentField pstar_k = lift_exponent(dilate_field(sobolev_exponents(p).p_star, k_eff));

    ScaledSobolevPieces pieces;
    pieces.norm_f_k = luxemburg_norm(f_k, pstar_k).value;
    pieces.grad_ratio = grad_norm(f_k, p_k) / pieces.norm_f_k;
    pieces.m_k = std::pow(k_eff, n / s - 1.0) * m;
    gridlab::SupportInfo supp_k = gridlab::support_info(f_k);
    pieces.diam_k = supp_k.diameter;
    pieces.ind_k = luxemburg_norm(supp_k.indicator, conjugate_exponent(p_k)).value;
    pieces.c1k = log_c1(chain, pieces.diam_k, pieces.ind_k, pieces.grad_ratio);
    std::vector<ScalarField> family_k = dilate_family(g_family, p_k, k_eff);
    pieces.alpha_est_k = alpha_beta_estimate(family_k, p_k, Modulus::Alpha).value;
    if (!(pieces.alpha_est_k > 0.0))
        fail(ErrorCode::ConstantChainFailure, "scaled alpha estimate is not positive");

    std::string dig = digest({alpha_est, pieces.alpha_est_k, delta, k_eff, m, m_p});

    SobolevResult result;
    result.k_formula = k_formula;
    result.k_effective = k_eff;
    result.delta = delta;

    // almost-Sobolev inequality at the working scale
    double max_mk = std::max(std::pow(pieces.m_k, pm / pp), pieces.m_k);
    result.scaled_chain.name = "sobolev/scaled-chain";
    result.scaled_chain.lhs = pieces.alpha_est_k / 2.0;
    result.scaled_chain.rhs =
        std::pow(pieces.c1k, 1.0 / pp) * max_mk + (pp / n) * pieces.grad_ratio;
    result.scaled_chain.tolerance = options.tolerance;
    result.scaled_chain.inputs_digest = dig;
    result.scaled_chain.constants = {{"alpha_est_k", pieces.alpha_est_k},
                                     {"C1_k", pieces.c1k},
                                     {"grad_ratio_k", pieces.grad_ratio},
                                     {"grad_p_norm_s_k", pieces.m_k}};

    // final two-term right-hand side with all powers of k folded into the
    // traced constants
    double grad1 = grad_norm(f1, p);
    double diam1 = pieces.diam_k / k_eff;  // dilation scales distances exactly
    double q_g = n / pm - 1.0 - (n - pp) / pp;
    double c_a_base = chain.c_ns * k_eff * diam1 * pieces.ind_k * std::pow(k_eff, q_g);
    double k_pp = std::pow(k_eff, (n / s - 1.0) * pm / pp);
    double gamma = (m <= 1.0) ? pm / pp : 1.0;
    double c_a = (2.0 / pieces.alpha_est_k) * std::pow(2.0, 1.0 / pp) *
                 branch_max(c_a_base, 1.0 / (chain.tau_minus * pp), 1.0 / (chain.tau_plus * pp)) *
                 k_pp;
    double c_b = (2.0 / pieces.alpha_est_k) * (pp / n) * std::pow(k_eff, q_g);
    double grad_branch =
        std::pow(branch_max(grad1, 1.0 / chain.tau_plus, 1.0 / chain.tau_minus), 1.0 / pp);
    double term1 = c_a * std::pow(m, gamma) * grad_branch;
    double term2 = c_b * grad1;

    result.final_report.name = "sobolev/final";
    result.final_report.lhs = 1.0;  // f normalized to unit p*-norm
    result.final_report.rhs = term1 + term2;
    result.final_report.tolerance = options.tolerance;
    result.final_report.inputs_digest = dig;
    result.final_report.constants = {{"alpha_est", alpha_est},
                                     {"alpha_est_k", pieces.alpha_est_k},
                                     {"delta", delta},
                                     {"k_formula", k_formula},
                                     {"k_effective", k_eff},
                                     {"C2", chain.c2},
                                     {"C_ns", chain.c_ns},
                                     {"C1_k", pieces.c1k},
                                     {"C_npR", c_a},
                                     {"C_np", c_b},
                                     {"gamma", gamma},
                                     {"grad_p_norm_s", m},
                                     {"norm_grad_f", grad1},
                                     {"tau_minus", chain.tau_minus},
                                     {"tau_plus", chain.tau_plus},
                                     {"term_gradient_p", term1},
                                     {"term_gradient_f", term2}};
    return result;
}

TraceResult trace_verify(const ScalarField& f, const ExponentField& p, double s,
                         const std::vector<ScalarField>& g_family,
                         const ChainOptions& options) {
    const gridlab::Grid& grid = f.grid();
    if (!grid.half_space_axis()) fail(ErrorCode::NotAHalfSpace, "trace_verify needs a half-space grid");
    const int axis = *grid.half_space_axis();
    const double n = p.ambient_dim();
    const double pm = p.p_minus(), pp = p.p_plus();
    LogChain chain = log_chain_constants(p, s);
    auto stats = exponent_stats(p, s);
    const double m = stats.grad_p_norm_s;

    ScalarField f1 = normalized_by_pstar(f, p, nullptr);
    auto exps = sobolev_exponents(p);
    const double q = exps.p_lower_star_plus;  // (p_*)_+ regime, ||f||_{p*} = 1

    // work at scale k where the C2-part of the chain is dominated by the
    // best family member's beta ratio
    double k_eff = 1.0;
    int doublings = 0;
    ScalarField f2 = f1;
    ExponentField p_k = p;
    std::vector<ScalarField> family_k = g_family;
    double b_eff = 0.0, term_c2 = 0.0, num_best = 0.0;
    EtaMoment eta_best;
    int best = -1;
    for (;;) {
        double m_k = std::pow(k_eff, n / s - 1.0) * m;
        double m_pk = std::max(std::pow(m_k, pm), std::pow(m_k, pp));
        ModulusEstimate beta = alpha_beta_estimate(family_k, p_k, Modulus::Beta);
        best = beta.best_member;
        auto exps_k = sobolev_exponents(p_k);
        num_best = integrate(pow_field(family_k[best], exps_k.p_lower_star));
        std::vector<double> shift = half_space_shift(family_k[best].grid());
        eta_best = eta_moment(family_k[best], p_k, &shift);
        double bl2 = branch_max(2.0 * chain.c2 * m_pk, 1.0 / pm, 1.0 / pp);
        term_c2 = (2.0 * n * (n - 1.0) / ((n - pp) * (n - pp))) * bl2 * eta_best.bound;
        b_eff = n * num_best - term_c2;
        if (term_c2 <= (n / 2.0) * num_best) break;
        if (++doublings > options.max_k_doublings)
            fail(ErrorCode::ConstantChainFailure, "trace smallness condition unreachable by rescaling");
        k_eff *= 2.0;
        p_k = ExponentField(dilate_field(p.field(), k_eff), p.ambient_dim());
        ExponentField pstar_k = lift_exponent(dilate_field(exps.p_star, k_eff));
        ScalarField fd = dilate_field(f1, k_eff);
        f2 = gridlab::scale_field(fd, 1.0 / luxemburg_norm(fd, pstar_k).value);
        family_k = dilate_family(g_family, p_k, k_eff);
    }
    if (!(b_eff > 0.0))
        fail(ErrorCode::ConstantChainFailure, "trace chain constant B is not positive");

    auto exps_k = sobolev_exponents(p_k);
    double m_k = std::pow(k_eff, n / s - 1.0) * m;
    double m_pk = std::max(std::pow(m_k, pm), std::pow(m_k, pp));

    // boundary objects at the working scale
    ScalarField fb = gridlab::map_field(gridlab::boundary_restrict(f2),
                                        [](double v) { return std::abs(v); });
    ExponentField pb = lift_exponent(gridlab::boundary_restrict(exps_k.p_lower_star));
    double boundary_modular = modular(fb, pb);
    double boundary_norm = luxemburg_norm(fb, pb).value;

    double grad2 = grad_norm(f2, p_k);
    double t = grad2;  // ||f2||_{p*} = 1
    gridlab::SupportInfo supp2 = gridlab::support_info(f2);
    double ind2 = luxemburg_norm(supp2.indicator, conjugate_exponent(p_k)).value;
    double c1_log = log_c1(chain, supp2.diameter, ind2, grad2);
    double bl1 = branch_max(2.0 * c1_log * m_pk, 1.0 / pm, 1.0 / pp);
    double c1_term = (2.0 * n * (n - 1.0) / ((n - pp) * (n - pp))) * bl1 * eta_best.bound;
    double c2_term = (2.0 * (n - 1.0) * pp / (n - pp)) * grad2 * eta_best.bound;

    // achieving branches give the working exponent of ||grad f|| in the C1 term
    double base1 = chain.c_ns * supp2.diameter * ind2 * grad2;
    double tau_b = std::pow(base1, 1.0 / chain.tau_minus) >= std::pow(base1, 1.0 / chain.tau_plus)
                       ? chain.tau_minus
                       : chain.tau_plus;
    double p_b = std::pow(2.0 * c1_log * m_pk, 1.0 / pm) >= std::pow(2.0 * c1_log * m_pk, 1.0 / pp)
                     ? pm
                     : pp;
    double alpha_exp = 1.0 / (tau_b * p_b);
    double c1_coeff = t > 0.0 ? c1_term / std::pow(t, alpha_exp) : 0.0;
    double c2_coeff = t > 0.0 ? c2_term / t : 0.0;

    std::string dig = digest({boundary_modular, grad2, b_eff, k_eff, m, eta_best.moment});

    TraceResult result;
    result.k_effective = k_eff;

    result.casi_traza.name = "trace/casi-traza";
    result.casi_traza.lhs = boundary_modular;
    result.casi_traza.rhs = c1_term + c2_term - b_eff;
    result.casi_traza.tolerance = options.tolerance;
    result.casi_traza.inputs_digest = dig;
    result.casi_traza.constants = {{"c1_coeff", c1_coeff}, {"c2_coeff", c2_coeff},
                                   {"B", b_eff},           {"alpha_exp", alpha_exp},
                                   {"eta_moment", eta_best.moment},
                                   {"term_C2", term_c2},   {"beta_numerator", n * num_best}};

    double h_sup = h_bound(c1_coeff, c2_coeff, b_eff, alpha_exp, q);
    result.h_supremum = h_sup;
    double rhs_modular = h_sup * std::pow(t, q);
    double rhs_norm = rhs_modular <= 0.0
                          ? 0.0
                          : branch_max(rhs_modular, 1.0 / exps.p_lower_star_minus,
                                       1.0 / exps.p_lower_star_plus);

    result.final_report.name = "trace/final";
    result.final_report.lhs = boundary_norm;
    result.final_report.rhs = rhs_norm;
    result.final_report.tolerance = options.tolerance;
    result.final_report.inputs_digest = dig;
    result.final_report.constants = {{"h_supremum", h_sup},
                                     {"q", q},
                                     {"t_grad_norm", t},
                                     {"C_effective", t > 0.0 ? rhs_norm / t : 0.0},
                                     {"k_effective", k_eff},
                                     {"B", b_eff},
                                     {"boundary_modular", boundary_modular}};

    if (options.with_transport) {
        transport::DiscreteMeasure mu = transport::density_from_function(f2, p_k, true);
        transport::DiscreteMeasure nu =
            transport::density_from_function(family_k[best], p_k, true);
        transport::TransportPlan plan = transport::solve_ot(mu, nu, options.ot);
        transport::BrenierApprox brenier = transport::barycentric_map(plan);

        // grad(phi) stays in the half-space, so T . e <= 0 at every mapped node
        double worst_sign = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < mu.atoms(); ++a) {
            if (!brenier.defined[a]) continue;
            worst_sign = std::max(worst_sign, -brenier.image(a, axis));
        }
        InequalityReport sign;
        sign.name = "trace/boundary-sign";
        sign.lhs = worst_sign;
        sign.rhs = 0.0;
        sign.tolerance = options.tolerance + plan.duality_gap;
        sign.inputs_digest = dig;
        result.boundary_sign = sign;

        // shifted-eta key estimate with measured norms
        double norm_log2 = log_weight_norm(f2, p_k).value;
        double d_meas = ((n - 1.0) / (n - pp)) *
                        ((2.0 / (n - pp)) * norm_log2 + (2.0 * pp / n) * grad2) * eta_best.bound;
        InequalityReport key;
        key.name = "trace/key-estimate";
        key.lhs = boundary_modular;
        key.rhs = n * d_meas - n * num_best;
        key.tolerance = options.tolerance + plan.duality_gap;
        key.inputs_digest = dig;
        key.constants = {{"eta_moment_shifted", eta_best.moment}, {"norm_log_weight", norm_log2}};
        result.key_estimate = key;

        // boundary-corrected midpoint: int g^{p_*} + (1/n) int_bdry f^{p_*}
        //   <= -(1/n) int grad(f^{p_*}) . (T - e)
        ScalarField w = pow_field(f2, exps_k.p_lower_star);
        gridlab::VectorField grad_w = gradient_fd(w);
        std::vector<double> e = half_space_shift(f2.grid());
        double rhs_mid = 0.0;
        const double vol = f2.grid().cell_volume();
        for (std::size_t a = 0; a < mu.atoms(); ++a) {
            if (!brenier.defined[a]) continue;
            std::size_t node = mu.node_index[a];
            double dot = 0.0;
            for (int d = 0; d < f2.grid().dim(); ++d)
                dot += grad_w.component(node, d) * (brenier.image(a, d) - e[d]);
            rhs_mid += dot;
        }
        rhs_mid *= -vol / n;
        InequalityReport mid;
        mid.name = "trace/midpoint";
        mid.lhs = num_best + boundary_modular / n;
        mid.rhs = rhs_mid;
        // same O(h) budget as the whole-space midpoint check: the underlying
        // AM-GM step can be an equality in the continuum
        double h_max = 0.0;
        for (int a = 0; a < f2.grid().dim(); ++a) h_max = std::max(h_max, f2.grid().spacing(a));
        double disc_budget = h_max * std::max(mid.lhs, std::abs(mid.rhs));
        mid.constants = {{"discretization_budget", disc_budget}};
        mid.tolerance = options.tolerance + plan.duality_gap + disc_budget;
        mid.inputs_digest = dig;
        result.midpoint = mid;
    }
    return result;
}

double h_bound(double c1, double c2, double b, double alpha_exp, double q) {
    if (!(b > 0.0)) fail(ErrorCode::UnboundedH, "h is unbounded above unless B > 0");
    if (!(q > 1.0)) fail(ErrorCode::InvalidArgument, "h_bound requires q > 1");
    if (c1 != 0.0 && !(q > alpha_exp && alpha_exp > 0.0))
        fail(ErrorCode::InvalidArgument, "h_bound requires q > alpha > 0 when C1 > 0");
    if (c2 < 0.0 || c1 < 0.0) fail(ErrorCode::InvalidArgument, "h_bound requires C1, C2 >= 0");

    auto h = [&](double t) {
        return (c1 * std::pow(t, alpha_exp) + c2 * t - b) * std::pow(t, -q);
    };
    // log grid scan, then golden-section refinement around the best point
    const int grid_points = 4000;
    double best_t = 1.0, best_h = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= grid_points; ++i) {
        double t = std::pow(10.0, -9.0 + 18.0 * i / grid_points);
        double v = h(t);
        if (v > best_h) {
            best_h = v;
            best_t = t;
        }
    }
    double lo = best_t / std::pow(10.0, 18.0 / grid_points);
    double hi = best_t * std::pow(10.0, 18.0 / grid_points);
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, d = hi;
    double x1 = d - phi * (d - a), x2 = a + phi * (d - a);
    double f1 = h(x1), f2 = h(x2);
    for (int it = 0; it < 200 && (d - a) > 1e-14 * std::max(1.0, std::abs(best_t)); ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (d - a);
            f2 = h(x2);
        } else {
            d = x2;
            x2 = x1;
            f2 = f1;
            x1 = d - phi * (d - a);
            f1 = h(x1);
        }
    }
    return std::max(best_h, std::max(f1, f2));
}

}  // namespace vex::ineq
