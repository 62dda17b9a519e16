#include "ambicon/analytic.hpp"

#include <cmath>
#include <limits>

#include "ambicon/numeric.hpp"

namespace ambicon {

double agent_best_response(double z, const RiskProfile& profile) {
    return clip(z / profile.cost_coeff, 0.0, profile.effort_cap);
}

UtilityTerms f_eval(double effort, const LinearQuadraticContract& c,
                    double alpha_p, double alpha_a, double rho,
                    const RiskProfile& pr) {
    const double ra = pr.r_agent, rp = pr.r_principal, t = pr.horizon;
    const double omz = 1.0 - c.z;
    UtilityTerms out;
    double ep = rp * (c.delta - omz * effort * t +
                      (0.5 * rp * omz * omz + 0.5 * c.gamma) * alpha_p * t);
    double ea = ra * (t * pr.cost(effort) - c.z * effort * t - c.delta +
                      (0.5 * ra * c.z * c.z - 0.5 * c.gamma) * alpha_a * t);
    out.gamma_p = -safe_exp(ep, &out.saturated);
    out.gamma_a = -safe_exp(ea, &out.saturated);
    out.f = out.gamma_p + rho * out.gamma_a;
    return out;
}

double delta_star(double effort, double z, double gamma, double alpha_p,
                  double alpha_a, double rho, const RiskProfile& pr) {
    const double ra = pr.r_agent, rp = pr.r_principal, t = pr.horizon;
    const double omz = 1.0 - z;
    return (std::log(rho * ra / rp) +
            ((rp * omz - ra * z) * effort + ra * pr.cost(effort)) * t -
            0.5 * rp * (rp * omz * omz + gamma) * alpha_p * t +
            0.5 * ra * (ra * z * z - gamma) * alpha_a * t) /
           (ra + rp);
}

GEval g_eval(double effort, double z, double gamma, double alpha_p,
             double alpha_a, double rho, const RiskProfile& pr) {
    const double ra = pr.r_agent, rp = pr.r_principal, t = pr.horizon;
    const double omz = 1.0 - z;
    const double s = ra + rp;
    GEval out;
    double exponent = (ra * rp / s) *
                      ((pr.cost(effort) - effort) * t +
                       0.5 * gamma * t * (alpha_p - alpha_a) +
                       0.5 * t * (alpha_p * rp * omz * omz + alpha_a * ra * z * z));
    double prefactor = std::pow(rho, rp / s) * (s / rp) *
                       std::pow(ra / rp, -ra / s);
    out.value = -prefactor * safe_exp(exponent, &out.saturated);
    return out;
}

WorstCaseQ worst_case_utilities_q(const LinearQuadraticContract& c,
                                  double effort, const AmbiguityBand& band_a,
                                  const AmbiguityBand& band_p,
                                  const RiskProfile& pr) {
    const double ra = pr.r_agent, rp = pr.r_principal;
    const double omz = 1.0 - c.z;
    WorstCaseQ out;

    // Principal-side exponent grows with alpha_p iff gamma > -R_P (1-z)^2.
    const double p_threshold = -rp * omz * omz;
    if (c.gamma < p_threshold) {
        out.p_kind = WorstAlphaKind::Lower;
        out.alpha_p = band_p.lo;
    } else if (c.gamma > p_threshold) {
        out.p_kind = WorstAlphaKind::Upper;
        out.alpha_p = band_p.hi;
    } else {
        out.p_kind = WorstAlphaKind::Any;
        out.alpha_p = band_p.hi;
    }

    // Agent-side exponent grows with alpha_a iff gamma < R_A z^2.
    const double a_threshold = ra * c.z * c.z;
    if (c.gamma < a_threshold) {
        out.a_kind = WorstAlphaKind::Upper;
        out.alpha_a = band_a.hi;
    } else if (c.gamma > a_threshold) {
        out.a_kind = WorstAlphaKind::Lower;
        out.alpha_a = band_a.lo;
    } else {
        out.a_kind = WorstAlphaKind::Any;
        out.alpha_a = band_a.hi;
    }

    UtilityTerms terms = f_eval(effort, c, out.alpha_p, out.alpha_a, 1.0, pr);
    out.u_p = terms.gamma_p;
    out.u_a = terms.gamma_a;
    return out;
}

double FbSolution::delta_for_gamma(double gamma, const RiskProfile& pr) const {
    const double ra = pr.r_agent, rp = pr.r_principal, t = pr.horizon;
    const double s = ra + rp;
    return t * pr.cost(effort) - z_star * t * effort +
           0.5 * alpha_bar * t * (ra * rp * rp / (s * s) - gamma) +
           pr.reservation_cert;
}

FbSolution solve_first_best(const RiskProfile& profile,
                            const AmbiguityBand& band_a,
                            const AmbiguityBand& band_p) {
    const ValidatedModel m = validate(profile, band_a, band_p);
    const RiskProfile& pr = m.profile;
    if (m.fb_regime == FbRegime::DegenerateLow ||
        m.fb_regime == FbRegime::DegenerateHigh) {
        throw SolverError("DegenerateRegime",
                          "disjoint bands; use degenerate_fb_sequence");
    }
    const double ra = pr.r_agent, rp = pr.r_principal, t = pr.horizon;
    const double s = ra + rp;
    const double inf = std::numeric_limits<double>::infinity();

    FbSolution fb;
    fb.regime = m.fb_regime;
    fb.effort = clip(1.0 / pr.cost_coeff, 0.0, pr.effort_cap);
    fb.capped_effort = fb.effort < 1.0 / pr.cost_coeff;
    fb.z_star = rp / s;

    const double omz = 1.0 - fb.z_star;
    const double gamma_agent = ra * fb.z_star * fb.z_star;
    const double gamma_principal = -rp * omz * omz;

    switch (fb.regime) {
        case FbRegime::BoundaryPA:
            fb.alpha_bar = band_p.hi;
            fb.gamma_lo = gamma_agent;
            fb.gamma_hi = inf;
            break;
        case FbRegime::Interior:
            fb.alpha_bar = band_p.hi;
            fb.gamma_lo = fb.gamma_hi = gamma_agent;
            break;
        case FbRegime::BoundaryTops:
            fb.alpha_bar = band_p.hi;
            fb.gamma_lo = gamma_principal;
            fb.gamma_hi = gamma_agent;
            break;
        case FbRegime::BoundaryAP:
            fb.alpha_bar = band_a.hi;
            fb.gamma_lo = -inf;
            fb.gamma_hi = gamma_principal;
            break;
        case FbRegime::InteriorRev:
            fb.alpha_bar = band_a.hi;
            fb.gamma_lo = fb.gamma_hi = gamma_principal;
            break;
        default:
            break;  // unreachable
    }

    // Representative gamma: the finite range endpoint whose transfer is
    // smallest in magnitude (deterministic output for tests).
    double gamma_rep;
    if (std::isinf(fb.gamma_hi)) {
        gamma_rep = fb.gamma_lo;
    } else if (std::isinf(fb.gamma_lo)) {
        gamma_rep = fb.gamma_hi;
    } else {
        double d_lo = fb.delta_for_gamma(fb.gamma_lo, pr);
        double d_hi = fb.delta_for_gamma(fb.gamma_hi, pr);
        gamma_rep = std::abs(d_hi) <= std::abs(d_lo) ? fb.gamma_hi : fb.gamma_lo;
    }
    fb.representative = {fb.z_star, gamma_rep, fb.delta_for_gamma(gamma_rep, pr)};

    bool sat = false;
    fb.principal_value =
        -safe_exp(rp * pr.reservation_cert +
                      rp * t * (pr.cost(fb.effort) - fb.effort +
                                0.5 * fb.alpha_bar * ra * rp / s),
                  &sat);
    fb.lagrange_log_term =
        pr.reservation_cert +
        (rp / s) * t *
            (pr.cost(fb.effort) - fb.effort + 0.5 * fb.alpha_bar * ra * rp / s);
    return fb;
}

double fb_rho(const FbSolution& fb, const RiskProfile& pr) {
    return (pr.r_principal / pr.r_agent) *
           std::exp((pr.r_agent + pr.r_principal) * fb.lagrange_log_term);
}

std::vector<DegenerateSequenceItem> degenerate_fb_sequence(
    const RiskProfile& profile, const AmbiguityBand& band_a,
    const AmbiguityBand& band_p, const std::vector<int>& n_list) {
    const ValidatedModel m = validate(profile, band_a, band_p);
    const RiskProfile& pr = m.profile;
    if (m.fb_regime != FbRegime::DegenerateLow &&
        m.fb_regime != FbRegime::DegenerateHigh) {
        throw SolverError("NotDegenerate",
                          "bands intersect; use solve_first_best");
    }
    const double rp = pr.r_principal, t = pr.horizon;
    const double a_max = pr.effort_cap;
    const double delta0 = t * pr.cost(a_max) + pr.reservation_cert;

    std::vector<DegenerateSequenceItem> items;
    items.reserve(n_list.size());
    for (int n : n_list) {
        if (n <= 0) {
            throw ValidationError("NonPositiveParameter",
                                  "sequence index must be >= 1");
        }
        DegenerateSequenceItem it;
        it.n = n;
        bool sat = false;
        if (m.fb_regime == FbRegime::DegenerateLow) {
            // Load +n/2 on realized variance; the worst principal scenario
            // sits at band_p.hi, the worst agent scenario at band_a.lo.
            it.contract = {0.0, static_cast<double>(n),
                           delta0 - 0.5 * t * n * band_a.lo};
            it.principal_value =
                -safe_exp(-rp * (a_max * t - delta0 +
                                 0.5 * t * n * (band_a.lo - band_p.hi) -
                                 0.5 * rp * t * band_p.hi),
                          &sat);
        } else {
            // Mirror case: -n/2 on realized variance.
            it.contract = {0.0, static_cast<double>(-n),
                           delta0 + 0.5 * t * n * band_a.hi};
            it.principal_value =
                -safe_exp(-rp * (a_max * t - delta0 +
                                 0.5 * t * n * (band_p.lo - band_a.hi) -
                                 0.5 * rp * t * band_p.lo),
                          &sat);
        }
        it.agent_value = pr.reservation;
        items.push_back(it);
    }
    return items;
}

double h_eval(double alpha, double z, double gamma, const AmbiguityBand& band_a,
              const RiskProfile& pr) {
    const double ra = pr.r_agent, rp = pr.r_principal;
    const double a = agent_best_response(z, pr);
    const double omz = 1.0 - z;
    double min_term = 0.5 * (gamma >= 0.0 ? band_a.lo : band_a.hi) * gamma;
    return a - pr.cost(a) - 0.5 * alpha * (ra * z * z + rp * omz * omz) -
           0.5 * alpha * gamma + min_term;
}

double z_star_sb(double alpha, const RiskProfile& pr) {
    const double k = pr.cost_coeff;
    return (1.0 + k * alpha * pr.r_principal) /
           (1.0 + alpha * k * (pr.r_agent + pr.r_principal));
}

SbSolution solve_second_best(const RiskProfile& profile,
                             const AmbiguityBand& band_a,
                             const AmbiguityBand& band_p) {
    const ValidatedModel m = validate(profile, band_a, band_p);
    const RiskProfile& pr = m.profile;
    const double rp = pr.r_principal, t = pr.horizon;

    SbSolution sb;
    sb.regime = m.sb_regime;
    sb.y0 = pr.reservation_cert;

    if (sb.regime == SbRegime::Degenerate) {
        sb.z_star = 0.0;
        sb.gamma_star = 0.0;
        sb.effort = 0.0;
        sb.worst_alpha = 0.0;
        sb.principal_value = 0.0;
        return sb;
    }

    if (sb.regime == SbRegime::PrincipalTopInAgentBand) {
        sb.worst_alpha = band_p.hi;
        sb.z_star = z_star_sb(sb.worst_alpha, pr);
        sb.gamma_star = 0.0;
    } else {
        sb.worst_alpha = band_a.hi;
        sb.z_star = z_star_sb(sb.worst_alpha, pr);
        const double omz = 1.0 - sb.z_star;
        sb.gamma_star =
            -pr.r_agent * sb.z_star * sb.z_star - rp * omz * omz;
    }
    sb.effort = agent_best_response(sb.z_star, pr);
    double h = h_eval(sb.worst_alpha, sb.z_star, sb.gamma_star, band_a, pr);
    bool sat = false;
    sb.principal_value = -safe_exp(-rp * (t * h - pr.reservation_cert), &sat);
    return sb;
}

double sb_degenerate_bound(int n, const RiskProfile& pr, double bound_m) {
    if (n < 0) {
        throw ValidationError("NonPositiveParameter",
                              "sequence index must be >= 0");
    }
    if (!(bound_m > 0.0)) {
        throw ValidationError("NonPositiveParameter", "bound_m must be > 0");
    }
    const double rp = pr.r_principal;
    bool sat = false;
    return -safe_exp(-rp * n + 0.5 * rp * rp * pr.horizon * bound_m, &sat);
}

LinearQuadraticContract sb_contract_as_q(double z, double gamma_hat, double y0,
                                         const AmbiguityBand& band_a,
                                         const RiskProfile& pr) {
    const double a = agent_best_response(z, pr);
    double min_term = 0.5 * (gamma_hat >= 0.0 ? band_a.lo : band_a.hi) * gamma_hat;
    LinearQuadraticContract q;
    q.z = z;
    q.gamma = gamma_hat + pr.r_agent * z * z;
    q.delta = y0 + pr.horizon * (pr.cost(a) - z * a - min_term);
    return q;
}

}  // namespace ambicon
