#pragma once

#include <vector>

#include "ambicon/model.hpp"

namespace ambicon {

/// clip(z / k, 0, a_max): the agent's optimal constant effort against slope z.
double agent_best_response(double z, const RiskProfile& profile);

/// Fixed-scenario utility terms for a class-Q contract under constant effort a
/// and constant variances alpha_p (principal side) / alpha_a (agent side):
///   gamma_p = -exp(R_P (delta - (1-z) a T + (R_P (1-z)^2/2 + gamma/2) alpha_p T))
///   gamma_a = -exp(R_A (T k(a) - z a T - delta + (R_A z^2/2 - gamma/2) alpha_a T))
///   f       = gamma_p + rho * gamma_a
struct UtilityTerms {
    double gamma_p = 0.0;
    double gamma_a = 0.0;
    double f = 0.0;
    bool saturated = false;
};

UtilityTerms f_eval(double effort, const LinearQuadraticContract& contract,
                    double alpha_p, double alpha_a, double rho,
                    const RiskProfile& profile);

/// Unique maximizer of delta -> f_eval(...).f at fixed (a, z, gamma, alphas).
double delta_star(double effort, double z, double gamma, double alpha_p,
                  double alpha_a, double rho, const RiskProfile& profile);

/// Value of f at the optimal transfer, in closed form:
/// g_eval(...) == f_eval(..., delta_star(...)).f.
struct GEval {
    double value = 0.0;
    bool saturated = false;
};

GEval g_eval(double effort, double z, double gamma, double alpha_p,
             double alpha_a, double rho, const RiskProfile& profile);

/// Which band endpoint attains the worst case, or Any when the utility is
/// flat across the band (boundary gamma).
enum class WorstAlphaKind { Lower, Upper, Any };

struct WorstCaseQ {
    double u_p = 0.0;  // inf over principal scenarios of the principal utility
    double u_a = 0.0;  // inf over agent scenarios of the agent utility
    WorstAlphaKind p_kind = WorstAlphaKind::Upper;
    WorstAlphaKind a_kind = WorstAlphaKind::Upper;
    double alpha_p = 0.0;  // an attaining variance (band.hi when Any)
    double alpha_a = 0.0;
};

/// Worst-case utilities of a Q contract at constant effort.  The infimum over
/// variance scenarios sits at a band endpoint determined by the sign of
/// gamma + R_P (1-z)^2 (principal) and gamma - R_A z^2 (agent); on the
/// boundary the utility is flat and every alpha attains it.
WorstCaseQ worst_case_utilities_q(const LinearQuadraticContract& contract,
                                  double effort, const AmbiguityBand& band_a,
                                  const AmbiguityBand& band_p,
                                  const RiskProfile& profile);

/// First-best solution: the optimal contract family at fixed z* with a gamma
/// range [gamma_lo, gamma_hi] (possibly a half-line) and transfer
/// delta(gamma) linear in gamma.
struct FbSolution {
    FbRegime regime = FbRegime::Interior;
    double effort = 0.0;   // argmin of k(a) - a, clipped to the cap
    double z_star = 0.0;   // R_P / (R_A + R_P)
    double gamma_lo = 0.0;
    double gamma_hi = 0.0;
    LinearQuadraticContract representative;
    double principal_value = 0.0;
    double lagrange_log_term = 0.0;  // (1/(R_A+R_P)) log(rho R_A / R_P)
    double alpha_bar = 0.0;          // variance level pinning the value
    bool capped_effort = false;

    /// Transfer delivering exact participation for any gamma in the range.
    double delta_for_gamma(double gamma, const RiskProfile& profile) const;
};

/// Closed-form first-best solution for a non-degenerate band pair.
/// Throws SolverError("DegenerateRegime") for disjoint bands.
FbSolution solve_first_best(const RiskProfile& profile,
                            const AmbiguityBand& band_a,
                            const AmbiguityBand& band_p);

/// Lagrange multiplier consistent with lagrange_log_term.
double fb_rho(const FbSolution& fb, const RiskProfile& profile);

/// n-th element of the quadratic-variation-loaded contract sequence that
/// drives the principal's first-best value to 0 when the bands are disjoint.
struct DegenerateSequenceItem {
    int n = 0;
    LinearQuadraticContract contract;
    double principal_value = 0.0;
    double agent_value = 0.0;  // worst-case agent utility, exactly R
};

/// Throws SolverError("NotDegenerate") unless the regime is degenerate.
std::vector<DegenerateSequenceItem> degenerate_fb_sequence(
    const RiskProfile& profile, const AmbiguityBand& band_a,
    const AmbiguityBand& band_p, const std::vector<int>& n_list);

/// Reduced second-best Hamiltonian
///   H = a*(z) - k(a*(z)) - (alpha/2)(R_A z^2 + R_P (1-z)^2)
///       - (alpha/2) gamma + min over band_a of (atilde/2) gamma.
double h_eval(double alpha, double z, double gamma, const AmbiguityBand& band_a,
              const RiskProfile& profile);

/// Maximizer of z -> h_eval(alpha, z, 0): (1 + k alpha R_P) / (1 + alpha k (R_A + R_P)).
double z_star_sb(double alpha, const RiskProfile& profile);

struct SbSolution {
    SbRegime regime = SbRegime::PrincipalTopInAgentBand;
    double z_star = 0.0;
    double gamma_star = 0.0;  // slope on realized quadratic variation in the
                              // agent-facing contract dynamics
    double y0 = 0.0;          // = reservation_cert
    double effort = 0.0;      // a*(z_star)
    double principal_value = 0.0;
    double worst_alpha = 0.0;
};

SbSolution solve_second_best(const RiskProfile& profile,
                             const AmbiguityBand& band_a,
                             const AmbiguityBand& band_p);

/// Lower bound -exp(-R_P n + R_P^2 T M / 2) on the n-th degenerate-regime
/// second-best contract value; strictly increasing to 0 in n.
double sb_degenerate_bound(int n, const RiskProfile& profile, double bound_m);

/// Under a constant-variance scenario the second-best contract (slope z on
/// output, slope gamma_hat on realized variance in its dynamics, initial
/// certainty equivalent y0) collapses to a Q contract:
///   z_q     = z
///   gamma_q = gamma_hat + R_A z^2
///   delta_q = y0 + T (k(a*(z)) - z a*(z) - min over band_a of (atilde/2) gamma_hat)
LinearQuadraticContract sb_contract_as_q(double z, double gamma_hat, double y0,
                                         const AmbiguityBand& band_a,
                                         const RiskProfile& profile);

}  // namespace ambicon
