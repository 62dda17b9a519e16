#pragma once

#include <cstdint>
#include <vector>

#include "ambicon/analytic.hpp"
#include "ambicon/model.hpp"

namespace ambicon {

/// One constant-parameter simulation setup.
struct Scenario {
    double alpha = 1.0;          // instantaneous variance
    double effort = 0.0;         // constant drift control
    std::uint64_t n_paths = 1'000'000;
    std::uint64_t seed = 42;
};

struct TerminalSample {
    double b_t = 0.0;             // terminal output, Normal(aT, alpha T)
    double qv_t = 0.0;            // realized quadratic variation, = alpha T
    double effort_integral = 0.0; // a T
    double cost_integral = 0.0;   // T k(a)
};

struct UtilityEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::uint64_t n = 0;
};

/// Counter-based standard normal draw: a pure function of (seed, index), so
/// streams can be chunked in any order, on any worker count, with identical
/// results.
double normal_at(std::uint64_t seed, std::uint64_t index);

struct McOptions {
    bool antithetic = true;
    bool euler_paths = false;  // exploratory path mode; exact sampling default
    int euler_steps = 256;
    int n_workers = 0;  // 0: use AMBICON_THREADS or hardware concurrency
};

/// Exact Gaussian terminal sampling, B_T = aT + sqrt(alpha T) N(0,1).
std::vector<TerminalSample> sample_terminal(const Scenario& scenario,
                                            const RiskProfile& profile,
                                            const McOptions& options = {});

/// Monte Carlo means of the two terminal utilities
///   u_p: -exp(-R_P (B_T - xi)),   u_a: -exp(-R_A (xi - T k(a)))
/// with xi = z B_T + (gamma/2) alpha T + delta.
struct UtilityPairEstimate {
    UtilityEstimate u_p;
    UtilityEstimate u_a;
};

UtilityPairEstimate estimate_utilities(const LinearQuadraticContract& contract,
                                       const Scenario& scenario,
                                       const RiskProfile& profile,
                                       const McOptions& options = {});

enum class Side { Principal, Agent };

struct ScanResult {
    double alpha_worst = 0.0;
    UtilityEstimate value;
};

/// Minimizes the fixed-alpha utility over a uniform grid on the band.  For Q
/// contracts the fixed-alpha value is available in closed form (no sampling
/// noise); pass use_closed_form = false to force the Monte Carlo path.
ScanResult worst_case_scan(const LinearQuadraticContract& contract,
                           double effort, const AmbiguityBand& band, Side side,
                           int grid_n, const Scenario& scenario_template,
                           const RiskProfile& profile,
                           bool use_closed_form = true,
                           const McOptions& options = {});

/// Perturbation direction for the first-order optimality check.
struct Direction {
    enum class Kind { Constant, TerminalOutput, Custom };
    Kind kind = Kind::Constant;
    double c = 1.0;                      // Constant payoff level
    LinearQuadraticContract functional;  // Custom: z' X_T + (g'/2) qv + d'
};

/// Monte Carlo estimate of the directional derivative of the risk-sharing
/// Lagrangian at (contract, effort):
///   E[ R_P h(X^P) e^{-R_P(aT + sqrt(alpha_p) B - xi(X^P))}
///      - rho R_A h(X^A) e^{-R_A(xi(X^A) - T k(a))} ]
/// with X^alpha = aT + sqrt(alpha) B, B ~ Normal(0, T), common draws on both
/// terms.  Zero at an optimum when alpha_p = alpha_a.
UtilityEstimate gateaux_residual(const LinearQuadraticContract& contract,
                                 const Direction& direction, double effort,
                                 double alpha_p, double alpha_a, double rho,
                                 const Scenario& scenario_template,
                                 const RiskProfile& profile,
                                 const McOptions& options = {});

}  // namespace ambicon
