#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ambicon {

/// Error with a stable machine-readable code naming the violated invariant.
class CodedError : public std::runtime_error {
public:
    CodedError(std::string code, const std::string& detail)
        : std::runtime_error(code + ": " + detail), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// Invalid user input (bad parameters, malformed configs).
class ValidationError : public CodedError {
public:
    using CodedError::CodedError;
};

/// Failure inside a solver (CFL violation, empty band intersection, ...).
class SolverError : public CodedError {
public:
    using CodedError::CodedError;
};

/// Preferences, technology and horizon of the contracting pair.
///
/// Both parties have exponential utility, U(x) = -exp(-R x), with risk
/// aversions r_agent and r_principal.  Effort costs cost_coeff * a^2 / 2 per
/// unit time and is capped at effort_cap.  reservation is the agent's outside
/// option (a negative utility level); reservation_cert is its certainty
/// equivalent, always derived, never user supplied.
struct RiskProfile {
    double r_agent = 1.0;
    double r_principal = 1.0;
    double cost_coeff = 1.0;
    double effort_cap = 2.0;
    double horizon = 1.0;
    double reservation = -1.0;
    double reservation_cert = 0.0;

    double cost(double a) const { return 0.5 * cost_coeff * a * a; }
};

/// Builds a profile, deriving reservation_cert = -ln(-reservation)/r_agent.
/// Throws ValidationError on sign violations.
RiskProfile make_profile(double r_agent, double r_principal, double cost_coeff,
                         double effort_cap, double horizon, double reservation);

/// Closed interval [lo, hi] of admissible instantaneous variances for one party.
struct AmbiguityBand {
    double lo = 1.0;
    double hi = 1.0;

    bool contains(double a) const { return lo <= a && a <= hi; }
};

/// Contract paying z*B_T + (gamma/2)*<B>_T + delta at the horizon.
struct LinearQuadraticContract {
    double z = 0.0;
    double gamma = 0.0;
    double delta = 0.0;
};

/// Band geometry cases of the first-best solution (A = agent band, P =
/// principal band):
///   DegenerateLow   P.hi < A.lo          DegenerateHigh  A.hi < P.lo
///   BoundaryPA      A.lo = P.hi          Interior        A.lo < P.hi < A.hi
///   BoundaryTops    A.hi = P.hi          BoundaryAP      P.lo = A.hi
///   InteriorRev     P.lo < A.hi < P.hi
enum class FbRegime {
    DegenerateLow,
    DegenerateHigh,
    BoundaryPA,
    Interior,
    BoundaryTops,
    BoundaryAP,
    InteriorRev,
};

/// Band geometry cases of the second-best solution.
enum class SbRegime {
    PrincipalTopInAgentBand,  // A.lo <= P.hi <= A.hi
    AgentTopInPrincipalBand,  // P.lo <= A.hi <  P.hi
    Degenerate,               // disjoint bands
};

std::string to_string(FbRegime r);
std::string to_string(SbRegime r);

/// Classifies the band pair.  Equalities within tol map to the dedicated
/// boundary regimes; classification is total and mutually exclusive.
FbRegime classify_fb(const AmbiguityBand& band_a, const AmbiguityBand& band_p,
                     double tol = 0.0);
SbRegime classify_sb(const AmbiguityBand& band_a, const AmbiguityBand& band_p,
                     double tol = 0.0);

struct ValidatedModel {
    RiskProfile profile;
    AmbiguityBand band_a;
    AmbiguityBand band_p;
    FbRegime fb_regime;
    SbRegime sb_regime;
    std::vector<std::string> warnings;
};

/// Checks sign constraints, derives the classification, and collects
/// warnings (e.g. effort cap below the unconstrained optimizer 1/k).
/// Degenerate band pairs are accepted; they route to the sequence APIs.
ValidatedModel validate(const RiskProfile& profile, const AmbiguityBand& band_a,
                        const AmbiguityBand& band_p, double tol = 0.0);

/// State-dependent ambiguity bands sampled on a rectangular (t, x) grid,
/// row-major with x fastest.  Lookup is nearest-node.
struct MarkovAmbiguityField {
    std::vector<double> t_grid;
    std::vector<double> x_grid;
    std::vector<double> a_lo, a_hi;  // agent band bounds at each node
    std::vector<double> p_lo, p_hi;  // principal band bounds at each node

    static MarkovAmbiguityField constant(const AmbiguityBand& band_a,
                                         const AmbiguityBand& band_p,
                                         double horizon, double x_min,
                                         double x_max);

    std::size_t index(std::size_t it, std::size_t ix) const {
        return it * x_grid.size() + ix;
    }
    AmbiguityBand agent_band(double t, double x) const;
    AmbiguityBand principal_band(double t, double x) const;
    /// Bound M: the largest admissible principal variance anywhere.
    double max_principal_variance() const;
    /// Throws ValidationError on bad ordering or empty intersections.
    void check() const;

private:
    std::size_t nearest_t(double t) const;
    std::size_t nearest_x(double x) const;
};

}  // namespace ambicon
