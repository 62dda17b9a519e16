#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ambicon/analytic.hpp"
#include "ambicon/hjbi.hpp"
#include "ambicon/model.hpp"
#include "ambicon/montecarlo.hpp"

namespace ambicon {

/// One comparison line inside a report.
struct CheckItem {
    std::string metric;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct CrossCheckReport {
    std::string case_id;
    double closed_form = 0.0;
    std::optional<double> pde_value;
    std::optional<UtilityEstimate> mc_value;
    std::vector<double> rel_errors;
    std::vector<CheckItem> items;
    std::vector<std::string> notes;
    bool pass = false;
    long runtime_ms = 0;
};

struct McSpec {
    std::uint64_t n_paths = 1'000'000;
    std::uint64_t seed = 42;
    int grid_n = 101;
};

/// Comparison tolerances, owned here so acceptance thresholds are auditable
/// in one place.
struct Tolerances {
    double pde_rel = 0.01;
    double mc_se_mult = 3.5;
    double participation_rel = 1e-9;
    double closed_form_rel = 1e-12;
};

/// Closed form vs PDE vs Monte Carlo for the second-best problem.  Degenerate
/// band pairs skip the PDE (no common band) and check that the n = 20
/// sequence contract already earns more than -1e-6.
CrossCheckReport crosscheck_second_best(const RiskProfile& profile,
                                        const AmbiguityBand& band_a,
                                        const AmbiguityBand& band_p,
                                        const PdeGrid& grid, const McSpec& mc,
                                        const Tolerances& tol = {});

/// Closed form vs Monte Carlo for the first-best problem, plus the
/// directional-derivative optimality check and participation equality.
/// Degenerate band pairs verify the contract sequence instead.
CrossCheckReport crosscheck_first_best(const RiskProfile& profile,
                                       const AmbiguityBand& band_a,
                                       const AmbiguityBand& band_p,
                                       const McSpec& mc,
                                       const Tolerances& tol = {});

/// Random contract perturbations around the optima must never beat them:
/// first-best via the worst-case closed forms with the calibrated multiplier,
/// second-best via Monte Carlo on participation-preserving (z, gamma)
/// perturbations.
CrossCheckReport dominance_scan(const RiskProfile& profile,
                                const AmbiguityBand& band_a,
                                const AmbiguityBand& band_p,
                                int n_perturbations, std::uint64_t seed,
                                const Tolerances& tol = {});

/// Serialization for CLI and acceptance artifacts.
std::string reports_to_json(const std::vector<CrossCheckReport>& reports);
std::string reports_to_csv(const std::vector<CrossCheckReport>& reports);

}  // namespace ambicon
