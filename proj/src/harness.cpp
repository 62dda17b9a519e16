#include "ambicon/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace ambicon {

namespace {

using Clock = std::chrono::steady_clock;

long elapsed_ms(Clock::time_point start) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() -
                                                                 start)
        .count();
}

void add_item(CrossCheckReport& r, const std::string& metric, double value,
              double tolerance, bool pass) {
    r.items.push_back({metric, value, tolerance, pass});
}

void finish_report(CrossCheckReport& r, Clock::time_point start) {
    r.pass = true;
    for (const auto& it : r.items) r.pass = r.pass && it.pass;
    r.runtime_ms = elapsed_ms(start);
}

double rel_err(double got, double want) {
    double scale = std::max(std::abs(want), 1e-300);
    return std::abs(got - want) / scale;
}

/// Deterministic uniform in [0, 1) independent of the standard library's
/// distribution implementations.
double uniform_at(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t x = seed ^ (0x9E3779B97F4A7C15ULL * (index + 1));
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

CrossCheckReport crosscheck_second_best(const RiskProfile& profile,
                                        const AmbiguityBand& band_a,
                                        const AmbiguityBand& band_p,
                                        const PdeGrid& grid, const McSpec& mc,
                                        const Tolerances& tol) {
    auto start = Clock::now();
    ValidatedModel m = validate(profile, band_a, band_p);
    SbSolution sb = solve_second_best(m.profile, band_a, band_p);

    CrossCheckReport r;
    r.case_id = "second_best/" + to_string(sb.regime);
    r.closed_form = sb.principal_value;

    if (sb.regime == SbRegime::Degenerate) {
        r.notes.push_back("PDE skipped: EmptyIntersection (disjoint bands)");
        // The n = 20 sequence contract (constant payoff -n off the agent
        // support) already brings the principal within 1e-6 of the value 0.
        LinearQuadraticContract flat{0.0, 0.0, -20.0};
        Scenario sc{band_p.hi, 0.0, mc.n_paths, mc.seed};
        auto est = estimate_utilities(flat, sc, m.profile);
        r.mc_value = est.u_p;
        add_item(r, "mc_sequence_n20_above", est.u_p.mean, 1e-6,
                 est.u_p.mean > -1e-6);
        double bound = sb_degenerate_bound(20, m.profile,
                                           band_p.hi * profile.horizon > 0.0
                                               ? band_p.hi
                                               : 1.0);
        add_item(r, "sequence_bound_n20", bound, 0.0, bound < 0.0 && bound > -1.0);
        finish_report(r, start);
        return r;
    }

    MarkovAmbiguityField field = MarkovAmbiguityField::constant(
        band_a, band_p, m.profile.horizon, grid.x_min, grid.x_max);
    ValueSurface surf = solve_pde(field, m.profile, grid);
    r.pde_value = surf.principal_value;
    double e_pde = rel_err(surf.principal_value, sb.principal_value);
    r.rel_errors.push_back(e_pde);
    add_item(r, "pde_rel_error", e_pde, tol.pde_rel, e_pde <= tol.pde_rel);

    LinearQuadraticContract q =
        sb_contract_as_q(sb.z_star, sb.gamma_star, sb.y0, band_a, m.profile);
    Scenario sc{sb.worst_alpha, sb.effort, mc.n_paths, mc.seed};
    auto est = estimate_utilities(q, sc, m.profile);
    r.mc_value = est.u_p;
    double dev = std::abs(est.u_p.mean - sb.principal_value);
    double mc_tol = tol.mc_se_mult * est.u_p.std_error + 1e-12;
    r.rel_errors.push_back(rel_err(est.u_p.mean, sb.principal_value));
    add_item(r, "mc_abs_dev", dev, mc_tol, dev <= mc_tol);

    ScanResult agent_worst =
        worst_case_scan(q, sb.effort, band_a, Side::Agent, mc.grid_n, sc,
                        m.profile);
    double e_part = rel_err(agent_worst.value.mean, m.profile.reservation);
    add_item(r, "participation_rel_error", e_part, tol.participation_rel,
             e_part <= tol.participation_rel);

    finish_report(r, start);
    return r;
}

CrossCheckReport crosscheck_first_best(const RiskProfile& profile,
                                       const AmbiguityBand& band_a,
                                       const AmbiguityBand& band_p,
                                       const McSpec& mc, const Tolerances& tol) {
    auto start = Clock::now();
    ValidatedModel m = validate(profile, band_a, band_p);

    CrossCheckReport r;
    r.case_id = "first_best/" + to_string(m.fb_regime);

    if (m.fb_regime == FbRegime::DegenerateLow ||
        m.fb_regime == FbRegime::DegenerateHigh) {
        auto items = degenerate_fb_sequence(m.profile, band_a, band_p,
                                            {1, 5, 20});
        r.closed_form = 0.0;
        for (const auto& it : items) {
            WorstCaseQ wc = worst_case_utilities_q(
                it.contract, m.profile.effort_cap, band_a, band_p, m.profile);
            // Closed-form consistency between the sequence formula and the
            // generic worst-case evaluator.
            double e = rel_err(wc.u_p, it.principal_value);
            add_item(r, "sequence_value_consistency_n" + std::to_string(it.n),
                     e, 1e-9, e <= 1e-9);

            Scenario sc{wc.alpha_p, m.profile.effort_cap, mc.n_paths, mc.seed};
            auto est = estimate_utilities(it.contract, sc, m.profile);
            double dev = std::abs(est.u_p.mean - it.principal_value);
            double mc_tol = tol.mc_se_mult * est.u_p.std_error + 1e-12;
            add_item(r, "mc_abs_dev_n" + std::to_string(it.n), dev, mc_tol,
                     dev <= mc_tol);

            // Worst-case agent utility over the band equals the reservation
            // utility; off the worst endpoint the agent does weakly better.
            ScanResult agent = worst_case_scan(it.contract,
                                               m.profile.effort_cap, band_a,
                                               Side::Agent, mc.grid_n, sc,
                                               m.profile);
            double e_part = rel_err(agent.value.mean, m.profile.reservation);
            add_item(r, "participation_rel_error_n" + std::to_string(it.n),
                     e_part, tol.participation_rel,
                     e_part <= tol.participation_rel);
        }
        finish_report(r, start);
        return r;
    }

    FbSolution fb = solve_first_best(m.profile, band_a, band_p);
    r.closed_form = fb.principal_value;

    WorstCaseQ wc = worst_case_utilities_q(fb.representative, fb.effort,
                                           band_a, band_p, m.profile);
    Scenario sc{wc.alpha_p, fb.effort, mc.n_paths, mc.seed};
    auto est = estimate_utilities(fb.representative, sc, m.profile);
    r.mc_value = est.u_p;
    double dev = std::abs(est.u_p.mean - fb.principal_value);
    double mc_tol = tol.mc_se_mult * est.u_p.std_error + 1e-12;
    r.rel_errors.push_back(rel_err(est.u_p.mean, fb.principal_value));
    add_item(r, "mc_abs_dev", dev, mc_tol, dev <= mc_tol);

    double e_part = rel_err(wc.u_a, m.profile.reservation);
    add_item(r, "participation_rel_error", e_part, tol.participation_rel,
             e_part <= tol.participation_rel);

    // First-order optimality: both scenario infima can be taken at the same
    // variance level alpha_bar in every non-degenerate regime, where the
    // directional derivative must vanish.
    double rho = fb_rho(fb, m.profile);
    for (Direction dir : {Direction{Direction::Kind::Constant, 1.0, {}},
                          Direction{Direction::Kind::TerminalOutput, 0.0, {}}}) {
        auto res = gateaux_residual(fb.representative, dir, fb.effort,
                                    fb.alpha_bar, fb.alpha_bar, rho, sc,
                                    m.profile);
        std::string name = dir.kind == Direction::Kind::Constant
                               ? "gateaux_constant"
                               : "gateaux_terminal_output";
        double g_tol = tol.mc_se_mult * res.std_error + 1e-12;
        add_item(r, name, res.mean, g_tol, std::abs(res.mean) <= g_tol);
    }

    finish_report(r, start);
    return r;
}

CrossCheckReport dominance_scan(const RiskProfile& profile,
                                const AmbiguityBand& band_a,
                                const AmbiguityBand& band_p,
                                int n_perturbations, std::uint64_t seed,
                                const Tolerances& tol) {
    auto start = Clock::now();
    ValidatedModel m = validate(profile, band_a, band_p);
    if (m.fb_regime == FbRegime::DegenerateLow ||
        m.fb_regime == FbRegime::DegenerateHigh) {
        throw SolverError("DegenerateRegime",
                          "dominance scan requires overlapping bands");
    }

    CrossCheckReport r;
    r.case_id = "dominance/" + to_string(m.fb_regime);

    FbSolution fb = solve_first_best(m.profile, band_a, band_p);
    double rho = fb_rho(fb, m.profile);
    auto fb_objective = [&](const LinearQuadraticContract& c) {
        WorstCaseQ wc =
            worst_case_utilities_q(c, fb.effort, band_a, band_p, m.profile);
        return wc.u_p + rho * wc.u_a;
    };
    double fb_opt = fb_objective(fb.representative);
    r.closed_form = fb.principal_value;

    int fb_violations = 0;
    for (int i = 0; i < n_perturbations; ++i) {
        std::uint64_t base = 3 * static_cast<std::uint64_t>(i);
        LinearQuadraticContract c = fb.representative;
        c.z += 0.4 * (uniform_at(seed, base) - 0.5);
        c.gamma += 0.4 * (uniform_at(seed, base + 1) - 0.5);
        c.delta += 0.4 * (uniform_at(seed, base + 2) - 0.5);
        if (fb_objective(c) > fb_opt + 1e-9) ++fb_violations;
    }
    add_item(r, "fb_violations", fb_violations, 0, fb_violations == 0);

    // Zero-radius perturbation reproduces the optimum exactly.
    add_item(r, "fb_zero_radius_tie",
             std::abs(fb_objective(fb.representative) - fb_opt), 0.0,
             fb_objective(fb.representative) == fb_opt);

    SbSolution sb = solve_second_best(m.profile, band_a, band_p);
    int sb_violations = 0;
    if (sb.regime != SbRegime::Degenerate) {
        for (int i = 0; i < n_perturbations; ++i) {
            std::uint64_t base = 2 * static_cast<std::uint64_t>(i);
            double z = sb.z_star + 0.4 * (uniform_at(seed ^ 0x5B5BULL, base) - 0.5);
            double gh = sb.gamma_star +
                        0.4 * (uniform_at(seed ^ 0x5B5BULL, base + 1) - 0.5);
            // Participation-preserving perturbation: same initial certainty
            // equivalent, agent plays the best response to the new slope.
            LinearQuadraticContract q =
                sb_contract_as_q(z, gh, sb.y0, band_a, m.profile);
            double effort = agent_best_response(z, m.profile);
            WorstCaseQ wc =
                worst_case_utilities_q(q, effort, band_a, band_p, m.profile);
            Scenario sc{wc.alpha_p, effort, 20'000, seed + i};
            auto est = estimate_utilities(q, sc, m.profile);
            if (est.u_p.mean - tol.mc_se_mult * est.u_p.std_error >
                sb.principal_value) {
                ++sb_violations;
            }
        }
        add_item(r, "sb_violations", sb_violations, 0, sb_violations == 0);
    }

    finish_report(r, start);
    return r;
}

std::string reports_to_json(const std::vector<CrossCheckReport>& reports) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : reports) {
        nlohmann::json jr;
        jr["case_id"] = r.case_id;
        jr["closed_form"] = r.closed_form;
        if (r.pde_value) jr["pde_value"] = *r.pde_value;
        if (r.mc_value) {
            jr["mc_value"] = {{"mean", r.mc_value->mean},
                              {"std_error", r.mc_value->std_error},
                              {"n", r.mc_value->n}};
        }
        jr["rel_errors"] = r.rel_errors;
        jr["notes"] = r.notes;
        jr["pass"] = r.pass;
        jr["runtime_ms"] = r.runtime_ms;
        nlohmann::json items = nlohmann::json::array();
        for (const auto& it : r.items) {
            items.push_back({{"metric", it.metric},
                             {"value", it.value},
                             {"tolerance", it.tolerance},
                             {"pass", it.pass}});
        }
        jr["items"] = items;
        arr.push_back(jr);
    }
    return arr.dump(2);
}

std::string reports_to_csv(const std::vector<CrossCheckReport>& reports) {
    std::ostringstream os;
    os << "case_id,metric,value,tolerance,pass\n";
    char buf[64];
    for (const auto& r : reports) {
        for (const auto& it : r.items) {
            os << r.case_id << ',' << it.metric << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", it.value);
            os << buf << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", it.tolerance);
            os << buf << ',' << (it.pass ? "true" : "false") << '\n';
        }
    }
    return os.str();
}

}  // namespace ambicon
