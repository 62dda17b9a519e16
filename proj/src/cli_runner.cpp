#include "ambicon/cli_runner.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ambicon/analytic.hpp"
#include "ambicon/hjbi.hpp"
#include "ambicon/montecarlo.hpp"

namespace ambicon {

namespace {

using nlohmann::json;

double num(const json& j, const char* key, double fallback) {
    return j.contains(key) ? j.at(key).get<double>() : fallback;
}

void write_file(const std::string& path, const std::string& body) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw SolverError("IoError", "cannot open " + path);
    os << body;
}

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json contract_json(const LinearQuadraticContract& c) {
    return {{"z", c.z}, {"gamma", c.gamma}, {"delta", c.delta}};
}

void write_meta(const RunConfig& cfg, const std::string& command) {
    json meta;
    meta["command"] = command;
    meta["timestamp_utc"] =
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count();
    write_file(cfg.output_dir + "/run_meta.json", meta.dump(2) + "\n");
}

AmbiguityBand require_band(const std::optional<AmbiguityBand>& b,
                           const char* name) {
    if (!b) {
        throw ValidationError("ConfigError",
                              std::string("missing band: ") + name);
    }
    return *b;
}

MarkovAmbiguityField field_for(const RunConfig& cfg) {
    if (cfg.field_csv) return parse_field_csv(*cfg.field_csv);
    AmbiguityBand a = require_band(cfg.band_agent, "agent");
    AmbiguityBand p = require_band(cfg.band_principal, "principal");
    return MarkovAmbiguityField::constant(a, p, cfg.profile.horizon,
                                          cfg.pde.x_min, cfg.pde.x_max);
}

void apply_axis(RunConfig& cfg, const std::string& axis, double v) {
    if (axis == "agent_lo") require_band(cfg.band_agent, "agent"), cfg.band_agent->lo = v;
    else if (axis == "agent_hi") require_band(cfg.band_agent, "agent"), cfg.band_agent->hi = v;
    else if (axis == "principal_lo") require_band(cfg.band_principal, "principal"), cfg.band_principal->lo = v;
    else if (axis == "principal_hi") require_band(cfg.band_principal, "principal"), cfg.band_principal->hi = v;
    else if (axis == "r_agent") cfg.profile.r_agent = v;
    else if (axis == "r_principal") cfg.profile.r_principal = v;
    else if (axis == "cost_coeff") cfg.profile.cost_coeff = v;
    else if (axis == "effort_cap") cfg.profile.effort_cap = v;
    else if (axis == "horizon") cfg.profile.horizon = v;
    else if (axis == "reservation") cfg.profile.reservation = v;
    else throw ValidationError("ConfigError", "unknown sweep axis: " + axis);
}

int cmd_first_best(const RunConfig& cfg, bool quiet) {
    AmbiguityBand a = require_band(cfg.band_agent, "agent");
    AmbiguityBand p = require_band(cfg.band_principal, "principal");
    ValidatedModel m = validate(cfg.profile, a, p);
    json sol;
    sol["command"] = "first-best";
    sol["regime"] = to_string(m.fb_regime);
    sol["warnings"] = m.warnings;
    std::ostringstream report;
    report << "case_id,metric,value,tolerance,pass\n";

    if (m.fb_regime == FbRegime::DegenerateLow ||
        m.fb_regime == FbRegime::DegenerateHigh) {
        json seq = json::array();
        for (auto& it : degenerate_fb_sequence(m.profile, a, p,
                                               {1, 2, 5, 10, 20, 50, 100})) {
            seq.push_back({{"n", it.n},
                           {"contract", contract_json(it.contract)},
                           {"principal_value", it.principal_value},
                           {"agent_value", it.agent_value}});
            report << "first_best,sequence_value_n" << it.n << ','
                   << fmt(it.principal_value) << ",0,true\n";
        }
        sol["sequence"] = seq;
        if (!quiet) {
            std::cout << "first-best: regime " << to_string(m.fb_regime)
                      << ", value -> 0 along the contract sequence\n";
        }
    } else {
        FbSolution fb = solve_first_best(m.profile, a, p);
        sol["effort"] = fb.effort;
        sol["z_star"] = fb.z_star;
        sol["gamma_lo"] = std::isinf(fb.gamma_lo) ? json("-inf") : json(fb.gamma_lo);
        sol["gamma_hi"] = std::isinf(fb.gamma_hi) ? json("inf") : json(fb.gamma_hi);
        sol["representative_contract"] = contract_json(fb.representative);
        sol["principal_value"] = fb.principal_value;
        sol["lagrange_log_term"] = fb.lagrange_log_term;
        sol["alpha_bar"] = fb.alpha_bar;
        sol["capped_effort"] = fb.capped_effort;
        report << "first_best,principal_value," << fmt(fb.principal_value)
               << ",0,true\n";
        if (!quiet) {
            std::cout << "first-best: regime " << to_string(m.fb_regime)
                      << ", z*=" << fb.z_star
                      << ", value=" << fb.principal_value << "\n";
        }
    }
    write_file(cfg.output_dir + "/solution.json", sol.dump(2) + "\n");
    write_file(cfg.output_dir + "/report.csv", report.str());
    return 0;
}

int cmd_second_best(const RunConfig& cfg, bool quiet) {
    AmbiguityBand a = require_band(cfg.band_agent, "agent");
    AmbiguityBand p = require_band(cfg.band_principal, "principal");
    SbSolution sb = solve_second_best(cfg.profile, a, p);
    json sol;
    sol["command"] = "second-best";
    sol["regime"] = to_string(sb.regime);
    sol["z_star"] = sb.z_star;
    sol["gamma_star"] = sb.gamma_star;
    sol["y0"] = sb.y0;
    sol["effort"] = sb.effort;
    sol["worst_alpha"] = sb.worst_alpha;
    sol["principal_value"] = sb.principal_value;
    if (sb.regime != SbRegime::Degenerate) {
        sol["q_contract"] = contract_json(
            sb_contract_as_q(sb.z_star, sb.gamma_star, sb.y0, a,
                             validate(cfg.profile, a, p).profile));
    }
    write_file(cfg.output_dir + "/solution.json", sol.dump(2) + "\n");
    std::ostringstream report;
    report << "case_id,metric,value,tolerance,pass\n"
           << "second_best,principal_value," << fmt(sb.principal_value)
           << ",0,true\n";
    write_file(cfg.output_dir + "/report.csv", report.str());
    if (!quiet) {
        std::cout << "second-best: regime " << to_string(sb.regime)
                  << ", z*=" << sb.z_star << ", value=" << sb.principal_value
                  << "\n";
    }
    return 0;
}

int cmd_pde(const RunConfig& cfg, bool quiet) {
    MarkovAmbiguityField field = field_for(cfg);
    ValidatedModel m = validate(cfg.profile,
                                field.agent_band(0.0, 0.0),
                                field.principal_band(0.0, 0.0));
    ValueSurface surf = solve_pde(field, m.profile, cfg.pde);
    export_surface_csv(surf, cfg.output_dir + "/surface.csv");
    json sol;
    sol["command"] = "pde";
    sol["principal_value"] = surf.principal_value;
    sol["clamp_count"] = surf.clamp_count;
    sol["grid"] = {{"n_t", cfg.pde.n_t},
                   {"n_x", cfg.pde.n_x},
                   {"x_min", cfg.pde.x_min},
                   {"x_max", cfg.pde.x_max}};
    write_file(cfg.output_dir + "/solution.json", sol.dump(2) + "\n");
    std::ostringstream report;
    report << "case_id,metric,value,tolerance,pass\n"
           << "pde,principal_value," << fmt(surf.principal_value)
           << ",0,true\n";
    write_file(cfg.output_dir + "/report.csv", report.str());
    if (!quiet) {
        std::cout << "pde: value=" << surf.principal_value << "\n";
    }
    return 0;
}

int cmd_simulate(const RunConfig& cfg, bool quiet) {
    if (!cfg.contract) {
        throw ValidationError("ConfigError", "simulate needs a contract");
    }
    Scenario sc{cfg.alpha, cfg.effort, cfg.mc.n_paths, cfg.mc.seed};
    ValidatedModel m = validate(cfg.profile,
                                cfg.band_agent.value_or(AmbiguityBand{cfg.alpha, cfg.alpha}),
                                cfg.band_principal.value_or(AmbiguityBand{cfg.alpha, cfg.alpha}));
    auto est = estimate_utilities(*cfg.contract, sc, m.profile);
    json sol;
    sol["command"] = "simulate";
    sol["contract"] = contract_json(*cfg.contract);
    sol["scenario"] = {{"alpha", sc.alpha},
                       {"effort", sc.effort},
                       {"n_paths", sc.n_paths},
                       {"seed", sc.seed}};
    sol["u_principal"] = {{"mean", est.u_p.mean},
                          {"std_error", est.u_p.std_error}};
    sol["u_agent"] = {{"mean", est.u_a.mean},
                      {"std_error", est.u_a.std_error}};
    write_file(cfg.output_dir + "/solution.json", sol.dump(2) + "\n");
    std::ostringstream report;
    report << "case_id,metric,value,tolerance,pass\n"
           << "simulate,u_principal," << fmt(est.u_p.mean) << ','
           << fmt(est.u_p.std_error) << ",true\n"
           << "simulate,u_agent," << fmt(est.u_a.mean) << ','
           << fmt(est.u_a.std_error) << ",true\n";
    write_file(cfg.output_dir + "/report.csv", report.str());
    if (!quiet) {
        std::cout << "simulate: u_p=" << est.u_p.mean
                  << " (se " << est.u_p.std_error << ")\n";
    }
    return 0;
}

int cmd_gateaux(const RunConfig& cfg, bool quiet) {
    AmbiguityBand a = require_band(cfg.band_agent, "agent");
    AmbiguityBand p = require_band(cfg.band_principal, "principal");
    ValidatedModel m = validate(cfg.profile, a, p);
    FbSolution fb = solve_first_best(m.profile, a, p);
    double rho = fb_rho(fb, m.profile);
    Scenario sc{fb.alpha_bar, fb.effort, cfg.mc.n_paths, cfg.mc.seed};

    json sol;
    sol["command"] = "gateaux-check";
    sol["regime"] = to_string(m.fb_regime);
    std::ostringstream report;
    report << "case_id,metric,value,tolerance,pass\n";
    bool all_pass = true;
    for (Direction dir : {Direction{Direction::Kind::Constant, 1.0, {}},
                          Direction{Direction::Kind::TerminalOutput, 0.0, {}}}) {
        auto res = gateaux_residual(fb.representative, dir, fb.effort,
                                    fb.alpha_bar, fb.alpha_bar, rho, sc,
                                    m.profile);
        std::string name = dir.kind == Direction::Kind::Constant
                               ? "constant"
                               : "terminal_output";
        double tol = 3.5 * res.std_error + 1e-12;
        bool pass = std::abs(res.mean) <= tol;
        all_pass = all_pass && pass;
        sol["residual_" + name] = {{"mean", res.mean},
                                   {"std_error", res.std_error},
                                   {"pass", pass}};
        report << "gateaux," << name << ',' << fmt(res.mean) << ','
               << fmt(tol) << ',' << (pass ? "true" : "false") << '\n';
    }
    sol["pass"] = all_pass;
    write_file(cfg.output_dir + "/solution.json", sol.dump(2) + "\n");
    write_file(cfg.output_dir + "/report.csv", report.str());
    if (!quiet) {
        std::cout << "gateaux-check: " << (all_pass ? "pass" : "FAIL") << "\n";
    }
    return all_pass ? 0 : 4;
}

int cmd_crosscheck(const RunConfig& cfg, bool quiet) {
    AmbiguityBand a = require_band(cfg.band_agent, "agent");
    AmbiguityBand p = require_band(cfg.band_principal, "principal");
    ValidatedModel m = validate(cfg.profile, a, p);
    std::vector<CrossCheckReport> reports;
    reports.push_back(crosscheck_second_best(m.profile, a, p, cfg.pde, cfg.mc));
    reports.push_back(crosscheck_first_best(m.profile, a, p, cfg.mc));
    if (m.fb_regime != FbRegime::DegenerateLow &&
        m.fb_regime != FbRegime::DegenerateHigh) {
        reports.push_back(dominance_scan(m.profile, a, p, 200, cfg.mc.seed));
    }
    write_file(cfg.output_dir + "/solution.json", reports_to_json(reports) + "\n");
    write_file(cfg.output_dir + "/report.csv", reports_to_csv(reports));
    bool all_pass = std::all_of(reports.begin(), reports.end(),
                                [](const CrossCheckReport& r) { return r.pass; });
    if (!quiet) {
        for (const auto& r : reports) {
            std::cout << r.case_id << ": " << (r.pass ? "pass" : "FAIL")
                      << " (" << r.runtime_ms << " ms)\n";
        }
    }
    return all_pass ? 0 : 4;
}

int cmd_sweep(const RunConfig& cfg, bool quiet) {
    if (cfg.sweep_axis.empty() || cfg.sweep_values.empty()) {
        throw ValidationError("ConfigError", "sweep needs axis and values");
    }
    std::ostringstream csv;
    csv << "axis,value,fb_regime,fb_value,sb_regime,sb_value\n";
    for (double v : cfg.sweep_values) {
        RunConfig point = cfg;
        apply_axis(point, cfg.sweep_axis, v);
        AmbiguityBand a = require_band(point.band_agent, "agent");
        AmbiguityBand p = require_band(point.band_principal, "principal");
        ValidatedModel m = validate(point.profile, a, p);
        double fb_value = 0.0;  // degenerate regimes approach 0 in the limit
        if (m.fb_regime != FbRegime::DegenerateLow &&
            m.fb_regime != FbRegime::DegenerateHigh) {
            fb_value = solve_first_best(m.profile, a, p).principal_value;
        }
        SbSolution sb = solve_second_best(m.profile, a, p);
        csv << cfg.sweep_axis << ',' << fmt(v) << ',' << to_string(m.fb_regime)
            << ',' << fmt(fb_value) << ',' << to_string(sb.regime) << ','
            << fmt(sb.principal_value) << '\n';
    }
    write_file(cfg.output_dir + "/sweep.csv", csv.str());
    json sol;
    sol["command"] = "sweep";
    sol["axis"] = cfg.sweep_axis;
    sol["n_points"] = cfg.sweep_values.size();
    write_file(cfg.output_dir + "/solution.json", sol.dump(2) + "\n");
    std::ostringstream report;
    report << "case_id,metric,value,tolerance,pass\n"
           << "sweep,n_points," << cfg.sweep_values.size() << ",0,true\n";
    write_file(cfg.output_dir + "/report.csv", report.str());
    if (!quiet) {
        std::cout << "sweep: " << cfg.sweep_values.size() << " points on "
                  << cfg.sweep_axis << "\n";
    }
    return 0;
}

}  // namespace

RunConfig parse_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw ValidationError("ConfigError", "cannot open config " + path);
    }
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw ValidationError("ConfigError",
                              std::string("invalid JSON: ") + e.what());
    }

    RunConfig cfg;
    if (j.contains("profile")) {
        const json& p = j["profile"];
        cfg.profile = make_profile(num(p, "r_agent", 1.0),
                                   num(p, "r_principal", 1.0),
                                   num(p, "cost_coeff", 1.0),
                                   num(p, "effort_cap", 2.0),
                                   num(p, "horizon", 1.0),
                                   num(p, "reservation", -1.0));
    } else {
        cfg.profile = make_profile(1.0, 1.0, 1.0, 2.0, 1.0, -1.0);
    }
    if (j.contains("bands")) {
        const json& b = j["bands"];
        if (b.contains("agent")) {
            cfg.band_agent = AmbiguityBand{b["agent"][0].get<double>(),
                                           b["agent"][1].get<double>()};
        }
        if (b.contains("principal")) {
            cfg.band_principal = AmbiguityBand{b["principal"][0].get<double>(),
                                               b["principal"][1].get<double>()};
        }
    }
    if (j.contains("field_csv")) cfg.field_csv = j["field_csv"].get<std::string>();
    if (j.contains("mc")) {
        const json& mc = j["mc"];
        cfg.mc.n_paths = static_cast<std::uint64_t>(num(mc, "n_paths", 1e6));
        cfg.mc.seed = static_cast<std::uint64_t>(num(mc, "seed", 42));
        cfg.mc.grid_n = static_cast<int>(num(mc, "grid_n", 101));
    }
    if (j.contains("pde")) {
        const json& pd = j["pde"];
        cfg.pde.n_t = static_cast<int>(num(pd, "n_t", 400));
        cfg.pde.n_x = static_cast<int>(num(pd, "n_x", 401));
        cfg.pde.x_min = num(pd, "x_min", -6.0);
        cfg.pde.x_max = num(pd, "x_max", 6.0);
    }
    if (j.contains("contract")) {
        const json& c = j["contract"];
        cfg.contract = LinearQuadraticContract{num(c, "z", 0.0),
                                               num(c, "gamma", 0.0),
                                               num(c, "delta", 0.0)};
    }
    cfg.effort = num(j, "effort", 0.0);
    cfg.alpha = num(j, "alpha", 1.0);
    if (j.contains("sweep")) {
        cfg.sweep_axis = j["sweep"].value("axis", "");
        if (j["sweep"].contains("values")) {
            for (const auto& v : j["sweep"]["values"]) {
                cfg.sweep_values.push_back(v.get<double>());
            }
        }
    }
    cfg.output_dir = j.value("output_dir", ".");
    return cfg;
}

MarkovAmbiguityField parse_field_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw ValidationError("ConfigError", "cannot open field csv " + path);
    }
    std::string line;
    if (!std::getline(is, line)) {
        throw ValidationError("ConfigError", "empty field csv");
    }
    struct Row {
        double t, x, alo, ahi, plo, phi;
    };
    std::vector<Row> rows;
    std::set<double> ts, xs;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        Row r{};
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &r.t, &r.x,
                        &r.alo, &r.ahi, &r.plo, &r.phi) != 6) {
            throw ValidationError("ConfigError", "bad field csv row: " + line);
        }
        rows.push_back(r);
        ts.insert(r.t);
        xs.insert(r.x);
    }
    MarkovAmbiguityField f;
    f.t_grid.assign(ts.begin(), ts.end());
    f.x_grid.assign(xs.begin(), xs.end());
    std::size_t n = f.t_grid.size() * f.x_grid.size();
    if (rows.size() != n) {
        throw ValidationError("ConfigError",
                              "field csv is not a full rectangular grid");
    }
    f.a_lo.assign(n, 0.0);
    f.a_hi.assign(n, 0.0);
    f.p_lo.assign(n, 0.0);
    f.p_hi.assign(n, 0.0);
    auto pos = [](const std::vector<double>& g, double v) {
        return static_cast<std::size_t>(
            std::lower_bound(g.begin(), g.end(), v) - g.begin());
    };
    for (const Row& r : rows) {
        std::size_t i = f.index(pos(f.t_grid, r.t), pos(f.x_grid, r.x));
        f.a_lo[i] = r.alo;
        f.a_hi[i] = r.ahi;
        f.p_lo[i] = r.plo;
        f.p_hi[i] = r.phi;
    }
    f.check();
    return f;
}

int run_command(const std::string& command, const RunConfig& config,
                bool quiet) {
    try {
        std::filesystem::create_directories(config.output_dir);
        write_meta(config, command);
        if (command == "first-best") return cmd_first_best(config, quiet);
        if (command == "second-best") return cmd_second_best(config, quiet);
        if (command == "pde") return cmd_pde(config, quiet);
        if (command == "simulate") return cmd_simulate(config, quiet);
        if (command == "gateaux-check") return cmd_gateaux(config, quiet);
        if (command == "crosscheck") return cmd_crosscheck(config, quiet);
        if (command == "sweep") return cmd_sweep(config, quiet);
        throw ValidationError("ConfigError", "unknown command " + command);
    } catch (const ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    }
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Robust principal-agent contract solver"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool has_seed = false;
    bool quiet = false;
    app.add_option("--config", config_path, "JSON config path")->required();
    app.add_option("--out", out_dir, "output directory (overrides config)");
    app.add_option("--seed", seed, "RNG seed (overrides config)")
        ->each([&](const std::string&) { has_seed = true; });
    app.add_flag("--quiet", quiet, "suppress the one-line summary");

    const char* commands[] = {"first-best", "second-best", "pde",
                              "simulate",   "gateaux-check", "crosscheck",
                              "sweep"};
    for (const char* c : commands) app.add_subcommand(c)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    RunConfig cfg;
    try {
        cfg = parse_config(config_path);
    } catch (const ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (has_seed) cfg.mc.seed = seed;

    return run_command(app.get_subcommands().front()->get_name(), cfg, quiet);
}

}  // namespace ambicon
