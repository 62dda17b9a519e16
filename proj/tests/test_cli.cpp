#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ambicon/cli_runner.hpp"

using namespace ambicon;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("ambicon_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static inline int counter = 0;
};

std::string write_config(const fs::path& dir, const nlohmann::json& extra) {
    nlohmann::json j = {
        {"profile",
         {{"r_agent", 1.0},
          {"r_principal", 1.0},
          {"cost_coeff", 1.0},
          {"effort_cap", 2.0},
          {"horizon", 1.0},
          {"reservation", -1.0}}},
        {"bands", {{"agent", {0.5, 1.5}}, {"principal", {0.5, 1.0}}}},
        {"mc", {{"n_paths", 100000}, {"seed", 42}, {"grid_n", 51}}},
        {"pde", {{"n_t", 500}, {"n_x", 161}, {"x_min", -6.0}, {"x_max", 6.0}}},
        {"output_dir", dir.string()},
    };
    for (auto& [k, v] : extra.items()) j[k] = v;
    fs::path p = dir / "config.json";
    std::ofstream(p) << j.dump(2);
    return p.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("second-best run writes the expected solution record") {
    TempDir td;
    RunConfig cfg = parse_config(write_config(td.path, {}));
    CHECK(run_command("second-best", cfg, true) == 0);
    auto sol = nlohmann::json::parse(slurp(td.path / "solution.json"));
    CHECK(sol["z_star"].get<double>() ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(sol["principal_value"].get<double>() ==
          doctest::Approx(-std::exp(-1.0 / 6.0)).epsilon(1e-12));
    CHECK(fs::exists(td.path / "report.csv"));
    CHECK(fs::exists(td.path / "run_meta.json"));
}

TEST_CASE("invalid band ordering exits with the config error code") {
    TempDir td;
    RunConfig cfg = parse_config(write_config(
        td.path, {{"bands", {{"agent", {1.5, 0.5}}, {"principal", {0.5, 1.0}}}}}));
    CHECK(run_command("second-best", cfg, true) == 2);
}

TEST_CASE("first-best run on a degenerate pair emits the sequence") {
    TempDir td;
    RunConfig cfg = parse_config(write_config(
        td.path,
        {{"bands", {{"agent", {1.0, 2.0}}, {"principal", {0.2, 0.5}}}}}));
    CHECK(run_command("first-best", cfg, true) == 0);
    auto sol = nlohmann::json::parse(slurp(td.path / "solution.json"));
    CHECK(sol["regime"] == "DegenerateLow");
    REQUIRE(sol.contains("sequence"));
    auto& last = sol["sequence"].back();
    CHECK(last["principal_value"].get<double>() > -1e-9);
    CHECK(last["agent_value"].get<double>() == -1.0);
}

TEST_CASE("pde run emits a surface grid") {
    TempDir td;
    RunConfig cfg = parse_config(write_config(
        td.path,
        {{"pde", {{"n_t", 200}, {"n_x", 81}, {"x_min", -6.0}, {"x_max", 6.0}}}}));
    CHECK(run_command("pde", cfg, true) == 0);
    std::string surf = slurp(td.path / "surface.csv");
    CHECK(surf.rfind("t,x,psi,z_policy,alpha_policy", 0) == 0);
    auto sol = nlohmann::json::parse(slurp(td.path / "solution.json"));
    double v = sol["principal_value"].get<double>();
    CHECK(std::abs(v - (-std::exp(-1.0 / 6.0))) < 0.02);
}

TEST_CASE("simulate honors the contract and scenario blocks") {
    TempDir td;
    RunConfig cfg = parse_config(write_config(
        td.path, {{"contract", {{"z", 1.0}, {"gamma", 0.0}, {"delta", 0.0}}},
                  {"effort", 1.0},
                  {"alpha", 1.0}}));
    CHECK(run_command("simulate", cfg, true) == 0);
    auto sol = nlohmann::json::parse(slurp(td.path / "solution.json"));
    CHECK(sol["u_principal"]["mean"].get<double>() == -1.0);
    CHECK(sol["u_principal"]["std_error"].get<double>() == 0.0);
}

TEST_CASE("sweep writes one row per value and switches regimes at the boundary") {
    TempDir td;
    RunConfig cfg = parse_config(write_config(
        td.path,
        {{"sweep",
          {{"axis", "principal_hi"}, {"values", {0.6, 0.8, 1.0, 1.5, 1.6}}}}}));
    CHECK(run_command("sweep", cfg, true) == 0);
    std::istringstream is(slurp(td.path / "sweep.csv"));
    std::string line;
    std::getline(is, line);
    CHECK(line == "axis,value,fb_regime,fb_value,sb_regime,sb_value");
    std::vector<std::string> rows;
    while (std::getline(is, line)) {
        if (!line.empty()) rows.push_back(line);
    }
    REQUIRE(rows.size() == 5);
    // SB values are non-increasing in the principal band top
    double prev = 0.0;
    bool first = true;
    for (const auto& r : rows) {
        std::istringstream rs(r);
        std::string tok;
        std::vector<std::string> cols;
        while (std::getline(rs, tok, ',')) cols.push_back(tok);
        REQUIRE(cols.size() == 6);
        double sb = std::stod(cols[5]);
        if (!first) CHECK(sb <= prev + 1e-12);
        prev = sb;
        first = false;
    }
    CHECK(rows[2].find("PrincipalTopInAgentBand") != std::string::npos);
    CHECK(rows[4].find("AgentTopInPrincipalBand") != std::string::npos);
}

TEST_CASE("reruns with the same config produce byte-identical artifacts") {
    TempDir td1, td2;
    nlohmann::json over = {
        {"contract", {{"z", 0.4}, {"gamma", 0.2}, {"delta", 0.1}}},
        {"effort", 0.8},
        {"alpha", 1.2}};
    RunConfig c1 = parse_config(write_config(td1.path, over));
    RunConfig c2 = parse_config(write_config(td2.path, over));
    CHECK(run_command("simulate", c1, true) == 0);
    CHECK(run_command("simulate", c2, true) == 0);
    CHECK(slurp(td1.path / "solution.json") ==
          slurp(td2.path / "solution.json"));
    CHECK(slurp(td1.path / "report.csv") == slurp(td2.path / "report.csv"));
}

TEST_CASE("malformed config files are rejected at parse time") {
    TempDir td;
    fs::path bad = td.path / "bad.json";
    std::ofstream(bad) << "{ not json";
    CHECK_THROWS_AS(parse_config(bad.string()), ValidationError);
    CHECK_THROWS_AS(parse_config((td.path / "missing.json").string()),
                    ValidationError);
}

TEST_CASE("field CSV parses a rectangular grid") {
    TempDir td;
    fs::path csv = td.path / "field.csv";
    std::ofstream(csv) << "t,x,a_lo,a_hi,p_lo,p_hi\n"
                          "0,-6,0.5,1.5,0.5,1\n"
                          "0,6,0.5,1.5,0.5,1\n"
                          "1,-6,0.6,1.5,0.5,1\n"
                          "1,6,0.6,1.5,0.5,1\n";
    MarkovAmbiguityField f = parse_field_csv(csv.string());
    CHECK(f.t_grid.size() == 2);
    CHECK(f.x_grid.size() == 2);
    CHECK(f.agent_band(0.9, 0.0).lo == 0.6);
    CHECK(f.max_principal_variance() == 1.0);

    fs::path ragged = td.path / "ragged.csv";
    std::ofstream(ragged) << "t,x,a_lo,a_hi,p_lo,p_hi\n"
                             "0,-6,0.5,1.5,0.5,1\n"
                             "1,6,0.5,1.5,0.5,1\n"
                             "1,-6,0.5,1.5,0.5,1\n";
    CHECK_THROWS_AS(parse_field_csv(ragged.string()), ValidationError);
}

TEST_CASE("gateaux-check passes at the first-best optimum") {
    TempDir td;
    RunConfig cfg = parse_config(write_config(
        td.path,
        {{"bands", {{"agent", {0.7, 1.0}}, {"principal", {0.5, 1.0}}}}}));
    CHECK(run_command("gateaux-check", cfg, true) == 0);
    auto sol = nlohmann::json::parse(slurp(td.path / "solution.json"));
    CHECK(sol["pass"].get<bool>());
}
