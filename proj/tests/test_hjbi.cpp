#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "ambicon/analytic.hpp"
#include "ambicon/hjbi.hpp"

using namespace ambicon;

static RiskProfile std_profile() {
    return make_profile(1.0, 1.0, 1.0, 2.0, 1.0, -1.0);
}

static MarkovAmbiguityField const_field(AmbiguityBand a, AmbiguityBand p) {
    return MarkovAmbiguityField::constant(a, p, 1.0, -6.0, 6.0);
}

TEST_CASE("generator map at hand-checked points") {
    RiskProfile p = std_profile();
    auto f = const_field({1.0, 1.0}, {1.0, 1.0});

    GResult zero = g_map(0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, f, p);
    CHECK(zero.feasible);
    CHECK(zero.value == doctest::Approx(0.0).epsilon(1e-15));

    // z=0.5: a*=0.5, cost 0.125; 0.5*alpha*R_A*z^2 = 0.125; diffusion term
    // 0.5*alpha*z^2*R_P^2*v = 0.125; drift and cross terms vanish at p=0
    GResult half = g_map(0.0, 0.0, 1.0, 0.0, 0.0, 0.5, 0.0, 1.0, f, p);
    CHECK(half.value == doctest::Approx(0.375).epsilon(1e-14));

    GResult out = g_map(0.0, 0.0, 1.0, 0.0, 0.0, 0.5, 0.0, 2.0, f, p);
    CHECK_FALSE(out.feasible);

    CHECK_THROWS_AS(g_map(0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0, f, p),
                    ValidationError);
}

TEST_CASE("generator cross term scales with the gradient") {
    RiskProfile p = std_profile();
    auto f = const_field({1.0, 1.0}, {1.0, 1.0});
    double base = g_map(0.0, 0.0, 1.0, 0.0, 0.0, 0.5, 0.0, 1.0, f, p).value;
    double with_p = g_map(0.0, 0.0, 1.0, 2.0, 0.0, 0.5, 0.0, 1.0, f, p).value;
    // p contributes a*(z) p + alpha z R_P p = (0.5 + 0.5) * 2
    CHECK(with_p - base == doctest::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("nested Hamiltonian optimization on a singleton band") {
    RiskProfile p = std_profile();
    auto f = const_field({1.0, 1.0}, {1.0, 1.0});

    HamiltonianResult g = hamiltonian_generic(0.0, 0.0, 1.0, 0.0, 0.0, f, p);
    CHECK(g.alpha_arg == 1.0);
    CHECK(g.value == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(std::abs(g.z_arg) <= 1e-4);

    HamiltonianSearch nonneg;
    nonneg.allow_negative_z = false;
    HamiltonianResult gr =
        hamiltonian_generic(0.0, 0.0, 1.0, 0.0, 0.0, f, p, nonneg);
    CHECK(gr.value == doctest::Approx(0.0).epsilon(1e-9));

    auto disjoint = const_field({1.0, 2.0}, {3.0, 4.0});
    CHECK_THROWS_AS(hamiltonian_generic(0.0, 0.0, 1.0, 0.0, 0.0, disjoint, p),
                    SolverError);
}

TEST_CASE("reduced Hamiltonian agrees with the generic one") {
    RiskProfile p = std_profile();
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> uv(1e-3, 3.0), up(-2.0, 2.0),
        ub(0.3, 1.8), uw(0.0, 0.8);
    for (int i = 0; i < 200; ++i) {
        double lo = ub(gen);
        AmbiguityBand band{lo, lo + uw(gen)};
        auto f = const_field(band, band);
        double v = uv(gen), gp = up(gen), gq = up(gen);
        HamiltonianResult a = hamiltonian_generic(0.0, 0.0, v, gp, gq, f, p);
        HamiltonianResult b = hamiltonian_reduced(0.0, 0.0, v, gp, gq, f, p);
        CHECK(std::abs(a.value - b.value) <= 1e-8);
    }
}

TEST_CASE("reduced Hamiltonian interior slope matches a golden-section oracle") {
    RiskProfile p = std_profile();
    auto f = const_field({1.0, 1.0}, {1.0, 1.0});
    // gradient chosen so the inner minimizer lies strictly inside (0, k a_max)
    double v = 1.0, gp = -0.8, gq = 0.0;
    HamiltonianResult r = hamiltonian_reduced(0.0, 0.0, v, gp, gq, f, p);
    double best_z = 0.0, best_g = 1e300;
    for (int i = 0; i <= 500000; ++i) {
        double z = -1.0 + 4e-6 * i;
        double gv = g_map(0.0, 0.0, v, gp, gq, z, 0.0, 1.0, f, p).value;
        if (gv < best_g) best_g = gv, best_z = z;
    }
    CHECK(best_z > 1e-3);
    CHECK(best_z < 2.0 - 1e-3);
    CHECK(r.z_arg == doctest::Approx(best_z).epsilon(1e-4));
    CHECK(r.value == doctest::Approx(best_g).epsilon(1e-8));
}

TEST_CASE("PDE reproduces the second-best closed form, regime i") {
    RiskProfile p = std_profile();
    auto f = const_field({0.5, 1.5}, {0.5, 1.0});
    PdeGrid grid;
    grid.n_t = 500;
    grid.n_x = 161;
    grid.x_min = -6.0;
    grid.x_max = 6.0;
    ValueSurface s = solve_pde(f, p, grid);
    double exact = -std::exp(-1.0 / 6.0);
    CHECK(std::abs(s.principal_value - exact) <= 0.01 * std::abs(exact));
    CHECK(s.clamp_count == 0);

    // terminal slice is the boundary data exactly
    for (int j = 0; j < grid.n_x; j += 13) {
        CHECK(s.psi[s.index(grid.n_t, j)] ==
              doctest::Approx(std::exp(-grid.x_at(j))).epsilon(1e-15));
    }
}

TEST_CASE("PDE reproduces the second-best closed form, regime ii") {
    RiskProfile p = std_profile();
    auto f = const_field({0.5, 1.5}, {0.5, 2.0});
    PdeGrid grid;
    grid.n_t = 1000;
    grid.n_x = 161;
    ValueSurface s = solve_pde(f, p, grid);
    double exact = -std::exp(-0.03125);
    CHECK(std::abs(s.principal_value - exact) <= 0.01 * std::abs(exact));
}

TEST_CASE("surface is separable away from the lateral boundaries") {
    RiskProfile p = std_profile();
    auto f = const_field({0.5, 1.5}, {0.5, 1.0});
    PdeGrid grid;
    grid.n_t = 500;
    grid.n_x = 161;
    ValueSurface s = solve_pde(f, p, grid);
    for (int it : {0, grid.n_t / 2}) {
        double ref = s.psi[s.index(it, grid.n_x / 2)];
        for (int j = grid.n_x / 4; j <= 3 * grid.n_x / 4; ++j) {
            double scaled = s.psi[s.index(it, j)] *
                            std::exp(p.r_principal * grid.x_at(j));
            CHECK(std::abs(scaled - ref) <= 0.005 * ref);
        }
    }
}

TEST_CASE("scheme is monotone in the terminal data") {
    RiskProfile p = std_profile();
    auto f = const_field({0.5, 1.5}, {0.5, 1.0});
    PdeGrid grid;
    grid.n_t = 200;
    grid.n_x = 81;
    ValueSurface base = solve_pde(f, p, grid);
    std::vector<double> bumped(grid.n_x);
    for (int j = 0; j < grid.n_x; ++j) {
        bumped[j] = std::exp(-p.r_principal * grid.x_at(j)) * 1.05;
    }
    ValueSurface up = solve_pde(f, p, grid, {}, bumped);
    for (int j = 0; j < grid.n_x; ++j) {
        CHECK(up.psi[up.index(0, j)] >= base.psi[base.index(0, j)] - 1e-12);
    }
}

TEST_CASE("CFL violation and bad grids are rejected") {
    RiskProfile p = std_profile();
    auto f = const_field({0.5, 1.5}, {0.5, 1.0});
    PdeGrid coarse_t;
    coarse_t.n_t = 10;
    coarse_t.n_x = 401;
    CHECK_THROWS_AS(solve_pde(f, p, coarse_t), SolverError);

    PdeGrid off;
    off.n_t = 100;
    off.n_x = 41;
    off.x_min = 1.0;
    off.x_max = 6.0;
    CHECK_THROWS_AS(solve_pde(f, p, off), ValidationError);
}

TEST_CASE("policy extraction matches the closed-form optimizers") {
    RiskProfile p = std_profile();
    auto f = const_field({0.5, 1.5}, {0.5, 1.0});
    PdeGrid grid;
    grid.n_t = 300;
    grid.n_x = 121;
    ValueSurface s = solve_pde(f, p, grid);
    PolicyGrids pg = extract_policy(s, f, p);
    int mid = grid.n_x / 2;
    CHECK(std::abs(pg.z_policy[s.index(0, mid)] - 2.0 / 3.0) <= 0.01);
    CHECK(pg.alpha_policy[s.index(0, mid)] == doctest::Approx(1.0));

    auto singleton = const_field({1.0, 1.0}, {1.0, 1.0});
    PdeGrid g2;
    g2.n_t = 300;
    g2.n_x = 81;
    ValueSurface s2 = solve_pde(singleton, p, g2);
    PolicyGrids pg2 = extract_policy(s2, singleton, p);
    for (double a : pg2.alpha_policy) CHECK(a == 1.0);
}

TEST_CASE("surface CSV export round-trips the header and grid size") {
    RiskProfile p = std_profile();
    auto f = const_field({0.5, 1.5}, {0.5, 1.0});
    PdeGrid grid;
    grid.n_t = 50;
    grid.n_x = 41;
    ValueSurface s = solve_pde(f, p, grid);
    std::string path = "surface_test_tmp.csv";
    export_surface_csv(s, path);
    std::ifstream is(path);
    REQUIRE(is.good());
    std::string header;
    std::getline(is, header);
    CHECK(header == "t,x,psi,z_policy,alpha_policy");
    int rows = 0;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty()) ++rows;
    }
    CHECK(rows == (grid.n_t + 1) * grid.n_x);
    is.close();
    std::remove(path.c_str());
}
